"""Oscillator with time-dependent frequency via its classical complex solution.

Everything about the driven-frequency oscillator reduces to one complex
trajectory eps(t) solving

    eps'' + w^2(t) eps = 0,    eps(0) = 1,  eps'(0) = i,

whose Wronskian eps eps'* - eps* eps' = -2i is conserved (it encodes the
canonical commutator of the associated lowering invariant).  Position and
momentum noise of the adiabatic ground packet are |eps|^2/2 and |eps'|^2/2,
and the photon statistics of that packet follow a one-parameter squeezed
law.

Wavefunction evaluators need eps^{-1/2} and (eps*/eps)^{m/2}; both are taken
with the phase of eps tracked continuously from t = 0, never the principal
branch, so nothing jumps when eps winds around the origin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import solve_ivp

from .gaussian import GaussianState
from .hermite import hermite1d_eval

_PRESET_NAMES = ("free", "oscillator", "repulsive")
_EXPR_NAMESPACE = {
    "sin": np.sin, "cos": np.cos, "tan": np.tan, "exp": np.exp, "log": np.log,
    "sqrt": np.sqrt, "sinh": np.sinh, "cosh": np.cosh, "tanh": np.tanh,
    "abs": np.abs, "pi": np.pi, "e": np.e,
}


@dataclass(frozen=True)
class FrequencyProfile:
    """Time profile of the squared frequency w^2(t)."""

    omega_squared: Callable[[float], float]
    kind: str
    payload: object = None

    def __call__(self, t: float) -> float:
        return float(self.omega_squared(t))


def preset_profile(name: str) -> FrequencyProfile:
    """Named profiles: free (w^2 = 0), oscillator (w^2 = 1), repulsive (w^2 = -1)."""
    values = {"free": 0.0, "oscillator": 1.0, "repulsive": -1.0}
    if name not in values:
        raise ValueError(f"unknown preset {name!r}; expected one of {_PRESET_NAMES}")
    w2 = values[name]
    return FrequencyProfile(lambda t, _w2=w2: _w2, f"preset_{name}", name)


def tabulated_profile(rows) -> FrequencyProfile:
    """Piecewise-linear w^2(t) through [(t, w2), ...] samples."""
    arr = np.asarray(rows, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 2:
        raise ValueError("table must be a list of at least two [t, w2] rows")
    ts, w2s = arr[:, 0], arr[:, 1]
    if np.any(np.diff(ts) <= 0):
        raise ValueError("table times must be strictly increasing")
    return FrequencyProfile(lambda t: float(np.interp(t, ts, w2s)), "tabulated", arr.tolist())


def expression_profile(expr: str) -> FrequencyProfile:
    """w^2(t) from an arithmetic expression in t, e.g. "1 + 0.2*sin(t)".

    Evaluated in a namespace of elementary functions only; configs are
    trusted input.
    """
    code = compile(expr, "<omega_squared>", "eval")
    for name in code.co_names:
        if name not in _EXPR_NAMESPACE and name != "t":
            raise ValueError(f"expression uses unknown name {name!r}")

    def w2(t, _code=code):
        return float(eval(_code, {"__builtins__": {}}, {**_EXPR_NAMESPACE, "t": t}))

    w2(0.0)  # fail fast on malformed expressions
    return FrequencyProfile(w2, "expression", expr)


def profile_from_dict(doc: dict) -> FrequencyProfile:
    """Parse {"preset": name} | {"table": rows} | {"expression": text}."""
    if "preset" in doc:
        return preset_profile(doc["preset"])
    if "table" in doc:
        return tabulated_profile(doc["table"])
    if "expression" in doc:
        return expression_profile(doc["expression"])
    raise ValueError("profile document needs 'preset', 'table', or 'expression'")


def closed_form_epsilon(preset: str, t):
    """Exact eps(t) for the named presets; the anchor the solver is tested against."""
    t = np.asarray(t, dtype=float)
    if preset == "free":
        out = 1.0 + 1j * t
    elif preset == "oscillator":
        out = np.exp(1j * t)
    elif preset == "repulsive":
        out = np.cosh(t) + 1j * np.sinh(t)
    else:
        raise ValueError(f"no closed form for preset {preset!r}")
    return out if out.ndim else complex(out)


class EpsilonTrajectory:
    """Solution samples of the classical equation with continuous phase tracking."""

    def __init__(self, ts, eps, epsdot, interpolant, tol, profile):
        self.ts = np.asarray(ts, dtype=float)
        self.eps = np.asarray(eps, dtype=complex)
        self.epsdot = np.asarray(epsdot, dtype=complex)
        self._interpolant = interpolant
        self.tol = float(tol)
        self.profile = profile
        wron = self.eps * np.conj(self.epsdot) - np.conj(self.eps) * self.epsdot
        self.wronskian_defect = float(np.abs(wron + 2j).max())
        # phase grid fine enough that eps never winds more than ~pi/2 per step
        t_grid = np.union1d(self.ts, np.arange(0.0, self.t_end + 0.25, 0.25))
        eps_grid = self._eval(t_grid)[0]
        self._phase_ts = t_grid
        self._phases = np.unwrap(np.angle(eps_grid))

    @property
    def t_end(self) -> float:
        return float(self.ts[-1])

    def _check_range(self, t: float):
        if not -1e-12 <= t <= self.t_end + 1e-12:
            raise ValueError(f"t={t} outside solved range [0, {self.t_end}]")

    def _eval(self, t):
        y = self._interpolant(np.clip(t, 0.0, self.t_end))
        return y[0], y[1]

    def at(self, t: float) -> tuple[complex, complex]:
        """(eps, epsdot) at time t."""
        self._check_range(t)
        e, ed = self._eval(t)
        return complex(e), complex(ed)

    def phase_at(self, t: float) -> float:
        """arg eps(t), continuous from arg eps(0) = 0."""
        self._check_range(t)
        i = int(np.searchsorted(self._phase_ts, t, side="right")) - 1
        i = max(0, min(i, len(self._phase_ts) - 1))
        e, _ = self._eval(t)
        anchor = self._phases[i]
        delta = np.angle(e * np.exp(-1j * anchor))
        return float(anchor + delta)

    def sqrt_inv_eps(self, t: float) -> complex:
        """eps(t)^{-1/2} on the branch continuous from 1 at t = 0."""
        e, _ = self.at(t)
        return abs(e) ** -0.5 * np.exp(-0.5j * self.phase_at(t))


def closed_form_epsilon_derivative(preset: str, t):
    """Exact time derivative of :func:`closed_form_epsilon`."""
    t = np.asarray(t, dtype=float)
    if preset == "free":
        out = 1j * np.ones_like(t)
    elif preset == "oscillator":
        out = 1j * np.exp(1j * t)
    elif preset == "repulsive":
        out = np.sinh(t) + 1j * np.cosh(t)
    else:
        raise ValueError(f"no closed form for preset {preset!r}")
    return out if out.ndim else complex(out)


def solve_epsilon(profile: FrequencyProfile, t_end: float, tol: float = 1e-9) -> EpsilonTrajectory:
    """Solve the classical equation from (1, i) up to t_end.

    Named presets short-circuit to their closed forms (the repulsive branch
    grows like e^t, where an integrated solution could never track the exact
    one to fixed absolute accuracy); every other profile is integrated with
    the adaptive scheme at the requested tolerance.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if t_end <= 0:
        raise ValueError("t_end must be positive")

    if profile.kind.startswith("preset_"):
        preset = profile.payload

        def closed(t):
            return np.stack([np.asarray(closed_form_epsilon(preset, t)),
                             np.asarray(closed_form_epsilon_derivative(preset, t))])

        ts = np.linspace(0.0, t_end, max(81, int(10 * t_end) + 1))
        eps, epsdot = closed(ts)
        return EpsilonTrajectory(ts, eps, epsdot, closed, tol, profile)

    def rhs(t, y):
        return np.array([y[1], -profile(t) * y[0]])

    sol = solve_ivp(rhs, (0.0, t_end), np.array([1.0 + 0j, 1j]), method="DOP853",
                    rtol=tol, atol=tol * 1e-2, dense_output=True)
    if not sol.success:
        raise RuntimeError(f"epsilon integration failed: {sol.message}")
    return EpsilonTrajectory(sol.t, sol.y[0], sol.y[1], sol.sol, tol, profile)


def variances_correlation(traj: EpsilonTrajectory, t: float) -> tuple[float, float, float]:
    """(sigma_x, sigma_p, r): noise of the ground packet and its x-p correlation.

    sigma_x sigma_p (1 - r^2) = 1/4 holds identically up to the Wronskian
    defect; the correlation sign follows sign(Re eps* epsdot) = sign(sigma_xp).
    """
    eps, epsdot = traj.at(t)
    sigma_x = 0.5 * abs(eps) ** 2
    sigma_p = 0.5 * abs(epsdot) ** 2
    product = sigma_x * sigma_p
    arg = max(0.0, 1.0 - 0.25 / product)
    r = math.copysign(math.sqrt(arg), np.real(np.conj(eps) * epsdot))
    return sigma_x, sigma_p, r


def squeezing_coefficient(traj: EpsilonTrajectory, t: float) -> complex:
    """mu, the two-photon amplitude ratio governing the vacuum-packet statistics."""
    eps, epsdot = traj.at(t)
    ec, edc = np.conj(eps), np.conj(epsdot)
    return (ec - 1j * edc) / (2.0 * (ec + 1j * edc))


def squeezed_vacuum_pnd(traj: EpsilonTrajectory, t: float, n: int) -> float:
    """Photon-number probability W(n) of the evolved vacuum packet.

    W(0) = 2 (|eps|^2 + |epsdot|^2 + 2)^{-1/2}, odd terms vanish, and
    W(2m) = W(0) (2m)!/(m!)^2 |mu|^{2m}.
    """
    n = int(n)
    if n < 0:
        raise ValueError("photon number must be nonnegative")
    if n % 2 == 1:
        return 0.0
    eps, epsdot = traj.at(t)
    w0 = 2.0 / math.sqrt(abs(eps) ** 2 + abs(epsdot) ** 2 + 2.0)
    if n == 0:
        return w0
    m = n // 2
    mu_abs = abs(squeezing_coefficient(traj, t))
    log_binom = math.lgamma(2 * m + 1) - 2 * math.lgamma(m + 1)
    return w0 * math.exp(log_binom + 2 * m * math.log(mu_abs)) if mu_abs > 0 else 0.0


def to_gaussian_state(traj: EpsilonTrajectory, t: float) -> GaussianState:
    """The evolved vacuum packet as a Gaussian state carrier."""
    eps, epsdot = traj.at(t)
    s_x = 0.5 * abs(eps) ** 2
    s_p = 0.5 * abs(epsdot) ** 2
    s_xp = 0.5 * np.real(np.conj(eps) * epsdot)
    return GaussianState(np.zeros(2), np.array([[s_p, s_xp], [s_xp, s_x]]))


def _ground_packet(traj: EpsilonTrajectory, t: float, x: np.ndarray) -> np.ndarray:
    eps, epsdot = traj.at(t)
    return (math.pi ** -0.25 * traj.sqrt_inv_eps(t)
            * np.exp(0.5j * (epsdot / eps) * x * x))


def packet_wavefunction_eval(traj: EpsilonTrajectory, t: float, alpha: complex, x):
    """Coherent packet of the driven oscillator at displacement alpha."""
    x = np.asarray(x, dtype=float)
    eps, _ = traj.at(t)
    out = (_ground_packet(traj, t, x)
           * np.exp(-0.5 * abs(alpha) ** 2 - 0.5 * alpha * alpha * np.conj(eps) / eps
                    + math.sqrt(2.0) * alpha * x / eps))
    return out if out.ndim else complex(out)


def squeezed_number_wavefunction(traj: EpsilonTrajectory, t: float, m_level: int, x):
    """m-th excited packet: orthonormal family generalizing the number states."""
    m_level = int(m_level)
    if m_level < 0:
        raise ValueError("level must be nonnegative")
    x = np.asarray(x, dtype=float)
    eps, _ = traj.at(t)
    # (eps*/2eps)^{m/2} with the continuously tracked phase of eps
    ratio_half_pow = (2.0 ** (-0.5 * m_level)
                      * np.exp(-1j * m_level * traj.phase_at(t)))
    out = (ratio_half_pow / math.sqrt(math.factorial(m_level))
           * _ground_packet(traj, t, x) * hermite1d_eval(m_level, x / abs(eps)))
    return out if np.ndim(out) else complex(out)


def parametric_cat_wavefunction(traj: EpsilonTrajectory, t: float, alpha: complex,
                                parity: str, x):
    """Even/odd superposition of +-alpha packets of the driven oscillator."""
    if parity not in ("even", "odd"):
        raise ValueError(f"parity must be 'even' or 'odd', got {parity!r}")
    a2 = abs(alpha) ** 2
    if parity == "odd" and a2 == 0:
        raise ValueError("odd superposition of alpha = 0 is not normalizable")
    x = np.asarray(x, dtype=float)
    eps, _ = traj.at(t)
    if parity == "even":
        norm = math.exp(0.5 * a2) / (2.0 * math.sqrt(math.cosh(a2)))
        envelope = np.cosh(math.sqrt(2.0) * alpha * x / eps)
    else:
        norm = math.exp(0.5 * a2) / (2.0 * math.sqrt(math.sinh(a2)))
        envelope = np.sinh(math.sqrt(2.0) * alpha * x / eps)
    out = (2.0 * norm * _ground_packet(traj, t, x)
           * np.exp(-0.5 * a2 - 0.5 * np.conj(eps) * alpha * alpha / eps) * envelope)
    return out if out.ndim else complex(out)
