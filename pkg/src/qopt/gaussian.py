"""N-mode Gaussian states: Wigner/Q evaluation and photon-number statistics.

A state is carried by its quadrature mean vector <Q> = (<p>, <q>) and the
real symmetric 2N x 2N dispersion matrix M (dimensionless units, hbar = 1).
The Wigner density is

    W(Q) = det(M)^{-1/2} exp(-1/2 (Q - <Q>) M^{-1} (Q - <Q>)),

normalized so that the integral of W dp dq / (2pi)^N is one.

Q-function parametrization.  With B = (beta_1..beta_N, beta_1*..beta_N*)
and U the unitary with Q_beta = U B, completing the square in

    Q(B) = det(M + I/2)^{-1/2} exp[-(U B - <Q>) (2M + I)^{-1} (U B - <Q>)]

gives Q(B) = P0 exp[-1/2 B (R + sigma_Nx) B + B.(Ry)] with

    R    = 2 U^T (2M + I)^{-1} U - sigma_Nx,
    R y  = 2 U^T (2M + I)^{-1} <Q>,
    P0   = det(M + I/2)^{-1/2} exp[-<Q> (2M + I)^{-1} <Q>].

Both the quadratic and the linear coefficient carry (2M + I)^{-1}; the
often-quoted variant with (I - 2M)^{-1} inside y is the same function under
the conjugate ordering of B and is singular exactly at coherent states,
where R vanishes while the product R y stays finite.  QRep therefore stores
the product as ``ry`` and treats ``y`` as derived data.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ConventionError
from .hermite import as_index, extend_hermite_table, index_count, mv_hermite_table_linear
from .matrices import block_swap, check_symmetric, quadrature_rotation, symplectic_metric

QREP_CONVENTION = ("R=2U^T(2M+I)^{-1}U-sigma_Nx; Ry=2U^T(2M+I)^{-1}<Q>; "
                   "B=(beta,beta*)")

_NEGATIVE_PROB_TOL = 1e-12
_DEFAULT_MASS_TOL = 1e-10
_DEFAULT_DEGREE_CAP = 64


@dataclass(frozen=True)
class GaussianState:
    """Gaussian state of ``n_modes`` modes: mean (p..., q...) and dispersion matrix."""

    mean: np.ndarray
    disp: np.ndarray

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float).reshape(-1)
        disp = check_symmetric(np.asarray(self.disp, dtype=float), tol=1e-10, name="disp")
        if mean.shape[0] % 2 != 0 or mean.shape[0] == 0:
            raise ValueError(f"mean must have even positive length, got {mean.shape[0]}")
        if disp.shape != (mean.shape[0], mean.shape[0]):
            raise ValueError(f"disp shape {disp.shape} does not match mean length {mean.shape[0]}")
        mean.flags.writeable = False
        disp.flags.writeable = False
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "disp", disp)

    @property
    def n_modes(self) -> int:
        return self.mean.shape[0] // 2


@dataclass(frozen=True)
class QRep:
    """Coefficients (R, y, P0) of the Gaussian Q-function exponent.

    ``ry`` is the exact linear coefficient vector of the exponent.  It equals
    R @ y whenever R is invertible but stays finite when it is not (coherent
    states), so every consumer reads ``ry`` rather than re-multiplying.
    """

    R: np.ndarray
    y: np.ndarray
    p0: float
    ry: np.ndarray | None = field(default=None)

    def __post_init__(self):
        R = check_symmetric(np.asarray(self.R, dtype=complex), tol=1e-10, name="R")
        y = np.asarray(self.y, dtype=complex).reshape(-1)
        if R.shape[0] != y.shape[0]:
            raise ValueError(f"R is {R.shape} but y has length {y.shape[0]}")
        if R.shape[0] % 2 != 0:
            raise ValueError("R must be 2N x 2N")
        if not 0.0 <= self.p0 <= 1.0 + 1e-12:
            raise ValueError(f"p0 must lie in [0, 1], got {self.p0}")
        ry = R @ y if self.ry is None else np.asarray(self.ry, dtype=complex).reshape(-1)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "ry", ry)

    @property
    def n_modes(self) -> int:
        return self.R.shape[0] // 2


@dataclass(frozen=True)
class PureGaussianSpec:
    """Pure state with wavefunction proportional to exp(-x.m.x + c.x)."""

    m: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        m = check_symmetric(np.asarray(self.m, dtype=complex), name="m")
        c = np.asarray(self.c, dtype=complex).reshape(-1)
        if c.shape[0] != m.shape[0]:
            raise ValueError(f"c has length {c.shape[0]}, expected {m.shape[0]}")
        if np.linalg.eigvalsh(m.real).min() <= 0:
            raise ValueError("Re(m) must be positive definite (state not normalizable)")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "c", c)


@dataclass(frozen=True)
class StateDiagnostics:
    """Report of validate_state; never raises."""

    symmetry_defect: float
    min_uncertainty_eigenvalue: float
    purity: float
    uncertainty_ok: bool


def make_coherent(alpha) -> GaussianState:
    """Coherent state |alpha> per mode: vacuum noise, displaced mean."""
    alpha = np.atleast_1d(np.asarray(alpha, dtype=complex))
    mean = np.concatenate([math.sqrt(2.0) * alpha.imag, math.sqrt(2.0) * alpha.real])
    return GaussianState(mean, 0.5 * np.eye(2 * alpha.shape[0]))


def make_thermal_oscillator(temperature: float, omega: float = 1.0) -> GaussianState:
    """Single oscillator in thermal equilibrium; isotropic noise 1/2 coth(omega/2T)."""
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    if omega <= 0:
        raise ValueError("omega must be positive")
    sigma = 0.5 / math.tanh(0.5 * omega / temperature)
    return GaussianState(np.zeros(2), sigma * np.eye(2))


def make_squeezed_vacuum(r: float) -> GaussianState:
    """Zero-correlation squeezed vacuum: sigma_q = e^{-2r}/2, sigma_p = e^{2r}/2."""
    return GaussianState(np.zeros(2), 0.5 * np.diag([math.exp(2 * r), math.exp(-2 * r)]))


def validate_state(s: GaussianState) -> StateDiagnostics:
    """Symmetry defect, minimum uncertainty eigenvalue, and purity of a state."""
    n = s.n_modes
    defect = float(np.abs(s.disp - s.disp.T).max())
    herm = s.disp + 0.5j * symplectic_metric(n)
    min_eig = float(np.linalg.eigvalsh(herm).min())
    det = np.linalg.det(s.disp)
    purity = float(np.clip((4.0 ** n * det) ** -0.5, 0.0, 1.0)) if det > 0 else 0.0
    return StateDiagnostics(defect, min_eig, purity, min_eig >= -1e-10)


def wigner_eval(s: GaussianState, Q) -> np.ndarray | float:
    """Wigner density at phase-space points Q of shape (..., 2N)."""
    Q = np.asarray(Q, dtype=float)
    if Q.shape[-1] != 2 * s.n_modes:
        raise ValueError(f"points must have last dimension {2 * s.n_modes}")
    sign, logdet = np.linalg.slogdet(s.disp)
    if sign <= 0:
        raise ValueError("dispersion matrix is singular or not positive definite")
    diff = Q - s.mean
    sol = np.linalg.solve(s.disp, diff[..., np.newaxis])[..., 0]
    quad = np.einsum("...i,...i->...", diff, sol)
    out = np.exp(-0.5 * quad - 0.5 * logdet)
    return out if out.ndim else float(out)


def to_qrep(s: GaussianState) -> QRep:
    """Q-function coefficients (R, y, P0) of a Gaussian state."""
    n = s.n_modes
    U = quadrature_rotation(n)
    A = 2.0 * s.disp + np.eye(2 * n)
    if np.linalg.cond(A) > 1e14:
        raise ValueError("2M + I is numerically singular; state is not physical")
    Ainv = np.linalg.inv(A)
    R = 2.0 * U.T @ Ainv @ U - block_swap(n)
    R = 0.5 * (R + R.T)
    ry = 2.0 * U.T @ (Ainv @ s.mean)
    sign, logdet = np.linalg.slogdet(s.disp + 0.5 * np.eye(2 * n))
    if sign <= 0:
        raise ValueError("M + I/2 is not positive definite; state is not physical")
    p0 = math.exp(-0.5 * logdet - float(s.mean @ Ainv @ s.mean))
    # y itself diverges when R is singular (coherent states); keep the
    # minimum-norm solution for the carrier and the exact product in ry.
    y = np.linalg.lstsq(R, ry, rcond=None)[0]
    return QRep(R, y, min(p0, 1.0), ry=ry)


def from_qrep(rep: QRep) -> GaussianState:
    """Invert the Q-function parametrization back to (mean, dispersion)."""
    n = rep.n_modes
    U = quadrature_rotation(n)
    rs = rep.R + block_swap(n)
    if np.linalg.cond(rs) > 1e14:
        raise ValueError("R + sigma_Nx is numerically singular")
    M_c = U @ np.linalg.inv(rs) @ U.T - 0.5 * np.eye(2 * n)
    if np.abs(M_c.imag).max() > 1e-9:
        raise ValueError("recovered dispersion matrix has a large imaginary residue")
    M = M_c.real
    mean_c = 0.5 * (2.0 * M + np.eye(2 * n)) @ (np.conj(U) @ rep.ry)
    if np.abs(mean_c.imag).max() > 1e-9:
        raise ValueError("recovered mean has a large imaginary residue")
    return GaussianState(mean_c.real, 0.5 * (M + M.T))


def q_eval(s: GaussianState, beta) -> np.ndarray | float:
    """Husimi function <beta|rho|beta> at coherent labels beta of shape (..., N)."""
    rep = to_qrep(s)
    n = s.n_modes
    beta = np.asarray(beta, dtype=complex)
    if beta.ndim == 0:
        beta = beta.reshape(1)
    if beta.shape[-1] != n:
        raise ValueError(f"beta must have last dimension {n}")
    B = np.concatenate([beta, np.conj(beta)], axis=-1)
    kernel = rep.R + block_swap(n)
    quad = np.einsum("...i,ij,...j->...", B, kernel, B)
    val = rep.p0 * np.exp(-0.5 * quad + B @ rep.ry)
    if np.abs(val.imag).max() > 1e-9 * max(1.0, np.abs(val.real).max()):
        raise ConventionError("Q-function evaluated to a non-real value")
    out = val.real
    return out if out.ndim else float(out)


def from_pure_gaussian(spec: PureGaussianSpec) -> GaussianState:
    """Gaussian state of the pure wavefunction exp(-x.m.x + c.x), normalized."""
    m_re, m_im = spec.m.real, spec.m.imag
    c_re, c_im = spec.c.real, spec.c.imag
    m_re_inv = np.linalg.inv(m_re)
    s_pp = np.linalg.inv(np.real(np.linalg.inv(spec.m)))
    s_qq = 0.25 * m_re_inv
    s_pq = -0.5 * m_im @ m_re_inv
    M = np.block([[s_pp, s_pq], [s_pq.T, s_qq]])
    x_bar = 0.5 * m_re_inv @ c_re
    p_bar = c_im - m_im @ m_re_inv @ c_re
    return GaussianState(np.concatenate([p_bar, x_bar]), 0.5 * (M + M.T))


def _pnd_value(rep: QRep, table: dict, idx: tuple[int, ...]) -> float:
    combined = idx + idx
    raw = rep.p0 * table[combined] / math.prod(math.factorial(k) for k in idx)
    if abs(raw.imag) > 1e-9 * max(1.0, abs(raw.real)):
        raise ConventionError(f"photon probability for {idx} is not real: {raw}")
    val = raw.real
    if val < -_NEGATIVE_PROB_TOL:
        raise ConventionError(f"photon probability for {idx} is negative: {val}")
    return max(val, 0.0)


def photon_pnd(s: GaussianState, n) -> float:
    """Probability of the photon-number outcome n = (n_1, ..., n_N)."""
    idx = as_index(n, length=s.n_modes)
    rep = to_qrep(s)
    table = mv_hermite_table_linear(rep.R, rep.ry, 2 * sum(idx))
    return _pnd_value(rep, table, idx)


@dataclass(frozen=True)
class PndTable:
    """Photon-number probabilities by total degree, with truncation report."""

    probabilities: dict[tuple[int, ...], float]
    cumulative: float
    max_total_degree: int
    cap_hit: bool


def photon_pnd_table(s: GaussianState, mass_tol: float = _DEFAULT_MASS_TOL,
                     degree_cap_per_mode: int = _DEFAULT_DEGREE_CAP,
                     max_indices: int = 2_000_000) -> PndTable:
    """Enumerate photon-number probabilities until mass 1 - mass_tol is covered.

    Enumeration walks shells of constant total photon number; it stops on the
    mass target, on the configured degree cap, or when the backing polynomial
    table would outgrow ``max_indices``, whichever comes first.  A truncation
    is flagged in the result and warned about, never silent.
    """
    n = s.n_modes
    rep = to_qrep(s)
    cap = degree_cap_per_mode * n
    probs: dict[tuple[int, ...], float] = {}
    hermite_table = mv_hermite_table_linear(rep.R, rep.ry, 0)
    hermite_degree = 0
    cumulative = 0.0
    degree = 0
    while True:
        needed = 2 * degree
        while hermite_degree < needed:
            hermite_degree += 1
            extend_hermite_table(hermite_table, rep.R, rep.ry, hermite_degree)
        for idx in _photon_shell(n, degree):
            p = _pnd_value(rep, hermite_table, idx)
            probs[idx] = p
            cumulative += p
        if cumulative >= 1.0 - mass_tol:
            return PndTable(probs, cumulative, degree, False)
        if degree >= cap:
            warnings.warn(f"photon enumeration hit the degree cap {cap} "
                          f"with cumulative mass {cumulative:.12f}")
            return PndTable(probs, cumulative, degree, True)
        if index_count(2 * n, 2 * (degree + 1)) > max_indices:
            warnings.warn(f"photon enumeration stopped at total degree {degree}: "
                          f"polynomial table would exceed {max_indices} indices "
                          f"(cumulative mass {cumulative:.12f})")
            return PndTable(probs, cumulative, degree, True)
        degree += 1


def _photon_shell(n_modes: int, degree: int):
    if n_modes == 1:
        yield (degree,)
        return
    for first in range(degree + 1):
        for rest in _photon_shell(n_modes - 1, degree - first):
            yield (first,) + rest


def _mode_marginal(s: GaussianState, j: int) -> GaussianState:
    n = s.n_modes
    if not 0 <= j < n:
        raise ValueError(f"mode index {j} out of range for {n} modes")
    sel = [j, n + j]
    return GaussianState(s.mean[sel], s.disp[np.ix_(sel, sel)])


def photon_moments(s: GaussianState, j: int = 0) -> tuple[float, float]:
    """Mean and variance of the photon number in mode j.

    The mean is the closed quadrature-moment form; the variance is summed
    from the marginal photon-number series.
    """
    n = s.n_modes
    if not 0 <= j < n:
        raise ValueError(f"mode index {j} out of range for {n} modes")
    mean = 0.5 * (s.disp[j, j] + s.disp[n + j, n + j] - 1.0) \
        + 0.5 * (s.mean[j] ** 2 + s.mean[n + j] ** 2)
    marg = _mode_marginal(s, j)
    table = photon_pnd_table(marg)
    m1 = sum(k[0] * p for k, p in table.probabilities.items())
    m2 = sum(k[0] ** 2 * p for k, p in table.probabilities.items())
    return float(mean), float(m2 - m1 * m1)


def state_to_dict(s: GaussianState) -> dict:
    """JSON-ready document {n_modes, mean, disp}."""
    return {"n_modes": s.n_modes, "mean": s.mean.tolist(), "disp": s.disp.tolist()}


def state_from_dict(doc: dict) -> GaussianState:
    state = GaussianState(np.asarray(doc["mean"], dtype=float),
                          np.asarray(doc["disp"], dtype=float))
    if "n_modes" in doc and int(doc["n_modes"]) != state.n_modes:
        raise ValueError(f"n_modes {doc['n_modes']} does not match mean length "
                         f"{2 * state.n_modes}")
    return state
