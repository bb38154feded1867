"""Multimode even and odd superpositions of opposite coherent states.

A state |A+-> ~ |A> +- |-A> over the mode amplitudes A = (alpha_1..alpha_N)
carries parity-pure photon statistics: the cosh/sinh normalization couples
the modes, so the joint photon distribution never factorizes even though
|A> itself is a product state.  Phase-space densities come out in closed
form from the two-label Gaussian kernel of coherent-state pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConventionError
from .hermite import as_index

_IMAG_RESIDUE_TOL = 1e-12


@dataclass(frozen=True)
class CatState:
    """Even or odd superposition of |A> and |-A>."""

    amplitudes: np.ndarray
    parity: str

    def __post_init__(self):
        amp = np.atleast_1d(np.array(self.amplitudes, dtype=complex))
        if amp.ndim != 1 or amp.shape[0] < 1:
            raise ValueError("amplitudes must be a nonempty complex vector")
        if self.parity not in ("even", "odd"):
            raise ValueError(f"parity must be 'even' or 'odd', got {self.parity!r}")
        if self.parity == "odd" and np.abs(amp).max() == 0.0:
            raise ValueError("odd superposition of A = 0 is not normalizable")
        amp.flags.writeable = False
        object.__setattr__(self, "amplitudes", amp)

    @property
    def n_modes(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def norm2(self) -> float:
        """|A|^2 = sum |alpha_m|^2."""
        return float(np.sum(np.abs(self.amplitudes) ** 2))


def cat_normalization(c: CatState) -> float:
    """N+ = e^{|A|^2/2} / (2 sqrt(cosh |A|^2)); sinh for the odd branch."""
    a2 = c.norm2
    if c.parity == "even":
        return math.exp(0.5 * a2) / (2.0 * math.sqrt(math.cosh(a2)))
    return math.exp(0.5 * a2) / (2.0 * math.sqrt(math.sinh(a2)))


def cat_pnd(c: CatState, n) -> float:
    """Probability of the photon-number outcome n; zero on parity mismatch."""
    idx = as_index(n, length=c.n_modes)
    total = sum(idx)
    if total % 2 != (0 if c.parity == "even" else 1):
        return 0.0
    log_term = 0.0
    for alpha, k in zip(c.amplitudes, idx):
        a = abs(alpha)
        if a == 0.0:
            if k > 0:
                return 0.0
            continue
        log_term += 2 * k * math.log(a) - math.lgamma(k + 1)
    denom = math.cosh(c.norm2) if c.parity == "even" else math.sinh(c.norm2)
    return math.exp(log_term) / denom


def cat_total_pnd(c: CatState, total: int) -> float:
    """Probability of finding ``total`` photons summed over all mode splittings.

    Equals (|A|^2)^total / (total! cosh |A|^2) on parity-matching totals
    (sinh for odd), zero otherwise.
    """
    if total < 0:
        raise ValueError("total must be nonnegative")
    if total % 2 != (0 if c.parity == "even" else 1):
        return 0.0
    a2 = c.norm2
    denom = math.cosh(a2) if c.parity == "even" else math.sinh(a2)
    return math.exp(total * math.log(a2) - math.lgamma(total + 1)) / denom if a2 > 0 \
        else (1.0 / denom if total == 0 else 0.0)


def cat_ladder_apply(c: CatState, i: int) -> tuple[complex, CatState]:
    """Amplitude factor and flipped state of a_i acting on the superposition.

    a_i |A+> = alpha_i sqrt(tanh |A|^2) |A->  and
    a_i |A-> = alpha_i sqrt(coth |A|^2) |A+>.
    """
    if not 0 <= i < c.n_modes:
        raise ValueError(f"mode index {i} out of range for {c.n_modes} modes")
    a2 = c.norm2
    if c.parity == "even":
        if a2 == 0.0:
            raise ValueError("lowering the even A = 0 state gives no normalizable odd state")
        factor = c.amplitudes[i] * math.sqrt(math.tanh(a2))
        flipped = CatState(c.amplitudes, "odd")
    else:
        factor = c.amplitudes[i] * math.sqrt(1.0 / math.tanh(a2))
        flipped = CatState(c.amplitudes, "even")
    return complex(factor), flipped


@dataclass(frozen=True)
class CatMoments:
    """First and second moments of the mode operators and photon numbers.

    ``number_covariance`` is the centered matrix cov(n_i, n_k);
    ``number_second_moment`` is the raw <n_i n_k>.  Both are exposed because
    the two conventions are easy to conflate.
    """

    pair_amplitude: np.ndarray        # <a_i a_k>
    symmetric_occupation: np.ndarray  # <a_i^dag a_k + a_k a_i^dag>/2
    mean_photon: np.ndarray
    number_covariance: np.ndarray
    number_second_moment: np.ndarray
    mandel_q: np.ndarray


def cat_moments(c: CatState) -> CatMoments:
    """Closed-form quadrature and photon-number moments of the superposition."""
    a = c.amplitudes
    a2 = c.norm2
    if c.parity == "even":
        weight = math.tanh(a2)
        cross = 1.0 / math.cosh(a2) ** 2   # sech^2, positive correlations
        sign = 1.0
    else:
        weight = 1.0 / math.tanh(a2)
        cross = 1.0 / math.sinh(a2) ** 2   # csch^2, anti-correlations
        sign = -1.0
    abs2 = np.abs(a) ** 2
    pair = np.outer(a, a)
    occupation = weight * np.outer(np.conj(a), a) + 0.5 * np.eye(c.n_modes)
    mean_n = abs2 * weight
    covariance = sign * cross * np.outer(abs2, abs2) + np.diag(abs2 * weight)
    second = covariance + np.outer(mean_n, mean_n)
    with np.errstate(divide="ignore", invalid="ignore"):
        mandel = np.where(mean_n > 0, (np.diag(second) - mean_n ** 2 - mean_n)
                          / np.where(mean_n > 0, mean_n, 1.0), 0.0)
    return CatMoments(pair, occupation, mean_n, covariance, second, mandel)


def cat_q_eval(c: CatState, beta) -> np.ndarray | float:
    """Husimi density <B|rho|B> at coherent labels beta of shape (..., N)."""
    beta = np.asarray(beta, dtype=complex)
    if beta.ndim == 0:
        beta = beta.reshape(1)
    if beta.shape[-1] != c.n_modes:
        raise ValueError(f"beta must have last dimension {c.n_modes}")
    norm = cat_normalization(c)
    ab = beta.conj() @ c.amplitudes
    envelope = np.cosh(ab) if c.parity == "even" else np.sinh(ab)
    b2 = np.sum(np.abs(beta) ** 2, axis=-1)
    out = 4.0 * norm * norm * np.exp(-(c.norm2 + b2)) * np.abs(envelope) ** 2
    return out if out.ndim else float(out)


def _coherent_pair_wigner(a_vec, b_vec, z):
    """Two-label Gaussian kernel W_{A,B}(Z) of a coherent dyad |A><B|."""
    n = a_vec.shape[0]
    zz = np.sum(z * np.conj(z), axis=-1)
    az = z.conj() @ a_vec
    bz = z @ np.conj(b_vec)
    ab = np.conj(b_vec) @ a_vec
    a2 = np.sum(np.abs(a_vec) ** 2)
    b2 = np.sum(np.abs(b_vec) ** 2)
    return 2.0 ** n * np.exp(-2.0 * zz + 2.0 * az + 2.0 * bz - ab - 0.5 * a2 - 0.5 * b2)


def cat_wigner_eval(c: CatState, q, p) -> np.ndarray | float:
    """Wigner density at quadrature points; q and p broadcast with shape (..., N).

    Four dyad kernels interfere; the result is real up to round-off, which is
    checked and discarded.
    """
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    if q.ndim == 0:
        q = q.reshape(1)
    if p.ndim == 0:
        p = p.reshape(1)
    if q.shape[-1] != c.n_modes or p.shape[-1] != c.n_modes:
        raise ValueError(f"q and p must have last dimension {c.n_modes}")
    z = (q + 1j * p) / math.sqrt(2.0)
    a = c.amplitudes
    sign = 1.0 if c.parity == "even" else -1.0
    norm = cat_normalization(c)
    val = norm * norm * (_coherent_pair_wigner(a, a, z)
                         + sign * _coherent_pair_wigner(a, -a, z)
                         + sign * _coherent_pair_wigner(-a, a, z)
                         + _coherent_pair_wigner(-a, -a, z))
    residue = np.abs(val.imag).max()
    if residue > _IMAG_RESIDUE_TOL * max(1.0, np.abs(val.real).max()):
        raise ConventionError(f"Wigner evaluation left imaginary residue {residue:.3e}")
    out = val.real
    return out if out.ndim else float(out)


def cat_to_dict(c: CatState) -> dict:
    """JSON-ready document {A: [[re, im], ...], parity}."""
    return {"A": [[z.real, z.imag] for z in c.amplitudes], "parity": c.parity}


def cat_from_dict(doc: dict) -> CatState:
    amp = np.array([complex(re, im) for re, im in doc["A"]])
    return CatState(amp, doc["parity"])
