"""One-variable and multivariable Hermite polynomials plus Gaussian overlaps.

The multivariable family H_n^{R}(y) is fixed by the generating function

    exp(-1/2 a.R.a + a.R.y) = sum_n H_n^{R}(y) a^n / n!

over complex symmetric S x S matrices R and complex S-vectors y, where
a^n = a_1^{n_1}...a_S^{n_S} and n! = n_1!...n_S!.  The scalar case R = 2
reduces to the classical (physicists') polynomials H_n(y).

Evaluation runs the multi-index recursion

    H_{n+e_k} = (R y)_k H_n - sum_j R_{kj} n_j H_{n-e_j}

which only ever touches R and the product R y.  The product form matters:
several callers (photon statistics of near-coherent states) have a finite
linear term R y while y itself diverges, so the low-level entry points take
the linear vector directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import DegenerateOverlapError, ResourceLimitError
from .matrices import check_symmetric

_DEFAULT_INDEX_CAP = 2_000_000
_COND_LIMIT = 1e12


@dataclass(frozen=True)
class MultiIndex:
    """Nonnegative integer multi-index n = (n_1, ..., n_S)."""

    entries: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(int(k) for k in self.entries))
        if any(k < 0 for k in self.entries):
            raise ValueError(f"multi-index entries must be nonnegative, got {self.entries}")

    @property
    def total_degree(self) -> int:
        return sum(self.entries)

    def __len__(self) -> int:
        return len(self.entries)


def as_index(n, length: int | None = None) -> tuple[int, ...]:
    """Normalize ints, sequences, or MultiIndex values to a validated tuple."""
    if isinstance(n, MultiIndex):
        idx = n.entries
    elif isinstance(n, (int, np.integer)):
        idx = (int(n),)
    else:
        idx = tuple(int(k) for k in n)
    if any(k < 0 for k in idx):
        raise ValueError(f"multi-index entries must be nonnegative, got {idx}")
    if length is not None and len(idx) != length:
        raise ValueError(f"multi-index has length {len(idx)}, expected {length}")
    return idx


@dataclass(frozen=True)
class HermiteParams:
    """Evaluation context (R, y) for H_n^{R}(y)."""

    R: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        R = check_symmetric(np.asarray(self.R, dtype=complex), name="R")
        y = np.asarray(self.y, dtype=complex).reshape(-1)
        if R.shape[0] != y.shape[0]:
            raise ValueError(f"R is {R.shape} but y has length {y.shape[0]}")
        if R.shape[0] < 1:
            raise ValueError("dimension must be at least 1")
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "y", y)

    @property
    def dim(self) -> int:
        return self.R.shape[0]


@dataclass(frozen=True)
class OverlapSpec:
    """Data of the integral of two Hermite polynomials against a Gaussian.

    Describes int H_n^{R}(x) H_m^{r}(Lam x + d) exp(-x.m.x + c.x) dx over
    R^N.  Re(m) must be positive definite for convergence.
    """

    R: np.ndarray
    r: np.ndarray
    lam: np.ndarray
    d: np.ndarray
    c: np.ndarray
    m: np.ndarray

    def __post_init__(self):
        R = check_symmetric(np.asarray(self.R, dtype=complex), name="R")
        r = check_symmetric(np.asarray(self.r, dtype=complex), name="r")
        m = check_symmetric(np.asarray(self.m, dtype=complex), name="m")
        lam = np.asarray(self.lam, dtype=complex)
        d = np.asarray(self.d, dtype=complex).reshape(-1)
        c = np.asarray(self.c, dtype=complex).reshape(-1)
        n = m.shape[0]
        for name, obj, shape in [("R", R, (n, n)), ("r", r, (n, n)), ("lam", lam, (n, n)),
                                 ("d", d, (n,)), ("c", c, (n,))]:
            if obj.shape != shape:
                raise ValueError(f"{name} has shape {obj.shape}, expected {shape}")
        if np.linalg.eigvalsh(m.real).min() <= 0:
            raise ValueError("Re(m) must be positive definite")
        for field, val in [("R", R), ("r", r), ("lam", lam), ("d", d), ("c", c), ("m", m)]:
            object.__setattr__(self, field, val)

    @property
    def n_dim(self) -> int:
        return self.m.shape[0]


def hermite1d_eval(n: int, t):
    """Classical Hermite polynomial H_n(t) by the three-term recursion.

    Accepts scalars or arrays of real or complex argument.
    """
    n = int(n)
    if n < 0:
        raise ValueError("order must be nonnegative")
    t = np.asarray(t, dtype=complex)
    h_prev, h = np.ones_like(t), 2.0 * t
    if n == 0:
        out = h_prev
    else:
        for k in range(1, n):
            h_prev, h = h, 2.0 * t * h - 2.0 * k * h_prev
        out = h
    return out if out.ndim else complex(out)


def fock_wavefunction_eval(n: int, q, scale: float = 1.0):
    """Number-state wavefunction psi_n(q) of a ground Gaussian with width 1/sqrt(scale).

    psi_n(q) = (scale/pi)^{1/4} (2^n n!)^{-1/2} exp(-scale q^2/2) H_n(q sqrt(scale));
    the family is orthonormal in L^2(dq).
    """
    n = int(n)
    if n < 0:
        raise ValueError("order must be nonnegative")
    if scale <= 0:
        raise ValueError("scale must be positive")
    q = np.asarray(q, dtype=float)
    norm = (scale / math.pi) ** 0.25 * math.exp(-0.5 * (n * math.log(2.0) + math.lgamma(n + 1)))
    out = norm * np.exp(-0.5 * scale * q * q) * hermite1d_eval(n, q * math.sqrt(scale))
    return out if np.ndim(out) else complex(out)


def _degree_indices(dim: int, degree: int):
    """All multi-indices of the given total degree, lexicographic by construction."""
    # stars-and-bars over the bar positions
    for bars in combinations(range(degree + dim - 1), dim - 1):
        prev, idx = -1, []
        for b in bars:
            idx.append(b - prev - 1)
            prev = b
        idx.append(degree + dim - 1 - prev - 1)
        yield tuple(idx)


def index_count(dim: int, max_total_degree: int) -> int:
    """Number of multi-indices with total degree <= max_total_degree."""
    return math.comb(max_total_degree + dim, dim)


def extend_hermite_table(table: dict[tuple[int, ...], complex], R: np.ndarray,
                         linear: np.ndarray, degree: int) -> None:
    """Add the shell of total degree ``degree`` to an existing table in place.

    The table must already hold every index of total degree ``degree - 1``
    and ``degree - 2``.
    """
    dim = R.shape[0]
    for idx in _degree_indices(dim, degree):
        k = next(i for i, v in enumerate(idx) if v > 0)
        low = list(idx)
        low[k] -= 1
        val = linear[k] * table[tuple(low)]
        for j in range(dim):
            if low[j] > 0:
                lower = list(low)
                lower[j] -= 1
                val -= R[k, j] * low[j] * table[tuple(lower)]
        table[idx] = val


def mv_hermite_table_linear(R: np.ndarray, linear: np.ndarray, max_total_degree: int,
                            max_indices: int = _DEFAULT_INDEX_CAP) -> dict[tuple[int, ...], complex]:
    """Table of H_n for all |n| <= max_total_degree, generating function
    exp(-1/2 a.R.a + a.linear).

    One upward pass of the recursion; every value is computed exactly once.
    """
    R = np.asarray(R, dtype=complex)
    linear = np.asarray(linear, dtype=complex).reshape(-1)
    dim = R.shape[0]
    if R.shape != (dim, dim) or linear.shape[0] != dim:
        raise ValueError(f"R {R.shape} and linear vector ({linear.shape[0]},) do not match")
    if max_total_degree < 0:
        raise ValueError("max_total_degree must be nonnegative")
    total = index_count(dim, max_total_degree)
    if total > max_indices:
        raise ResourceLimitError(
            f"table would hold {total} indices, exceeding the cap {max_indices}")

    table: dict[tuple[int, ...], complex] = {(0,) * dim: 1.0 + 0j}
    for degree in range(1, max_total_degree + 1):
        extend_hermite_table(table, R, linear, degree)
    return table


def mv_hermite_table(params: HermiteParams, max_total_degree: int,
                     max_indices: int = _DEFAULT_INDEX_CAP) -> dict[tuple[int, ...], complex]:
    """All H_n^{R}(y) with total degree up to ``max_total_degree``."""
    return mv_hermite_table_linear(params.R, params.R @ params.y, max_total_degree,
                                   max_indices=max_indices)


def mv_hermite_eval(params: HermiteParams, n) -> complex:
    """Single value H_n^{R}(y)."""
    idx = as_index(n, length=params.dim)
    table = mv_hermite_table_linear(params.R, params.R @ params.y, sum(idx))
    return table[idx]


def gaussian_hermite_overlap(spec: OverlapSpec, n, m_idx) -> complex:
    """Overlap integral of H_n^{R} and H_m^{r}(Lam x + d) against exp(-x.m.x + c.x).

    The result is pi^{N/2} det(m)^{-1/2} exp(c.m^{-1}.c / 4) H_{(n,m)}^{rho}(y)
    with the coupled 2N x 2N matrix rho and argument y assembled from the
    spec; the first index block belongs to the R-side polynomial.
    """
    N = spec.n_dim
    idx_n = as_index(n, length=N)
    idx_m = as_index(m_idx, length=N)

    minv = np.linalg.inv(spec.m)
    R, r, lam = spec.R, spec.r, spec.lam
    r_lam = r @ lam
    R1 = R - 0.5 * R @ minv @ R
    R2 = r - 0.5 * r_lam @ minv @ lam.T @ r
    R12 = -0.5 * R @ minv @ lam.T @ r  # transpose is -1/2 r Lam m^{-1} R
    rho = np.block([[R1, R12], [R12.T, R2]])
    rho = 0.5 * (rho + rho.T)

    lin_a = 0.5 * R @ minv @ spec.c
    lin_b = 0.5 * r_lam @ minv @ spec.c + r @ spec.d
    linear = np.concatenate([lin_a, lin_b])

    cond = np.linalg.cond(rho)
    if not np.isfinite(cond) or cond > _COND_LIMIT:
        raise DegenerateOverlapError(
            f"coupling matrix is numerically singular (cond {cond:.3e})")

    eigvals = np.linalg.eigvals(spec.m)
    det_root = np.exp(0.5 * np.sum(np.log(eigvals)))  # branch continuous from real PD m
    prefactor = math.pi ** (N / 2) / det_root * np.exp(0.25 * spec.c @ minv @ spec.c)

    combined = idx_n + idx_m
    table = mv_hermite_table_linear(rho, linear, sum(combined))
    return complex(prefactor * table[combined])
