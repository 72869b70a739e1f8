"""Shared symmetric-matrix helpers.

All log-determinants are base 2. Tolerances follow the library-wide
convention: an eigenvalue >= -1e-10 counts as positive semidefinite, and
positive definite means the smallest eigenvalue is at least 1e-12 times
the largest.
"""

from __future__ import annotations

import math

import numpy as np
from numpy.typing import NDArray

PSD_TOL = 1e-10
PD_RTOL = 1e-12
SYM_RTOL = 1e-8

LOG2E = math.log2(math.e)


def as_cov(value, name: str = "matrix") -> NDArray[np.float64]:
    """Coerce a scalar, nested list, or array to a square 2-D float array."""
    arr = np.array(value, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be square, got shape {arr.shape}")
    return arr


def sym_deviation(m: NDArray) -> float:
    """Relative symmetry defect, |M - M^T|_max / max(1, |M|_max)."""
    num = float(np.max(np.abs(m - m.T), initial=0.0))
    den = max(1.0, float(np.max(np.abs(m), initial=0.0)))
    return num / den


def is_symmetric(m: NDArray, rtol: float = SYM_RTOL) -> bool:
    return sym_deviation(m) <= rtol


def eigvals_sym(m: NDArray) -> NDArray[np.float64]:
    return np.linalg.eigvalsh(0.5 * (m + m.T))


def min_eig(m: NDArray) -> float:
    return float(eigvals_sym(m)[0])


def is_psd(m: NDArray, tol: float = PSD_TOL) -> bool:
    return min_eig(m) >= -tol


def is_pd(m: NDArray, rtol: float = PD_RTOL) -> bool:
    ev = eigvals_sym(m)
    return ev[0] >= rtol * max(float(ev[-1]), 0.0) and ev[0] > 0.0


def logdet2(m: NDArray) -> float:
    """log2 det of a symmetric positive-definite matrix.

    Asymmetric arguments beyond the relative tolerance are an internal
    error (they indicate a bug upstream, not bad user input), so a plain
    ValueError is raised rather than silently symmetrizing.
    """
    if sym_deviation(m) > SYM_RTOL:
        raise ValueError("internal error: log-det argument is not symmetric")
    sym = 0.5 * (m + m.T)
    chol = np.linalg.cholesky(sym)  # LinAlgError propagates for non-PD input
    return 2.0 * float(np.sum(np.log2(np.diag(chol))))


def logdet2_psd(m: NDArray) -> float:
    """log2 det allowing singular input, returning -inf at the boundary."""
    if sym_deviation(m) > SYM_RTOL:
        raise ValueError("internal error: log-det argument is not symmetric")
    ev = eigvals_sym(m)
    if ev[0] <= 0.0:
        return -math.inf
    return float(np.sum(np.log2(ev)))


def inv_spd(m: NDArray) -> NDArray[np.float64]:
    sym = 0.5 * (m + m.T)
    out = np.linalg.inv(sym)
    return 0.5 * (out + out.T)


def sqrt_spd(m: NDArray) -> NDArray[np.float64]:
    ev, vec = np.linalg.eigh(0.5 * (m + m.T))
    ev = np.clip(ev, 0.0, None)
    return (vec * np.sqrt(ev)) @ vec.T


def invsqrt_spd(m: NDArray) -> NDArray[np.float64]:
    ev, vec = np.linalg.eigh(0.5 * (m + m.T))
    return (vec / np.sqrt(ev)) @ vec.T


def psd_clip(m: NDArray) -> NDArray[np.float64]:
    """Nearest PSD matrix in Frobenius norm (negative eigenvalues to 0)."""
    ev, vec = np.linalg.eigh(0.5 * (m + m.T))
    return (vec * np.clip(ev, 0.0, None)) @ vec.T


def conditional_cov(cov: NDArray, keep: NDArray, cond: NDArray) -> NDArray[np.float64]:
    """Schur complement: covariance of the `keep` block given the `cond` block.

    `keep` and `cond` are integer index arrays into `cov`. An empty `cond`
    returns the marginal block. Raises numpy.linalg.LinAlgError when the
    conditioning block is singular.
    """
    kk = cov[np.ix_(keep, keep)]
    if len(cond) == 0:
        return kk
    cc = cov[np.ix_(cond, cond)]
    kc = cov[np.ix_(keep, cond)]
    solved = np.linalg.solve(cc, kc.T)
    out = kk - kc @ solved
    return 0.5 * (out + out.T)


def random_spd(rng: np.random.Generator, m: int, lo: float = 0.4, hi: float = 3.0) -> NDArray:
    """Random SPD matrix with eigenvalues uniform in [lo, hi]."""
    q, _ = np.linalg.qr(rng.standard_normal((m, m)))
    ev = rng.uniform(lo, hi, size=m)
    return (q * ev) @ q.T


def random_psd(rng: np.random.Generator, m: int, scale: float = 1.0) -> NDArray:
    a = rng.standard_normal((m, m)) * math.sqrt(scale / max(m, 1))
    return a @ a.T


def random_contraction(rng: np.random.Generator, m: int, max_norm: float = 0.7) -> NDArray:
    """Random matrix with spectral norm at most max_norm."""
    a = rng.standard_normal((m, m))
    norm = np.linalg.norm(a, 2)
    return a * (max_norm * rng.uniform(0.3, 1.0) / max(norm, 1e-300))
