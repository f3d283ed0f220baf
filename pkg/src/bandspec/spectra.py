"""Eigenvalues, singular values and empirical spectral statistics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _linalg
from .errors import ConvergenceError

__all__ = [
    "EmpiricalMeasure",
    "SpectralSample",
    "counting_in_interval",
    "empirical_measure",
    "empirical_moments",
    "empirical_stieltjes",
    "histogram",
    "ks_distance",
    "singular_values",
    "symmetric_eigenvalues",
]

MAX_SWEEPS = 50
PSD_TOL = 1e-10


def symmetric_eigenvalues(m, tol: float = PSD_TOL) -> np.ndarray:
    """All eigenvalues of a symmetric matrix, ascending.

    Householder tridiagonalization followed by implicit-shift QL. Eigenvalues
    in ``[-tol * ||M||, 0)`` are roundoff on a positive semidefinite input and
    are clamped to zero.

    Raises
    ------
    ValueError
        If ``m`` is not square or not symmetric to ``1e-10`` relative.
    ConvergenceError
        If QL exceeds its budget of 50 sweeps per eigenvalue, pooled over the matrix.
    """
    m = np.array(m, dtype=float, order="C", copy=True)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("expected a square matrix")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix has non-finite entries")
    scale = np.max(np.abs(m), initial=0.0)
    if np.max(np.abs(m - m.T), initial=0.0) > 1e-10 * max(scale, np.finfo(float).tiny):
        raise ValueError("matrix is not symmetric")
    if m.shape[0] == 0:
        return np.zeros(0)
    d, e = _linalg.tridiagonalize(m)
    status = _linalg.tridiagonal_ql(d, e, MAX_SWEEPS)
    if status:
        raise ConvergenceError(f"QL iteration did not converge for eigenvalue {status - 1}")
    d.sort()
    norm = max(abs(d[0]), abs(d[-1]))
    d[(d < 0.0) & (d >= -tol * norm)] = 0.0
    return d


def singular_values(a) -> np.ndarray:
    """Singular values of a square matrix, ascending.

    Golub-Kahan bidiagonalization and implicit-shift bidiagonal QR; never
    forms ``A A^T``, so small singular values keep their relative accuracy.
    """
    a = np.array(a, dtype=float, order="C", copy=True)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expected a square matrix")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    if a.shape[0] == 0:
        return np.zeros(0)
    d, e = _linalg.bidiagonalize(a)
    if _linalg.bidiagonal_qr(d, e, MAX_SWEEPS):
        raise ConvergenceError("bidiagonal QR did not converge")
    d.sort()
    return d


@dataclass(frozen=True)
class SpectralSample:
    """Sorted eigenvalues of one sampled ``M`` with where they came from."""

    values: np.ndarray
    provenance: dict = field(default_factory=dict)


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Uniform-weight atoms at sorted ``atoms``."""

    atoms: np.ndarray

    @property
    def size(self) -> int:
        return len(self.atoms)

    def cdf(self, x):
        """Right-continuous distribution function."""
        return np.searchsorted(self.atoms, x, side="right") / self.size

    def cdf_left(self, x):
        return np.searchsorted(self.atoms, x, side="left") / self.size

    def mass(self, lo: float, hi: float) -> float:
        return counting_in_interval(self, lo, hi)

    def stieltjes(self, z):
        return empirical_stieltjes(self, z)

    def moment(self, k: int) -> float:
        return empirical_moments(self, k)


def empirical_measure(values) -> EmpiricalMeasure:
    atoms = np.sort(np.asarray(values, dtype=float).ravel())
    if atoms.size == 0:
        raise ValueError("empirical measure of an empty sample")
    if not np.all(np.isfinite(atoms)):
        raise ValueError("sample has non-finite values")
    return EmpiricalMeasure(atoms)


def empirical_stieltjes(measure: EmpiricalMeasure, z):
    """``n^-1 sum 1/(lambda_l - z)``; ``z`` may be an array of non-real points."""
    z = np.asarray(z, dtype=complex)
    if np.any(z.imag == 0.0):
        raise ValueError("Stieltjes transform needs Im z != 0")
    out = np.mean(1.0 / (measure.atoms[:, None] - z.ravel()[None, :]), axis=0)
    return complex(out[0]) if z.ndim == 0 else out.reshape(z.shape)


def empirical_moments(measure: EmpiricalMeasure, k: int) -> float:
    if k < 1:
        raise ValueError("moment order must be >= 1")
    return float(np.mean(measure.atoms**k))


def _evaluate_cdf(reference_cdf, x: np.ndarray) -> np.ndarray:
    try:
        ref = np.asarray(reference_cdf(x), dtype=float)
        if ref.shape != x.shape:
            raise TypeError
    except (TypeError, ValueError):
        ref = np.array([float(reference_cdf(t)) for t in x])
    return ref


def ks_distance(measure: EmpiricalMeasure, reference_cdf, floor: float | None = None) -> float:
    """Kolmogorov-Smirnov distance ``sup |F_n - F|`` to a reference CDF.

    Both sides are compared at each atom and just to its left, which is exact
    for continuous and for right-continuous step references alike.
    ``reference_cdf`` should accept an array; scalar-only callables are
    vectorized automatically.

    With ``floor`` the supremum runs over ``lambda >= floor`` only, while
    ``F_n(floor)`` still counts every atom below it. Eigenvalues under the
    working accuracy of the eigensolver are then pooled instead of being
    compared point by point.
    """
    atoms, counts = np.unique(measure.atoms, return_counts=True)
    upper = np.cumsum(counts) / measure.size
    lower = upper - counts / measure.size
    gaps = []
    if floor is not None:
        keep = atoms > floor
        at_floor = float(measure.cdf(floor))
        gaps.append(abs(at_floor - float(_evaluate_cdf(reference_cdf, np.array([float(floor)]))[0])))
        atoms, upper, lower = atoms[keep], upper[keep], lower[keep]
    if len(atoms):
        at = _evaluate_cdf(reference_cdf, atoms)
        before = _evaluate_cdf(reference_cdf, np.nextafter(atoms, -np.inf))
        gaps.append(np.max(np.abs(upper - at)))
        gaps.append(np.max(np.abs(lower - before)))
    return float(max(gaps))


def counting_in_interval(measure: EmpiricalMeasure, lo: float, hi: float) -> float:
    """``N_n([lo, hi])``."""
    if lo > hi:
        raise ValueError("need lo <= hi")
    left = np.searchsorted(measure.atoms, lo, side="left")
    right = np.searchsorted(measure.atoms, hi, side="right")
    return (right - left) / measure.size


def histogram(measure: EmpiricalMeasure, bins=50, range=None):
    """``(edges, counts)`` of the atoms, for plotting elsewhere."""
    counts, edges = np.histogram(measure.atoms, bins=bins, range=range)
    return edges, counts
