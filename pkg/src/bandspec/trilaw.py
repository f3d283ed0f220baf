"""Limiting squared-singular-value law of lower-triangular random matrices.

The Stieltjes transform ``f`` solves ``(1 + f) log(1 + f) = -1/z``. Writing
``f = exp(c) - 1`` turns this into ``c exp(c) = -1/z``, which is solved here by
Newton iteration on the principal branch. Along the cut the boundary value
``c(lambda + i0) = xi + i eta`` gives the density in parametric form::

    lambda(eta) = exp(eta cot eta) sin(eta) / eta,
    rho(lambda(eta)) = sin(eta)**2 / (pi lambda eta),   0 < eta < pi,

with ``eta -> 0`` at the soft edge ``lambda = e`` and ``eta -> pi`` at the hard
edge ``lambda = 0``.
"""

from __future__ import annotations

import cmath
import functools
import math
from fractions import Fraction

import numpy as np
from scipy import integrate, optimize

from .errors import ConvergenceError

E = math.e
EPS = float(np.finfo(float).eps)

__all__ = [
    "TriangularLaw",
    "inverse_x",
    "parametric_point",
    "support_from_inverse",
    "triangular_cdf",
    "triangular_density",
    "triangular_moment",
    "triangular_transform",
]


# ---------------------------------------------------------------------------
# Stieltjes transform


def _on_principal_branch(c: complex) -> bool:
    # W_0 maps onto the region bounded by -y cot(y) + i y, |y| < pi.
    y = c.imag
    if abs(y) >= math.pi:
        return False
    if y == 0.0:
        return c.real >= -1.0
    return c.real > -y / math.tan(y)


def _residual_floor(w: complex, tol: float) -> float:
    # absolute target, unless roundoff in c exp(c) ~ |w| eps already exceeds it
    return max(tol, 16.0 * EPS * abs(w))


def _newton_w(w: complex, c0: complex, tol: float, max_iter: int = 100):
    """Newton on ``c exp(c) - w``; returns ``(c, converged)``."""
    target = _residual_floor(w, tol)
    c = c0
    if not cmath.isfinite(c) or c.real > 700.0:
        return c, False
    for _ in range(max_iter):
        ec = cmath.exp(c)
        g = c * ec - w
        if abs(g) <= 0.5 * target:
            return c, True
        dg = ec * (c + 1.0)
        if dg == 0:
            return c, False
        step = g / dg
        c = c - step
        if not cmath.isfinite(c) or c.real > 700.0:
            return c, False
        if abs(step) <= 1e-16 * max(1.0, abs(c)):
            ec = cmath.exp(c)
            return c, abs(c * ec - w) <= target
    return c, False


def _initial_guesses(w: complex):
    # branch-point series first: it lands on the principal sheet near the cut
    yield -1.0 + cmath.sqrt(2.0 * (E * w + 1.0))
    if abs(w) <= 1.0:
        yield w
    else:
        lw = cmath.log(w)
        yield lw - cmath.log(lw)


def _solve_c(z: complex, tol: float) -> complex:
    w = -1.0 / z
    for c0 in _initial_guesses(w):
        c, ok = _newton_w(w, c0, tol)
        if ok and _on_principal_branch(c):
            return c
    # continuation inward from far out along the ray through z
    c = -1.0 / (z * 64.0)
    for scale in np.geomspace(64.0, 1.0, 49):
        c, ok = _newton_w(-1.0 / (z * scale), c, tol)
        if not ok:
            break
    if ok and _on_principal_branch(c):
        return c
    raise ConvergenceError(f"Newton for c*exp(c) = -1/z did not converge at z={z!r}")


def triangular_transform(z: complex, tol: float = 1e-12) -> complex:
    """Stieltjes transform ``f(z)`` of the triangular law.

    Parameters
    ----------
    z : complex
        Spectral parameter off the support ``[0, e]``.
    tol : float
        Bound on the residual ``|(1 + f) log(1 + f) + 1/z|``, raised to the
        roundoff level ``16 eps / |z|`` when that is larger.

    Returns
    -------
    complex
        ``f(z) = exp(c) - 1`` with ``c`` on the principal branch of
        ``c exp(c) = -1/z``.
    """
    z = complex(z)
    if z.imag == 0.0 and 0.0 <= z.real <= E:
        raise ValueError(f"z={z!r} lies on the support [0, e]; use z + i*eps")
    if z == 0:
        raise ValueError("z must be nonzero")
    if z.imag < 0.0:
        return triangular_transform(z.conjugate(), tol).conjugate()
    c = _solve_c(z, tol)
    f = cmath.exp(c) - 1.0 if abs(c) > 1e-5 else _expm1(c)
    residual = abs(cmath.exp(c) * c + 1.0 / z)
    if residual > _residual_floor(1.0 / z, tol):
        raise ConvergenceError(f"residual {residual:.3g} exceeds tol at z={z!r}")
    return f


def _expm1(c: complex) -> complex:
    # exp(c) - 1 without cancellation for tiny |c|
    x, y = c.real, c.imag
    return complex(math.expm1(x) * math.cos(y) - 2.0 * math.sin(y / 2) ** 2, math.exp(x) * math.sin(y))


def inverse_x(f: float) -> float:
    """Functional inverse of the transform on the real axis, ``x(f) = -1/((1+f) log(1+f))``."""
    if f <= -1.0 or f == 0.0:
        raise ValueError(f"x(f) is defined for f > -1, f != 0; got {f}")
    return -1.0 / ((1.0 + f) * math.log1p(f))


def _dx_df(f):
    lg = np.log1p(f)
    return (lg + 1.0) / ((1.0 + f) ** 2 * lg**2)


def support_from_inverse(tol: float = 1e-12) -> tuple[float, float]:
    """Locate the support as the closure of the complement of ``x(L)``.

    ``L`` is the set where ``x(f)`` increases. Sign changes of ``dx/df`` are
    found on a grid over ``(-1, 0)`` and ``(0, inf)`` and refined with
    ``brentq``; the images of the increasing pieces are evaluated at their
    endpoints.
    """
    pieces = []
    for lo, hi in ((-1.0, 0.0), (0.0, np.inf)):
        if np.isinf(hi):
            grid = np.concatenate([np.geomspace(1e-12, 1e12, 2001)])
        else:
            grid = lo + (hi - lo) * np.linspace(1e-9, 1 - 1e-9, 4001)
        sign = np.sign(_dx_df(grid))
        edges = [lo]
        for i in np.flatnonzero(sign[1:] != sign[:-1]):
            root = optimize.brentq(lambda f: math.log1p(f) + 1.0, grid[i], grid[i + 1], xtol=tol * 1e-3)
            edges.append(root)
        edges.append(hi)
        for a, b in zip(edges[:-1], edges[1:]):
            mid = 0.5 * (a + b) if np.isfinite(b) else a + 1.0
            if _dx_df(mid) > 0:
                pieces.append((a, b))
    images = []
    for a, b in pieces:
        images.append((_x_limit(a, +1), _x_limit(b, -1)))
    # closure of R minus the union of the image intervals
    images.sort()
    gaps = []
    cursor = -np.inf
    for a, b in images:
        if a > cursor:
            gaps.append((cursor, a))
        cursor = max(cursor, b)
    if cursor < np.inf:
        gaps.append((cursor, np.inf))
    gaps = [g for g in gaps if np.isfinite(g[0]) and np.isfinite(g[1])]
    if len(gaps) != 1:
        raise ConvergenceError(f"expected a single support interval, found {gaps}")
    return float(gaps[0][0]), float(gaps[0][1])


def _x_limit(f, side):
    """One-sided limit of ``x`` at an endpoint of a monotonicity piece."""
    if f == 0.0:
        return -np.inf if side > 0 else np.inf
    if np.isinf(f):
        return -0.0
    if f == -1.0:
        return np.inf
    return inverse_x(f)


# ---------------------------------------------------------------------------
# parametric density


def _lam(eta):
    eta = np.asarray(eta, dtype=float)
    return np.exp(eta / np.tan(eta)) * np.sin(eta) / eta


def _log_lam(eta):
    eta = np.asarray(eta, dtype=float)
    return eta / np.tan(eta) + np.log(np.sin(eta) / eta)


def _dlog_lam(eta):
    """d log(lambda) / d eta; series near 0 where the closed form cancels."""
    eta = np.asarray(eta, dtype=float)
    out = np.empty_like(eta)
    small = eta < 1e-3
    es = eta[small]
    out[small] = -es - es**3 / 15.0
    eb = eta[~small]
    out[~small] = 2.0 / np.tan(eb) - eb / np.sin(eb) ** 2 - 1.0 / eb
    return out


def _mass_integrand(eta):
    """``rho(lambda(eta)) |d lambda / d eta|``; the ``lambda`` factors cancel."""
    eta = np.asarray(eta, dtype=float)
    return np.sin(eta) ** 2 / (np.pi * eta) * np.abs(_dlog_lam(eta))


def parametric_point(eta: float) -> tuple[float, float]:
    """Return ``(lambda(eta), rho(lambda(eta)))`` for ``0 < eta < pi``."""
    if not 0.0 < eta < math.pi:
        raise ValueError(f"eta must lie in (0, pi), got {eta}")
    log_lam = float(_log_lam(eta))
    # in logs: lambda underflows as eta -> pi while rho may exceed the float range
    log_rho = 2.0 * math.log(math.sin(eta)) - log_lam - math.log(math.pi * eta)
    return math.exp(log_lam), math.exp(log_rho) if log_rho < 709.0 else math.inf


@functools.lru_cache(maxsize=1)
def _check_monotone() -> bool:
    eta = np.linspace(1e-6, math.pi - 1e-6, 10_000)
    if not np.all(np.diff(_log_lam(eta)) < 0):
        raise AssertionError("lambda(eta) is not monotone decreasing on (0, pi)")
    return True


def _eta_of_lambda(lam, tol):
    """Bisection for ``eta`` with ``lambda(eta) = lam``; vectorized over ``lam``."""
    _check_monotone()
    target = np.log(lam)
    lo = np.zeros_like(target)
    hi = np.full_like(target, math.pi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        above = _log_lam(mid) > target
        lo = np.where(above, mid, lo)
        hi = np.where(above, hi, mid)
        if np.all(hi - lo <= 2 * np.spacing(hi)):
            break
    eta = 0.5 * (lo + hi)
    err = np.abs(_lam(eta) - lam)
    if np.any(err > max(tol, 4 * np.finfo(float).eps) * np.maximum(1.0, lam) * 1e3):
        raise ConvergenceError("eta(lambda) bisection did not reach tolerance")
    return eta


def triangular_density(lam, tol: float = 1e-13):
    """Density of the triangular law on ``(0, e)``; zero above ``e``.

    Accepts scalars or arrays. ``lam <= 0`` is the hard edge and raises.
    """
    arr = np.asarray(lam, dtype=float)
    if np.any(arr <= 0.0):
        raise ValueError("triangular density diverges at the hard edge lambda <= 0")
    out = np.zeros_like(arr)
    inside = arr < E
    if np.any(inside):
        x = arr[inside]
        eta = _eta_of_lambda(x, tol)
        out[inside] = np.sin(eta) ** 2 / (np.pi * x * eta)
    return float(out) if out.ndim == 0 else out


def triangular_cdf(lam: float, tol: float = 1e-10) -> float:
    """``N([0, lam])`` by adaptive quadrature over the parametric form."""
    if lam <= 0.0:
        return 0.0
    if lam >= E:
        return 1.0
    eta0 = float(_eta_of_lambda(np.array([lam]), tol)[0])
    val, err = integrate.quad(_mass_integrand, eta0, math.pi, epsabs=tol, epsrel=tol, limit=200)
    if err > 10 * tol:
        raise ConvergenceError(f"CDF quadrature error {err:.3g} exceeds tol")
    return min(1.0, max(0.0, val))


def triangular_moment(k: int) -> Fraction:
    """Exact moment ``k**k / (k + 1)!``."""
    if k < 1:
        raise ValueError("moment order must be >= 1")
    if k > 20:
        raise OverflowError("moment order capped at 20")
    return Fraction(k**k, math.factorial(k + 1))


def parametric_moment(k: int, tol: float = 1e-12) -> float:
    """``int lambda**k dN`` by quadrature in ``eta``; independent of the exact formula."""
    val, _ = integrate.quad(
        lambda t: _lam(t) ** k * _mass_integrand(t), 0.0, math.pi, epsabs=tol, epsrel=tol, limit=200
    )
    return val


class TriangularLaw:
    """The triangular law as a reference distribution.

    Thin object wrapper so the harness can treat it like any other law.
    """

    name = "triangular"
    support = (0.0, E)

    def __init__(self, tol: float = 1e-10):
        self.tol = tol

    def cdf(self, lam):
        lam = np.asarray(lam, dtype=float)
        if lam.ndim == 0:
            return triangular_cdf(float(lam), self.tol)
        return _cdf_many(lam, self.tol)

    def pdf(self, lam):
        return triangular_density(lam)

    def moment(self, k: int) -> float:
        return float(triangular_moment(k))

    def stieltjes(self, z: complex) -> complex:
        return triangular_transform(z)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(10)


def _cdf_many(lam: np.ndarray, tol: float) -> np.ndarray:
    """CDF at many points via composite Gauss-Legendre in ``eta``.

    The targets' ``eta`` values are merged with a uniform partition of
    ``(0, pi)``, each sub-interval gets a 10-point rule, and the masses are
    accumulated from ``eta = pi`` downwards.
    """
    flat = lam.ravel()
    out = np.zeros_like(flat)
    out[flat >= E] = 1.0
    inside = (flat > 0.0) & (flat < E)
    if not np.any(inside):
        return out.reshape(lam.shape)
    eta = _eta_of_lambda(flat[inside], tol)
    knots = np.unique(np.concatenate([eta, np.linspace(0.0, math.pi, 2001)]))[::-1]
    a, b = knots[1:], knots[:-1]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    nodes = mid[:, None] + half[:, None] * _GL_NODES[None, :]
    piece = half * (_mass_integrand(nodes) @ _GL_WEIGHTS)
    cum = np.concatenate([[0.0], np.cumsum(piece)])
    # knots descend from pi; cum[i] is the mass of (knots[i], pi)
    idx = len(knots) - 1 - np.searchsorted(knots[::-1], eta)
    out[inside] = np.clip(cum[idx], 0.0, 1.0)
    return out.reshape(lam.shape)
