"""Limiting Stieltjes transform of band-matrix singular value laws.

For finite ``nu`` the transform is ``f(z) = (2 nu)^-1 int f(t, z) dt`` where
``f(., z)`` is the fixed point of

    (T f)(t) = -( z - int v^2(t - tau) / (1 + int v^2(theta - tau) f(theta) dtheta) dtau )^-1

over ``[-nu, nu]``. ``f`` is carried on a uniform grid and interpolated
linearly between nodes; both integrals are then evaluated exactly against the
piecewise-constant ``v**2`` (product trapezoid rule), which keeps second
order accuracy across the jumps of ``v``.

For ``nu = inf`` the limit is the quarter-circle law with closed-form
transform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError, ConvergenceError, InvariantError
from .profile import BandProfile, make_indicator_profile, squared_l2_norm

K0_FACTOR = 2.5
PATH_RATIO = 0.8
DAMPING_START = 0.5
DAMPING_FLOOR = 1.0 / 16.0
MAX_ITER = 10_000

__all__ = [
    "GridSolution",
    "QuarterCircleLaw",
    "SpectralDensity",
    "aggregate",
    "apply_T",
    "continuation_path",
    "contraction_bound",
    "density_from_transform",
    "measure_contraction",
    "quarter_circle_cdf",
    "quarter_circle_density",
    "solve_fixed_point",
    "solve_quarter_circle_transform",
    "stieltjes_transform",
]


# ---------------------------------------------------------------------------
# discretized operator


def _hat_antiderivative(x: np.ndarray, nodes: np.ndarray, h: float) -> np.ndarray:
    """``H[i, k] = int_{-inf}^{x_i} phi_k`` for the hat basis on ``nodes``."""
    x = x[:, None]
    t = nodes[None, :]
    left = (np.clip(x, t - h, t) - (t - h)) ** 2 / (2.0 * h)
    right = h / 2.0 - (t + h - np.clip(x, t, t + h)) ** 2 / (2.0 * h)
    left[:, 0] = 0.0
    right[:, -1] = 0.0
    return left + right


class _Operator:
    """Kernel matrices of ``T`` for one ``(profile, nu, grid_size)``."""

    def __init__(self, profile: BandProfile, nu: float, grid_size: int):
        self.profile = profile
        self.nu = nu
        self.t = np.linspace(-nu, nu, grid_size)
        self.h = self.t[1] - self.t[0]
        self.weights = np.full(grid_size, self.h)
        self.weights[[0, -1]] = self.h / 2.0
        g = grid_size
        self.outer = np.zeros((g, g))
        self.inner = np.zeros((g, g))
        for a, b, c2 in profile.squared_pieces():
            # v^2(t_i - tau) = c2 for tau in [t_i - b, t_i - a]
            self.outer += c2 * (_hat_antiderivative(self.t - a, self.t, self.h) - _hat_antiderivative(self.t - b, self.t, self.h))
            # v^2(theta - tau_j) = c2 for theta in [tau_j + a, tau_j + b]
            self.inner += c2 * (_hat_antiderivative(self.t + b, self.t, self.h) - _hat_antiderivative(self.t + a, self.t, self.h))

    def __call__(self, f: np.ndarray, z: complex) -> np.ndarray:
        denom = 1.0 + self.inner @ f
        if np.min(np.abs(denom)) < 1e-12:
            raise ConvergenceError(f"singular inner denominator at z={z!r}; z too close to the spectrum")
        return -1.0 / (z - self.outer @ (1.0 / denom))


@lru_cache(maxsize=8)
def _operator(profile: BandProfile, nu: float, grid_size: int) -> _Operator:
    return _Operator(profile, nu, grid_size)


def _check_grid(nu: float, grid_size: int):
    if not math.isfinite(nu):
        raise ConfigError("nu = inf has no grid; use solve_quarter_circle_transform")
    if not nu > 0:
        raise ConfigError("nu must be positive")
    if grid_size < 64:
        raise ConfigError("grid_size must be at least 64")


def apply_T(values, profile: BandProfile, z: complex, nu: float | None = None) -> np.ndarray:
    """One application of the fixed-point map to grid values over ``[-nu, nu]``.

    ``values`` is a :class:`GridSolution` or a plain array of node values, in
    which case ``nu`` must be given.
    """
    if nu is None:
        if not hasattr(values, "nu"):
            raise ValueError("nu is required when values is a plain array")
        nu = values.nu
    values = np.asarray(getattr(values, "values", values), dtype=complex)
    _check_grid(nu, len(values))
    if complex(z).imag == 0.0:
        raise ValueError("apply_T needs Im z != 0")
    return _operator(profile, float(nu), len(values))(values, complex(z))


def contraction_bound(w2: float, k0: float | None = None) -> float:
    """``q = w^4 / (K0 - w^2)^2``, the proven Lipschitz constant of ``T`` for ``|Im z| >= K0``."""
    k0 = K0_FACTOR * w2 if k0 is None else k0
    if not k0 > w2:
        raise ValueError("need K0 > w2")
    return w2 * w2 / (k0 - w2) ** 2


def measure_contraction(
    profile: BandProfile,
    nu: float,
    z: complex,
    pairs: int = 50,
    grid_size: int = 400,
    rng: np.random.Generator | None = None,
) -> float:
    """Largest observed ``||Tf - Tg|| / ||f - g||`` over random admissible pairs.

    Each ``f(t_i)`` is the Stieltjes transform of a random five-atom
    probability measure on ``[-1, 6 w2 + 1]``, so every sample lies in the
    Nevanlinna class. Half of the pairs are nearly coincident to probe the
    local Lipschitz constant.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    z = complex(z)
    _check_grid(nu, grid_size)
    op = _operator(profile, float(nu), grid_size)
    top = 6.0 * squared_l2_norm(profile, nu) + 1.0

    def draw():
        atoms = rng.uniform(-1.0, top, size=(grid_size, 5))
        mass = rng.dirichlet(np.ones(5), size=grid_size)
        return np.sum(mass / (atoms - z), axis=1)

    worst = 0.0
    for k in range(pairs):
        f, g = draw(), draw()
        if k % 2:
            g = f + 1e-4 * (g - f)
        ratio = np.max(np.abs(op(f, z) - op(g, z))) / np.max(np.abs(f - g))
        worst = max(worst, float(ratio))
    return worst


# ---------------------------------------------------------------------------
# fixed point


@dataclass
class GridSolution:
    """Converged grid values ``f(t_i, z)`` and how they were obtained."""

    nu: float
    t: np.ndarray
    values: np.ndarray
    z: complex
    iterations: int
    residual: float
    weights: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        if self.weights is None:
            h = self.t[1] - self.t[0]
            self.weights = np.full(len(self.t), h)
            self.weights[[0, -1]] = h / 2.0

    def aggregate(self) -> complex:
        return aggregate(self)

    def to_dict(self) -> dict:
        return {
            "nu": self.nu,
            "z": [self.z.real, self.z.imag],
            "iterations": self.iterations,
            "residual": self.residual,
            "t": self.t.tolist(),
            "re": self.values.real.tolist(),
            "im": self.values.imag.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GridSolution":
        return cls(
            nu=float(data["nu"]),
            t=np.asarray(data["t"], dtype=float),
            values=np.asarray(data["re"], dtype=float) + 1j * np.asarray(data["im"], dtype=float),
            z=complex(*data["z"]),
            iterations=int(data["iterations"]),
            residual=float(data["residual"]),
        )


def aggregate(solution: GridSolution) -> complex:
    """``(2 nu)^-1 int f(t, z) dt`` by the trapezoid rule on the solution grid."""
    span = solution.t[-1] - solution.t[0]
    return complex(np.dot(solution.weights, solution.values) / span)


def _check_nevanlinna(f: np.ndarray, z: complex):
    bound = 1.0 / abs(z.imag)
    scale = np.abs(f)
    if np.any(f.imag * math.copysign(1.0, z.imag) < -1e-13 * np.maximum(scale, 1.0)) or np.any(
        scale > bound * (1.0 + 1e-10)
    ):
        raise InvariantError(f"iterate left the Nevanlinna class at z={z!r}")


def _iterate(op: _Operator, z: complex, f: np.ndarray, tol: float, max_iter: int, contracting: bool):
    alpha = 1.0 if contracting else DAMPING_START
    tf = op(f, z)
    _check_nevanlinna(tf, z)
    res = float(np.max(np.abs(tf - f)))
    it = 0
    while res > tol:
        if it >= max_iter:
            raise ConvergenceError(f"fixed point not reached at z={z!r}: residual {res:.3g} after {it} iterations")
        f = f + alpha * (tf - f)
        _check_nevanlinna(f, z)
        tf = op(f, z)
        _check_nevanlinna(tf, z)
        new_res = float(np.max(np.abs(tf - f)))
        if not contracting and new_res > res:
            alpha = max(alpha / 2.0, DAMPING_FLOOR)
        res = new_res
        it += 1
    return f, it, res


def continuation_path(z_target: complex, w2: float, start_imag: float | None = None) -> list[complex]:
    """Points on the vertical line through ``z_target`` descending from ``Im z = K0``.

    ``K0 = 2.5 w2``; imaginary parts shrink by a factor 0.8 per step and the
    last point is ``z_target`` itself. ``start_imag`` overrides ``K0`` when a
    solution higher up the line is already known.
    """
    z_target = complex(z_target)
    if not z_target.imag > 0:
        raise ValueError("continuation needs Im z_target > 0")
    top = K0_FACTOR * w2 if start_imag is None else start_imag
    if z_target.imag >= top:
        return [z_target]
    path = []
    y = top
    while y > z_target.imag:
        path.append(complex(z_target.real, y))
        y *= PATH_RATIO
    path.append(z_target)
    return path


def solve_fixed_point(
    profile: BandProfile,
    nu: float,
    z: complex,
    grid_size: int = 800,
    tol: float = 1e-12,
    max_iter: int = MAX_ITER,
    initial: GridSolution | None = None,
) -> GridSolution:
    """Solve the integral equation for ``f(t, z)`` on a uniform grid.

    Plain iteration from ``f = -1/z`` when ``Im z >= 2.5 w^2``, where the map
    is a contraction. Below that, damped iteration along
    :func:`continuation_path`, warm-started from ``initial`` if it lies higher
    up the same vertical line.

    Raises
    ------
    ConvergenceError
        If the sup-norm residual is still above ``tol`` after ``max_iter``.
    InvariantError
        If an iterate violates ``Im f Im z >= 0`` or ``|f| <= 1/|Im z|``.
    """
    z = complex(z)
    _check_grid(nu, grid_size)
    if z.imag == 0.0:
        raise ValueError("solve_fixed_point needs Im z != 0")
    if z.imag < 0.0:
        conj_init = None
        if initial is not None:
            conj_init = GridSolution(initial.nu, initial.t, initial.values.conj(), initial.z.conjugate(), 0, 0.0)
        sol = solve_fixed_point(profile, nu, z.conjugate(), grid_size, tol, max_iter, conj_init)
        return GridSolution(sol.nu, sol.t, sol.values.conj(), z, sol.iterations, sol.residual)
    op = _operator(profile, float(nu), grid_size)
    w2 = squared_l2_norm(profile, nu)
    k0 = K0_FACTOR * w2
    usable = (
        initial is not None
        and len(initial.values) == grid_size
        and initial.z.real == z.real
        and initial.z.imag >= z.imag
    )
    if usable:
        f = np.array(initial.values, dtype=complex)
        path = continuation_path(z, w2, start_imag=initial.z.imag)
        if len(path) > 1:
            path = path[1:]
    else:
        f = np.full(grid_size, -1.0 / complex(z.real, max(z.imag, k0)))
        path = continuation_path(z, w2)
    total = 0
    for zp in path[:-1]:
        f, it, _ = _iterate(op, zp, f, max(tol, 1e-8), max_iter, zp.imag >= k0)
        total += it
    f, it, res = _iterate(op, z, f, tol, max_iter, z.imag >= k0)
    return GridSolution(float(nu), op.t.copy(), f, z, total + it, res, op.weights.copy())


def stieltjes_transform(profile: BandProfile, nu: float, grid_size: int = 800, tol: float = 1e-12) -> Callable[[complex], complex]:
    """``z -> f(z)`` for the band law; routes ``nu = inf`` to the quarter circle.

    Successive calls on the same vertical line reuse the previous solution as
    a warm start, which makes descending ``eps`` schedules cheap.
    """
    if not math.isfinite(nu):
        w2 = squared_l2_norm(profile, math.inf)
        return lambda z: solve_quarter_circle_transform(z, w2)
    cache: dict[float, GridSolution] = {}

    def transform(z: complex) -> complex:
        z = complex(z)
        key = (z.real, math.copysign(1.0, z.imag))
        prev = cache.get(key)
        init = prev if prev is not None and abs(prev.z.imag) >= abs(z.imag) else None
        sol = solve_fixed_point(profile, nu, z, grid_size, tol, initial=init)
        cache[key] = sol
        return aggregate(sol)

    return transform


# ---------------------------------------------------------------------------
# quarter-circle law


def solve_quarter_circle_transform(z: complex, w2: float) -> complex:
    """Root of ``z w2 f^2 + z f + 1 = 0`` that is a Stieltjes transform.

    Uses ``f = -2 / (z (1 + sqrt(1 - 4 w2 / z)))`` with the principal root,
    which is analytic off ``[0, 4 w2]`` and tends to ``-1/z`` at infinity.
    """
    z = complex(z)
    if w2 < 0:
        raise ValueError("w2 must be non-negative")
    if z == 0 or (z.imag == 0.0 and 0.0 <= z.real <= 4.0 * w2):
        raise ValueError(f"z={z!r} lies on the support [0, {4 * w2}]; use z +/- i*eps")
    root = np.sqrt(1.0 - 4.0 * w2 / z)
    return complex(-2.0 / (z * (1.0 + root)))


def quarter_circle_density(lam, w2: float):
    """``(2 pi w2)^-1 sqrt((4 w2 - lam) / lam)`` on ``(0, 4 w2]``, zero outside, ``inf`` at 0."""
    if not w2 > 0:
        raise ValueError("w2 must be positive")
    lam = np.asarray(lam, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = np.sqrt(np.clip(4.0 * w2 - lam, 0.0, None) / lam) / (2.0 * np.pi * w2)
    val = np.where((lam > 0) & (lam <= 4.0 * w2), val, 0.0)
    val = np.where(lam == 0.0, np.inf, val)
    return float(val) if val.ndim == 0 else val


def quarter_circle_cdf(lam, w2: float):
    """Closed-form distribution function of the quarter-circle law."""
    lam = np.asarray(lam, dtype=float)
    s = np.clip(lam / (4.0 * w2), 0.0, 1.0)
    phi = np.arcsin(np.sqrt(s))
    val = (2.0 / np.pi) * (phi + 0.5 * np.sin(2.0 * phi))
    return float(val) if val.ndim == 0 else val


class QuarterCircleLaw:
    """Quarter-circle law with scale ``w2`` as a reference distribution."""

    name = "quarter_circle"

    def __init__(self, w2: float):
        if not w2 > 0:
            raise ValueError("w2 must be positive")
        self.w2 = float(w2)
        self.support = (0.0, 4.0 * self.w2)

    def cdf(self, lam):
        return quarter_circle_cdf(lam, self.w2)

    def pdf(self, lam):
        return quarter_circle_density(lam, self.w2)

    def moment(self, k: int) -> float:
        # Catalan numbers times w2^k
        return math.comb(2 * k, k) / (k + 1) * self.w2**k

    def stieltjes(self, z: complex) -> complex:
        return solve_quarter_circle_transform(z, self.w2)


# ---------------------------------------------------------------------------
# density recovery


@dataclass
class SpectralDensity:
    """Density values on a ``lambda`` grid.

    ``eps_used`` is 0 where the value was extrapolated to ``eps -> 0`` and the
    raw ``eps`` otherwise; ``flags`` is ``"ok"``, ``"edge"`` (extrapolation
    unreliable, smallest-``eps`` value kept) or ``"hard_edge"`` (``lambda = 0``,
    value diverges).
    """

    lam: np.ndarray
    rho: np.ndarray
    eps_used: np.ndarray
    flags: list
    support: tuple

    def mass(self) -> float:
        finite = np.isfinite(self.rho)
        return float(np.trapezoid(self.rho[finite], self.lam[finite]))

    def cdf_table(self) -> tuple[np.ndarray, np.ndarray]:
        """Cumulative trapezoid integral normalized to end at 1."""
        finite = np.isfinite(self.rho)
        lam, rho = self.lam[finite], self.rho[finite]
        cum = np.concatenate([[0.0], np.cumsum(np.diff(lam) * (rho[1:] + rho[:-1]) / 2)])
        if cum[-1] > 0:
            cum = cum / cum[-1]
        return lam, cum


def density_from_transform(
    transform: Callable[[complex], complex],
    lam_grid: Sequence[float],
    eps_schedule: Sequence[float] = (4e-3, 2e-3, 1e-3),
    support: tuple | None = None,
    edge_rtol: float = 1e-2,
) -> SpectralDensity:
    """Recover ``rho(lambda) = lim pi^-1 Im f(lambda + i eps)``.

    The values at the scheduled ``eps`` are fitted by a straight line in
    ``eps`` and extrapolated to 0. If the two-point extrapolations from
    consecutive pairs disagree by more than ``edge_rtol`` (relative, with an
    absolute floor of ``edge_rtol * 1e-1``), the point is treated as near an
    edge and the smallest-``eps`` value is reported with flag ``"edge"``.
    """
    eps = np.asarray(eps_schedule, dtype=float)
    if eps.ndim != 1 or len(eps) == 0 or np.any(np.diff(eps) >= 0) or eps[-1] < 1e-4:
        raise ValueError("eps_schedule must be strictly decreasing and >= 1e-4")
    lam = np.asarray(lam_grid, dtype=float)
    if np.any(np.diff(lam) <= 0):
        raise ValueError("lam_grid must be strictly increasing")
    rho = np.empty(len(lam))
    used = np.empty(len(lam))
    flags = []
    for i, x in enumerate(lam):
        if x == 0.0:
            rho[i], used[i] = np.inf, 0.0
            flags.append("hard_edge")
            continue
        vals = np.array([transform(complex(x, e)).imag / np.pi for e in eps])
        if len(eps) == 1:
            rho[i], used[i] = vals[0], eps[0]
            flags.append("ok")
            continue
        slope, intercept = np.polyfit(eps, vals, 1)
        flag = "ok"
        if len(eps) >= 3:
            pair = [
                vals[k + 1] - (vals[k] - vals[k + 1]) / (eps[k] - eps[k + 1]) * eps[k + 1] for k in range(len(eps) - 1)
            ]
            spread = max(pair) - min(pair)
            if spread > edge_rtol * max(abs(vals[-1]), 0.1):
                flag = "edge"
        if flag == "ok":
            rho[i], used[i] = max(intercept, 0.0), 0.0
        else:
            rho[i], used[i] = max(vals[-1], 0.0), eps[-1]
        flags.append(flag)
    if support is None:
        pos = lam[np.isfinite(rho) & (rho > 0)]
        support = (float(pos[0]), float(pos[-1])) if len(pos) else (0.0, 0.0)
    return SpectralDensity(lam, rho, used, flags, tuple(support))


def triangular_profile() -> BandProfile:
    """``v`` of the lower-triangular case, used with ``nu = 1/2``."""
    return make_indicator_profile(0.0, 1.0)
