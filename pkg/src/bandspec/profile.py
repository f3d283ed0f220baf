"""Band profiles ``v`` and the quantities derived from them alone.

A profile is piecewise constant with compact support. Everything computed
here (``w**2``, ``K``, the convolution ``u``, the periodicity test and the
large-``z`` expansion coefficients) is exact on that representation, up to
floating point rounding of the breakpoints.
"""

from __future__ import annotations

import ast
import json
import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

__all__ = [
    "BandProfile",
    "PiecewiseAffine",
    "constant_profile",
    "convolution_u",
    "expansion_coefficients",
    "is_periodic_square",
    "make_indicator_profile",
    "parse_profile",
    "squared_l2_norm",
    "zero_profile",
]


@dataclass(frozen=True)
class BandProfile:
    """Piecewise-constant band shape.

    ``pieces`` holds ``(a, b, c)`` triples meaning ``v = c`` on ``[a, b)``;
    a right endpoint ``b`` that does not start another piece is included,
    so a single-piece indicator is closed at both ends.
    """

    pieces: tuple[tuple[float, float, float], ...]

    def __post_init__(self):
        cleaned = []
        for p in self.pieces:
            if len(p) != 3:
                raise ConfigError(f"profile piece must be (a, b, c), got {p!r}")
            a, b, c = (float(x) for x in p)
            if not (math.isfinite(a) and math.isfinite(b) and math.isfinite(c)):
                raise ConfigError("profile pieces must be finite")
            if not a < b:
                raise ConfigError(f"invalid interval [{a}, {b}]")
            cleaned.append((a, b, c))
        cleaned.sort()
        for (a0, b0, _), (a1, _, _) in zip(cleaned, cleaned[1:]):
            if a1 < b0:
                raise ConfigError("profile pieces overlap")
        object.__setattr__(self, "pieces", tuple(cleaned))

    @property
    def support(self) -> tuple[float, float]:
        nz = [(a, b) for a, b, c in self.pieces if c != 0.0]
        if not nz:
            return (0.0, 0.0)
        return (nz[0][0], nz[-1][1])

    @property
    def sup_squared(self) -> float:
        """``K = max v**2``."""
        return max((c * c for _, _, c in self.pieces), default=0.0)

    @property
    def is_zero(self) -> bool:
        return all(c == 0.0 for _, _, c in self.pieces)

    def evaluate(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        starts = {a for a, _, _ in self.pieces}
        # right-closed fallback first, half-open pieces override it
        for a, b, c in self.pieces:
            if b not in starts:
                out = np.where(t == b, c, out)
        for a, b, c in self.pieces:
            out = np.where((t >= a) & (t < b), c, out)
        return float(out) if out.ndim == 0 else out

    __call__ = evaluate

    def squared_pieces(self):
        """``(a, b, c**2)`` for pieces with nonzero value."""
        return [(a, b, c * c) for a, b, c in self.pieces if c != 0.0]

    def antiderivative_sq(self, x):
        """``V(x) = int_{-inf}^x v(s)**2 ds``; continuous piecewise linear."""
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for a, b, c2 in self.squared_pieces():
            out += c2 * (np.clip(x, a, b) - a)
        return out

    def breakpoints(self) -> list[float]:
        return sorted({x for a, b, _ in self.pieces for x in (a, b)})

    def to_dict(self) -> dict:
        return {"pieces": [list(p) for p in self.pieces], "support": list(self.support)}

    @classmethod
    def from_dict(cls, data: dict) -> "BandProfile":
        try:
            return cls(tuple(tuple(p) for p in data["pieces"]))
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"bad profile record: {data!r}") from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "BandProfile":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class PiecewiseAffine:
    """Continuous piecewise-linear function given by its values at breakpoints."""

    breakpoints: np.ndarray
    values: np.ndarray

    def __call__(self, t):
        return np.interp(t, self.breakpoints, self.values)

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.values) / np.diff(self.breakpoints)

    @property
    def intercepts(self) -> np.ndarray:
        return self.values[:-1] - self.slopes * self.breakpoints[:-1]

    def integral(self) -> float:
        h = np.diff(self.breakpoints)
        return float(np.sum(h * (self.values[:-1] + self.values[1:]) / 2))

    def integral_of_square(self) -> float:
        h = np.diff(self.breakpoints)
        a, b = self.values[:-1], self.values[1:]
        return float(np.sum(h * (a * a + a * b + b * b) / 3))

    def max(self) -> float:
        return float(self.values.max())

    def min(self) -> float:
        return float(self.values.min())


def make_indicator_profile(a: float, b: float) -> BandProfile:
    """Indicator of the closed interval ``[a, b]``."""
    if not a < b:
        raise ConfigError(f"indicator needs a < b, got [{a}, {b}]")
    return BandProfile(((a, b, 1.0),))


def constant_profile(a: float, b: float, value: float) -> BandProfile:
    if not a < b:
        raise ConfigError(f"constant profile needs a < b, got [{a}, {b}]")
    return BandProfile(((a, b, value),))


def zero_profile() -> BandProfile:
    return BandProfile(())


def squared_l2_norm(profile: BandProfile, nu: float) -> float:
    """``w**2 = int_{-nu}^{nu} v(t)**2 dt``; ``nu`` may be ``inf``."""
    if not nu > 0:
        raise ConfigError("nu must be positive")
    total = 0.0
    for a, b, c2 in profile.squared_pieces():
        lo, hi = max(a, -nu), min(b, nu)
        if hi > lo:
            total += c2 * (hi - lo)
    return total


def _window_integral(profile: BandProfile, nu: float, sign: int) -> PiecewiseAffine:
    # sign=+1: u(t) = int v^2(t - tau) dtau = V(t + nu) - V(t - nu)
    # sign=-1: u~(tau) = int v^2(theta - tau) dtheta = V(nu - tau) - V(-nu - tau)
    pts = {-nu, nu}
    for p in profile.breakpoints():
        for q in (sign * p - nu, sign * p + nu):
            if -nu < q < nu:
                pts.add(q)
    t = np.array(sorted(pts))
    if sign > 0:
        vals = profile.antiderivative_sq(t + nu) - profile.antiderivative_sq(t - nu)
    else:
        vals = profile.antiderivative_sq(nu - t) - profile.antiderivative_sq(-nu - t)
    return PiecewiseAffine(t, vals)


def convolution_u(profile: BandProfile, nu: float) -> PiecewiseAffine:
    """``u(t) = int_{-nu}^{nu} v(t - tau)**2 dtau`` on ``[-nu, nu]``, exactly."""
    if not math.isfinite(nu):
        raise ConfigError("convolution_u needs finite nu")
    if not nu > 0:
        raise ConfigError("nu must be positive")
    return _window_integral(profile, nu, +1)


def dual_convolution(profile: BandProfile, nu: float) -> PiecewiseAffine:
    """``int_{-nu}^{nu} v(theta - tau)**2 dtheta`` as a function of ``tau``."""
    if not math.isfinite(nu) or not nu > 0:
        raise ConfigError("nu must be finite and positive")
    return _window_integral(profile, nu, -1)


def is_periodic_square(profile: BandProfile, nu: float, tol: float = 0.0) -> bool:
    """Whether ``v**2`` on ``[-2 nu, 2 nu]`` is the restriction of a ``2 nu``-periodic function.

    Compares ``v**2(t)`` with ``v**2(t + 2 nu)`` on every open segment of
    ``[-2 nu, 0]`` cut by the breakpoints of both; isolated points are ignored.
    """
    if not math.isfinite(nu) or not nu > 0:
        raise ConfigError("nu must be finite and positive")
    period = 2.0 * nu
    cuts = {-period, 0.0}
    for p in profile.breakpoints():
        for q in (p, p - period):
            if -period < q < 0.0:
                cuts.add(q)
    cuts = np.array(sorted(cuts))
    mids = 0.5 * (cuts[:-1] + cuts[1:])
    diff = np.abs(profile.evaluate(mids) ** 2 - profile.evaluate(mids + period) ** 2)
    return bool(np.max(diff, initial=0.0) <= tol)


def expansion_coefficients(profile: BandProfile, nu: float) -> tuple[float, float, float]:
    """Large-``z`` data of the limiting transform for finite ``nu``.

    Returns
    -------
    a1 : float
        ``(2 nu)^-1 int u``, the first moment.
    a2 : float
        ``(2 nu)^-1 int u**2``, without the cross term.
    mu2 : float
        The second moment, ``(2 nu)^-1 int (u**2 + u~**2)``; the ``u~**2`` term
        is the double integral ``int int v**2(t - tau) u~(tau)`` after
        integrating out ``t``.
    """
    u = convolution_u(profile, nu)
    ut = dual_convolution(profile, nu)
    scale = 1.0 / (2.0 * nu)
    a1 = scale * u.integral()
    a2 = scale * u.integral_of_square()
    mu2 = a2 + scale * ut.integral_of_square()
    return a1, a2, mu2


# ---------------------------------------------------------------------------
# literal syntax

_INDICATOR = re.compile(r"^\s*indicator\s*:\s*([^,]+),([^,]+)\s*$")
_PIECES = re.compile(r"^\s*pieces\s*:\s*(\[.*\])\s*$", re.S)


def parse_profile(spec) -> BandProfile:
    """Build a profile from ``indicator:a,b``, ``pieces:[(a,b,c),...]`` or a dict."""
    if isinstance(spec, BandProfile):
        return spec
    if isinstance(spec, dict):
        return BandProfile.from_dict(spec)
    if not isinstance(spec, str):
        raise ConfigError(f"cannot parse profile from {spec!r}")
    m = _INDICATOR.match(spec)
    if m:
        try:
            a, b = float(m.group(1)), float(m.group(2))
        except ValueError as exc:
            raise ConfigError(f"bad indicator literal {spec!r}") from exc
        return make_indicator_profile(a, b)
    m = _PIECES.match(spec)
    if m:
        try:
            raw = ast.literal_eval(m.group(1))
        except (ValueError, SyntaxError) as exc:
            raise ConfigError(f"bad pieces literal {spec!r}") from exc
        return BandProfile(tuple(tuple(p) for p in raw))
    raise ConfigError(f"unrecognized profile literal {spec!r}")


def format_profile(profile: BandProfile) -> str:
    if len(profile.pieces) == 1 and profile.pieces[0][2] == 1.0:
        a, b, _ = profile.pieces[0]
        return f"indicator:{a!r},{b!r}"
    return "pieces:" + repr([tuple(p) for p in profile.pieces])

