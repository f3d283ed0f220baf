"""Seeded sampling of random band matrices and their Gram matrices.

Storage index ``i = 0..n-1`` corresponds to the symmetric index ``j = i - m``
with ``n = 2m + 1``; the band argument ``(j - k) / b`` is shift invariant.
Column ``k`` of replica ``r`` is drawn from its own Philox stream keyed by
``(seed, r, k)``, so replicas can be produced in any order or in parallel.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ConfigError
from .profile import BandProfile, parse_profile

DISTRIBUTIONS = ("iid_gaussian", "iid_rademacher", "sphere_columns", "iid_pareto_symmetric")

__all__ = [
    "DISTRIBUTIONS",
    "EnsembleSpec",
    "band_mask",
    "column_stream",
    "draw_column_vector",
    "gram",
    "sample_matrix",
]


@dataclass(frozen=True)
class EnsembleSpec:
    """One random band matrix ensemble.

    Parameters
    ----------
    n : int
        Odd matrix dimension ``2m + 1``.
    band_width : int
        The scale ``b_n``; entry ``(j, k)`` carries ``v((j - k) / b_n)``.
    profile : BandProfile
        The band shape ``v``.
    distribution : str
        One of :data:`DISTRIBUTIONS`.
    seed : int
        Master seed (unsigned 64-bit).
    tail_index : float
        Tail exponent of the symmetrized Pareto law; must exceed 2.
    """

    n: int
    band_width: int
    profile: BandProfile
    distribution: str = "iid_gaussian"
    seed: int = 0
    tail_index: float = 3.0
    _hash: str = field(default="", init=False, repr=False, compare=False)

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n < 1 or self.n % 2 == 0:
            raise ConfigError(f"n must be an odd positive integer, got {self.n!r}")
        if not isinstance(self.band_width, (int, np.integer)) or self.band_width < 1:
            raise ConfigError(f"band_width must be a positive integer, got {self.band_width!r}")
        if self.n / (2 * self.band_width) < 0.5:
            raise ConfigError(f"nu_n = n / (2 b_n) must be >= 1/2 (n={self.n}, b_n={self.band_width})")
        if self.distribution not in DISTRIBUTIONS:
            raise ConfigError(f"unknown distribution {self.distribution!r}; expected one of {DISTRIBUTIONS}")
        if self.distribution == "iid_pareto_symmetric" and not self.tail_index > 2:
            raise ConfigError("symmetrized Pareto needs tail_index > 2 for a finite 2+eps moment")
        if not 0 <= int(self.seed) < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "band_width", int(self.band_width))
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "tail_index", float(self.tail_index))
        object.__setattr__(self, "_hash", hashlib.sha256(self.to_json().encode()).hexdigest()[:16])

    @property
    def nu_n(self) -> float:
        return self.n / (2 * self.band_width)

    @property
    def spec_hash(self) -> str:
        return self._hash

    def to_dict(self) -> dict:
        d = {
            "n": self.n,
            "band_width": self.band_width,
            "profile": self.profile.to_dict(),
            "distribution": self.distribution,
            "seed": self.seed,
        }
        if self.distribution == "iid_pareto_symmetric":
            d["tail_index"] = self.tail_index
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "EnsembleSpec":
        try:
            return cls(
                n=data["n"],
                band_width=data["band_width"],
                profile=parse_profile(data["profile"]),
                distribution=data.get("distribution", "iid_gaussian"),
                seed=data.get("seed", 0),
                tail_index=data.get("tail_index", 3.0),
            )
        except KeyError as exc:
            raise ConfigError(f"ensemble spec missing field {exc}") from exc

    @classmethod
    def from_json(cls, text: str) -> "EnsembleSpec":
        return cls.from_dict(json.loads(text))


def column_stream(seed: int, replica: int, column: int) -> np.random.Generator:
    """Independent counter-based stream for column ``column`` of replica ``replica``."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(replica, column))
    return np.random.Generator(np.random.Philox(ss))


def _pareto_scale(tail_index: float) -> float:
    # |X| = x0 U^(-1/a) has E X^2 = a x0^2 / (a - 2)
    return math.sqrt((tail_index - 2.0) / tail_index)


def draw_column_vector(distribution: str, n: int, stream: np.random.Generator, tail_index: float = 3.0) -> np.ndarray:
    """One isotropic, unconditional column vector ``a_k`` of length ``n``."""
    if n < 1:
        raise ConfigError("n must be positive")
    if distribution == "iid_gaussian":
        return stream.standard_normal(n)
    if distribution == "iid_rademacher":
        return 2.0 * stream.integers(0, 2, size=n) - 1.0
    if distribution == "sphere_columns":
        g = stream.standard_normal(n)
        return g * (math.sqrt(n) / np.linalg.norm(g))
    if distribution == "iid_pareto_symmetric":
        if not tail_index > 2:
            raise ConfigError("tail_index must exceed 2")
        u = 1.0 - stream.random(n)
        signs = 2.0 * stream.integers(0, 2, size=n) - 1.0
        return signs * _pareto_scale(tail_index) * u ** (-1.0 / tail_index)
    raise ConfigError(f"unknown distribution {distribution!r}")


@lru_cache(maxsize=32)
def _profile_matrix(n: int, band_width: int, profile: BandProfile) -> np.ndarray:
    idx = np.arange(n)
    diffs = (idx[:, None] - idx[None, :]) / band_width
    return np.asarray(profile.evaluate(diffs), dtype=float)


def band_mask(n: int, band_width: int, profile: BandProfile) -> np.ndarray:
    """Boolean ``n x n`` mask of entries with ``v((j - k) / b_n) != 0``."""
    if n < 1 or n % 2 == 0:
        raise ConfigError("n must be odd")
    return _profile_matrix(n, band_width, profile) != 0.0


def sample_matrix(spec: EnsembleSpec, replica: int = 0) -> np.ndarray:
    """Draw ``A`` with ``A[j, k] = b^(-1/2) v((j - k)/b) a[j, k]``, columns independent."""
    n = spec.n
    weights = _profile_matrix(n, spec.band_width, spec.profile) / math.sqrt(spec.band_width)
    a = np.empty((n, n))
    for k in range(n):
        stream = column_stream(spec.seed, replica, k)
        a[:, k] = draw_column_vector(spec.distribution, n, stream, spec.tail_index)
    return weights * a


def gram(a: np.ndarray) -> np.ndarray:
    """``M = A A^T``, symmetrized so that ``M == M.T`` holds exactly."""
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ConfigError("gram expects a square matrix")
    m = a @ a.T
    return 0.5 * (m + m.T)

