"""Experiment runner: Monte Carlo spectra against the limiting laws.

Configs are JSON documents (see ``docs/config.md``). Every run is a pure
function of its config: replica seeds are derived from the master seed, work
is spread over a process pool, and results are reduced in index order so the
worker count never changes the output bytes.
"""

from __future__ import annotations

import ast
import csv
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Sequence

import numpy as np

from .ensemble import DISTRIBUTIONS, EnsembleSpec, gram, sample_matrix
from .errors import ConfigError, ConvergenceError
from .profile import (
    BandProfile,
    convolution_u,
    dual_convolution,
    expansion_coefficients,
    is_periodic_square,
    make_indicator_profile,
    parse_profile,
    squared_l2_norm,
)
from .solver import (
    QuarterCircleLaw,
    SpectralDensity,
    aggregate,
    density_from_transform,
    solve_fixed_point,
    solve_quarter_circle_transform,
    stieltjes_transform,
)
from .spectra import SpectralSample, counting_in_interval, empirical_measure, ks_distance, symmetric_eigenvalues
from .trilaw import TriangularLaw, triangular_transform

KINDS = ("sample", "spectrum", "solve", "density", "compare", "moments", "concentration", "corollary")
MAX_N = 4000
MAX_REPLICAS = 500
LOW_CONFIDENCE_REPLICAS = 10
# eigenvalues below this fraction of the largest one are roundoff
RESOLUTION = 1e-12

__all__ = [
    "ComparisonReport",
    "CorollaryReport",
    "ExperimentConfig",
    "KINDS",
    "Table",
    "band_schedule",
    "emit",
    "odd_dimension",
    "reference_law",
    "run",
    "run_compare",
    "run_concentration",
    "run_corollary_test",
    "run_moments",
]


# ---------------------------------------------------------------------------
# schedules

_FUNCS = {"ceil": math.ceil, "floor": math.floor, "sqrt": math.sqrt, "log": math.log}
_BINOPS = {
    ast.Add: lambda a, b: a + b,
    ast.Sub: lambda a, b: a - b,
    ast.Mult: lambda a, b: a * b,
    ast.Div: lambda a, b: a / b,
    ast.FloorDiv: lambda a, b: a // b,
    ast.Pow: lambda a, b: a**b,
}


def _eval_node(node, env):
    if isinstance(node, ast.Expression):
        return _eval_node(node.body, env)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        return node.value
    if isinstance(node, ast.Name):
        if node.id not in env:
            raise ConfigError(f"unknown name {node.id!r} in schedule")
        return env[node.id]
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval_node(node.left, env), _eval_node(node.right, env))
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        val = _eval_node(node.operand, env)
        return -val if isinstance(node.op, ast.USub) else val
    if (
        isinstance(node, ast.Call)
        and isinstance(node.func, ast.Name)
        and node.func.id in _FUNCS
        and len(node.args) == 1
        and not node.keywords
    ):
        return _FUNCS[node.func.id](_eval_node(node.args[0], env))
    raise ConfigError(f"unsupported syntax in schedule: {ast.dump(node)}")


def band_schedule(expr, n: int, nu: float | None = None) -> int:
    """Evaluate a ``b_n`` expression such as ``ceil(sqrt(n))`` at ``n``.

    Non-integer results are rounded up. Only arithmetic on ``n`` and ``nu``
    and the functions ``ceil``, ``floor``, ``sqrt``, ``log`` are allowed.
    """
    if isinstance(expr, (int, np.integer)) and not isinstance(expr, bool):
        value = expr
    else:
        try:
            tree = ast.parse(str(expr), mode="eval")
        except SyntaxError as exc:
            raise ConfigError(f"cannot parse schedule {expr!r}") from exc
        env = {"n": n}
        if nu is not None:
            env["nu"] = nu
        try:
            value = _eval_node(tree, env)
        except (ZeroDivisionError, ValueError, OverflowError) as exc:
            raise ConfigError(f"schedule {expr!r} failed at n={n}: {exc}") from exc
    if not math.isfinite(value):
        raise ConfigError(f"schedule {expr!r} is not finite at n={n}")
    b = int(value) if float(value).is_integer() else math.ceil(value)
    if b < 1:
        raise ConfigError(f"schedule {expr!r} gives b_n = {b} < 1 at n={n}")
    if n / (2 * b) < 0.5:
        raise ConfigError(f"schedule {expr!r} gives nu_n = {n / (2 * b):.4g} < 1/2 at n={n}")
    return b


def odd_dimension(n: int) -> int:
    """The matrix dimension ``2m + 1`` used for a requested size ``n``."""
    if n < 1:
        raise ConfigError("n must be positive")
    return n if n % 2 else n + 1


def limiting_nu(expr, nu: float | None = None) -> float:
    """``lim n / (2 b_n)`` read off the schedule at a large odd ``n``."""
    n = 10**9 + 1
    ratio = n / (2 * band_schedule(expr, n, nu))
    if ratio > 1e3:
        return math.inf
    # schedules round up, so snap to the nearest simple fraction
    return float(Fraction(ratio).limit_denominator(64))


# ---------------------------------------------------------------------------
# config


def _parse_complex(value) -> complex:
    if isinstance(value, complex):
        return value
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, str):
        try:
            return complex(value.replace(" ", "").replace("i", "j"))
        except ValueError as exc:
            raise ConfigError(f"bad complex number {value!r}") from exc
    raise ConfigError(f"bad complex number {value!r}")


def _parse_nu(value) -> float | None:
    if value is None:
        return None
    if isinstance(value, str) and value.strip().lower() in ("inf", "infinity"):
        return math.inf
    try:
        nu = float(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad nu {value!r}") from exc
    if not nu >= 0.5:
        raise ConfigError("nu must be >= 1/2")
    return nu


def _parse_grid(value) -> tuple[float, ...]:
    if value is None:
        return ()
    if isinstance(value, dict):
        try:
            grid = np.linspace(float(value["start"]), float(value["stop"]), int(value["num"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"bad lambda grid {value!r}") from exc
        return tuple(float(x) for x in grid)
    return tuple(float(x) for x in value)


@dataclass
class ExperimentConfig:
    """A single experiment, usually loaded from JSON.

    ``band_width`` is a schedule expression in ``n`` (and ``nu``); ``nu`` is
    that parameter, and for ``solve``/``density``/``corollary`` runs the
    limiting ratio itself (``"inf"`` allowed).
    """

    kind: str
    profile: BandProfile = field(default_factory=lambda: make_indicator_profile(0.0, 1.0))
    distribution: str = "iid_gaussian"
    tail_index: float = 3.0
    n: tuple[int, ...] = (201,)
    band_width: Any = "n"
    nu: float | None = None
    replicas: int = 1
    seed: int = 0
    interval: tuple[float, float] = (0.0, 1.0)
    reference: str = "auto"
    z: tuple[complex, ...] = ()
    lambda_grid: tuple[float, ...] = ()
    eps: tuple[float, ...] = (4e-3, 2e-3, 1e-3)
    grid_size: int = 800
    tol: float = 1e-12
    moments: int = 4
    max_n: int = MAX_N
    max_replicas: int = MAX_REPLICAS
    allow_large: bool = False
    output: str | None = None
    format: str = "csv"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}; expected one of {KINDS}")
        self.profile = parse_profile(self.profile)
        if self.distribution not in DISTRIBUTIONS:
            raise ConfigError(f"unknown distribution {self.distribution!r}")
        ns = (self.n,) if isinstance(self.n, (int, np.integer)) else tuple(self.n)
        if not ns or any(not isinstance(x, (int, np.integer)) or x < 1 for x in ns):
            raise ConfigError("n must be a positive integer or a list of them")
        self.n = tuple(sorted(int(x) for x in ns))
        self.nu = _parse_nu(self.nu)
        if not isinstance(self.replicas, (int, np.integer)) or self.replicas < 1:
            raise ConfigError("replicas must be a positive integer")
        if not self.allow_large:
            if max(self.n) > self.max_n:
                raise ConfigError(f"n = {max(self.n)} exceeds the cap {self.max_n}; set allow_large to override")
            if self.replicas > self.max_replicas:
                raise ConfigError(f"replicas = {self.replicas} exceeds the cap {self.max_replicas}")
        if self.kind in ("sample", "spectrum", "compare", "moments", "concentration"):
            sched_nu = self.nu if self.nu is not None and math.isfinite(self.nu) else None
            for x in self.n:
                band_schedule(self.band_width, odd_dimension(x), sched_nu)
        lo, hi = (float(v) for v in self.interval)
        if not lo <= hi:
            raise ConfigError("interval needs lo <= hi")
        self.interval = (lo, hi)
        self.z = tuple(_parse_complex(v) for v in self.z)
        self.lambda_grid = _parse_grid(self.lambda_grid)
        self.eps = tuple(float(e) for e in self.eps)
        if self.format not in ("csv", "json"):
            raise ConfigError("format must be csv or json")
        if self.reference not in ("auto", "triangular", "quarter_circle", "solver"):
            raise ConfigError(f"unknown reference {self.reference!r}")
        if self.moments < 1:
            raise ConfigError("moments must be >= 1")
        if self.kind == "concentration" and len(self.n) < 2:
            raise ConfigError("concentration needs at least two n values")
        if self.kind in ("solve", "corollary") and not self.z:
            raise ConfigError(f"{self.kind} needs a z list")
        if self.kind in ("solve", "density", "corollary") and self.nu is None:
            raise ConfigError(f"{self.kind} needs nu")
        if self.kind == "corollary" and not math.isfinite(self.nu):
            raise ConfigError("corollary needs finite nu")
        if self.kind == "density" and not self.lambda_grid:
            raise ConfigError("density needs lambda_grid")

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config fields {sorted(unknown)}")
        if "kind" not in data:
            raise ConfigError("config needs a kind")
        try:
            return cls(**data)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        return cls.from_dict(data)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(fh.read())

    def schedule_nu(self) -> float | None:
        return self.nu if self.nu is not None and math.isfinite(self.nu) else None

    def ensemble(self, n: int) -> EnsembleSpec:
        """The spec for scheduled size ``n``; its seed is derived from ``(seed, n)``."""
        dim = odd_dimension(n)
        seed = int(np.random.SeedSequence(self.seed, spawn_key=(dim,)).generate_state(1, np.uint64)[0])
        return EnsembleSpec(
            n=dim,
            band_width=band_schedule(self.band_width, dim, self.schedule_nu()),
            profile=self.profile,
            distribution=self.distribution,
            seed=seed,
            tail_index=self.tail_index,
        )


# ---------------------------------------------------------------------------
# tables and emission


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return "%.12g" % value if math.isfinite(value) else ""
    return str(value)


def _jsonable(value):
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return float("%.12g" % value) if math.isfinite(value) else None
    if isinstance(value, complex):
        return [_jsonable(value.real), _jsonable(value.imag)]
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    return value


@dataclass
class Table:
    """Column-ordered rows plus run-level metadata."""

    columns: list[str]
    rows: list[dict] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.rows:
            writer.writerow([_fmt(row.get(c)) for c in self.columns])
        return buf.getvalue()

    def to_json(self) -> str:
        doc = {
            "meta": _jsonable(self.meta),
            "columns": list(self.columns),
            "rows": [{c: _jsonable(row.get(c)) for c in self.columns} for row in self.rows],
        }
        return json.dumps(doc, indent=2) + "\n"


@dataclass
class ComparisonReport:
    """Per-``n`` rows, sorted by ``n``.

    ``runtime`` is wall-clock seconds; it is kept on the object but not
    emitted, so output bytes depend on the config alone.
    """

    kind: str
    reference: str
    columns: list[str]
    rows: list[dict] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    runtime: float = 0.0

    def column(self, name: str) -> np.ndarray:
        return np.array([np.nan if r.get(name) is None else r[name] for r in self.rows], dtype=float)

    def to_table(self) -> Table:
        meta = {"kind": self.kind, "reference": self.reference, **self.summary}
        cols = list(self.columns)
        rows = [dict(r) for r in self.rows]
        # summary values also ride along as constant columns so CSV keeps them
        for key, value in self.summary.items():
            cols.append(key)
            for r in rows:
                r[key] = value
        return Table(cols, rows, meta)


@dataclass
class CorollaryReport:
    """Outcome of the periodic / quarter-circle dichotomy check.

    ``consistent`` holds when a periodic ``v**2`` gives ``sup <= 1e-6`` or a
    non-periodic one gives ``sup >= 1e-3``. Truthiness follows ``consistent``.
    """

    periodic: bool
    w2: float
    sup_deviation: float
    consistent: bool
    rows: list[dict]
    triangular_deviation: float | None = None

    def __bool__(self) -> bool:
        return self.consistent

    def to_table(self) -> Table:
        cols = ["z_re", "z_im", "f_re", "f_im", "qc_re", "qc_im", "deviation"]
        if self.triangular_deviation is not None:
            cols.append("triangular_deviation")
        meta = {
            "periodic": self.periodic,
            "w2": self.w2,
            "sup_deviation": self.sup_deviation,
            "consistent": self.consistent,
        }
        if self.triangular_deviation is not None:
            meta["triangular_sup_deviation"] = self.triangular_deviation
        return Table(cols, self.rows, meta)


def _density_table(d: SpectralDensity) -> Table:
    rows = [
        {"lambda": lam, "rho": rho if math.isfinite(rho) else None, "epsilon_used": eps, "flag": flag}
        for lam, rho, eps, flag in zip(d.lam.tolist(), d.rho.tolist(), d.eps_used.tolist(), d.flags)
    ]
    return Table(["lambda", "rho", "epsilon_used", "flag"], rows, {"support": list(d.support)})


def _sample_table(s: SpectralSample) -> Table:
    rows = [{"index": i, "lambda": x} for i, x in enumerate(np.asarray(s.values).tolist())]
    return Table(["index", "lambda"], rows, dict(s.provenance))


def as_table(obj) -> Table:
    if isinstance(obj, Table):
        return obj
    if isinstance(obj, SpectralDensity):
        return _density_table(obj)
    if isinstance(obj, SpectralSample):
        return _sample_table(obj)
    if hasattr(obj, "to_table"):
        return obj.to_table()
    raise TypeError(f"cannot emit {type(obj).__name__}")


def emit(obj, path=None, format: str = "csv") -> str:
    """Write ``obj`` as CSV or JSON to ``path`` (stdout when ``None``).

    Floats use ``%.12g``, lines end in LF and columns keep a fixed order, so
    equal inputs give equal bytes. Non-finite values become empty fields
    (``null`` in JSON). Returns the text written.
    """
    table = as_table(obj)
    if format == "csv":
        text = table.to_csv()
    elif format == "json":
        text = table.to_json()
    else:
        raise ConfigError(f"unknown format {format!r}")
    if path is None or str(path) == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return text
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from exc
    return text


# ---------------------------------------------------------------------------
# reference laws


class SolverLaw:
    """Band law for a general profile, tabulated from the fixed-point solver.

    The first two moments are exact (large-``z`` expansion); the CDF and higher
    moments come from the recovered density on a uniform ``lambda`` grid over
    ``(0, (sqrt(sup u) + sqrt(sup u~))^2]``. The CDF is ``1 - int_lam^top rho``,
    so mass below the first grid point is assigned to ``[0, lam_min]``.
    """

    name = "solver"

    def __init__(
        self,
        profile: BandProfile,
        nu: float,
        points: int = 160,
        grid_size: int = 200,
        eps: Sequence[float] = (4e-3, 2e-3, 1e-3),
        workers: int = 1,
    ):
        if not math.isfinite(nu):
            raise ConfigError("SolverLaw needs finite nu; use QuarterCircleLaw")
        self.profile, self.nu = profile, nu
        top = (math.sqrt(convolution_u(profile, nu).max()) + math.sqrt(dual_convolution(profile, nu).max())) ** 2
        lam = np.linspace(top / points, 1.02 * top, points)
        self.density = _parallel_density(profile, nu, lam, eps, grid_size, 1e-10, workers)
        # accumulate from the top: mass under the first grid point (a hard
        # edge can hold a lot) ends up in [0, lam_min] instead of being lost
        rho = np.where(np.isfinite(self.density.rho), self.density.rho, 0.0)
        pieces = np.diff(lam) * (rho[1:] + rho[:-1]) / 2
        tail = np.concatenate([np.cumsum(pieces[::-1])[::-1], [0.0]])
        self._lam = np.concatenate([[0.0], lam])
        self._cum = np.clip(np.concatenate([[0.0], 1.0 - tail]), 0.0, 1.0)
        self._coeffs = expansion_coefficients(profile, nu)
        self.support = (0.0, float(top))

    def cdf(self, lam):
        return np.interp(lam, self._lam, self._cum, left=0.0, right=1.0)

    def moment(self, k: int) -> float:
        if k == 1:
            return self._coeffs[0]
        if k == 2:
            return self._coeffs[2]
        d = self.density
        ok = np.isfinite(d.rho)
        return float(np.trapezoid(d.lam[ok] ** k * d.rho[ok], d.lam[ok]))


def _is_triangular(profile: BandProfile, nu: float) -> bool:
    return nu == 0.5 and profile == make_indicator_profile(0.0, 1.0)


def reference_law(profile: BandProfile, nu: float, choice: str = "auto", workers: int = 1):
    """Limiting law for ``(profile, nu)``.

    ``auto`` picks the quarter circle for ``nu = inf`` or a periodic ``v**2``,
    the triangular law for ``v = 1_[0,1]`` at ``nu = 1/2``, and the solver
    otherwise.
    """
    if choice == "quarter_circle" or (choice == "auto" and (not math.isfinite(nu) or is_periodic_square(profile, nu))):
        w2 = squared_l2_norm(profile, nu)
        if not w2 > 0:
            raise ConfigError("zero profile has no quarter-circle reference")
        return QuarterCircleLaw(w2)
    if choice == "triangular" or (choice == "auto" and _is_triangular(profile, nu)):
        return TriangularLaw()
    return SolverLaw(profile, nu, workers=workers)


def _law_name(law) -> str:
    if isinstance(law, QuarterCircleLaw):
        return f"quarter_circle(w2={law.w2:.12g})"
    return getattr(law, "name", type(law).__name__)


# ---------------------------------------------------------------------------
# parallel work


def _workers(workers: int | None) -> int:
    if workers is None:
        env = os.environ.get("BANDSPEC_WORKERS")
        if env:
            try:
                workers = int(env)
            except ValueError as exc:
                raise ConfigError(f"BANDSPEC_WORKERS must be an integer, got {env!r}") from exc
        else:
            workers = 1
    if workers < 1:
        raise ConfigError("workers must be >= 1")
    return workers


def _map(fn: Callable, items: list, workers: int) -> list:
    """Ordered map; a process pool when ``workers > 1``."""
    if workers <= 1 or len(items) <= 1:
        return [fn(*args) for args in items]
    with ProcessPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, *zip(*items)))


def _replica_eigenvalues(spec: EnsembleSpec, replica: int) -> np.ndarray:
    return symmetric_eigenvalues(gram(sample_matrix(spec, replica)))


def _density_chunk(profile, nu, lam, eps, grid_size, tol) -> SpectralDensity:
    return density_from_transform(stieltjes_transform(profile, nu, grid_size, tol), lam, eps)


def _parallel_density(profile, nu, lam, eps, grid_size, tol, workers) -> SpectralDensity:
    lam = np.asarray(lam, dtype=float)
    chunks = [c for c in np.array_split(lam, max(1, min(workers, len(lam)))) if len(c)]
    parts = _map(_density_chunk, [(profile, nu, c, tuple(eps), grid_size, tol) for c in chunks], workers)
    rho = np.concatenate([p.rho for p in parts])
    used = np.concatenate([p.eps_used for p in parts])
    flags = [f for p in parts for f in p.flags]
    pos = lam[np.isfinite(rho) & (rho > 0)]
    support = (float(pos[0]), float(pos[-1])) if len(pos) else (0.0, 0.0)
    return SpectralDensity(lam, rho, used, flags, support)


def _pooled(spec: EnsembleSpec, replicas: int, workers: int) -> list[np.ndarray]:
    return _map(_replica_eigenvalues, [(spec, r) for r in range(replicas)], workers)


# ---------------------------------------------------------------------------
# experiments


def _row_head(spec: EnsembleSpec, replicas: int) -> dict:
    return {"n": spec.n, "band_width": spec.band_width, "nu_n": spec.nu_n, "replicas": replicas}


def _error_status(exc: Exception) -> str:
    return f"error: {type(exc).__name__}: {exc}"


def run_compare(config: ExperimentConfig, workers: int | None = None, law=None) -> ComparisonReport:
    """Pooled-eigenvalue KS distance and moment errors against the limiting law, per ``n``.

    The KS supremum skips ``lambda`` below ``ks_floor = 1e-12 max(lambda)``,
    where computed eigenvalues are roundoff; their mass is still counted.
    """
    start = time.perf_counter()
    workers = _workers(workers)
    if law is None:
        law = reference_law(config.profile, limiting_nu(config.band_width, config.schedule_nu()), config.reference, workers)
    ks = range(1, config.moments + 1)
    cols = ["n", "band_width", "nu_n", "replicas", "ks", "ks_floor"]
    cols += [c for k in ks for c in (f"m{k}", f"m{k}_relerr")]
    cols += ["count_mean", "count_var", "spec_hash", "status"]
    lo, hi = config.interval
    refs = {k: float(law.moment(k)) for k in ks}
    rows = []
    for n in config.n:
        spec = config.ensemble(n)
        row = {**_row_head(spec, config.replicas), "spec_hash": spec.spec_hash}
        try:
            samples = _pooled(spec, config.replicas, workers)
        except (ConvergenceError, FloatingPointError, np.linalg.LinAlgError) as exc:
            row["status"] = _error_status(exc)
            rows.append(row)
            continue
        pooled = empirical_measure(np.concatenate(samples))
        row["ks_floor"] = RESOLUTION * max(pooled.atoms[-1], 0.0)
        row["ks"] = ks_distance(pooled, law.cdf, floor=row["ks_floor"])
        for k in ks:
            m = pooled.moment(k)
            row[f"m{k}"] = m
            row[f"m{k}_relerr"] = abs(m - refs[k]) / abs(refs[k])
        counts = np.array([counting_in_interval(empirical_measure(s), lo, hi) for s in samples])
        row["count_mean"] = float(counts.mean())
        row["count_var"] = float(counts.var(ddof=1)) if len(counts) > 1 else 0.0
        row["status"] = "ok"
        rows.append(row)
    summary = {f"m{k}_ref": refs[k] for k in ks}
    return ComparisonReport("compare", _law_name(law), cols, rows, summary, time.perf_counter() - start)


def run_moments(config: ExperimentConfig, workers: int | None = None) -> ComparisonReport:
    """Empirical against reference moments, one row per ``(n, k)``."""
    start = time.perf_counter()
    workers = _workers(workers)
    law = reference_law(config.profile, limiting_nu(config.band_width, config.schedule_nu()), config.reference, workers)
    cols = ["n", "band_width", "nu_n", "replicas", "k", "empirical", "reference", "relerr", "spec_hash", "status"]
    rows = []
    for n in config.n:
        spec = config.ensemble(n)
        head = {**_row_head(spec, config.replicas), "spec_hash": spec.spec_hash}
        try:
            pooled = empirical_measure(np.concatenate(_pooled(spec, config.replicas, workers)))
        except ConvergenceError as exc:
            rows.append({**head, "status": _error_status(exc)})
            continue
        for k in range(1, config.moments + 1):
            ref = float(law.moment(k))
            m = pooled.moment(k)
            rows.append({**head, "k": k, "empirical": m, "reference": ref, "relerr": abs(m - ref) / abs(ref), "status": "ok"})
    return ComparisonReport("moments", _law_name(law), cols, rows, {}, time.perf_counter() - start)


def run_concentration(config: ExperimentConfig, workers: int | None = None) -> ComparisonReport:
    """Across-replica mean and variance of ``N_n(interval)`` per ``n``, with the log-log slope.

    The slope of ``log var`` against ``log n`` is flagged ``low-confidence``
    when fewer than 10 replicas were drawn. ``variance_ratio`` in the summary
    is ``var`` at the largest ``n`` over ``var`` at the smallest.
    """
    start = time.perf_counter()
    workers = _workers(workers)
    if len(config.n) < 2:
        raise ConfigError("concentration needs at least two n values")
    lo, hi = config.interval
    cols = ["n", "band_width", "nu_n", "replicas", "interval_lo", "interval_hi", "count_mean", "count_var", "spec_hash", "status"]
    rows = []
    for n in config.n:
        spec = config.ensemble(n)
        row = {**_row_head(spec, config.replicas), "interval_lo": lo, "interval_hi": hi, "spec_hash": spec.spec_hash}
        try:
            samples = _pooled(spec, config.replicas, workers)
        except ConvergenceError as exc:
            row["status"] = _error_status(exc)
            rows.append(row)
            continue
        counts = np.array([counting_in_interval(empirical_measure(s), lo, hi) for s in samples])
        row["count_mean"] = float(counts.mean())
        row["count_var"] = float(counts.var(ddof=1)) if len(counts) > 1 else 0.0
        row["status"] = "ok"
        rows.append(row)
    good = [r for r in rows if r["status"] == "ok" and r["count_var"] > 0]
    slope = math.nan
    if len(good) >= 2:
        x = np.log([r["n"] for r in good])
        y = np.log([r["count_var"] for r in good])
        slope = float(np.polyfit(x, y, 1)[0])
    summary = {
        "slope": slope,
        "slope_flag": "low-confidence" if config.replicas < LOW_CONFIDENCE_REPLICAS or not math.isfinite(slope) else "ok",
    }
    if len(good) >= 2:
        summary["variance_ratio"] = good[-1]["count_var"] / good[0]["count_var"]
    return ComparisonReport("concentration", "none", cols, rows, summary, time.perf_counter() - start)


def run_corollary_test(
    profile: BandProfile,
    nu: float,
    z_list: Sequence[complex],
    grid_size: int = 800,
    tol: float = 1e-12,
) -> CorollaryReport:
    """Check that the band law is the quarter circle exactly when ``v**2`` is ``2 nu``-periodic.

    Compares the solver's aggregate with ``f_qc(z; w2)`` over ``z_list``. For
    ``v = 1_[0,1]`` at ``nu = 1/2`` the deviation from the triangular
    transform is reported as well.
    """
    if not math.isfinite(nu):
        raise ConfigError("corollary test needs finite nu")
    if not z_list:
        raise ConfigError("corollary test needs at least one z")
    periodic = is_periodic_square(profile, nu)
    w2 = squared_l2_norm(profile, nu)
    if not w2 > 0:
        raise ConfigError("corollary test needs a nonzero profile on [-nu, nu]")
    rows = []
    tri = []
    for z in z_list:
        z = complex(z)
        f = aggregate(solve_fixed_point(profile, nu, z, grid_size, tol))
        qc = solve_quarter_circle_transform(z, w2)
        row = {"z_re": z.real, "z_im": z.imag, "f_re": f.real, "f_im": f.imag, "qc_re": qc.real, "qc_im": qc.imag, "deviation": abs(f - qc)}
        if _is_triangular(profile, nu):
            row["triangular_deviation"] = abs(f - triangular_transform(z))
            tri.append(row["triangular_deviation"])
        rows.append(row)
    sup = max(r["deviation"] for r in rows)
    consistent = sup <= 1e-6 if periodic else sup >= 1e-3
    return CorollaryReport(periodic, w2, sup, consistent, rows, max(tri) if tri else None)


def _run_solve(config: ExperimentConfig) -> Table:
    rows = []
    if math.isfinite(config.nu):
        for z in config.z:
            sol = solve_fixed_point(config.profile, config.nu, z, config.grid_size, config.tol)
            f = aggregate(sol)
            rows.append({"z_re": z.real, "z_im": z.imag, "f_re": f.real, "f_im": f.imag, "iterations": sol.iterations, "residual": sol.residual})
    else:
        w2 = squared_l2_norm(config.profile, math.inf)
        for z in config.z:
            f = solve_quarter_circle_transform(z, w2)
            rows.append({"z_re": z.real, "z_im": z.imag, "f_re": f.real, "f_im": f.imag, "iterations": 0, "residual": 0.0})
    meta = {"nu": config.nu, "grid_size": config.grid_size, "tol": config.tol}
    return Table(["z_re", "z_im", "f_re", "f_im", "iterations", "residual"], rows, meta)


def _run_density(config: ExperimentConfig, workers: int) -> SpectralDensity:
    lam = np.asarray(config.lambda_grid)
    nu = config.nu
    if not math.isfinite(nu) or config.reference == "quarter_circle":
        w2 = squared_l2_norm(config.profile, nu)
        return density_from_transform(lambda z: solve_quarter_circle_transform(z, w2), lam, config.eps)
    if config.reference == "triangular" or (config.reference == "auto" and _is_triangular(config.profile, nu)):
        return density_from_transform(triangular_transform, lam, config.eps)
    return _parallel_density(config.profile, nu, lam, config.eps, config.grid_size, config.tol, workers)


def _run_spectrum(config: ExperimentConfig, workers: int) -> Table:
    rows = []
    for n in config.n:
        spec = config.ensemble(n)
        for r, values in enumerate(_pooled(spec, config.replicas, workers)):
            rows.extend({"n": spec.n, "replica": r, "index": i, "lambda": x, "spec_hash": spec.spec_hash} for i, x in enumerate(values.tolist()))
    return Table(["n", "replica", "index", "lambda", "spec_hash"], rows, {"seed": config.seed})


def _run_sample(config: ExperimentConfig) -> Table:
    spec = config.ensemble(config.n[0])
    a = sample_matrix(spec, 0)
    j, k = np.nonzero(a)
    rows = [{"row": int(r), "column": int(c), "value": float(a[r, c])} for r, c in zip(j, k)]
    return Table(["row", "column", "value"], rows, {"spec": spec.to_dict(), "spec_hash": spec.spec_hash})


def run(config: ExperimentConfig, workers: int | None = None):
    """Dispatch on ``config.kind``; returns something :func:`emit` accepts."""
    workers = _workers(workers)
    if config.kind == "sample":
        return _run_sample(config)
    if config.kind == "spectrum":
        return _run_spectrum(config, workers)
    if config.kind == "solve":
        return _run_solve(config)
    if config.kind == "density":
        return _run_density(config, workers)
    if config.kind == "compare":
        return run_compare(config, workers)
    if config.kind == "moments":
        return run_moments(config, workers)
    if config.kind == "concentration":
        return run_concentration(config, workers)
    return run_corollary_test(config.profile, config.nu, config.z, config.grid_size, config.tol)
