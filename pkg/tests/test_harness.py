import json
import math

import numpy as np
import pytest

from bandspec.errors import ConfigError
from bandspec.harness import (
    ComparisonReport,
    ExperimentConfig,
    SolverLaw,
    band_schedule,
    emit,
    limiting_nu,
    odd_dimension,
    reference_law,
    run,
    run_compare,
    run_concentration,
    run_corollary_test,
)
from bandspec.profile import constant_profile, make_indicator_profile
from bandspec.solver import QuarterCircleLaw, density_from_transform, solve_quarter_circle_transform
from bandspec.trilaw import TriangularLaw

TRI = make_indicator_profile(0.0, 1.0)


@pytest.mark.parametrize(
    "expr, n, nu, expected",
    [("n", 201, None, 201), ("n/2", 201, None, 101), ("ceil(sqrt(n))", 801, None, 29), ("ceil(n/(2*nu))", 201, 2.0, 51), (7, 201, None, 7), ("n // 4 + 1", 101, None, 26)],
)
def test_band_schedule(expr, n, nu, expected):
    assert band_schedule(expr, n, nu) == expected


@pytest.mark.parametrize("expr", ["__import__('os')", "n.real", "nu * n", "foo(n)", "n if n else 1", "[n]"])
def test_band_schedule_rejects(expr):
    with pytest.raises(ConfigError):
        band_schedule(expr, 101)


def test_band_schedule_invariants():
    with pytest.raises(ConfigError):
        band_schedule("n - 200", 101)  # b < 1
    with pytest.raises(ConfigError):
        band_schedule("2*n", 101)  # nu_n < 1/2


def test_limiting_nu():
    assert limiting_nu("n") == 0.5
    assert limiting_nu("n/2") == 1.0
    assert limiting_nu("ceil(n/(2*nu))", 3.0) == 3.0
    assert limiting_nu("ceil(sqrt(n))") == math.inf


def test_odd_dimension():
    assert odd_dimension(1000) == 1001
    assert odd_dimension(201) == 201


def test_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"kind": "plot"})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"kind": "compare", "colour": 1})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"kind": "compare", "n": 5000})
    assert ExperimentConfig.from_dict({"kind": "compare", "n": 5000, "allow_large": True}).n == (5000,)
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"kind": "compare", "replicas": 501})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"kind": "compare", "replicas": 0})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"kind": "concentration", "n": [201]})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"kind": "compare", "band_width": "2*n"})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"kind": "solve", "nu": 1.0})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"kind": "compare", "nu": 0.25})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_json("{not json")


def test_config_parsing():
    cfg = ExperimentConfig.from_dict(
        {
            "kind": "density",
            "profile": "pieces:[(0, 1, 1.0)]",
            "nu": "inf",
            "lambda_grid": {"start": 0.5, "stop": 3.5, "num": 7},
            "z": ["1+2j", [0, 5]],
        }
    )
    assert cfg.profile == TRI
    assert cfg.nu == math.inf
    assert cfg.lambda_grid == (0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5)
    assert cfg.z == (1 + 2j, 5j)


def test_ensemble_seeds_are_derived_and_stable():
    cfg = ExperimentConfig(kind="compare", n=(200, 400), seed=5)
    a, b = cfg.ensemble(200), cfg.ensemble(400)
    assert a.n == 201 and b.n == 401
    assert a.seed != b.seed
    assert cfg.ensemble(200) == a


def test_reference_law_resolution():
    assert isinstance(reference_law(TRI, 0.5), TriangularLaw)
    qc = reference_law(TRI, math.inf)
    assert isinstance(qc, QuarterCircleLaw) and qc.w2 == 1.0
    flat = reference_law(constant_profile(-2, 2, 1.0), 1.0)
    assert isinstance(flat, QuarterCircleLaw) and flat.w2 == 2.0


def test_solver_law_moments_and_cdf():
    law = SolverLaw(TRI, 0.5, points=80, grid_size=100)
    tri = TriangularLaw()
    assert law.moment(1) == pytest.approx(0.5)
    assert law.moment(2) == pytest.approx(2 / 3)
    assert law.moment(3) == pytest.approx(9 / 8, rel=0.03)
    lam = np.linspace(0.2, 2.6, 7)
    assert np.max(np.abs(law.cdf(lam) - tri.cdf(lam))) <= 0.03


def test_compare_smoke():
    report = run_compare(ExperimentConfig(kind="compare", n=50, replicas=1, seed=3))
    assert len(report.rows) == 1
    row = report.rows[0]
    assert row["status"] == "ok"
    assert row["n"] == 51
    for key in ("ks", "m1", "m1_relerr", "m4_relerr", "count_mean", "count_var", "nu_n"):
        assert math.isfinite(row[key])
    assert len(row["spec_hash"]) == 16


def test_compare_ks_decreases():
    report = run_compare(ExperimentConfig(kind="compare", n=(200, 400, 800), replicas=8, seed=12345))
    ks = report.column("ks")
    assert np.all(np.diff(ks) < 0)
    assert [r["n"] for r in report.rows] == [201, 401, 801]


def test_compare_quarter_circle_regime():
    report = run_compare(ExperimentConfig(kind="compare", n=800, band_width="ceil(sqrt(n))", replicas=8, seed=12345))
    assert report.reference == "quarter_circle(w2=1)"
    assert report.rows[0]["ks"] <= 0.08


def test_concentration_low_confidence_and_slope():
    report = run_concentration(ExperimentConfig(kind="concentration", n=(100, 200), replicas=2, seed=1))
    assert report.summary["slope_flag"] == "low-confidence"
    assert all(math.isfinite(r["count_var"]) for r in report.rows)
    report = run_concentration(ExperimentConfig(kind="concentration", n=(100, 200), replicas=12, seed=1))
    assert report.summary["slope_flag"] == "ok"
    assert math.isfinite(report.summary["slope"])


def test_concentration_needs_two_sizes():
    cfg = ExperimentConfig(kind="compare", n=(101,))
    cfg.kind = "concentration"
    with pytest.raises(ConfigError):
        run_concentration(cfg)


def test_corollary_examples():
    flat = run_corollary_test(constant_profile(-2, 2, 1.0), 1.0, [2j, 5j, 10j])
    assert flat.periodic and flat.sup_deviation <= 1e-6 and flat
    band = run_corollary_test(TRI, 1.0, [2j, 5j, 10j])
    assert not band.periodic and band.sup_deviation >= 1e-3 and band
    tri = run_corollary_test(TRI, 0.5, [2j, 5j, 10j])
    assert not tri.periodic and tri.sup_deviation >= 1e-3
    assert tri.triangular_deviation <= 1e-4
    with pytest.raises(ConfigError):
        run_corollary_test(TRI, math.inf, [1j])


def test_emit_empty_report_is_header_only(tmp_path):
    report = ComparisonReport("compare", "triangular", ["n", "ks", "status"])
    path = tmp_path / "r.csv"
    emit(report, path)
    assert path.read_bytes() == b"n,ks,status\n"


def test_emit_density_schema(tmp_path):
    d = density_from_transform(lambda z: solve_quarter_circle_transform(z, 1.0), [0.0, 1.0, 2.0])
    text = emit(d, tmp_path / "d.csv")
    lines = text.splitlines()
    assert lines[0] == "lambda,rho,epsilon_used,flag"
    assert lines[1] == "0,,0,hard_edge"
    assert "inf" not in text
    doc = json.loads(emit(d, tmp_path / "d.json", "json"))
    assert doc["rows"][0]["rho"] is None


def test_emit_float_format(tmp_path):
    report = ComparisonReport("compare", "x", ["a", "b"], [{"a": 1 / 3, "b": 7}])
    assert emit(report, tmp_path / "f.csv").splitlines()[1] == "0.333333333333,7"


def test_emit_io_error(tmp_path):
    with pytest.raises(OSError):
        emit(ComparisonReport("compare", "x", ["a"]), tmp_path / "missing" / "r.csv")


def test_determinism_across_runs_and_workers(tmp_path):
    cfg = {"kind": "compare", "n": [101, 201], "replicas": 3, "seed": 77, "distribution": "iid_rademacher"}
    one = emit(run(ExperimentConfig.from_dict(cfg), workers=1), tmp_path / "a.csv")
    two = emit(run(ExperimentConfig.from_dict(cfg), workers=1), tmp_path / "b.csv")
    par = emit(run(ExperimentConfig.from_dict(cfg), workers=2), tmp_path / "c.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes() == (tmp_path / "c.csv").read_bytes()
    assert one == two == par


def test_run_kinds():
    sample = run(ExperimentConfig(kind="sample", n=5, band_width="n"))
    assert sample.columns == ["row", "column", "value"]
    assert all(r["row"] >= r["column"] for r in sample.rows)
    spectrum = run(ExperimentConfig(kind="spectrum", n=11, replicas=2))
    assert len(spectrum.rows) == 22
    solved = run(ExperimentConfig(kind="solve", nu=0.5, z=[5j], grid_size=200))
    assert solved.rows[0]["f_im"] > 0
    qc = run(ExperimentConfig(kind="solve", nu="inf", z=[1j]))
    assert qc.rows[0]["f_re"] == pytest.approx(0.30024259022012042)
    dens = run(ExperimentConfig(kind="density", nu=0.5, lambda_grid=[2 / math.pi]))
    assert dens.rho[0] == pytest.approx(1 / math.pi, abs=5e-3)
    moments = run(ExperimentConfig(kind="moments", n=51, replicas=2, moments=3))
    assert [r["k"] for r in moments.rows] == [1, 2, 3]
    assert moments.rows[1]["reference"] == pytest.approx(2 / 3)
