import math

import numpy as np
import pytest

from bandspec.ensemble import (
    DISTRIBUTIONS,
    EnsembleSpec,
    band_mask,
    column_stream,
    draw_column_vector,
    gram,
    sample_matrix,
)
from bandspec.errors import ConfigError
from bandspec.profile import BandProfile, make_indicator_profile, zero_profile

TRI = make_indicator_profile(0.0, 1.0)


def test_spec_validation():
    with pytest.raises(ConfigError):
        EnsembleSpec(4, 2, TRI)
    with pytest.raises(ConfigError):
        EnsembleSpec(5, 0, TRI)
    with pytest.raises(ConfigError):
        EnsembleSpec(5, 6, TRI)  # nu_n < 1/2
    with pytest.raises(ConfigError):
        EnsembleSpec(5, 2, TRI, distribution="cauchy")
    with pytest.raises(ConfigError):
        EnsembleSpec(5, 2, TRI, distribution="iid_pareto_symmetric", tail_index=2.0)
    with pytest.raises(ConfigError):
        EnsembleSpec(5, 2, TRI, seed=-1)


def test_spec_json_round_trip_and_hash():
    spec = EnsembleSpec(9, 3, TRI, distribution="iid_pareto_symmetric", seed=2**64 - 1, tail_index=3.5)
    again = EnsembleSpec.from_json(spec.to_json())
    assert again == spec
    assert again.spec_hash == spec.spec_hash
    assert len(spec.spec_hash) == 16
    assert EnsembleSpec(9, 3, TRI, seed=1).spec_hash != EnsembleSpec(9, 3, TRI, seed=2).spec_hash
    assert set(EnsembleSpec(9, 3, TRI).to_dict()) == {"n", "band_width", "profile", "distribution", "seed"}


def test_mask_triangular():
    mask = band_mask(5, 5, TRI)
    assert np.array_equal(mask, np.tril(np.ones((5, 5), dtype=bool)))


def test_mask_narrow_band():
    mask = band_mask(5, 2, TRI)
    j, k = np.indices((5, 5))
    assert np.array_equal(mask, np.isin(j - k, [0, 1, 2]))
    mask = band_mask(3, 1, TRI)
    j, k = np.indices((3, 3))
    assert np.array_equal(mask, np.isin(j - k, [0, 1]))
    assert not band_mask(5, 2, zero_profile()).any()


def test_rademacher_support():
    v = draw_column_vector("iid_rademacher", 3, column_stream(0, 0, 0))
    assert set(v.tolist()) <= {-1.0, 1.0}


def test_sphere_norm():
    v = draw_column_vector("sphere_columns", 5, column_stream(3, 1, 2))
    assert np.linalg.norm(v) == pytest.approx(math.sqrt(5), abs=1e-12)


def test_gaussian_moments():
    v = draw_column_vector("iid_gaussian", 100_000, column_stream(11, 0, 0))
    assert -0.02 <= v.mean() <= 0.02
    assert 0.98 <= v.var() <= 1.02


@pytest.mark.parametrize("dist", DISTRIBUTIONS)
def test_isotropy(dist):
    r, n = 2000, 50
    x = np.array([draw_column_vector(dist, n, column_stream(5, rep, 0)) for rep in range(r)])
    cov = x.T @ x / r
    bound = 5 / math.sqrt(r) * (1 + np.eye(n))
    if dist == "iid_pareto_symmetric":
        # infinite fourth moment: diagonal fluctuations are heavy tailed
        off = ~np.eye(n, dtype=bool)
        assert np.all(np.abs(cov - np.eye(n))[off] <= bound[off])
        assert np.median(np.abs(np.diag(cov) - 1)) <= bound[0, 0]
    else:
        assert np.all(np.abs(cov - np.eye(n)) <= bound)


def test_pareto_unit_variance_and_tail():
    v = draw_column_vector("iid_pareto_symmetric", 400_000, column_stream(1, 0, 0), tail_index=5.0)
    assert v.var() == pytest.approx(1.0, abs=0.03)
    assert abs(v.mean()) < 0.01
    assert np.min(np.abs(v)) >= math.sqrt(3 / 5) - 1e-12


def test_sign_symmetry_shared_stream():
    # the sign draw is separate from the magnitude draw for Pareto, and
    # Gaussian magnitudes are symmetric by construction
    a = draw_column_vector("iid_gaussian", 1000, column_stream(9, 0, 3))
    b = draw_column_vector("iid_gaussian", 1000, column_stream(9, 0, 3))
    flipped = a.copy()
    flipped[::3] *= -1
    assert np.array_equal(np.abs(flipped), np.abs(b))
    for k in (2, 4):
        assert np.mean(flipped**k) == pytest.approx(np.mean(b**k), rel=1e-14)


def test_sample_respects_mask_and_scaling():
    spec = EnsembleSpec(11, 3, TRI, seed=4)
    a = sample_matrix(spec)
    assert np.all(a[~band_mask(11, 3, TRI)] == 0)
    assert np.all(a[band_mask(11, 3, TRI)] != 0)
    raw = np.column_stack([draw_column_vector("iid_gaussian", 11, column_stream(4, 0, k)) for k in range(11)])
    mask = band_mask(11, 3, TRI)
    assert np.allclose(a[mask], raw[mask] / math.sqrt(3))


def test_profile_values_scale_entries():
    p = BandProfile(((0.0, 0.5, 2.0), (0.5, 1.0, -1.0)))
    spec = EnsembleSpec(9, 4, p, distribution="iid_rademacher", seed=2)
    a = sample_matrix(spec)
    assert np.allclose(np.abs(a[1, 0]), 2 / 2)  # (1-0)/4 = 0.25 -> 2
    assert np.allclose(np.abs(a[3, 0]), 1 / 2)  # 0.75 -> -1


def test_zero_profile_gives_zero_matrix():
    assert not sample_matrix(EnsembleSpec(5, 2, zero_profile())).any()


def test_determinism_and_replicas():
    spec = EnsembleSpec(21, 21, TRI, distribution="sphere_columns", seed=99)
    assert np.array_equal(sample_matrix(spec, 3), sample_matrix(spec, 3))
    assert not np.array_equal(sample_matrix(spec, 3), sample_matrix(spec, 4))


@pytest.mark.parametrize(
    "a, expected",
    [
        (np.eye(3), np.eye(3)),
        (np.array([[0.0, 1.0], [1.0, 0.0]]), np.eye(2)),
        (np.array([[1.0, 1.0], [0.0, 1.0]]), np.array([[2.0, 1.0], [1.0, 1.0]])),
    ],
)
def test_gram_examples(a, expected):
    assert np.array_equal(gram(a), expected)


def test_gram_exactly_symmetric():
    m = gram(sample_matrix(EnsembleSpec(31, 10, TRI, seed=1)))
    assert np.array_equal(m, m.T)
    assert np.all(np.diag(m) >= 0)
