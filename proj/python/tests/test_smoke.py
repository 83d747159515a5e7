import math

import numpy as np
import pytest

import manifold_dp as md


def test_sphere_exp_log_round_trip():
    kind = md.ManifoldKind.sphere(3)
    p = md.Point(kind, np.array([0.0, 0.0, 1.0]))
    v = np.array([0.3, -0.2, 0.0])
    q = md.exp_map(p, v)
    np.testing.assert_allclose(md.log_map(p, q).ravel(), v, atol=1e-12)
    assert md.distance(p, q) == pytest.approx(np.linalg.norm(v), abs=1e-12)


def test_spd_exp_at_identity():
    p = md.Point.identity(2)
    q = md.exp_map(p, np.diag([1.0, 0.0]))
    np.testing.assert_allclose(q.coords, np.diag([math.e, 1.0]), atol=1e-12)


def test_vecd_is_an_isometry():
    s = np.array([[1.0, 2.0], [2.0, -3.0]])
    v = md.vecd(s)
    np.testing.assert_allclose(v, [1.0, -3.0, 2.0 * math.sqrt(2.0)])
    assert np.linalg.norm(v) == pytest.approx(np.linalg.norm(s))
    np.testing.assert_allclose(md.vecd_inv(v), s)


def test_invalid_input_maps_to_value_error():
    with pytest.raises(ValueError):
        md.Point(md.ManifoldKind.sphere(3), np.array([1.0, 1.0, 0.0]))


def test_gdp_profile_value():
    assert md.gdp_delta_profile(1.0, 0.0) == pytest.approx(0.382924922548026, abs=1e-12)


def test_full_pipeline_on_sphere():
    kind = md.ManifoldKind.sphere(3)
    center = md.Point(kind, np.array([1.0, 0.0, 0.0]))
    data = md.sample_sphere_uniform_ball(center, math.pi / 8, 600, md.Rng(3))
    fit = md.frechet_mean(data)
    assert md.distance(fit["mean"], center) < 0.05
    out = md.run_full_pipeline(data, mu=1.0, alpha=0.05, seed=11)
    assert out["mean_budget_spent"] == pytest.approx(1.0, abs=1e-12)
    assert out["variance_budget_spent"] == pytest.approx(1.0, abs=1e-12)
    assert out["region"].threshold == pytest.approx(5.991464547107982, abs=1e-9)
    assert out["region"].contains(out["mean_dp"])
    lo, hi = out["interval"]
    assert lo < out["variance_dp"] < hi


def test_small_campaign_is_deterministic():
    cfg = {"manifold": {"sphere": {"ambient_dim": 3}}, "n": 100,
           "n_replications": 8, "mu_grid": [1.0, 2.0], "master_seed": 5}
    a = md.run_campaign(cfg)
    b = md.run_campaign(cfg)
    assert a["aggregates"] == b["aggregates"]
    assert len(a["aggregates"]) == 2
