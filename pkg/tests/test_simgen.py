import numpy as np
import pytest

from drclip import simgen
from drclip.errors import DegenerateSample
from drclip.simgen import (
    ScenarioConfig,
    derive_seed,
    design_for,
    draw_latent,
    gen_outcome,
    generate,
    transform_covariates,
    true_propensity,
)


class ZeroNoise:
    """Stand-in generator whose normal draws are all zero."""

    def standard_normal(self, size):
        return np.zeros(size)


def test_draw_latent_shape_and_determinism():
    a = draw_latent(3, np.random.default_rng(7))
    assert a.shape == (3, 4) and np.all(np.isfinite(a))
    b = draw_latent(3, np.random.default_rng(7))
    np.testing.assert_array_equal(a, b)


def test_draw_latent_column_means_large_sample():
    t = draw_latent(10**5, np.random.default_rng(123))
    # 4-sigma band for the mean of 1e5 standard normals
    assert np.all(np.abs(t.mean(axis=0)) < 4.0 / np.sqrt(10**5))


def test_outcome_at_origin_is_target_mean():
    t = np.zeros((1, 4))
    assert gen_outcome(t, ZeroNoise())[0] == 210.0


def test_outcome_unit_first_latent():
    t = np.array([[1.0, 0.0, 0.0, 0.0]])
    assert gen_outcome(t, ZeroNoise())[0] == pytest.approx(237.4, abs=1e-12)


def test_outcome_population_mean():
    rng = np.random.default_rng(2024)
    t = draw_latent(10**6, rng)
    y = gen_outcome(t, rng)
    # sd(Y) = sqrt(27.4^2 + 3*13.7^2 + 1) = 36.26; 4-sigma MC band
    assert abs(y.mean() - 210.0) < 4.0 * 36.26 / 1000.0


def test_true_propensity_values():
    t = np.array([
        [0.0, 0.0, 0.0, 0.0],
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 2.0, 0.0, 0.0],
    ])
    pi = true_propensity(t)
    assert pi[0] == pytest.approx(0.5, abs=1e-15)
    assert pi[1] == pytest.approx(1.0 / (1.0 + np.e), abs=1e-12)
    assert pi[2] == pytest.approx(1.0 / (1.0 + np.exp(-1.0)), abs=1e-12)
    assert np.all((pi > 0) & (pi < 1))


def test_transform_zero_row():
    x = transform_covariates(np.zeros((1, 4)))
    np.testing.assert_allclose(x[0], [1.0, 10.0, 0.216, 400.0], rtol=0, atol=1e-15)


def test_transform_exp_branch():
    x = transform_covariates(np.array([[2.0, 0.0, 0.0, 0.0]]))
    assert x[0, 0] == pytest.approx(np.e, abs=1e-12)


def test_transform_deterministic_on_equal_rows():
    rng = np.random.default_rng(5)
    row = rng.standard_normal(4)
    t = np.vstack([row, row])
    x = transform_covariates(t)
    np.testing.assert_array_equal(x[0], x[1])


def test_generate_is_pure_function_of_config():
    cfg = ScenarioConfig(n=200, outcome_spec="correct", propensity_spec="correct", seed=99)
    s1, s2 = generate(cfg), generate(cfg)
    np.testing.assert_array_equal(s1.latent, s2.latent)
    np.testing.assert_array_equal(s1.response, s2.response)
    np.testing.assert_array_equal(s1.outcome.values[s1.outcome.mask],
                                  s2.outcome.values[s2.outcome.mask])


def test_generate_internal_consistency():
    cfg = ScenarioConfig(n=500, outcome_spec="incorrect", propensity_spec="incorrect", seed=3)
    s = generate(cfg)
    np.testing.assert_array_equal(s.observed, transform_covariates(s.latent))
    np.testing.assert_array_equal(s.true_propensity, true_propensity(s.latent))
    assert s.theta_star == 210.0
    assert (~s.outcome.mask).sum() == (s.response == 0).sum()


def test_generate_labeling_rate_is_half():
    cfg = ScenarioConfig(n=10**6, outcome_spec="correct", propensity_spec="correct", seed=11)
    s = generate(cfg)
    assert abs(s.response.mean() - 0.5) < 0.002


def test_generate_degenerate_sample(monkeypatch):
    monkeypatch.setattr(simgen, "true_propensity", lambda t: np.full(t.shape[0], 1e-12))
    cfg = ScenarioConfig(n=20, outcome_spec="correct", propensity_spec="correct", seed=1)
    with pytest.raises(DegenerateSample):
        generate(cfg)


def test_scenario_config_validation():
    with pytest.raises(ValueError):
        ScenarioConfig(n=19, outcome_spec="correct", propensity_spec="correct", seed=0)
    with pytest.raises(ValueError):
        ScenarioConfig(n=100, outcome_spec="right", propensity_spec="correct", seed=0)


def test_design_provenance():
    cfg = ScenarioConfig(n=50, outcome_spec="correct", propensity_spec="incorrect", seed=17)
    s = generate(cfg)
    mat, src = design_for(s, "correct")
    assert src == "latent" and mat is s.latent
    mat, src = design_for(s, "incorrect")
    assert src == "observed" and mat is s.observed


def test_derive_seed_stateless_and_distinct():
    assert derive_seed(1, 2, 3) == derive_seed(1, 2, 3)
    seeds = {derive_seed(5, n, s, rep) for n in (100, 200) for s in (0, 1) for rep in range(50)}
    assert len(seeds) == 200
