import numpy as np
import pytest

from drclip.errors import (
    DimensionMismatch,
    EmptyArm,
    NoVariation,
    RankDeficient,
    Separation,
    TooFewRows,
)
from drclip.nuisance import (
    fit_diff_in_means,
    fit_logistic,
    fit_ols,
    hajek_rescale,
    predict_mu,
    predict_pi,
)
from drclip.util import expit


def test_ols_recovers_exact_line():
    x = np.arange(5.0)[:, None]
    y = 2.0 + 3.0 * x[:, 0]
    model = fit_ols(x, y)
    assert model.intercept == pytest.approx(2.0, abs=1e-10)
    assert model.coefficients[0] == pytest.approx(3.0, abs=1e-10)


def test_ols_intercept_only_is_mean():
    model = fit_ols(np.empty((3, 0)), np.array([1.0, 2.0, 3.0]))
    assert model.intercept == pytest.approx(2.0, abs=1e-14)
    assert model.coefficients.size == 0


def test_ols_duplicate_column_rank_deficient():
    x = np.arange(6.0)[:, None]
    with pytest.raises(RankDeficient):
        fit_ols(np.hstack([x, x]), np.arange(6.0))


def test_ols_constant_column_rank_deficient():
    x = np.column_stack([np.arange(6.0), np.full(6, 7.0)])
    with pytest.raises(RankDeficient):
        fit_ols(x, np.arange(6.0))


def test_ols_too_few_rows():
    with pytest.raises(TooFewRows):
        fit_ols(np.ones((3, 2)), np.ones(3))


def test_ols_residuals_orthogonal_to_design():
    rng = np.random.default_rng(101)
    x = rng.standard_normal((80, 4)) * np.array([1.0, 10.0, 0.1, 400.0])
    y = rng.standard_normal(80) * 5 + x @ np.array([1.0, -2.0, 3.0, 0.01])
    model = fit_ols(x, y)
    res = y - predict_mu(model, x)
    ynorm = np.linalg.norm(y)
    assert abs(res.sum()) <= 1e-6 * ynorm * np.sqrt(len(y))
    for j in range(4):
        col = x[:, j]
        assert abs(res @ col) <= 1e-6 * ynorm * np.linalg.norm(col)


def test_logistic_intercept_only_closed_form():
    r = np.zeros(100)
    r[:30] = 1.0
    model = fit_logistic(np.empty((100, 0)), r)
    assert model.intercept == pytest.approx(np.log(0.3 / 0.7), abs=1e-6)


def test_logistic_single_class():
    with pytest.raises(NoVariation):
        fit_logistic(np.random.default_rng(0).standard_normal((10, 1)), np.ones(10))


def test_logistic_separated_data():
    x = np.array([-2.0, -1.5, -1.0, -0.5, 0.5, 1.0, 1.5, 2.0])[:, None]
    r = (x[:, 0] > 0).astype(float)
    with pytest.raises(Separation):
        fit_logistic(x, r)


def test_logistic_score_equations_hold_at_convergence():
    rng = np.random.default_rng(8)
    x = rng.standard_normal((500, 3)) * np.array([1.0, 20.0, 0.05])
    eta = 0.3 + x @ np.array([0.8, -0.02, 4.0])
    r = (rng.random(500) < expit(eta)).astype(float)
    model = fit_logistic(x, r)
    pi = expit(model.intercept + x @ model.coefficients)
    score0 = np.sum(r - pi)
    assert abs(score0) < 1e-5
    for j in range(3):
        col = x[:, j]
        assert abs((r - pi) @ col) < 1e-5 * max(1.0, np.linalg.norm(col))


def test_logistic_recovers_generating_coefficients():
    rng = np.random.default_rng(31)
    n = 10**5
    x = rng.standard_normal((n, 3))
    truth = np.array([0.5, -1.0, 0.25])
    r = (rng.random(n) < expit(-0.2 + x @ truth)).astype(float)
    model = fit_logistic(x, r)
    assert abs(model.intercept - (-0.2)) < 0.05
    np.testing.assert_allclose(model.coefficients, truth, rtol=0, atol=0.05)


def test_predict_mu_linear():
    model = fit_ols(np.arange(5.0)[:, None], 2.0 + 3.0 * np.arange(5.0))
    assert predict_mu(model, np.array([[1.0]]))[0] == pytest.approx(5.0, abs=1e-9)


def test_predict_mu_diff_in_means():
    model = fit_diff_in_means(np.array([7.0, 7.0, 4.0, 4.0]), np.array([1, 1, 0, 0]))
    assert model.mean1 == 7.0 and model.mean0 == 4.0
    out = predict_mu(model, np.zeros((2, 3)), arms=np.array([1, 0]))
    np.testing.assert_array_equal(out, [7.0, 4.0])
    with pytest.raises(DimensionMismatch):
        predict_mu(model, np.zeros((2, 3)))


def test_diff_in_means_needs_both_arms():
    with pytest.raises(EmptyArm):
        fit_diff_in_means(np.ones(4), np.ones(4))


def test_predict_mu_zero_coefficients_constant():
    from drclip.nuisance import OutcomeModel

    model = OutcomeModel(intercept=2.5, coefficients=np.zeros(2))
    out = predict_mu(model, np.random.default_rng(0).standard_normal((5, 2)))
    np.testing.assert_array_equal(out, np.full(5, 2.5))


def test_predict_pi_zero_model_is_half():
    from drclip.nuisance import PropensityModel

    model = PropensityModel(intercept=0.0, coefficients=np.zeros(2), floor=1e-6)
    np.testing.assert_array_equal(predict_pi(model, np.ones((3, 2))), np.full(3, 0.5))


def test_predict_pi_clamps_to_floor():
    from drclip.nuisance import PropensityModel

    model = PropensityModel(intercept=1000.0, coefficients=np.zeros(1), floor=0.01)
    assert predict_pi(model, np.ones((1, 1)))[0] == 0.99


def test_predict_pi_inverts_intercept():
    from drclip.nuisance import PropensityModel

    model = PropensityModel(intercept=np.log(0.3 / 0.7), coefficients=np.zeros(1), floor=1e-6)
    assert predict_pi(model, np.zeros((1, 1)))[0] == pytest.approx(0.3, abs=1e-12)


def test_predict_pi_always_within_floor_band():
    from drclip.nuisance import PropensityModel

    rng = np.random.default_rng(77)
    model = PropensityModel(intercept=0.5, coefficients=rng.standard_normal(3) * 100,
                            floor=0.01)
    pi = predict_pi(model, rng.standard_normal((200, 3)) * 50)
    assert np.all(pi >= 0.01) and np.all(pi <= 0.99)


def test_predict_dimension_mismatch():
    model = fit_ols(np.arange(5.0)[:, None], np.arange(5.0))
    with pytest.raises(DimensionMismatch):
        predict_mu(model, np.ones((2, 3)))


def test_hajek_identity_case():
    out = hajek_rescale(np.full(4, 0.5), np.array([1, 1, 0, 0]), eps=0.01)
    np.testing.assert_array_equal(out, np.full(4, 0.5))


def test_hajek_clamps_overshoot():
    pi = np.array([0.1, 0.9, 0.5, 0.5])
    a = np.array([1, 1, 0, 0])
    # treated factor = (10 + 1/0.9)/4 = 2.778, pushing 0.9 to 2.5 -> clamp
    out = hajek_rescale(pi, a, eps=0.01)
    assert out[1] == 0.99
    assert np.all((out >= 0.01) & (out <= 0.99))


def test_hajek_single_arm():
    with pytest.raises(EmptyArm):
        hajek_rescale(np.full(3, 0.5), np.ones(3, dtype=int), eps=0.01)


def test_hajek_normalizes_inverse_weights():
    # the clamp must stay inactive for the exact normalization identity
    rng = np.random.default_rng(15)
    pi = rng.uniform(0.3, 0.5, 50)
    a = rng.integers(0, 2, 50)
    a[0], a[1] = 1, 0
    out = hajek_rescale(pi, a, eps=1e-6)
    assert np.mean(np.where(a == 1, 1.0 / out, 0.0)) == pytest.approx(1.0, abs=1e-10)
