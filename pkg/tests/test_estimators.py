"""Estimator tests: order statistics, the weighted tail combination, the
rank-ladder slope, default window rules, and the combined critical-order
estimate.

The sampling-theory checks use the exponential-walk representation of the
top order statistics (oracles.gumbel_order_stats), for which the mean and
second moment of the weighted combination have closed forms.
"""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats as sps
from scipy.linalg import null_space

import oracles
import momentgate.estimators as est
import momentgate.tail_models as tm
import momentgate.theory as th
from momentgate.errors import (
    ArgumentError,
    DegenerateRegressionError,
    InsufficientPositiveValues,
    NonPositiveOmegaError,
)

LW2 = tm.log_weibull(2.0)


def make_sample(values, seed=0):
    values = np.asarray(values, dtype=float)
    return tm.Sample(values=values, n=values.size, seed=seed)


def exact_quantile_sample(model, n):
    """Values whose order statistics are the exact tail quantiles: the i-th
    largest is quantile(1 - i/n)."""
    i = np.arange(1, n, dtype=float)
    vals = tm.quantile(model, 1.0 - i / n)
    vals = np.append(vals, tm.quantile(model, 0.5 / n))  # bottom filler
    rng = np.random.default_rng(1)
    return make_sample(rng.permutation(vals))


# ------------------------------------------------------------ order stats


def test_order_stats_descending_top():
    s = make_sample([3.0, 1.0, 2.0])
    np.testing.assert_array_equal(est.order_stats(s, 2).top, [3.0, 2.0])
    np.testing.assert_array_equal(est.order_stats(s, 3).top, [3.0, 2.0, 1.0])


def test_order_stats_with_ties():
    s = make_sample([5.0, 5.0, 1.0])
    np.testing.assert_array_equal(est.order_stats(s, 2).top, [5.0, 5.0])


def test_order_stats_large_permutation():
    rng = np.random.default_rng(3)
    s = make_sample(rng.permutation(np.arange(1.0, 10_001.0)))
    np.testing.assert_array_equal(est.order_stats(s, 10).top,
                                  np.arange(10_000.0, 9_990.0, -1.0))


def test_order_stats_bounds():
    s = make_sample([1.0, 2.0])
    with pytest.raises(ArgumentError):
        est.order_stats(s, 0)
    with pytest.raises(ArgumentError):
        est.order_stats(s, 3)


def test_ordered_sample_validates_monotone():
    with pytest.raises(ArgumentError):
        est.OrderedSample(top=np.array([1.0, 2.0]), n=5, k_available=2)


# --------------------------------------------------------------- weights


def test_weights_unit_sum_frozen_pair():
    w = est.omega_weights(2)
    np.testing.assert_allclose(w.alpha, oracles.OMEGA_WEIGHTS_K2, rtol=1e-14)
    np.testing.assert_array_equal(est.omega_weights(1).alpha, [1.0])


@given(st.integers(min_value=1, max_value=400))
def test_weights_sum_to_one(k):
    assert abs(est.omega_weights(k).alpha.sum() - 1.0) <= 1e-12


def test_weights_reject_bad_k():
    with pytest.raises(ArgumentError):
        est.omega_weights(0)


def test_combination_of_constant_top_is_identity():
    # unit weight sum means a flat tail maps to itself
    s = make_sample([2.0, 2.0, 2.0, 1.0])
    ordered = est.order_stats(s, 3)
    assert est.omega(ordered, 3) == pytest.approx(2.0, rel=1e-15)
    assert est.omega(ordered, 1) == 2.0


# ---------------------------------------------------------- theta and rho


def test_theta_hat_single_order_stat():
    ordered = est.OrderedSample(top=np.array([2.0]), n=55, k_available=1)
    assert est.theta_hat(ordered, 1, log_n=4.0) == pytest.approx(2.0,
                                                                 rel=1e-15)
    assert est.theta_hat(ordered, 1) == pytest.approx(math.log(55) / 2.0,
                                                      rel=1e-15)


def test_theta_hat_rejects_nonpositive_combination():
    ordered = est.OrderedSample(top=np.array([-1.0]), n=10, k_available=1)
    with pytest.raises(NonPositiveOmegaError):
        est.theta_hat(ordered, 1)


def test_rho_hat_recovers_slope_from_exact_quantiles():
    for rho in (1.2, 2.0, 4.0):
        model = tm.log_weibull(rho)
        s = exact_quantile_sample(model, 10_000)
        ordered = est.order_stats(s, 100)
        assert est.rho_hat(ordered, 100) == pytest.approx(rho, rel=1e-10)


def test_rho_hat_excludes_nonpositive_suffix():
    # a sorted tail puts non-positive values at the end; they are dropped
    # without renumbering the survivors, so exact-quantile collinearity and
    # hence the slope are untouched
    n, k = 10_000, 50
    i = np.arange(1, k + 1, dtype=float)
    clean = (math.log(n) - np.log(i)) ** 0.5
    contaminated = np.concatenate([clean, [-0.5, -2.0]])
    a = est.OrderedSample(top=contaminated, n=n, k_available=k + 2)
    b = est.OrderedSample(top=clean, n=n, k_available=k)
    assert est.rho_hat(a, k + 2) == pytest.approx(est.rho_hat(b, k),
                                                  rel=1e-12)
    assert est.rho_hat(a, k + 2) == pytest.approx(2.0, rel=1e-10)


def test_rho_hat_error_conditions():
    ordered = est.OrderedSample(top=np.array([3.0, 2.0, 1.0]), n=100,
                                k_available=3)
    with pytest.raises(ArgumentError):
        est.rho_hat(ordered, 1)
    with pytest.raises(ArgumentError):
        est.rho_hat(ordered, 5)
    neg = est.OrderedSample(top=np.array([-0.5, -1.0, -2.0]), n=100,
                            k_available=3)
    with pytest.raises(InsufficientPositiveValues):
        est.rho_hat(neg, 3)
    flat = est.OrderedSample(top=np.array([2.0, 2.0, 2.0]), n=100,
                             k_available=3)
    with pytest.raises(DegenerateRegressionError):
        est.rho_hat(flat, 3)


def test_rho_hat_ladder_needs_room():
    ordered = est.OrderedSample(top=np.array([3.0, 2.0, 1.0]), n=100,
                                k_available=3)
    # effective size e^1.0 leaves no positive ladder value at rank 3
    with pytest.raises(ArgumentError):
        est.rho_hat(ordered, 3, log_n=1.0)


# ------------------------------------------------------------- window rules


def test_default_windows_frozen_values():
    assert (est.default_k_theta(1000), est.default_k_rho(1000)) == (28, 80)
    assert (est.default_k_theta(65536), est.default_k_rho(65536)) == (68, 323)
    assert (est.default_k_theta(7282), est.default_k_rho(7282)) == (43, 155)
    assert (est.default_k_theta(8), est.default_k_rho(8)) == (2, 2)


def test_default_windows_reject_tiny_n():
    with pytest.raises(ArgumentError):
        est.default_k_theta(7)
    with pytest.raises(ArgumentError):
        est.default_k_rho(5)


def test_default_windows_clamped_to_tail():
    for n in (8, 20, 100, 10_000, 10**6):
        for k in (est.default_k_theta(n), est.default_k_rho(n)):
            assert 2 <= k <= max(2, n // 10)


def test_linear_window_rule():
    assert est.k_theta_linear_rule(1000) == 29
    assert est.k_theta_linear_rule(10) == 2  # negative raw value floors at 2


# ------------------------------------------------------------ combined qc


def test_qc_hat_is_product_of_parts():
    s = make_sample(tm.sample_iid(LW2, 1000, seed=9).values)
    e = est.qc_hat(s, 10, 40)
    ordered = est.order_stats(s, 40)
    assert e.qc_hat == est.theta_hat(ordered, 10) * est.rho_hat(ordered, 40)
    assert (e.k_theta, e.k_rho) == (10, 40)


def test_qc_hat_defaults_follow_window_rules():
    s = make_sample(tm.sample_iid(LW2, 1000, seed=10).values)
    e = est.qc_hat(s)
    assert (e.k_theta, e.k_rho) == (28, 80)


def test_qc_hat_exact_quantiles_recover_theory():
    n = 10_000
    s = exact_quantile_sample(LW2, n)
    curve = th.critical_curve(LW2, n)
    e = est.qc_hat(s, 1, 100)
    assert e.theta_hat == pytest.approx(curve.theta, rel=1e-10)
    assert e.rho_hat == pytest.approx(2.0, rel=1e-10)
    assert e.qc_hat == pytest.approx(curve.qc_approx, rel=1e-10)


# ----------------------------------------------------- sampling invariants


def test_weighted_combination_moments_match_closed_form():
    rng = np.random.default_rng(77)
    n_draws = 20_000
    for k in (2, 5):
        g = oracles.gumbel_order_stats(n_draws, k, rng)
        w = est.omega_weights(k)
        om = g[:, :k] @ w.alpha
        se_mean = om.std(ddof=1) / math.sqrt(n_draws)
        assert abs(om.mean()) < 3 * se_mean
        sq = om * om
        se_sq = sq.std(ddof=1) / math.sqrt(n_draws)
        assert abs(sq.mean() - oracles.omega_sq_mean(k)) < 3 * se_sq


def test_second_moment_closed_form_decreases_in_k():
    vals = [oracles.omega_sq_mean(k) for k in (1, 2, 3, 5, 10, 20, 50)]
    assert np.all(np.diff(vals) < 0)


def test_weighted_combination_is_variance_optimal():
    # any other unit-sum weight vector with the same (zero) mean on the
    # exponential-walk order statistics has larger variance
    k, n_draws = 5, 100_000
    rng = np.random.default_rng(11)
    g = oracles.gumbel_order_stats(n_draws, k, rng)[:, :k]
    alpha = est.omega_weights(k).alpha
    means = np.array([oracles.gumbel_mean(i) for i in range(1, k + 1)])
    basis = null_space(np.vstack([np.ones(k), means]))
    var_opt = (g @ alpha).var(ddof=1)
    for _ in range(20):
        w = alpha + basis @ rng.normal(0.0, 0.5, size=basis.shape[1])
        assert (g @ w).var(ddof=1) > var_opt


def test_weighted_combination_normalizes_with_k():
    # averaging over a wider tail window pulls the combination toward
    # normal: distance to the Gaussian and skewness both shrink in k
    rng = np.random.default_rng(21)
    n_draws = 10_000
    ks_dist, skew = [], []
    for k in (1, 5, 50):
        g = oracles.gumbel_order_stats(n_draws, k, rng)[:, :k]
        om = g @ est.omega_weights(k).alpha
        z = (om - om.mean()) / om.std(ddof=1)
        ks_dist.append(sps.kstest(z, sps.norm.cdf).statistic)
        skew.append(sps.skew(om))
    assert ks_dist[0] > ks_dist[1] > ks_dist[2]
    assert skew[0] > skew[1] > skew[2] > 0.0
    assert ks_dist[2] < 0.03
