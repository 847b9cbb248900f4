"""Distribution-layer tests: exponent functions, inverses, sampling, file I/O.

Reference values come from closed forms and frozen high-precision constants
in oracles.py; derivative identities are checked by finite differences.
"""

import io
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats as sps
from scipy.special import ndtr

import oracles
import momentgate.tail_models as tm
from momentgate.errors import ArgumentError, DataFormatError, DomainError

LW2 = tm.log_weibull(2.0)
LW15 = tm.log_weibull(1.5)
SLEP2 = tm.strict_log_exp_power(2.0)
SLEP15 = tm.strict_log_exp_power(1.5)
SLEP4 = tm.strict_log_exp_power(4.0)
LN = tm.log_normal()

ALL_MODELS = [LW2, LW15, SLEP2, SLEP15, SLEP4, LN]


def grid(model):
    if model.support_lo == 0.0:
        return np.linspace(0.05, 25.0, 37)
    return np.linspace(-6.0, 25.0, 37)


# ---------------------------------------------------------------- exponent


def test_log_weibull_exponent_is_power_law():
    assert tm.h(LW2, 4.0) == 16.0
    assert tm.h(tm.log_weibull(3.0), 1.0) == 1.0
    y = np.linspace(0.0, 9.0, 13)
    np.testing.assert_allclose(tm.h(LW15, y), y**1.5, rtol=1e-15)


def test_log_normal_exponent_frozen_values():
    for y, ref in oracles.H_STD_NORMAL.items():
        assert tm.h(LN, y) == pytest.approx(ref, rel=1e-14)


def test_symmetric_power_exponent_frozen_values():
    assert tm.h(SLEP2, 2.0) == pytest.approx(oracles.SLEP2_H_2, rel=1e-13)
    assert tm.h(SLEP2, 5.0) == pytest.approx(oracles.SLEP2_H_5, rel=1e-13)
    assert tm.cdf(SLEP2, -1.3) == pytest.approx(oracles.SLEP2_CDF_M13,
                                                rel=1e-13)


def test_far_tail_incomplete_gamma_switchover():
    # public h hits the asymptotic ln Q branch once |y|^rho >= 600
    for (a, x), ref in oracles.LN_UPPER_GAMMA.items():
        rho = 1.0 / a
        model = tm.strict_log_exp_power(rho)
        y = x ** (1.0 / rho)
        expected = math.log(2.0) - ref
        assert tm.h(model, y) == pytest.approx(expected, rel=1e-13)


def test_exponent_smooth_across_series_switch():
    # second difference of h stays tiny through the asymptotic switch point
    for rho in (2.0, 4.0):
        model = tm.strict_log_exp_power(rho)
        y0 = 600.0 ** (1.0 / rho)
        ys = np.linspace(y0 - 0.01, y0 + 0.01, 41)
        hs = tm.h(model, ys)
        second = np.diff(hs, 2)
        assert np.all(np.abs(second) < 1e-5 * np.abs(hs[1:-1]).max())


def test_survival_function_matches_exponent():
    for model in ALL_MODELS:
        y = grid(model)
        keep = tm.h(model, y) < 600.0
        np.testing.assert_allclose(tm.sf(model, y[keep]),
                                   np.exp(-tm.h(model, y[keep])), rtol=1e-10)


def test_cdf_plus_sf_is_one():
    for model in ALL_MODELS:
        y = grid(model)
        np.testing.assert_allclose(tm.cdf(model, y) + tm.sf(model, y), 1.0,
                                   rtol=1e-12)


def test_symmetric_family_reflection():
    y = np.linspace(0.1, 5.0, 17)
    for model in (SLEP15, SLEP2, SLEP4):
        np.testing.assert_allclose(tm.cdf(model, -y), tm.sf(model, y),
                                   rtol=1e-12)
        assert tm.cdf(model, 0.0) == pytest.approx(0.5, rel=1e-14)


# ------------------------------------------------------------- derivatives


def _central_fd(f, y, step):
    return (f(y + step) - f(y - step)) / (2.0 * step)


def test_h_prime_matches_finite_difference():
    for model in ALL_MODELS:
        y = grid(model)
        step = 1e-6 * np.maximum(1.0, np.abs(y))
        fd = _central_fd(lambda t: tm.h(model, t), y, step)
        np.testing.assert_allclose(tm.h_prime(model, y), fd,
                                   rtol=2e-6, atol=1e-11)


def test_h_second_matches_finite_difference():
    for model in ALL_MODELS:
        y = grid(model)
        if model.support_lo == 0.0:
            y = y[y > 0.2]  # power-law curvature blows up at the edge
        step = 1e-6 * np.maximum(1.0, np.abs(y))
        fd = _central_fd(lambda t: tm.h_prime(model, t), y, step)
        np.testing.assert_allclose(tm.h_second(model, y), fd,
                                   rtol=2e-5, atol=1e-8)


def test_log_pdf_matches_cdf_derivative():
    for model in ALL_MODELS:
        y = grid(model)
        # cdf is flat to machine precision where the density underflows, so
        # the difference quotient only resolves p above ~1e-6
        y = y[tm.log_pdf(model, y) > math.log(1e-6)]
        step = 1e-4 * np.maximum(1.0, np.abs(y))
        fd = _central_fd(lambda t: tm.cdf(model, t), y, step)
        np.testing.assert_allclose(np.exp(tm.log_pdf(model, y)), fd,
                                   rtol=2e-5)


def test_log_normal_far_tail_derivative_scaling():
    # h'(y)/y -> 1 in the far tail (Mills ratio limit)
    y = np.array([50.0, 200.0, 1000.0])
    ratio = tm.h_prime(LN, y) / y
    assert np.all(np.abs(ratio - 1.0) < 1.0 / y**2 + 1e-12)


# ------------------------------------------------------------- tail index


def test_local_tail_index_log_weibull_constant():
    y = np.linspace(0.3, 40.0, 23)
    np.testing.assert_allclose(tm.rho_local(LW15, y), 1.5, rtol=0)
    np.testing.assert_allclose(tm.rho_local(LW2, y), 2.0, rtol=0)


def test_local_tail_index_frozen_value():
    assert tm.rho_local(SLEP4, 50.0) == pytest.approx(
        oracles.SLEP4_RHO_LOCAL_50, rel=1e-8)


def test_local_tail_index_approaches_shape():
    for model, rho in ((SLEP2, 2.0), (SLEP4, 4.0), (LN, 2.0)):
        y = np.array([2.0, 5.0, 20.0, 80.0])
        vals = tm.rho_local(model, y)
        assert np.all(np.diff(vals) > 0)
        assert vals[-1] == pytest.approx(rho, rel=2e-2)
        assert np.all(vals < rho + 1e-9)


# ----------------------------------------------------------- quantile/cdf


def test_quantile_round_trip():
    ps = np.array([1e-12, 1e-6, 0.01, 0.3, 0.5, 0.9, 1 - 1e-6, 1 - 1e-12])
    for model in ALL_MODELS:
        y = tm.quantile(model, ps)
        np.testing.assert_allclose(tm.cdf(model, y), ps, rtol=1e-10)


def test_quantile_of_cdf_round_trip():
    # the p-near-1 side is covered by test_quantile_round_trip in tail space;
    # going through cdf values close to 1 quantizes sf at ~1e-16 absolute,
    # so keep h moderate here
    for model in ALL_MODELS:
        y = grid(model)
        y = y[(tm.h(model, y) < 12.0) & (tm.cdf(model, y) > 1e-12)]
        np.testing.assert_allclose(tm.quantile(model, tm.cdf(model, y)), y,
                                   rtol=1e-9, atol=1e-9)


def test_quantile_rejects_boundary_probabilities():
    for p in (0.0, 1.0, -0.1, 1.1):
        with pytest.raises(DomainError):
            tm.quantile(LW2, p)


def test_log_weibull_quantile_closed_form():
    # 1 - F = e^{-y^rho} inverts to (-ln(1-p))^{1/rho}
    assert tm.quantile(LW2, 1 - math.exp(-1.0)) == pytest.approx(1.0,
                                                                 rel=1e-12)
    assert tm.quantile(tm.log_weibull(3.0), 1 - math.exp(-8.0)) == (
        pytest.approx(2.0, rel=1e-12))


@given(st.floats(min_value=1e-9, max_value=1 - 1e-9))
def test_quantile_cdf_inverse_property(p):
    for model in (LW2, SLEP2, LN):
        assert tm.cdf(model, tm.quantile(model, p)) == pytest.approx(
            p, rel=1e-9)


# ---------------------------------------------------------------- sampling


def test_sampling_is_deterministic_in_seed():
    a = tm.sample_iid(LW2, 64, seed=7)
    b = tm.sample_iid(LW2, 64, seed=7)
    c = tm.sample_iid(LW2, 64, seed=8)
    np.testing.assert_array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)
    assert a.n == 64 and a.seed == 7


def test_exponent_of_sample_is_unit_exponential():
    # h(Y) = -ln(1 - F(Y)) must be Exp(1); checks quantile/h consistency
    n = 100_000
    for model in (LW2, SLEP2, LN):
        y = tm.sample_iid(model, n, seed=123).values
        e = tm.h(model, y)
        se = e.std(ddof=1) / math.sqrt(n)
        assert abs(e.mean() - 1.0) < 5 * se
        assert abs(e.var(ddof=1) - 1.0) < 0.05


def test_sample_distribution_ks():
    for model in ALL_MODELS:
        y = tm.sample_iid(model, 10_000, seed=42).values
        res = sps.kstest(y, lambda t, m=model: tm.cdf(m, t))
        assert res.pvalue > 0.01, (model.family, res)


def test_log_normal_sample_is_standard_normal():
    y = tm.sample_iid(LN, 100_000, seed=5).values
    assert abs(y.mean()) < 5.0 / math.sqrt(y.size)
    assert abs(y.std(ddof=1) - 1.0) < 0.01
    assert sps.kstest(y, ndtr).pvalue > 0.01


# ------------------------------------------------------------ model specs


def test_parse_format_round_trip():
    for spec in ("logweibull:rho=2", "logweibull:rho=1.5", "slep:rho=4",
                 "lognormal"):
        model = tm.parse_model(spec)
        assert tm.parse_model(tm.format_model(model)) == model


def test_parse_default_shape():
    assert tm.parse_model("logweibull").rho == 2.0
    assert tm.parse_model("slep").rho == 2.0


def test_parse_rejects_bad_specs():
    for spec in ("bogus", "logweibull:rho=1", "logweibull:rho=0.5",
                 "lognormal:rho=3", "slep:foo=1", "logweibull:rho=abc"):
        with pytest.raises(ArgumentError):
            tm.parse_model(spec)


def test_model_validation():
    with pytest.raises(ArgumentError):
        tm.log_weibull(1.0)
    with pytest.raises(ArgumentError):
        tm.strict_log_exp_power(0.9)


# -------------------------------------------------------------- file I/O


def test_sample_file_round_trip():
    sample = tm.sample_iid(LW2, 50, seed=11)
    buf = io.StringIO()
    tm.write_sample(buf, sample, LW2, extra_header={"note": "x"})
    buf.seek(0)
    values, meta = tm.read_sample(buf)
    np.testing.assert_array_equal(values, sample.values)  # 17 digits: exact
    assert meta["seed"] == "11"
    assert meta["model"] == "logweibull:rho=2"
    assert meta["note"] == "x"


def test_read_sample_accepts_headerless():
    values, meta = tm.read_sample(io.StringIO("1.5\n2.5\n"))
    np.testing.assert_array_equal(values, [1.5, 2.5])
    assert meta == {}


def test_read_sample_reports_bad_line():
    with pytest.raises(DataFormatError, match="line 3"):
        tm.read_sample(io.StringIO("# model=unknown\n1.0\nnot-a-number\n"))


def test_read_sample_rejects_empty():
    with pytest.raises(DataFormatError):
        tm.read_sample(io.StringIO(""))
