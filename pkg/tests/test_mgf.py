import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from multicarrier import mgf, orderstats as os_
from multicarrier.exceptions import DomainError, ParameterError
from multicarrier.montecarlo import derive_rng


def _q_erfc(x):
    # independent series-based reference
    return 0.5 * math.erfc(x / math.sqrt(2.0))


def test_mgf_from_pdf_values():
    exp1 = os_.exponential(1.0)
    assert mgf.mgf_from_pdf(exp1, 0.0) == pytest.approx(1.0, abs=1e-9)
    assert mgf.mgf_from_pdf(exp1, -1.0) == pytest.approx(0.5, abs=1e-9)
    g3 = os_.gamma_law(3.0)
    assert mgf.mgf_from_pdf(g3, -0.7) == pytest.approx(1.7 ** -3, abs=1e-8)
    with pytest.raises(DomainError):
        mgf.mgf_from_pdf(exp1, 1.5)


def test_mgf_repr_domain_and_scaling():
    m = mgf.exponential_mgf(2.0)
    assert m(0.0) == 1.0
    with pytest.raises(DomainError):
        m(1.0)
    s = m.scaled(3.0)
    assert s(-0.4) == pytest.approx(m(-1.2))
    with pytest.raises(ParameterError):
        m.scaled(0.0)


@pytest.mark.parametrize("k,expected,tol", [(1, 1.0, 1e-6), (2, 2.0, 1e-5), (3, 6.0, 1e-4), (4, 24.0, 1e-3)])
def test_exponential_moments(k, expected, tol):
    assert mgf.mgf_moment(mgf.exponential_mgf(1.0), k) == pytest.approx(expected, abs=tol)


def test_top_sum_mean_against_monte_carlo():
    m = mgf.MGFRepr(lambda w: os_.alpha_sum("total_mgf", 4, 2, 1.0, w), (-np.inf, 0.9))
    mean = mgf.mgf_moment(m, 1)
    x = derive_rng(21).exponential(1.0, size=(200000, 4))
    s = -np.sort(-x, axis=1)[:, :2].sum(axis=1)
    assert abs(mean - s.mean()) < 3 * s.std(ddof=1) / math.sqrt(s.size)
    # exact value 1 + 1 + 2/3 + 2/4
    assert mean == pytest.approx(1 + 1 + 2 / 3 + 2 / 4, rel=1e-6)


def test_q_craig_values():
    assert mgf.q_craig(0.0) == 0.5
    assert mgf.q_craig(1e-9) == pytest.approx(0.5, abs=1e-9)
    assert mgf.q_craig(1.0) == pytest.approx(0.15865525393145707, abs=1e-10)
    assert mgf.q_craig(1.0, squared=True) == pytest.approx(mgf.q_craig(1.0) ** 2, abs=1e-9)
    assert mgf.q_craig(0.0, squared=True) == pytest.approx(0.25)
    with pytest.raises(ParameterError):
        mgf.q_craig(-0.1)


def test_q_craig_grid():
    for x in np.arange(0.0, 6.0001, 0.1):
        assert abs(mgf.q_craig(float(x)) - _q_erfc(float(x))) < 1e-10


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 5.0))
def test_q_squared_identity(x):
    assert mgf.q_craig(x, squared=True) == pytest.approx(mgf.q_craig(x) ** 2, abs=1e-9)


def test_point_mass_error_rate():
    spec = mgf.ErrorRateSpec(a=1.5, b=2.0, snr_hat=1.0)
    assert mgf.avg_error_rate(spec, mgf.point_mass_mgf(1.3)) == pytest.approx(1.5 * _q_erfc(math.sqrt(2.6)),
                                                                              abs=1e-10)
    zero_b = mgf.ErrorRateSpec(a=1.5, b=0.0)
    assert mgf.avg_error_rate(zero_b, mgf.exponential_mgf(1.0)) == pytest.approx(0.75)


@pytest.mark.parametrize("law,m", [
    (os_.exponential(1.0), mgf.exponential_mgf(1.0)),
    (os_.gamma_law(3.0, 0.5), mgf.gamma_mgf(3.0, 0.5)),
])
def test_two_route_identity(law, m):
    spec = mgf.ErrorRateSpec(a=1.0, b=2.0, snr_hat=1.0)
    assert mgf.avg_error_rate(spec, m) == pytest.approx(mgf.avg_error_rate_direct(spec, law), abs=1e-8)


def test_error_rate_spec_validation():
    with pytest.raises(ParameterError):
        mgf.ErrorRateSpec(a=0.0)
    with pytest.raises(ParameterError):
        mgf.ErrorRateSpec(snr_hat=-1.0)


def test_p_err_operator_basics():
    m = mgf.exponential_mgf(1.0)
    assert mgf.p_err_operator(m, 0.0) == 0.5
    vals = [mgf.p_err_operator(m, s) for s in (0.5, 1, 2, 4, 8)]
    assert all(0 < v < 0.5 for v in vals)
    assert all(a > b for a, b in zip(vals, vals[1:]))
    # with M(c) = 1/(1-c) the integral has the closed form (1 - sqrt(s/(1+s))) / 2
    for s in (0.5, 3.0):
        assert mgf.p_err_operator(m, s) == pytest.approx(0.5 * (1 - math.sqrt(s / (1 + s))), abs=1e-10)
    with pytest.raises(ParameterError):
        mgf.p_err_operator(m, -1.0)


@settings(max_examples=30, deadline=None)
@given(st.floats(0.01, 50.0), st.floats(0.1, 5.0))
def test_p_err_in_range(snr, mean):
    v = mgf.p_err_operator(mgf.exponential_mgf(mean), snr)
    assert 0.0 < v < 0.5
