import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, stats

from multicarrier import orderstats as os_
from multicarrier.exceptions import DomainError, ParameterError, SingularityError
from multicarrier.montecarlo import EmpiricalDist, derive_rng, ks_distance

EXP = os_.exponential(1.0)


def _sorted_desc(trials, n, seed):
    x = derive_rng(seed).exponential(1.0, size=(trials, n))
    return -np.sort(-x, axis=1)


def _grid_cdf(pdf, hi, points=20001):
    xs = np.linspace(0.0, hi, points)
    cum = integrate.cumulative_trapezoid([pdf(x) for x in xs], xs, initial=0.0)
    return lambda x: np.interp(x, xs, cum, right=1.0)


@pytest.mark.parametrize("law", [EXP, os_.exponential(2.5), os_.gamma_law(3.0, 0.5)])
def test_descriptor_normalization(law):
    mass, _ = integrate.quad(lambda x: float(law.pdf(x)), 0, np.inf)
    assert mass == pytest.approx(1.0, abs=1e-6)
    assert float(law.cdf(0.0)) == pytest.approx(0.0, abs=1e-9)
    assert float(law.cdf(1e4)) == pytest.approx(1.0, abs=1e-9)
    xs = np.linspace(0, 20, 200)
    assert np.all(np.diff(law.cdf(xs)) >= 0)


def test_ordered_pdf_closed_forms():
    xs = np.linspace(0, 6, 31)
    one = os_.OrderedEnsemble(1, 1, EXP)
    assert np.allclose(os_.ordered_pdf(one, 1, xs), np.exp(-xs))
    two = os_.OrderedEnsemble(2, 2, EXP)
    assert np.allclose(os_.ordered_pdf(two, 1, xs), 2 * (1 - np.exp(-xs)) * np.exp(-xs))
    with pytest.raises(ParameterError):
        os_.ordered_pdf(two, 3, 1.0)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 12), st.floats(0.0, 15.0), st.floats(0.2, 5.0))
def test_ordered_family_sums_to_l_times_base(l, x, mean):
    law = os_.exponential(mean)
    ens = os_.OrderedEnsemble(l, l, law)
    total = math.fsum(float(os_.ordered_pdf(ens, i, x)) for i in range(1, l + 1))
    assert total == pytest.approx(l * float(law.pdf(x)), rel=1e-9, abs=1e-300)


def test_ordered_pdf_matches_sorted_samples():
    ens = os_.OrderedEnsemble(5, 5, EXP)
    sample = _sorted_desc(10 ** 6, 5, seed=101)[:, 2]
    cdf = _grid_cdf(lambda x: os_.ordered_pdf(ens, 3, x), 20.0)
    assert ks_distance(EmpiricalDist.from_sample(sample), cdf) < 0.005


def test_joint_pdf_closed_forms():
    one = os_.OrderedEnsemble(1, 1, EXP)
    assert os_.joint_pdf(one, "all_ordered", [0.7]) == pytest.approx(math.exp(-0.7))
    two = os_.OrderedEnsemble(2, 2, EXP)
    assert os_.joint_pdf(two, "all_ordered", [1.0, 0.5]) == pytest.approx(2 * math.exp(-1.0) * math.exp(-0.5))
    assert os_.joint_pdf(two, "all_ordered", [0.5, 1.0]) == 0.0
    with pytest.raises(ParameterError):
        os_.joint_pdf(two, "pair", [1.0, 0.5], k=2, m=1)


def test_selected_from_n_normalizes():
    ens = os_.OrderedEnsemble(2, 4, EXP)
    mass, _ = integrate.dblquad(lambda y, x: os_.joint_pdf(ens, "selected_from_n", [x, y]), 0, 40,
                                lambda x: 0.0, lambda x: x, epsabs=1e-10)
    assert mass == pytest.approx(1.0, abs=1e-4)


def test_pair_mode_marginalizes_to_ordered_pdf():
    ens = os_.OrderedEnsemble(4, 4, EXP)
    x = 1.3
    marg, _ = integrate.quad(lambda y: os_.joint_pdf(ens, "pair", [x, y], k=1, m=3), 0, x)
    assert marg == pytest.approx(float(os_.ordered_pdf(ens, 1, x)), rel=1e-8)


def test_residual_pdf_memoryless():
    xs = np.linspace(0.4, 8, 40)
    assert np.allclose(os_.residual_pdf(EXP, 0.4, xs), np.exp(-(xs - 0.4)))
    mass, _ = integrate.quad(lambda x: os_.residual_pdf(EXP, 0.4, x), 0.4, np.inf)
    assert mass == pytest.approx(1.0, abs=1e-8)
    with pytest.raises(SingularityError):
        os_.residual_pdf(EXP.truncated(0.0, 1.0), 1.0, 1.5)


@pytest.mark.parametrize("l,m", [(3, 2), (3, 3), (5, 4)])
def test_conditional_pdf_normalizes(l, m):
    ens = os_.OrderedEnsemble(l, l, EXP)
    mass, _ = integrate.quad(lambda x: os_.conditional_pdf(ens, m, 1.7, x), 0, 1.7)
    assert mass == pytest.approx(1.0, abs=1e-6)


def test_conditional_pdf_matches_ratio_of_joints():
    ens = os_.OrderedEnsemble(3, 3, EXP)
    y, x = 2.0, 0.8
    ratio = os_.joint_pdf(ens, "pair", [y, x], k=1, m=2) / float(os_.ordered_pdf(ens, 1, y))
    assert os_.conditional_pdf(ens, 2, y, x) == pytest.approx(ratio, rel=1e-10)


def test_partial_sum_pdf_small_cases():
    one = os_.OrderedEnsemble(1, 1, EXP)
    for x in (0.2, 1.0, 3.0):
        assert os_.partial_sum_pdf(one, x) == pytest.approx(float(os_.ordered_pdf(one, 1, x)), rel=1e-6)
    assert os_.partial_sum_pdf(one, -1.0) == 0.0


@pytest.mark.parametrize("l", [2, 3, 4])
def test_partial_sum_over_all_equals_unordered_sum(l):
    ens = os_.OrderedEnsemble(l, l, EXP)
    for x in (0.3, 1.0, 2.2):
        assert os_.partial_sum_pdf(ens, x) == pytest.approx(stats.gamma.pdf(x, l), rel=1e-5)


def test_subcarrier_truncated_laws():
    assert os_.subcarrier_truncated("zeta_mgf", 1.0, (0.5, 2.0), 0.0) == pytest.approx(1.0)
    assert os_.subcarrier_truncated("tau", 1.5, (0.0, np.inf), 0.8) == pytest.approx(math.exp(-0.8 / 1.5) / 1.5)
    # restrict-and-renormalize
    ref = math.exp(-1.0) / (math.exp(-0.5) - math.exp(-2.0))
    assert os_.subcarrier_truncated("zeta", 1.0, (0.5, 2.0), 1.0) == pytest.approx(ref, rel=1e-12)
    mgf, _ = integrate.quad(lambda x: os_.subcarrier_truncated("zeta", 1.0, (0.5, 2.0), x) * math.exp(0.3 * x),
                            0.5, 2.0)
    assert os_.subcarrier_truncated("zeta_mgf", 1.0, (0.5, 2.0), 0.3) == pytest.approx(mgf, rel=1e-9)
    with pytest.raises(ParameterError):
        os_.subcarrier_truncated("zeta", 1.0, (2.0, 0.5), 1.0)


def test_alpha_sum_mgf():
    assert os_.alpha_sum("total_mgf", 6, 3, 1.0, 0.0) == 1.0
    for w in (-2.0, -0.3, 0.4):
        assert os_.alpha_sum("total_mgf", 5, 5, 1.3, w) == pytest.approx((1 - w * 1.3) ** -5, rel=1e-12)
    with pytest.raises(DomainError):
        os_.alpha_sum("total_mgf", 5, 3, 1.0, 1.0)


def test_alpha_sum_closed_pdf():
    mass, _ = integrate.quad(lambda x: os_.alpha_sum("closed_pdf", 5, 3, 1.0, x), 0, np.inf, limit=200)
    assert mass == pytest.approx(1.0, abs=1e-6)
    sums = _sorted_desc(10 ** 6, 5, seed=102)[:, :3].sum(axis=1)
    cdf = _grid_cdf(lambda x: os_.alpha_sum("closed_pdf", 5, 3, 1.0, x), 40.0, points=8001)
    assert ks_distance(EmpiricalDist.from_sample(sums), cdf) < 0.01


def test_alpha_sum_precision_fallback_is_flagged():
    value, info = os_.alpha_sum("closed_pdf", 40, 3, 1.0, 2.0, full_output=True)
    assert info["flagged"]
    assert value >= 0


@settings(max_examples=50, deadline=None)
@given(st.integers(3, 9), st.data())
def test_subcarrier_joint_factorization(n, data):
    l = data.draw(st.integers(2, n))
    x = data.draw(st.floats(0.0, 3.0))
    u = data.draw(st.floats(0.0, 6.0))
    mean = data.draw(st.floats(0.3, 3.0))
    y = (l - 1) * x + u
    joint = os_.subcarrier_joint("joint_g2_g1", n, l, mean, (x, y))
    prod = os_.subcarrier_joint("marginal_g2", n, l, mean, (x, y)) * os_.subcarrier_joint(
        "cond_gamma1", n, l, mean, (x, y))
    # the expanded form is an alternating sum, so allow for cancellation
    scale = os_.subcarrier_joint("cond_gamma1", n, l, mean, (x, y)) * math.factorial(n) / mean
    assert joint == pytest.approx(prod, rel=1e-9, abs=1e-12 * max(scale, 1e-300))


def test_marginal_g2_normalizes():
    mass, _ = integrate.quad(lambda x: os_.subcarrier_joint("marginal_g2", 6, 3, 1.0, (x, 0.0)), 0, np.inf)
    assert mass == pytest.approx(1.0, abs=1e-6)


def test_subcarrier_joint_outside_support():
    assert os_.subcarrier_joint("joint_g2_g1", 6, 3, 1.0, (1.0, 1.5)) == 0.0
    assert os_.subcarrier_joint("cond_gamma1", 6, 3, 1.0, (-0.1, 1.0)) == 0.0


@settings(max_examples=30, deadline=None)
@given(st.floats(0.0, 50.0), st.floats(0.1, 10.0))
def test_hazard_ratio_constant(x, mean):
    assert float(os_.hazard_ratio(os_.exponential(mean), x)) == pytest.approx(mean, rel=1e-9)


def test_gumbel_limit_of_maximum():
    l = 10 ** 4
    xs = np.linspace(0, 20, 401)
    exact = (1 - np.exp(-xs)) ** l
    assert np.max(np.abs(exact - os_.gumbel_max_cdf(l, xs))) < 0.01


def test_density_csv(tmp_path):
    out = tmp_path / "d.csv"
    os_.write_density_csv(out, [0.0, 1.0], lambda x: float(EXP.pdf(x)))
    assert out.read_text().splitlines()[0] == "x,pdf"


def test_ensemble_bounds():
    with pytest.raises(ParameterError):
        os_.OrderedEnsemble(5, 4, EXP)
