import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from multicarrier import randmat as rm
from multicarrier.exceptions import ConvergenceError, ParameterError, UnsupportedModeError
from multicarrier.montecarlo import derive_rng


def test_transforms_at_zero_and_point_masses():
    s = rm.SpectralSummary(np.array([1.0]))
    assert rm.eta_transform(s, 0.0) == 1.0
    assert rm.nu_transform(s, 0.0) == 0.0
    assert rm.nu_transform(s, 3.0) == pytest.approx(2.0)
    c = rm.SpectralSummary(np.array([2.5, 2.5]))
    assert rm.eta_transform(c, 0.8) == pytest.approx(1 / (1 + 0.8 * 2.5))


def test_spectrum_clamps_and_orients():
    f = derive_rng(1).normal(size=(6, 3))
    assert rm.spectrum(f).eigenvalues.size == 3
    assert rm.spectrum(f, "left").eigenvalues.size == 6
    assert np.all(rm.spectrum(f, "left").eigenvalues >= 0)
    with pytest.raises(ParameterError):
        rm.SpectralSummary(np.array([-1.0]))


spectra = st.lists(st.floats(0.0, 50.0, allow_nan=False), min_size=1, max_size=40)


@settings(max_examples=60, deadline=None)
@given(spectra)
def test_transform_shape_properties(ev):
    s = rm.SpectralSummary(np.array(ev))
    gammas = np.linspace(0.0, 20.0, 41)
    eta = np.array([rm.eta_transform(s, g) for g in gammas])
    nu = np.array([rm.nu_transform(s, g) for g in gammas])
    assert np.all((eta > 0) & (eta <= 1))
    assert np.all(np.diff(eta) <= 1e-12)
    assert np.all(nu >= 0) and np.all(np.diff(nu) >= -1e-12)
    assert np.all(np.diff(nu, 2) <= 1e-10)


def test_mp_support_and_mass():
    assert rm.mp_support(1.0) == pytest.approx((0.0, 4.0))
    assert rm.mp_support(0.25) == pytest.approx((0.25, 2.25))
    for chi in (0.2, 0.5, 1.0, 2.0):
        assert rm.MarchenkoPastur(chi).expect(lambda x: 1.0) == pytest.approx(1.0, abs=1e-6)
    assert rm.mp_density(0.5, 5.0) == 0.0
    assert rm.MarchenkoPastur(2.0).atom == pytest.approx(0.5)
    with pytest.raises(ParameterError):
        rm.mp_support(0.0)


def test_mp_density_matches_expectation():
    chi = 0.5
    u, v = rm.mp_support(chi)
    direct, _ = integrate.quad(lambda x: rm.mp_density(chi, x) / (1 + x), u, v)
    assert rm.eta_transform(rm.MarchenkoPastur(chi), 1.0) == pytest.approx(direct, abs=1e-8)


def test_eta_of_large_sample_matches_mp():
    model = rm.sample_model(1024, 512, "hadamard", seed=3)
    spec = rm.spectrum(model.matrix())
    assert abs(rm.eta_transform(spec, 1.0) - rm.eta_transform(rm.MarchenkoPastur(0.5), 1.0)) < 1e-3


def test_nu_of_sample_matches_mp():
    spec = rm.spectrum(rm.sample_model(512, 256, "hadamard", seed=4).matrix())
    ref = rm.nu_transform(rm.MarchenkoPastur(0.5), 10.0)
    assert abs(rm.nu_transform(spec, 10.0) - ref) / ref < 0.02


def test_trace_identity():
    model = rm.sample_model(256, 128, "hadamard", seed=5)
    lhs, rhs = rm.trace_identity(model, 5.0)
    assert abs(lhs - rhs) / rhs < 0.02
    lhs, rhs_eta = rm.trace_identity(model, 5.0, form="eta")
    assert rhs_eta == pytest.approx(rhs, rel=1e-6)


def test_fixed_point_config_validation():
    with pytest.raises(ParameterError):
        rm.FixedPointConfig(tol=0.0)
    with pytest.raises(ParameterError):
        rm.FixedPointConfig(damping=1.5)
    with pytest.raises(ConvergenceError):
        rm.solve_fixed_point(lambda x: x + 1.0, [0.0], rm.FixedPointConfig(max_iter=5))
    x, res, _ = rm.solve_fixed_point(lambda x: np.cos(x), [0.5])
    assert res < 1e-9 and abs(math.cos(x[0]) - x[0]) < 1e-8


def test_decomposed_identity_factors():
    model = rm.sample_model(64, 64, "product", seed=6)
    for gamma in (0.5, 4.0):
        sol = rm.decomposed_eta_nu(model, gamma)
        assert abs(sol.gamma_d * sol.gamma_t / gamma - (1 - 1 / (1 + sol.gamma_t))) < 1e-8
    zero = rm.decomposed_eta_nu(model, 0.0)
    assert zero.eta == 1.0 and zero.nu == 0.0


def test_decomposed_matches_direct_eigen():
    rng = derive_rng(7)
    model = rm.sample_model(256, 128, "product", seed=7, coeffs=rng.uniform(0.5, 1.5, 256),
                            phi=rng.uniform(0.5, 1.5, 128))
    sol = rm.decomposed_eta_nu(model, 5.0)
    direct = rm.eta_transform(rm.spectrum(model.matrix(), "left"), 5.0)
    assert abs(sol.eta - direct) / direct < 0.02


def test_profile_zero_gamma_and_constant():
    prof = rm.ProfileFunction.constant(1.0, 32, 16)
    sol = rm.profile_eta_nu(prof, 0.5, 0.0)
    assert sol.eta == 1.0 and sol.nu == 0.0
    assert np.all(sol.W_grid == 1) and np.all(sol.Upsilon_grid == 1)
    model = rm.sample_model(256, 128, "hadamard", seed=8)
    sol = rm.profile_eta_nu(rm.ProfileFunction.constant(1.0, 256, 128), 0.5, 5.0)
    # the profile transform is of the larger Gram matrix, which carries an extra
    # zero-eigenvalue mass of 1 - chi
    mp_eta = 0.5 + 0.5 * rm.eta_transform(rm.MarchenkoPastur(0.5), 5.0)
    assert abs(sol.eta - mp_eta) / sol.eta < 0.02
    direct = rm.eta_transform(rm.spectrum(model.matrix(), "left"), 5.0)
    assert abs(sol.eta - direct) / direct < 0.02


def test_block_profile_against_masked_matrix():
    l, K = 256, 128
    mask = np.ones((l, K))
    mask[:, K // 2:] = 0.0
    model = rm.sample_model(l, K, "hadamard", seed=9, coeffs=mask)
    sol = rm.profile_eta_nu(rm.channel_profile(model), model.chi, 5.0)
    direct = rm.nu_transform(rm.spectrum(model.matrix(), "left"), 5.0)
    assert abs(sol.nu - direct) / direct < 0.03
    # the surviving half behaves as a constant profile with half the columns
    half = rm.profile_eta_nu(rm.ProfileFunction.constant(1.0, l, K // 2), 0.25, 5.0)
    assert sol.nu == pytest.approx(half.nu, rel=1e-6)


def test_channel_profile_cases():
    ones = rm.sample_model(8, 4, "hadamard", seed=1)
    assert np.all(rm.channel_profile(ones).grid == 1.0)
    coeffs = np.ones((8, 4))
    coeffs[:, 2] = 0.0
    prof = rm.channel_profile(rm.sample_model(8, 4, "hadamard", seed=1, coeffs=coeffs))
    assert np.all(prof.grid[:, 2] == 0)
    with pytest.raises(UnsupportedModeError):
        rm.channel_profile(rm.sample_model(8, 4, "identical", seed=1))


def test_channel_profile_equals_squared_mask():
    mask = derive_rng(2).uniform(0.0, 2.0, (16, 8))
    prof = rm.channel_profile(rm.sample_model(16, 8, "hadamard", seed=2, coeffs=mask))
    assert np.array_equal(prof.grid, np.abs(mask) ** 2)


def test_high_snr_tau():
    v = 1.7
    cp, tau = rm.high_snr_tau(rm.ProfileFunction.constant(v, 32, 32), 1.0)
    assert cp == pytest.approx(1.0)
    assert tau == pytest.approx(-math.log2(v / math.e), abs=1e-9)
    prof = rm.ProfileFunction.constant(1.0, 64, 32)
    assert rm.effective_ratio(prof, 0.5) == pytest.approx(0.5)
    _, tau = rm.high_snr_tau(prof, 0.5)
    assert abs(tau - rm.tau_asymptote_fit(prof, 0.5)) < 1e-3


def test_build_output():
    model = rm.sample_model(6, 4, "hadamard", seed=3)
    y = rm.build_output(model, np.eye(4), np.zeros((6, 4)))
    assert np.array_equal(y, model.matrix())
    assert np.allclose(model.matrix(), model.Z_factor @ model.Phi_factor)
    with pytest.raises(ParameterError):
        rm.build_output(model, np.eye(3), np.zeros((6, 3)))


def test_composition_against_loops():
    rng = derive_rng(10)
    model = rm.sample_model(6, 5, "product", seed=10, coeffs=rng.normal(size=(6, 6)),
                            phi=rng.normal(size=(5, 5)))
    x, z, phi = model.X_factor, model.Z_factor, model.Phi_factor
    brute = np.zeros((6, 5), dtype=complex)
    for i in range(6):
        for k in range(5):
            brute[i, k] = sum(x[i, a] * z[a, b] * phi[b, k] for a in range(6) for b in range(5))
    assert np.max(np.abs(brute - model.matrix())) < 1e-12


def test_model_checks():
    model = rm.sample_model(256, 128, "identical", seed=11, spreading="haar")
    chk = model.check()
    assert chk["unitarity"] < 1e-10
    assert chk["z_var_times_l"] == pytest.approx(1.0, abs=0.05)
    assert chk["lindeberg"] < 1e-3


def test_efficiency_limits():
    model = rm.sample_model(32, 16, "hadamard", seed=12)
    eff = rm.multiuser_efficiency(model, 0.0)
    assert np.allclose(eff.eta_uk, 1.0) and np.allclose(eff.psi_grid, 1.0)
    assert rm.identical_efficiency(1.0, 1.0, 0.5, 1e4) == pytest.approx(0.5, abs=0.02)


def test_efficiency_rescaling():
    a = 2.3
    scaled = rm.identical_efficiency(np.full(4, a), 1.0, 0.4, 3.0)
    unit = rm.identical_efficiency(1.0, 1.0, 0.4, 3.0 * a)
    assert scaled == pytest.approx(unit, abs=1e-9)


def test_efficiency_against_mmse_simulation():
    eta = rm.identical_efficiency(1.0, 1.0, 0.25, 2.0)
    sim = rm.mmse_efficiency_sim(256, 64, 2.0, trials=4, seed=13)
    assert abs(eta - sim) / sim < 0.03


def test_capacity_zero_and_monotone():
    model = rm.sample_model(32, 16, "hadamard", seed=14, coeffs=rm.allocation_mask(32, 16, 0.5))
    zero = rm.p_sym_s_sym(model, 0.0)
    assert zero.p_sym == 0.0 and zero.s_sym_bound == 0.0
    vals = [rm.p_sym_s_sym(model, s, check=False).p_sym for s in (1.0, 5.0, 20.0)]
    assert vals == sorted(vals)
    by_r = [rm.p_sym_s_sym(rm.sample_model(32, 16, "hadamard", seed=14, coeffs=rm.allocation_mask(32, 16, r)),
                           5.0, check=False).p_sym for r in (0.25, 0.5, 1.0)]
    assert by_r == sorted(by_r)


def test_allocation_mask():
    m = rm.allocation_mask(8, 4, 0.5)
    assert np.all(m.sum(axis=0) == 4)
    assert np.all(rm.allocation_mask(8, 4, 0.0) == 0)
    with pytest.raises(ParameterError):
        rm.allocation_mask(8, 4, 1.5)


def test_csv_writers(tmp_path):
    spec = rm.SpectralSummary(np.array([0.5, 1.5]))
    rm.write_spectrum_csv(tmp_path / "s.csv", spec)
    rm.write_transform_csv(tmp_path / "t.csv", spec, [0.0, 1.0])
    rm.write_mp_csv(tmp_path / "m.csv", 0.5, [0.1, 1.0])
    assert (tmp_path / "s.csv").read_text().splitlines()[0] == "lambda"
    assert (tmp_path / "t.csv").read_text().splitlines()[:2] == ["gamma,eta,nu", "0.0,1.0,0.0"]
    assert (tmp_path / "m.csv").read_text().splitlines()[0] == "x,f_chi"
