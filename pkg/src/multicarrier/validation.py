"""Cross-checks of the analytic routes against sampling and independent formulas.

Every check compares one evaluator with an independently computed reference
and records the residual next to its tolerance.  Statistical checks use
Dvoretzky-Kiefer-Wolfowitz bands or 3 standard errors, never smaller than the
fixed tolerance they are quoted with.  All sampling goes through
:func:`multicarrier.montecarlo.derive_rng`, so a report is a pure function of
``(seed, trials)``.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np
from scipy import integrate as si
from scipy.stats import qmc

from . import channel, mgf, orderstats as os_, randmat as rm, selection as sel
from .montecarlo import EmpiricalDist, derive_rng, dkw_epsilon, ks_distance

# stream indices, one per sampled quantity, so suites never share draws
_STREAM = {"ordered": 1, "cond": 2, "mgf": 3, "select": 4, "kappa": 5, "perr": 6, "spectrum": 7,
           "model": 8, "channel": 9}


@dataclass(frozen=True)
class Check:
    """Outcome of one cross-check."""

    suite: str
    name: str
    residual: float
    tolerance: float
    passed: bool
    detail: str = ""

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"{flag} {self.suite}/{self.name} residual={self.residual:.3e} tol={self.tolerance:.1e} {self.detail}".rstrip()


def _check(suite, name, residual, tol, detail="") -> Check:
    residual = float(residual)
    return Check(suite, name, residual, float(tol), bool(residual <= tol), detail)


def _band(n_samples: int, floor: float, alpha: float = 1e-3) -> float:
    return max(floor, dkw_epsilon(n_samples, alpha))


# ---------------------------------------------------------------------------
# helpers for sampled distributions


def _grid_cdf(pdf: Callable, lo: float, hi: float, points: int = 4001, vectorized: bool = True):
    """CDF by cumulative trapezoid of ``pdf`` on a uniform grid, as an interpolant."""
    xs = np.linspace(lo, hi, points)
    ys = np.asarray(pdf(xs), dtype=float) if vectorized else np.array([pdf(float(x)) for x in xs])
    cum = si.cumulative_trapezoid(ys, xs, initial=0.0)
    return lambda x: np.interp(x, xs, cum, left=0.0, right=cum[-1])


def _box_probability(density: Callable, corner, points: int, seed: int) -> float:
    """``int_{[0, corner]} density`` by scrambled Sobol points."""
    corner = np.asarray(corner, dtype=float)
    u = qmc.Sobol(d=corner.size, scramble=True, seed=seed).random(points)
    return float(np.mean(density(u * corner)) * np.prod(corner))


def _grid_cdf_distance(sample: np.ndarray, density: Callable, levels=(0.25, 0.5, 0.75),
                       points: int | None = None, seed: int = 0) -> float:
    """Max gap between empirical and integrated joint CDFs on a quantile grid of corners.

    The ordering constraint makes the integrand discontinuous, so the Sobol
    sample grows with the dimension (``2^14`` in 2-D, ``2^17`` above).
    """
    d = sample.shape[1]
    if points is None:
        points = 2 ** 14 if d <= 2 else 2 ** 17
    qs = np.quantile(sample, levels, axis=0)
    worst = 0.0
    for idx in np.ndindex(*(len(levels),) * d):
        corner = qs[list(idx), range(d)]
        emp = float(np.mean(np.all(sample <= corner, axis=1)))
        worst = max(worst, abs(emp - _box_probability(density, corner, points, seed)))
    return worst


def _sorted_exponentials(trials: int, n: int, seed: int, stream: int) -> np.ndarray:
    x = derive_rng(seed, stream).exponential(1.0, (trials, n))
    return -np.sort(-x, axis=1)


def _window(values: np.ndarray, center: float, half: float) -> np.ndarray:
    return (values >= center - half) & (values <= center + half)


def _conditioned_rows(n, trials, seed, stream, column, center, half, chunk=1_000_000):
    """Sorted rows whose ``column``-th largest falls in ``center +- half``."""
    keep, done, block = [], 0, 0
    while done < trials:
        m = min(chunk, trials - done)
        s = _sorted_exponentials(m, n, seed, stream * 1000 + block)
        keep.append(s[_window(s[:, column], center, half)])
        done += m
        block += 1
    return np.concatenate(keep)


# ---------------------------------------------------------------------------
# order statistics


def order_statistics_checks(n: int, l: int, trials: int = 1_000_000, seed: int = 0,
                            tol: float = 0.01) -> list[Check]:
    """Every ordered / joint / conditional / partial-sum density for unit exponentials."""
    suite = f"order-stats(n={n},l={l})"
    base = os_.exponential(1.0)
    out = []
    pop = _sorted_exponentials(trials, n, seed, _STREAM["ordered"] * 100 + n)
    own = _sorted_exponentials(trials, l, seed, _STREAM["ordered"] * 100 + 50 + l)
    band = _band(trials, tol)
    hi = float(pop.max()) * 1.05
    ens_l = os_.OrderedEnsemble(l, l, base)
    ens_n = os_.OrderedEnsemble(l, n, base)

    for i in range(1, l + 1):
        cdf = _grid_cdf(lambda x, i=i: os_.ordered_pdf(ens_l, i, x), 0.0, hi)
        out.append(_check(suite, f"ordered_pdf(i={i})", ks_distance(EmpiricalDist.from_sample(own[:, i - 1]), cdf),
                          band))
    cdf = _grid_cdf(lambda y: os_.lth_largest_pdf(base, n, l, y), 0.0, hi)
    out.append(_check(suite, "lth_largest_pdf", ks_distance(EmpiricalDist.from_sample(pop[:, l - 1]), cdf), band))
    cdf = _grid_cdf(lambda y: np.array([os_.subcarrier_joint("marginal_g2", n, l, 1.0, (v, 0.0)) for v in y]),
                    0.0, hi)
    out.append(_check(suite, "subcarrier_marginal_g2",
                      ks_distance(EmpiricalDist.from_sample(pop[:, l - 1]), cdf), band))

    # joint laws: integrated joint CDF on a grid of corners
    sub = own[:200_000]
    grid_tol = max(tol, 3.0 * math.sqrt(0.25 / sub.shape[0]) + 2e-3)
    if l >= 2:
        pair = lambda p: os_.joint_pdf(ens_l, "pair", p, k=1, m=l)
        out.append(_check(suite, "joint_pdf(pair)", _grid_cdf_distance(sub[:, [0, l - 1]], pair, seed=seed),
                          grid_tol))
    allo = lambda p: os_.joint_pdf(ens_l, "all_ordered", p)
    out.append(_check(suite, "joint_pdf(all_ordered)", _grid_cdf_distance(sub, allo, seed=seed), grid_tol))
    topl = pop[:200_000, :l]
    fromn = lambda p: os_.joint_pdf(ens_n, "selected_from_n", p)
    out.append(_check(suite, "joint_pdf(selected_from_n)", _grid_cdf_distance(topl, fromn, seed=seed), grid_tol))

    # partial sums of the l largest of n
    s = pop[:, :l].sum(axis=1)
    emp = EmpiricalDist.from_sample(s)
    s_hi = float(s.max()) * 1.02
    cdf = _grid_cdf(lambda x: os_.partial_sum_pdf(ens_n, x), 0.0, s_hi, points=801, vectorized=False)
    out.append(_check(suite, "partial_sum_pdf", ks_distance(emp, cdf), band))
    cdf = _grid_cdf(lambda x: os_.alpha_sum("closed_pdf", n, l, 1.0, x), 0.0, s_hi, points=4001, vectorized=False)
    out.append(_check(suite, "alpha_sum(closed_pdf)", ks_distance(emp, cdf), band))

    # (Gamma2, Gamma1) joint
    if l >= 2:
        g = np.column_stack([pop[:200_000, l - 1], pop[:200_000, : l - 1].sum(axis=1)])
        joint = lambda p: np.array([os_.subcarrier_joint("joint_g2_g1", n, l, 1.0, q) for q in p])
        out.append(_check(suite, "subcarrier_joint_g2_g1",
                          _grid_cdf_distance(g, joint, seed=seed), grid_tol))

    # conditional laws from windowed samples
    # symmetric windows cancel the first-order conditioning bias; the rest is
    # about half the window width in CDF units
    cond_trials, half = 16 * trials, 0.005
    y_top = float(np.median(own[:, 0]))
    rows = _conditioned_rows(l, cond_trials, seed, _STREAM["cond"] * 100 + l, 0, y_top, half)
    for m in range(2, l + 1):
        cdf = _grid_cdf(lambda x, m=m: os_.conditional_pdf(ens_l, m, y_top, x), 0.0, y_top)
        d = ks_distance(EmpiricalDist.from_sample(rows[:, m - 1]), cdf)
        out.append(_check(suite, f"conditional_pdf(m={m})", d, _band(rows.shape[0], tol),
                          f"samples={rows.shape[0]}"))
    if l >= 2:
        y_l = float(np.median(pop[:, l - 1]))
        rows = _conditioned_rows(n, cond_trials, seed, _STREAM["cond"] * 100 + 50 + n, l - 1, y_l, half)
        above = rows[:, : l - 1].ravel()
        cdf = _grid_cdf(lambda x: os_.residual_pdf(base, y_l, x), y_l, y_l + 40.0)
        out.append(_check(suite, "residual_pdf", ks_distance(EmpiricalDist.from_sample(above), cdf),
                          _band(above.size, tol), f"samples={above.size}"))
        cdf = _grid_cdf(lambda x: np.array([os_.subcarrier_joint("residual_pdf", n, l, 1.0, (v, y_l)) for v in x]),
                        y_l, y_l + 40.0)
        out.append(_check(suite, "subcarrier_residual_pdf", ks_distance(EmpiricalDist.from_sample(above), cdf),
                          _band(above.size, tol)))
        g1 = rows[:, : l - 1].sum(axis=1)
        lo = (l - 1) * y_l
        cdf = _grid_cdf(lambda x: np.array([os_.subcarrier_joint("cond_gamma1", n, l, 1.0, (y_l, v)) for v in x]),
                        lo, lo + 60.0)
        out.append(_check(suite, "subcarrier_cond_gamma1", ks_distance(EmpiricalDist.from_sample(g1), cdf),
                          _band(g1.size, tol), f"samples={g1.size}"))
    return out


def order_statistics_suite(trials: int = 1_000_000, seed: int = 0,
                           configs=((4, 2), (6, 3), (8, 4))) -> list[Check]:
    out = []
    for n, l in configs:
        out.extend(order_statistics_checks(n, l, trials, seed))
    return out


# ---------------------------------------------------------------------------
# MGFs and error rates


def mgf_suite(trials: int = 100_000, seed: int = 0) -> list[Check]:
    suite = "mgf-error"
    out = []
    spec = mgf.ErrorRateSpec(a=1.0, b=2.0, snr_hat=1.0)
    corpus = {
        "exponential": (os_.exponential(1.0), mgf.exponential_mgf(1.0)),
        "gamma(3,0.5)": (os_.gamma_law(3.0, 0.5), mgf.gamma_mgf(3.0, 0.5)),
    }
    for name, (pdf, m) in corpus.items():
        gap = abs(mgf.avg_error_rate(spec, m) - mgf.avg_error_rate_direct(spec, pdf))
        out.append(_check(suite, f"two_route({name})", gap, 1e-7))
    s = 1.3
    direct = 0.5 * math.erfc(math.sqrt(spec.b * spec.snr_hat * s) / math.sqrt(2.0))
    gap = abs(mgf.avg_error_rate(spec, mgf.point_mass_mgf(s)) - direct)
    out.append(_check(suite, "two_route(point_mass)", gap, 1e-7))

    xs = np.round(np.arange(0.0, 6.0 + 1e-9, 0.1), 10)
    gap = max(abs(mgf.q_craig(float(x)) - 0.5 * math.erfc(x / math.sqrt(2.0))) for x in xs)
    out.append(_check(suite, "q_craig_vs_erfc", gap, 1e-10))
    gap = abs(mgf.q_craig(1.0, squared=True) - mgf.q_craig(1.0) ** 2)
    out.append(_check(suite, "q_craig_squared", gap, 1e-9))
    gap = abs(mgf.mgf_from_pdf(os_.gamma_law(3.0), -0.7) - 1.7 ** -3)
    out.append(_check(suite, "gamma_laplace", gap, 1e-8))

    m = mgf.MGFRepr(lambda w: os_.alpha_sum("total_mgf", 4, 2, 1.0, w), (-np.inf, 0.99))
    x = _sorted_exponentials(trials, 4, seed, _STREAM["mgf"])[:, :2].sum(axis=1)
    se = float(x.std(ddof=1) / math.sqrt(x.size))
    out.append(_check(suite, "top_sum_mean", abs(mgf.mgf_moment(m, 1) - x.mean()), 3 * se))
    return out


def p_err_suite(trials: int = 100_000, seed: int = 0, n: int = 8, l: int = 4, thr_ratio: float = 0.2,
                grid=(0.5, 1.0, 2.0, 4.0, 8.0)) -> list[Check]:
    """Operator error probabilities against flip counting in a Gaussian threshold model.

    A symbol with amplitude ``sqrt(2 snr_hat |A_j|^2)`` is flipped by unit
    Gaussian noise with probability ``Q(sqrt(2 snr_hat |A_j|^2))``, whose
    average is the Craig integral of the ``|A_j|^2`` MGF.
    """
    suite = "p_err"
    base = os_.exponential(1.0)
    thr = thr_ratio * base.mean
    rng = derive_rng(seed, _STREAM["perr"])
    mags = rng.exponential(1.0, (trials, n))
    noise = rng.standard_normal((trials, len(grid)))
    out = []
    curves = {}
    for kind in sel.OPERATORS:
        a_sq = sel.run_operator_batch(kind, mags, l, thr)["a_j_sq"]
        rep = sel.operator_mgf_repr(kind, n, l, base, thr)
        curve = []
        for j, s in enumerate(grid):
            p = mgf.p_err_operator(rep, s)
            flips = np.sqrt(2.0 * s * a_sq) + noise[:, j] < 0
            freq = float(flips.mean())
            se = math.sqrt(max(p * (1 - p), 1e-12) / trials)
            out.append(_check(suite, f"{kind}(snr_hat={s:g})", abs(p - freq), 3 * se, f"analytic={p:.6f}"))
            curve.append(p)
        curves[kind] = np.array(curve)
        out.append(_check(suite, f"{kind}_decreasing", float(max(np.diff(curve).max(), 0.0)), 0.0))
    gap = np.maximum(curves["lambda0"] - curves["lambda_prime"], curves["lambda_prime"] - curves["lambda"])
    out.append(_check(suite, "ordering", float(max(gap.max(), 0.0)), 0.0))
    return out


# ---------------------------------------------------------------------------
# selection


def selection_suite(trials: int = 100_000, seed: int = 0) -> list[Check]:
    suite = "selection"
    base = os_.exponential(1.0)
    rng = derive_rng(seed, _STREAM["select"])
    out = []

    mags = rng.exponential(1.0, (200, 6))
    worst = 0.0
    for kind in sel.OPERATORS:
        b = sel.run_operator_batch(kind, mags, 3, 0.7)
        for r in range(mags.shape[0]):
            o = sel.run_operator(kind, mags[r], 3, 0.7)
            worst = max(worst, abs(o.A_j_sq - b["a_j_sq"][r]), abs(o.iterations - b["iterations"][r]),
                        abs(o.selected_count - b["selected_count"][r]))
    out.append(_check(suite, "batch_vs_single", worst, 1e-12))

    mags = rng.exponential(1.0, (trials, 5))
    mu = 0.5
    counts = (mags >= mu * mags.max(axis=1, keepdims=True)).sum(axis=1)
    for k in range(1, 4):
        p = sel.prob_select("exact_k_fallback", 5, 2, k, base, 0.0, mu=mu)
        freq = float(np.mean(counts == k))
        se = math.sqrt(max(p * (1 - p), 1e-12) / trials)
        out.append(_check(suite, f"fallback_prob(k={k})", abs(p - freq), 3 * se))
    gap = abs(sel.prob_select("exact_k_fallback", 4, 2, 2, base, 0.0, mu=mu)
              - sel.prob_select("exact_k_fallback", 4, 2, 2, base, 0.0, mu=mu, method="triple"))
    out.append(_check(suite, "fallback_prob_reduced_vs_triple", gap, 1e-7))

    mags = rng.exponential(1.0, (trials, 6))
    for kind in sel.OPERATORS:
        a_sq = sel.run_operator_batch(kind, mags, 3, 0.5)["a_j_sq"]
        v = np.exp(-a_sq)
        se = float(v.std(ddof=1) / math.sqrt(trials))
        gap = abs(sel.operator_mgf(kind, 6, 3, base, 0.5, None, -1.0) - v.mean())
        out.append(_check(suite, f"operator_mgf({kind})", gap, 3 * se))

    mags = rng.exponential(1.0, (trials, 5))
    a_sq = sel.run_operator_batch("lambda_prime", mags, 2, 0.6)["a_j_sq"]
    emp = EmpiricalDist.from_sample(a_sq)
    xs = np.quantile(a_sq, np.linspace(0.01, 0.99, 41))
    gap = max(abs(sel.lambda_prime_cdf(5, 2, base, 0.6, float(x)) - float(np.mean(a_sq <= x))) for x in xs)
    out.append(_check(suite, "lambda_prime_cdf", gap, _band(emp.n, 0.01)))
    gap = max(abs(sel.lambda_prime_cdf(5, 2, base, 0.6, x) - sel.lambda_prime_cdf(5, 2, base, 0.6, x, "double"))
              for x in (0.3, 0.8, 1.5))
    out.append(_check(suite, "lambda_prime_cdf_reduced_vs_double", gap, 1e-7))

    mags = derive_rng(seed, _STREAM["kappa"]).exponential(1.0, (trials, 16))
    for kind in sel.OPERATORS:
        mean, se = sel.kappa_empirical(kind, 16, 4, base, 1.0, mags=mags)
        gap = abs(mean - sel.kappa_exact(kind, 16, 4, base, 1.0))
        out.append(_check(suite, f"kappa_exact({kind})", gap, max(3 * se, 1e-12)))
    return out


# ---------------------------------------------------------------------------
# random matrices


def random_matrix_suite(seed: int = 0, l: int = 256) -> list[Check]:
    suite = "random-matrix"
    out = []
    for chi in (0.2, 0.5, 1.0, 2.0):
        law = rm.MarchenkoPastur(chi)
        out.append(_check(suite, f"mp_mass(chi={chi:g})", abs(law.expect(lambda x: 1.0) - 1.0), 1e-6))

    big = rm.sample_model(512, 256, "hadamard", seed)
    spec = rm.spectrum(big.matrix())
    d = ks_distance(rm.empirical_dist(spec), rm.MarchenkoPastur(0.5).cdf)
    out.append(_check(suite, "mp_ks(l=512,chi=0.5)", d, 0.05))
    ref = rm.nu_transform(rm.MarchenkoPastur(0.5), 10.0)
    out.append(_check(suite, "nu_vs_mp(gamma=10)", abs(rm.nu_transform(spec, 10.0) - ref) / ref, 0.02))

    model = rm.sample_model(l, l // 2, "hadamard", seed + 1)
    for g in (1.0, 5.0, 20.0):
        lhs, rhs = rm.trace_identity(model, g)
        out.append(_check(suite, f"trace_identity(gamma={g:g})", abs(lhs - rhs) / rhs, 0.02))

    left = rm.spectrum(model.matrix(), "left")
    sol = rm.profile_eta_nu(rm.ProfileFunction.constant(1.0, l, l // 2), 0.5, 5.0)
    out.append(_check(suite, "constant_profile_eta", abs(sol.eta - rm.eta_transform(left, 5.0)) / sol.eta, 0.02))

    rng = derive_rng(seed, _STREAM["model"])
    coeffs = rng.exponential(1.0, (l, l // 2))
    had = rm.sample_model(l, l // 2, "hadamard", seed + 2, coeffs=np.sqrt(coeffs))
    sol = rm.profile_eta_nu(rm.channel_profile(had), had.chi, 5.0)
    direct = rm.eta_transform(rm.spectrum(had.matrix(), "left"), 5.0)
    out.append(_check(suite, "hadamard_profile_eta", abs(sol.eta - direct) / direct, 0.03))

    prod = rm.sample_model(l, l // 2, "product", seed + 3, coeffs=rng.uniform(0.5, 1.5, l),
                           phi=rng.uniform(0.5, 1.5, l // 2))
    dec = rm.decomposed_eta_nu(prod, 5.0)
    direct = rm.eta_transform(rm.spectrum(prod.matrix(), "left"), 5.0)
    out.append(_check(suite, "decomposed_eta", abs(dec.eta - direct) / direct, 0.02))

    prof = rm.ProfileFunction.constant(1.0, 64, 32)
    _, tau = rm.high_snr_tau(prof, 0.5)
    fit = rm.tau_asymptote_fit(prof, 0.5)
    out.append(_check(suite, "high_snr_tau_vs_fit", abs(tau - fit), 1e-3))

    for chi in (0.25, 0.5, 0.75):
        eta = rm.identical_efficiency(1.0, 1.0, chi, 1e4)
        out.append(_check(suite, f"efficiency_high_snr(chi={chi:g})", abs(eta - (1.0 - chi)), 0.02))
    eta = rm.identical_efficiency(1.0, 1.0, 0.25, 2.0)
    sim = rm.mmse_efficiency_sim(l, l // 4, 2.0, trials=4, seed=seed)
    out.append(_check(suite, "efficiency_vs_mmse_sim", abs(eta - sim) / sim, 0.03))

    small = rm.sample_model(64, 32, "hadamard", seed + 4, coeffs=rm.allocation_mask(64, 32, 0.5))
    short = rm.p_sym_s_sym(small, 10.0, check=False).p_sym
    long = rm.p_sym_long_form(small, 10.0)
    out.append(_check(suite, "p_sym_short_vs_long", abs(short - long) / long, 0.01))

    ident = rm.sample_model(l, l, "identical", seed + 5)
    g = 10.0
    # P_sym is per user: K P_sym is the Shannon transform of F F^H
    nu = rm.p_sym_s_sym(ident, g, check=False).p_sym * ident.K
    ev = rm.spectrum(ident.matrix(), "left").eigenvalues
    shannon = math.fsum(np.log2(1.0 + g * ev).tolist()) / ident.l
    out.append(_check(suite, "eta_integral_vs_eigen_sum", abs(nu - shannon) / shannon, 0.01))

    f = prod.matrix()
    x, z, phi = prod.X_factor, prod.Z_factor, prod.Phi_factor
    brute = np.zeros_like(f)
    for i in range(8):
        for k in range(8):
            brute[i, k] = sum(x[i, a] * z[a, b] * phi[b, k] for a in range(prod.l) for b in range(prod.K))
    out.append(_check(suite, "composition_vs_loops", float(np.max(np.abs(brute[:8, :8] - f[:8, :8]))), 1e-12))
    return out


# ---------------------------------------------------------------------------
# channel model


def channel_suite(seed: int = 0) -> list[Check]:
    suite = "channel-model"
    rng = derive_rng(seed, _STREAM["channel"])
    out = []
    tv = channel.sample_transmittance_vector(1024, 1.0, seed=seed)
    t_sq = np.abs(tv.T) ** 2
    se = float(t_sq.std(ddof=1) / math.sqrt(t_sq.size))
    out.append(_check(suite, "mean_gain_power", abs(t_sq.mean() - 1.0), 5 * se))

    t = rng.normal(size=8) + 1j * rng.normal(size=8)
    k = np.arange(8)
    direct = np.array([np.sum(t * np.exp(-2j * np.pi * i * k / 8)) for i in range(8)])
    out.append(_check(suite, "dft_vs_direct_sum", float(np.max(np.abs(channel.dft_transmittance(t) - direct))),
                      1e-12))
    lam = channel.lagrange_multiplier(np.full(6, 0.4))
    out.append(_check(suite, "lagrange_constant_vector", abs(lam - 6 * 0.16), 1e-12))
    return out


# ---------------------------------------------------------------------------


def run_all(seed: int = 42, trials: int = 100_000, order_trials: int | None = None) -> list[Check]:
    """Every suite; ``order_trials`` defaults to ``trials``."""
    checks = []
    checks += channel_suite(seed)
    checks += order_statistics_suite(order_trials or trials, seed)
    checks += mgf_suite(trials, seed)
    checks += selection_suite(trials, seed)
    checks += p_err_suite(trials, seed)
    checks += random_matrix_suite(seed)
    return checks


def report(checks: list[Check]) -> str:
    lines = [c.line() for c in checks]
    failed = sum(not c.passed for c in checks)
    lines.append(f"{len(checks) - failed}/{len(checks)} checks passed")
    return "\n".join(lines) + "\n"


def as_records(checks: list[Check]) -> list[dict]:
    return [asdict(c) for c in checks]


def timed(fn: Callable, *args, **kwargs):
    t0 = time.perf_counter()
    res = fn(*args, **kwargs)
    return res, time.perf_counter() - t0
