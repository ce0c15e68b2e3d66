"""Sub-channel selection operators and their analytic descriptions.

Three operators choose ``l`` of ``n`` sub-channels against a threshold ``t``
on the coefficient magnitudes:

``lambda0``
    Complete scan: evaluates all ``n`` magnitudes and keeps the best ``l``
    among those ``>= t`` (fewer when not enough qualify).
``lambda``
    Progressive scan: walks the scan order and stops at the ``l``-th
    qualifying magnitude; keeps what it found.
``lambda_prime``
    As ``lambda``; on a shortfall ``k < l`` it fills the remaining ``l - k``
    slots with the largest below-threshold magnitudes and reevaluates the
    threshold.

The single-carrier power is ``|A_j|^2 = (1/l) sum_{selected} mags``; when fewer
than ``l`` channels are chosen the empty slots contribute zero.  One
"iteration" is one magnitude evaluation with its threshold comparison; the
comparisons spent ranking (the best-``l`` pick in ``lambda0``, the top-up in
``lambda_prime``) are counted separately in ``comparisons``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate as si
from scipy import special

from ._quad import integrate
from .channel import Threshold, reevaluate_threshold
from .exceptions import ParameterError
from .mgf import MGFRepr
from .montecarlo import derive_rng
from .orderstats import DistributionDescriptor, alpha_sum

OPERATORS = ("lambda0", "lambda", "lambda_prime")
KAPPA_GAP_TOL = 0.05


@dataclass(frozen=True)
class OperatorKind:
    """Operator name plus the threshold variant it runs with."""

    kind: str
    threshold_variant: str = "fixed"

    def __post_init__(self):
        if self.kind not in OPERATORS:
            raise ParameterError(f"unknown operator {self.kind!r}")
        if self.threshold_variant not in ("fixed", "fallback"):
            raise ParameterError(f"unknown threshold variant {self.threshold_variant!r}")
        if self.kind == "lambda_prime" and self.threshold_variant != "fixed":
            raise ParameterError("lambda_prime requires a fixed threshold")


def _as_kind(kind) -> OperatorKind:
    return kind if isinstance(kind, OperatorKind) else OperatorKind(str(kind))


@dataclass(frozen=True)
class SelectionOutcome:
    """Result of one operator run."""

    selected: tuple
    good_set: tuple
    bad_set: tuple
    A_j: complex
    A_j_sq: float
    iterations: int
    comparisons: int
    threshold_used: Threshold

    @property
    def selected_count(self) -> int:
        return len(self.selected)


def _ranked(indices, mags):
    # descending magnitude, ties by lower index
    return sorted(indices, key=lambda i: (-mags[i], i))


def _selection_cost(pool: int, picks: int) -> int:
    # comparisons for picking the best `picks` of `pool` by repeated maximum search
    return sum(pool - i for i in range(1, picks + 1))


def run_operator(kind, mags, l: int, thr, seed=None, order=None, FT=None) -> SelectionOutcome:
    """Run one selection operator on a magnitude vector.

    Parameters
    ----------
    kind : str or OperatorKind
        ``"lambda0"``, ``"lambda"`` or ``"lambda_prime"``.
    mags : array_like
        Per-channel magnitudes, on the same scale as the threshold.
    l : int
        Number of channels requested.
    thr : Threshold or float
        Threshold (a float is wrapped as a fixed threshold).
    seed : int, optional
        If given (and ``order`` is not), the scan order is a random
        permutation drawn from this seed.  Default is index order.
    order : sequence of int, optional
        Explicit scan order.
    FT : array_like of complex, optional
        Complex coefficients for ``A_j``; ``nan`` if omitted.
    """
    op = _as_kind(kind)
    mags = np.asarray(mags, dtype=float)
    n = mags.size
    if not 1 <= l <= n:
        raise ParameterError("need 1 <= l <= n")
    if not isinstance(thr, Threshold):
        thr = Threshold(t_star_sq=float(thr), lambda_=float(thr))
    t = thr.t_star_sq
    if order is None:
        order = derive_rng(seed).permutation(n) if seed is not None else np.arange(n)
    order = [int(i) for i in order]
    if sorted(order) != list(range(n)):
        raise ParameterError("scan order must be a permutation of range(n)")
    m = mags.tolist()
    used = thr
    comparisons = 0

    if op.kind == "lambda0":
        iterations = n
        good = [i for i in order if m[i] >= t]
        bad = [i for i in order if m[i] < t]
        picks = min(l, len(good))
        selected = _ranked(good, m)[:picks]
        comparisons = _selection_cost(len(good), picks)
    else:
        good, bad = [], []
        iterations = 0
        for i in order:
            iterations += 1
            (good if m[i] >= t else bad).append(i)
            if len(good) == l:
                break
        selected = _ranked(good, m)
        if op.kind == "lambda_prime" and len(good) < l:
            need = l - len(good)
            fill = _ranked(bad, m)[:need]
            comparisons = _selection_cost(len(bad), need)
            lam, varpi = reevaluate_threshold(t, [m[i] for i in fill])
            used = Threshold(t_star_sq=t, lambda_=lam, mu=thr.mu, varpi=varpi, variant="lambda_prime")
            selected = _ranked(selected + fill, m)

    a_sq = math.fsum(m[i] for i in selected) / l
    if FT is not None and selected:
        a = complex(np.sum(np.asarray(FT, dtype=complex)[selected]) / l)
    else:
        a = complex(np.nan, np.nan)
    return SelectionOutcome(selected=tuple(selected), good_set=tuple(good), bad_set=tuple(bad), A_j=a,
                            A_j_sq=a_sq, iterations=iterations, comparisons=comparisons,
                            threshold_used=used)


def run_operator_batch(kind, mags, l: int, t_star, mu: float | None = None) -> dict:
    """Vectorized :func:`run_operator` over the rows of ``mags`` (index scan order).

    Parameters
    ----------
    mags : ndarray, shape (trials, n)
    t_star : float or ndarray
        Threshold per row; ignored when ``mu`` is given.
    mu : float, optional
        Use the fallback threshold ``mu * max(row)``.

    Returns
    -------
    dict
        Arrays ``iterations``, ``a_j_sq`` and ``selected_count``.
    """
    op = _as_kind(kind)
    mags = np.asarray(mags, dtype=float)
    trials, n = mags.shape
    if not 1 <= l <= n:
        raise ParameterError("need 1 <= l <= n")
    if mu is not None:
        t = mu * mags.max(axis=1)
    else:
        t = np.broadcast_to(np.asarray(t_star, dtype=float), (trials,))
    q = mags >= t[:, None]
    k_total = q.sum(axis=1)
    if op.kind == "lambda0":
        top = -np.sort(-np.where(q, mags, 0.0), axis=1)[:, :l]
        return {"iterations": np.full(trials, n), "a_j_sq": top.sum(axis=1) / l,
                "selected_count": np.minimum(k_total, l)}
    csum = np.cumsum(q, axis=1)
    enough = k_total >= l
    stop = np.where(enough, np.argmax(csum >= l, axis=1) + 1, n)
    taken = q & (csum <= l)
    total = np.where(taken, mags, 0.0).sum(axis=1)
    count = np.minimum(k_total, l)
    if op.kind == "lambda_prime":
        bad_sorted = -np.sort(-np.where(q, -np.inf, mags), axis=1)
        need = (l - count)[:, None]
        rank = np.arange(n)[None, :]
        fill = np.where((rank < need) & np.isfinite(bad_sorted), bad_sorted, 0.0).sum(axis=1)
        total = total + fill
        count = np.full(trials, l)
    return {"iterations": stop, "a_j_sq": total / l, "selected_count": count}


# ---------------------------------------------------------------------------
# selection probabilities


def _binom_pmf(n, k, p):
    return math.comb(n, k) * p ** k * (1.0 - p) ** (n - k)


def _tail_probs(base: DistributionDescriptor, thr: float):
    F = float(np.clip(base.cdf(thr), 0.0, 1.0))
    return F, 1.0 - F


def prob_select(kind: str, n: int, l: int, k: int | None, base: DistributionDescriptor, thr: float,
                mu: float | None = None, method: str = "reduced") -> float:
    """Selection probabilities.

    Parameters
    ----------
    kind : {"exact_l_fixed", "at_least_l", "exactly_k_short", "exact_k_fallback"}
        ``exact_l_fixed``: exactly ``l`` of ``n`` qualify,
        ``C(n,l) (1-F)^l F^(n-l)``; ``at_least_l``: at least ``l`` qualify;
        ``exactly_k_short``: exactly ``k < l`` qualify; ``exact_k_fallback``:
        exactly ``k`` magnitudes reach ``mu`` times the maximum.
    thr : float
        Fixed threshold (unused by ``exact_k_fallback``).
    method : {"reduced", "triple"}
        For ``exact_k_fallback``: ``reduced`` integrates the two inner
        coordinates in closed form; ``triple`` integrates the joint density of
        the 1st, ``k``-th and ``(k+1)``-th largest over the three-dimensional
        region numerically.
    """
    if n < 1 or not 1 <= l <= n:
        raise ParameterError("need 1 <= l <= n")
    if kind == "exact_l_fixed":
        F, p = _tail_probs(base, thr)
        return _binom_pmf(n, l, p)
    if kind == "at_least_l":
        F, p = _tail_probs(base, thr)
        return math.fsum(_binom_pmf(n, h, p) for h in range(l, n + 1))
    if kind == "exactly_k_short":
        if k is None or not 0 <= k < l:
            raise ParameterError("exactly_k_short needs 0 <= k < l")
        F, p = _tail_probs(base, thr)
        return _binom_pmf(n, k, p)
    if kind == "exact_k_fallback":
        if mu is None or not 0.0 < mu < 1.0:
            raise ParameterError("mu must lie in (0, 1)")
        if k is None or not 1 <= k <= n:
            raise ParameterError("exact_k_fallback needs 1 <= k <= n")
        if method == "triple" and 2 <= k <= n - 1:
            return _fallback_prob_triple(n, k, base, mu)
        return _fallback_prob_reduced(n, k, base, mu)
    raise ParameterError(f"unknown probability {kind!r}")


def _fallback_prob_reduced(n, k, base, mu):
    coef = math.exp(math.lgamma(n + 1) - math.lgamma(k) - math.lgamma(n - k + 1))
    lo, hi = base.support

    def integrand(x):
        Fx, Fm = float(base.cdf(x)), float(base.cdf(mu * x))
        return coef * float(base.pdf(x)) * (Fx - Fm) ** (k - 1) * Fm ** (n - k)

    return min(1.0, max(0.0, integrate(integrand, lo, hi)))


def _fallback_joint(n, k, base, x, y, z):
    # joint density of the 1st, k-th and (k+1)-th largest of n, x >= y >= z
    coef = math.exp(math.lgamma(n + 1) - math.lgamma(k - 1) - math.lgamma(n - k))
    Fx, Fy, Fz = (float(base.cdf(v)) for v in (x, y, z))
    return (coef * float(base.pdf(x)) * (Fx - Fy) ** (k - 2) * float(base.pdf(y)) * float(base.pdf(z))
            * Fz ** (n - k - 1))


def _fallback_prob_triple(n, k, base, mu):
    lo, hi = base.support
    upper = hi if np.isfinite(hi) else (base.mean or 1.0) * 60.0
    val, _ = si.tplquad(lambda z, y, x: _fallback_joint(n, k, base, x, y, z), lo, upper,
                        lambda x: mu * x, lambda x: x, lambda x, y: lo, lambda x, y: mu * x,
                        epsabs=1e-10, epsrel=1e-8)
    return float(val)


# ---------------------------------------------------------------------------
# iteration counts


def kappa_analytic(kind, n: int, l: int, base: DistributionDescriptor, thr: float) -> float:
    """Average iteration count from the closed-form expressions.

    With ``F = f_c(thr)`` and ``p = 1 - F``:

    * ``lambda0``: ``sum_{i=1}^{l} C(n,i) p^i F^(n-i) (n + sum_{k=1}^{l-i} (n-i-k))``
    * ``lambda``: ``sum_{i=l}^{n} i C(i-1,i-l) p^l F^(i-l)
      + n sum_{i=n-l+1}^{n} C(n,i) p^i F^(n-i)``
    * ``lambda_prime``: ``sum_{i=l}^{n} i C(i-1,i-l) p^l F^(i-l)
      + sum_{k=0}^{l-1} (n + sum_{i=1}^{l-k} (n-k-i)) C(n,k) F^(n-k) p^k``

    These are evaluated as written; :func:`kappa_report` compares them with
    simulation and with :func:`kappa_exact`.
    """
    op = _as_kind(kind)
    if not 1 <= l <= n:
        raise ParameterError("need 1 <= l <= n")
    F, p = _tail_probs(base, thr)
    if op.kind == "lambda0":
        return math.fsum(math.comb(n, i) * p ** i * F ** (n - i) * (n + sum(n - i - k for k in range(1, l - i + 1)))
                         for i in range(1, l + 1))
    first = math.fsum(i * math.comb(i - 1, i - l) * p ** l * F ** (i - l) for i in range(l, n + 1))
    if op.kind == "lambda":
        return first + n * math.fsum(math.comb(n, i) * p ** i * F ** (n - i) for i in range(n - l + 1, n + 1))
    second = math.fsum((n + sum(n - k - i for i in range(1, l - k + 1))) * math.comb(n, k) * F ** (n - k) * p ** k
                       for k in range(l))
    return first + second


def kappa_exact(kind, n: int, l: int, base: DistributionDescriptor, thr: float) -> float:
    """Expected iterations of the scan procedures as implemented here.

    ``lambda0`` always evaluates ``n`` magnitudes.  ``lambda`` and
    ``lambda_prime`` stop at the ``l``-th success of a Bernoulli(``p``)
    sequence (negative binomial) or run to ``n`` when fewer than ``l``
    qualify.
    """
    op = _as_kind(kind)
    if op.kind == "lambda0":
        return float(n)
    F, p = _tail_probs(base, thr)
    stop = math.fsum(i * math.comb(i - 1, l - 1) * p ** l * F ** (i - l) for i in range(l, n + 1))
    short = math.fsum(_binom_pmf(n, k, p) for k in range(l))
    return stop + n * short


@dataclass(frozen=True)
class KappaReport:
    """Analytic, exact and simulated iteration counts for one operator."""

    kind: str
    thr: float
    analytic: float
    exact: float
    empirical: float
    std_error: float
    rel_gap: float
    flagged: bool


def kappa_empirical(kind, n, l, base, thr, trials=100_000, seed=0, mags=None):
    """Mean and standard error of the iteration count over simulated scans."""
    if mags is None:
        mags = base.sample(derive_rng(seed), (trials, n))
    it = run_operator_batch(kind, mags, l, thr)["iterations"].astype(float)
    se = float(it.std(ddof=1) / math.sqrt(it.size)) if it.size > 1 else 0.0
    return math.fsum(it.tolist()) / it.size, se


def kappa_report(kind, n, l, base, thr, trials=100_000, seed=0, mags=None) -> KappaReport:
    """Compare the closed-form count with simulation; flag gaps above 5%."""
    op = _as_kind(kind)
    emp, se = kappa_empirical(op, n, l, base, thr, trials, seed, mags)
    ana = kappa_analytic(op, n, l, base, thr)
    gap = abs(ana - emp) / emp
    return KappaReport(kind=op.kind, thr=float(thr), analytic=ana, exact=kappa_exact(op, n, l, base, thr),
                       empirical=emp, std_error=se, rel_gap=gap, flagged=gap > KAPPA_GAP_TOL)


# ---------------------------------------------------------------------------
# MGFs of |A_j|^2


def censored_channel_mgf(base: DistributionDescriptor, thr: float, x: float, l: int = 1) -> float:
    """Per-channel MGF with censoring: ``F(thr) + int_thr^inf P(y) exp(x y / l) dy``.

    A channel below the threshold contributes nothing to ``|A_j|^2``, which
    puts an atom of mass ``F(thr)`` at zero.
    """
    F = float(np.clip(base.cdf(thr), 0.0, 1.0))
    return F + base.partial_mgf_value(x / l, thr, base.support[1])


def censored_product_mgf(base, thr, x, l) -> float:
    """Product of ``l`` censored per-channel MGFs (all ``l`` channels scanned)."""
    return censored_channel_mgf(base, thr, x, l) ** l


_GL_NODES, _GL_WEIGHTS = special.roots_legendre(32)


def _top_sum_mgf(base: DistributionDescriptor, k: int, j: int, w: float, lo: float, hi: float) -> float:
    """MGF at ``w`` of the sum of the ``j`` largest of ``k`` draws from ``base | [lo, hi]``."""
    j = min(j, k)
    if j == 0:
        return 1.0
    lo, hi = max(lo, base.support[0]), min(hi, base.support[1])
    F_lo, F_hi = float(base.cdf(lo)), float(base.cdf(hi))
    mass = F_hi - F_lo
    if mass <= 0.0:
        return 1.0
    if j == k:
        return (base.partial_mgf_value(w, lo, hi) / mass) ** k
    if base.kind == "exponential" and not np.isfinite(hi):
        # above lo the law is lo + Exp(mean)
        return math.exp(w * j * lo) * alpha_sum("total_mgf", k, j, base.mean, w)
    coef = math.exp(math.lgamma(k + 1) - math.lgamma(k - j + 1) - math.lgamma(j))

    def integrand(z):
        G = (float(base.cdf(z)) - F_lo) / mass
        above = base.partial_mgf_value(w, z, hi) / mass
        return coef * G ** (k - j) * above ** (j - 1) * float(base.pdf(z)) / mass * math.exp(w * z)

    if not np.isfinite(hi):
        return integrate(integrand, lo, hi)
    # the integrand is analytic on [lo, hi] and decays roughly like
    # exp(-rate (z - lo)); composite Gauss-Legendre over the first 50 e-folds
    # replaces adaptive quadrature inside outer integrals
    rate = abs(w) * j + k / (base.mean or 1.0)
    top = min(hi, lo + 50.0 / rate)
    edges = np.linspace(lo, top, max(1, math.ceil((top - lo) * rate / 8.0)) + 1)
    half = 0.5 * np.diff(edges)[:, None]
    z = (half * _GL_NODES + 0.5 * (edges[1:] + edges[:-1])[:, None]).ravel()
    weights = (half * _GL_WEIGHTS).ravel()
    G = (base.cdf(z) - F_lo) / mass
    if base.kind == "exponential":
        r = w - 1.0 / base.mean
        if r == 0.0:
            above = (hi - z) / base.mean / mass
        else:
            above = (np.exp(r * hi) - np.exp(r * z)) / (base.mean * r) / mass
    else:
        above = np.array([base.partial_mgf_value(w, t, hi) for t in z.tolist()]) / mass
    vals = coef * G ** (k - j) * above ** (j - 1) * base.pdf(z) / mass * np.exp(w * z)
    return float(np.dot(weights, vals))


def _mixture_lambda(n, l, base, thr, w, fill: bool):
    F, p = _tail_probs(base, thr)
    hi = base.support[1]
    m_good = base.partial_mgf_value(w, thr, hi) / p if p > 0 else 1.0
    terms = []
    for k in range(l):
        pk = _binom_pmf(n, k, p)
        if pk == 0.0:
            continue
        factor = m_good ** k
        if fill:
            factor *= _top_sum_mgf(base, n - k, l - k, w, base.support[0], thr)
        terms.append(pk * factor)
    p_enough = math.fsum(_binom_pmf(n, h, p) for h in range(l, n + 1))
    terms.append(p_enough * m_good ** l)
    return math.fsum(terms)


def _lambda0_fixed(n, l, base, thr, w):
    F, p = _tail_probs(base, thr)
    hi = base.support[1]
    terms = []
    for k in range(n + 1):
        pk = _binom_pmf(n, k, p)
        if pk == 0.0:
            continue
        terms.append(pk * _top_sum_mgf(base, k, min(k, l), w, thr, hi))
    return math.fsum(terms)


def _lambda0_fallback(n, l, base, mu, w):
    lo, hi = base.support
    coef = n

    def inner(y):
        if l == 1:
            return 1.0
        Fy, Fm = float(base.cdf(y)), float(base.cdf(mu * y))
        if Fy <= 0.0:
            return 1.0
        q = (Fy - Fm) / Fy
        total = []
        for k in range(n):
            pk = _binom_pmf(n - 1, k, q)
            if pk == 0.0:
                continue
            total.append(pk * _top_sum_mgf(base, k, min(k, l - 1), w, mu * y, y))
        return math.fsum(total)

    def integrand(y):
        return coef * float(base.pdf(y)) * float(base.cdf(y)) ** (n - 1) * math.exp(w * y) * inner(y)

    if np.isfinite(hi):
        return integrate(integrand, lo, hi)
    mid = lo + 10.0 * (base.mean or 1.0)
    return integrate(integrand, lo, mid) + integrate(integrand, mid, np.inf)


def operator_mgf(kind, n: int, l: int, base: DistributionDescriptor, thr: float | None, mu: float | None,
                 x: float) -> float:
    """MGF ``E[exp(x |A_j|^2)]`` of the single-carrier power under an operator.

    ``lambda0`` with a fixed threshold mixes over the number ``k`` of
    qualifying channels (binomial) and, given ``k``, takes the best
    ``min(k, l)`` of ``k`` draws from the law above the threshold.  With the
    fallback threshold ``mu * max`` it conditions on the maximum, which fixes
    the qualifying window ``[mu y, y]`` of the remaining draws.  ``lambda``
    is the availability mixture ``sum_h Pr(h) M_good^h`` (empty slots have
    MGF 1); ``lambda_prime`` multiplies each shortfall term by the MGF of
    the best ``l - h`` below-threshold draws.
    """
    op = _as_kind(kind)
    if not 1 <= l <= n:
        raise ParameterError("need 1 <= l <= n")
    w = x / l
    if x == 0.0:
        return 1.0
    if op.kind == "lambda0":
        # a fallback fraction without a fixed threshold selects the fallback variant
        if op.threshold_variant == "fallback" or (thr is None and mu is not None):
            if mu is None or not 0.0 < mu < 1.0:
                raise ParameterError("mu must lie in (0, 1)")
            return _lambda0_fallback(n, l, base, mu, w)
        return _lambda0_fixed(n, l, base, thr, w)
    return _mixture_lambda(n, l, base, thr, w, fill=op.kind == "lambda_prime")


def operator_mgf_repr(kind, n, l, base, thr=None, mu=None) -> MGFRepr:
    """:func:`operator_mgf` as an :class:`MGFRepr` on ``(-inf, 0]``."""
    return MGFRepr(lambda x: operator_mgf(kind, n, l, base, thr, mu, x), (-np.inf, 0.0))


# ---------------------------------------------------------------------------
# distribution of |A_j|^2 under lambda_prime


def _erlang_tail_cdf(l, u):
    # 1 - exp(-u) sum_{t<l} u^t / t!
    if u <= 0:
        return 0.0
    return 1.0 - math.exp(-u) * math.fsum(u ** t / math.factorial(t) for t in range(l))


def lambda_prime_cdf(n: int, l: int, base: DistributionDescriptor, thr: float, x: float,
                     method: str = "reduced") -> float:
    """CDF of ``|A_j|^2`` under ``lambda_prime`` for exponential coefficients.

    ``Pr(at least l qualify) * Erlang part + Pr(|A_j|^2 <= x, fewer qualify)``.
    With at least ``l`` qualifying the ``l`` chosen values are ``thr`` plus
    i.i.d. exponentials, so ``l |A_j|^2 - l thr`` is Erlang(``l``).  With a
    shortfall the chosen set is the overall top ``l`` and the event is
    ``{top-l sum <= l x, l-th largest < thr}``, integrated over the
    ``l``-th largest; ``method="double"`` integrates the joint density of
    (``l``-th largest, sum of the ones above it) over both coordinates instead.
    """
    if base.kind != "exponential":
        raise ParameterError("lambda_prime_cdf needs an exponential coefficient law")
    if not 1 <= l <= n:
        raise ParameterError("need 1 <= l <= n")
    if x <= 0:
        return 0.0
    m = base.mean
    F, p = _tail_probs(base, thr)
    p_enough = math.fsum(_binom_pmf(n, h, p) for h in range(l, n + 1))
    good = p_enough * _erlang_tail_cdf(l, l * (x - thr) / m) if x > thr else 0.0
    upper = min(thr, x)
    if upper <= 0:
        return good
    if l == 1:
        return good + float(base.cdf(upper)) ** n
    if method == "double":
        from .orderstats import subcarrier_joint
        val, _ = si.dblquad(lambda z, y: subcarrier_joint("joint_g2_g1", n, l, m, (y, z)),
                            0.0, upper, lambda y: (l - 1) * y, lambda y: l * x - y,
                            epsabs=1e-11, epsrel=1e-9)
        return good + float(val)
    coef = math.exp(math.lgamma(n + 1) - math.lgamma(n - l + 1) - math.lgamma(l))

    def integrand(y):
        Fy = -math.expm1(-y / m)
        dens = coef * Fy ** (n - l) * math.exp(-l * y / m) / m
        return dens * float(special.gammainc(l - 1, l * (x - y) / m))

    return good + integrate(integrand, 0.0, upper)


def write_batch_csv(path, records) -> None:
    """Write ``trial,operator,iterations,a_j_sq,selected_count`` rows."""
    from ._csv import write_csv
    write_csv(path, ["trial", "operator", "iterations", "a_j_sq", "selected_count"], records)


__all__ = [
    "OPERATORS", "OperatorKind", "SelectionOutcome", "run_operator", "run_operator_batch", "prob_select",
    "kappa_analytic", "kappa_exact", "kappa_empirical", "kappa_report", "KappaReport", "censored_channel_mgf",
    "censored_product_mgf", "operator_mgf", "operator_mgf_repr", "lambda_prime_cdf", "write_batch_csv",
]
