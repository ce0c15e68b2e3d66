"""Order statistics of i.i.d. sub-channel coefficients.

Index convention: order index ``i`` is 1-based with ``i = 1`` the maximum
(a 0-based scheme would label the maximum 0 and this index ``i - 1``).

Throughout, ``l`` variables are ordered out of a population of ``n``; the
partial sum of the ``l`` largest is split into ``Gamma1`` (sum of the top
``l - 1``) and ``Gamma2`` (the ``l``-th largest).  Given ``Gamma2 = y`` the top
``l - 1`` values are i.i.d. with the base law truncated to ``[y, inf)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import mpmath
import numpy as np
from scipy import stats
from scipy.optimize import brentq

from ._quad import integrate
from .exceptions import DomainError, ParameterError, SingularityError

# relative rounding budget for the alternating series of the closed-form density
SERIES_PRECISION_BOUND = 1e-8


@dataclass(frozen=True)
class DistributionDescriptor:
    """PDF/CDF pair of a nonnegative coefficient law.

    Parameters
    ----------
    pdf, cdf : callable
        Array-aware evaluators.
    support : tuple of float
        ``(lo, hi)``; ``hi`` may be ``inf``.
    mean : float, optional
        Mean of the law (the common mean for the exponential family).
    kind : str
        ``"exponential"`` enables closed forms elsewhere; anything else is
        treated generically by quadrature.
    sampler : callable, optional
        ``sampler(rng, size) -> ndarray``.
    partial_mgf : callable, optional
        ``partial_mgf(w, a, b) = int_a^b pdf(t) exp(w t) dt`` in closed form.
    survival : callable, optional
        Exact ``1 - cdf``; avoids cancellation in the upper tail.
    """

    pdf: Callable
    cdf: Callable
    support: tuple = (0.0, np.inf)
    mean: float | None = None
    kind: str = "generic"
    sampler: Callable | None = field(default=None, compare=False)
    partial_mgf: Callable | None = field(default=None, compare=False)
    survival: Callable | None = field(default=None, compare=False)

    def sf(self, x):
        if self.survival is not None:
            return self.survival(x)
        return 1.0 - self.cdf(x)

    def sample(self, rng, size):
        if self.sampler is None:
            raise ParameterError("descriptor has no sampler")
        return self.sampler(rng, size)

    def partial_mgf_value(self, w, a, b) -> float:
        """``int_a^b pdf(t) exp(w t) dt`` (closed form when available)."""
        lo, hi = max(a, self.support[0]), min(b, self.support[1])
        if hi <= lo:
            return 0.0
        if self.partial_mgf is not None:
            return float(self.partial_mgf(w, lo, hi))
        return integrate(lambda t: float(self.pdf(t)) * math.exp(w * t), lo, hi)

    def truncated(self, lo, hi) -> "DistributionDescriptor":
        """The law conditioned on ``lo <= X <= hi``."""
        lo, hi = max(lo, self.support[0]), min(hi, self.support[1])
        mass = float(self.cdf(hi) - self.cdf(lo))
        if not mass > 0:
            raise SingularityError("truncation interval has zero probability")
        f_lo = float(self.cdf(lo))
        base = self

        def pdf(x):
            x = np.asarray(x, dtype=float)
            return np.where((x >= lo) & (x <= hi), base.pdf(x), 0.0) / mass

        def cdf(x):
            x = np.asarray(x, dtype=float)
            return np.clip((base.cdf(np.clip(x, lo, hi)) - f_lo) / mass, 0.0, 1.0)

        pm = None
        if self.partial_mgf is not None:
            def pm(w, a, b):
                a, b = max(a, lo), min(b, hi)
                return 0.0 if b <= a else base.partial_mgf(w, a, b) / mass
        return DistributionDescriptor(pdf=pdf, cdf=cdf, support=(lo, hi), kind="truncated",
                                      partial_mgf=pm)


def exponential(mean: float = 1.0) -> DistributionDescriptor:
    """Exponential law with the given mean."""
    if not mean > 0:
        raise ParameterError("mean must be positive")

    def pdf(x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0, np.exp(-np.maximum(x, 0) / mean) / mean, 0.0)

    def cdf(x):
        x = np.asarray(x, dtype=float)
        return np.where(x >= 0, -np.expm1(-np.maximum(x, 0) / mean), 0.0)

    def sf(x):
        x = np.asarray(x, dtype=float)
        return np.exp(-np.maximum(x, 0) / mean)

    def partial_mgf(w, a, b):
        rate = w - 1.0 / mean
        if rate == 0.0:
            return (b - a) / mean
        if not np.isfinite(b):
            if rate >= 0:
                raise DomainError("exponential MGF diverges for w >= 1/mean")
            return math.exp(rate * a) / (mean * -rate)
        return (math.exp(rate * b) - math.exp(rate * a)) / (mean * rate)

    return DistributionDescriptor(pdf=pdf, cdf=cdf, support=(0.0, np.inf), mean=float(mean),
                                  kind="exponential",
                                  sampler=lambda rng, size: rng.exponential(mean, size),
                                  partial_mgf=partial_mgf, survival=sf)


def from_scipy(frozen, kind: str = "generic") -> DistributionDescriptor:
    """Wrap a frozen :mod:`scipy.stats` continuous distribution."""
    lo, hi = frozen.support()
    return DistributionDescriptor(pdf=frozen.pdf, cdf=frozen.cdf, support=(float(lo), float(hi)),
                                  mean=float(frozen.mean()), kind=kind, survival=frozen.sf,
                                  sampler=lambda rng, size: frozen.rvs(size=size, random_state=rng))


def gamma_law(shape: float, scale: float = 1.0) -> DistributionDescriptor:
    """Gamma law (used by the MGF test corpus)."""
    return from_scipy(stats.gamma(shape, scale=scale), kind="gamma")


@dataclass(frozen=True)
class OrderedEnsemble:
    """``l`` ordered values out of an i.i.d. population of ``n``."""

    l: int
    n: int
    base: DistributionDescriptor

    def __post_init__(self):
        if not 1 <= self.l <= self.n:
            raise ParameterError("need 1 <= l <= n")


def _log_multinomial(total, *parts):
    return math.lgamma(total + 1) - sum(math.lgamma(p + 1) for p in parts)


def ordered_pdf(ens: OrderedEnsemble, i: int, x):
    """Density of the ``i``-th largest of ``l`` i.i.d. variables.

    ``l!/((l-i)!(i-1)!) F(x)^(l-i) (1-F(x))^(i-1) P(x)``; ``i = 1`` gives the
    maximum and ``i = l`` the minimum.
    """
    l = ens.l
    if not 1 <= i <= l:
        raise ParameterError("order index must satisfy 1 <= i <= l")
    x = np.asarray(x, dtype=float)
    F = ens.base.cdf(x)
    coef = math.exp(_log_multinomial(l, l - i, i - 1))
    out = coef * F ** (l - i) * (1.0 - F) ** (i - 1) * ens.base.pdf(x)
    return float(out) if out.ndim == 0 else out


def _descending(p):
    return np.all(p[..., :-1] >= p[..., 1:], axis=-1) if p.shape[-1] > 1 else np.ones(p.shape[:-1], bool)


def joint_pdf(ens: OrderedEnsemble, mode: str, point, k: int | None = None, m: int | None = None):
    """Joint densities of ordered coefficients.

    Parameters
    ----------
    mode : {"pair", "all_ordered", "selected_from_n"}
        ``pair`` is the joint density of the ``k``-th and ``m``-th largest of
        ``l`` at ``point = (x, y)`` with ``x >= y``; ``all_ordered`` is
        ``l! prod P(x_i)``; ``selected_from_n`` is the density of the ``l``
        largest out of ``n``, ``n!/(n-l)! F(x_{l-1})^(n-l) prod P(x_i)``.
    point : array_like
        Trailing axis holds the coordinates, in descending order.

    Returns
    -------
    float or ndarray
        Zero outside the ordering region.
    """
    p = np.asarray(point, dtype=float)
    base, l, n = ens.base, ens.l, ens.n
    if mode == "pair":
        if k is None or m is None or not 1 <= k < m <= l:
            raise ParameterError("pair mode needs 1 <= k < m <= l")
        x, y = p[..., 0], p[..., 1]
        Fx, Fy = base.cdf(x), base.cdf(y)
        coef = math.exp(_log_multinomial(l, k - 1, m - k - 1, l - m))
        val = (coef * (1.0 - Fx) ** (k - 1) * base.pdf(x) * np.clip(Fx - Fy, 0, None) ** (m - k - 1)
               * base.pdf(y) * Fy ** (l - m))
        out = np.where(x >= y, val, 0.0)
    elif mode in ("all_ordered", "selected_from_n"):
        if p.shape[-1] != l:
            raise ParameterError(f"point must have {l} coordinates")
        dens = np.prod(base.pdf(p), axis=-1)
        if mode == "all_ordered":
            val = math.factorial(l) * dens
        else:
            val = math.exp(math.lgamma(n + 1) - math.lgamma(n - l + 1)) * base.cdf(p[..., -1]) ** (n - l) * dens
        out = np.where(_descending(p), val, 0.0)
    else:
        raise ParameterError(f"unknown mode {mode!r}")
    return float(out) if np.ndim(out) == 0 else out


def conditional_pdf(ens: OrderedEnsemble, m: int, y: float, x, given: int = 1):
    """Density of the ``m``-th largest given the ``given``-th largest equals ``y``.

    Below ``y`` the remaining ``l - given`` values are i.i.d. with density
    ``P/F(y)`` on ``[lo, y]``, so the ``m``-th largest overall is the
    ``(m - given)``-th largest of those.
    """
    l = ens.l
    if not 1 <= given < m <= l:
        raise ParameterError("need 1 <= given < m <= l")
    Fy = float(ens.base.cdf(y))
    if Fy <= 0.0:
        raise SingularityError("F(y) = 0 in the conditional density")
    x = np.asarray(x, dtype=float)
    G = ens.base.cdf(x) / Fy
    g = ens.base.pdf(x) / Fy
    r = l - given
    j = m - given
    coef = math.exp(_log_multinomial(r, r - j, j - 1))
    out = np.where(x <= y, coef * G ** (r - j) * np.clip(1.0 - G, 0, None) ** (j - 1) * g, 0.0)
    return float(out) if out.ndim == 0 else out


def residual_pdf(base: DistributionDescriptor, y: float, x):
    """``P(x) / (1 - F(y))`` for ``x >= y`` (values above a known lower order statistic)."""
    tail = 1.0 - float(base.cdf(y))
    if tail <= 0.0:
        raise SingularityError("1 - F(y) = 0 in the residual density")
    x = np.asarray(x, dtype=float)
    out = np.where(x >= y, base.pdf(x) / tail, 0.0)
    return float(out) if out.ndim == 0 else out


def lth_largest_pdf(base: DistributionDescriptor, n: int, l: int, y):
    """Density of the ``l``-th largest of ``n`` (the ``Gamma2`` marginal)."""
    y = np.asarray(y, dtype=float)
    F = base.cdf(y)
    coef = math.exp(_log_multinomial(n, n - l, l - 1))
    out = coef * F ** (n - l) * (1.0 - F) ** (l - 1) * base.pdf(y)
    return float(out) if out.ndim == 0 else out


def _truncated_sum_pdf_generic(base, y, s, count, points=2049):
    """Density at ``s`` of a sum of ``count`` i.i.d. draws from base | X >= y.

    Numerical convolution on a uniform grid (trapezoid weights); accuracy is
    limited by the grid, roughly 1e-4 relative for smooth laws.
    """
    lo = y
    hi_q = float(base.cdf(y)) + (1.0 - float(base.cdf(y))) * (1 - 1e-12)
    upper = _quantile(base, hi_q)
    h = (upper - lo) / (points - 1)
    t = lo + h * np.arange(points)
    g = residual_pdf(base, y, t)
    acc = g.copy()
    for _ in range(count - 1):
        acc = np.convolve(acc, g)[: points * count] * h
    grid = count * lo + h * np.arange(acc.size)
    return float(np.interp(s, grid, acc, left=0.0, right=0.0))


def _quantile(base, q):
    lo, hi = base.support
    if np.isfinite(hi):
        upper = hi
    else:
        upper = max(1.0, base.mean or 1.0)
        while float(base.cdf(upper)) < q:
            upper *= 2.0
    return brentq(lambda v: float(base.cdf(v)) - q, lo, upper)


def cond_top_sum_pdf(base: DistributionDescriptor, count: int, y: float, s: float) -> float:
    """Density of ``Gamma1`` (sum of ``count`` values above ``y``) given ``Gamma2 = y``.

    Closed form (shifted Gamma) for the exponential law, grid convolution
    otherwise.
    """
    if count == 0:
        raise ParameterError("empty sum has no density")
    if base.kind == "exponential":
        u = s - count * y
        if u < 0:
            return 0.0
        return float(stats.gamma.pdf(u, count, scale=base.mean))
    if count == 1:
        return residual_pdf(base, y, s)
    return _truncated_sum_pdf_generic(base, y, s, count)


def partial_sum_pdf(ens: OrderedEnsemble, x: float) -> float:
    """Density of the sum of the ``l`` largest of ``n`` at ``x``.

    ``int_0^{x/l} P_Gamma2(y) P_{Gamma1 | Gamma2 = y}(x - y) dy``; the upper
    limit enforces ``Gamma1 >= (l - 1) Gamma2``.
    """
    if x < 0:
        return 0.0
    base, n, l = ens.base, ens.n, ens.l
    if l == 1:
        return float(lth_largest_pdf(base, n, 1, x))
    lo = base.support[0]
    upper = min(x / l, base.support[1])
    if upper <= lo:
        return 0.0

    def integrand(y):
        return lth_largest_pdf(base, n, l, y) * cond_top_sum_pdf(base, l - 1, y, x - y)

    return integrate(integrand, lo, upper)


# ---------------------------------------------------------------------------
# exponential subcarrier family


def subcarrier_truncated(which: str, mean: float, bounds, arg: float) -> float:
    """Truncated exponential subcarrier laws.

    Parameters
    ----------
    which : {"tau", "zeta", "zeta_mgf"}
        ``tau``: density on ``(0, upper)``; ``zeta``: density on
        ``[delta, upper]``; ``zeta_mgf``: MGF of ``zeta`` at ``arg``.
    mean : float
        Mean of the untruncated exponential.
    bounds : tuple
        ``(delta, upper)``; ``upper`` may be ``inf``.  ``delta`` is ignored
        by ``tau``.
    arg : float
        Evaluation point ``x`` (densities) or ``w`` (MGF).
    """
    delta, upper = float(bounds[0]), float(bounds[1])
    if not mean > 0:
        raise ParameterError("mean must be positive")
    if which == "tau":
        if not upper > 0:
            raise ParameterError("upper bound must be positive")
        if not 0.0 < arg < upper:
            return 0.0
        return math.exp(-arg / mean) / (mean * -math.expm1(-upper / mean))
    if not 0.0 <= delta < upper:
        raise ParameterError("need 0 <= delta < upper")
    norm = math.exp(-delta / mean) - (0.0 if math.isinf(upper) else math.exp(-upper / mean))
    if which == "zeta":
        if not delta <= arg <= upper:
            return 0.0
        return math.exp(-arg / mean) / (mean * norm)
    if which == "zeta_mgf":
        w = arg
        if w * mean == 1.0:
            return (upper - delta) / (mean * norm)
        if math.isinf(upper):
            if w * mean > 1.0:
                raise DomainError("MGF diverges for w * mean >= 1 on an unbounded support")
            top = 0.0
        else:
            top = math.exp(w * upper - upper / mean)
        return (math.exp(w * delta - delta / mean) - top) / (norm * (1.0 - w * mean))
    raise ParameterError(f"unknown law {which!r}")


def _expm_taylor_tail(z: float, start: int) -> float:
    """``exp(-z) - sum_{m < start} (-z)^m / m!`` without cancellation for small z."""
    if z < 1.0:
        total, term = 0.0, (-z) ** start / math.factorial(start)
        for m in range(start, start + 60):
            total += term
            term *= -z / (m + 1)
            if abs(term) < 1e-18 * max(abs(total), 1e-300):
                break
        return total
    return math.exp(-z) - math.fsum((-z) ** m / math.factorial(m) for m in range(start))


def _alpha_pdf_terms(n, l, mean, x):
    head = x ** (l - 1) / (mean ** l * math.factorial(l - 1))
    terms = [head]
    for k in range(1, n - l + 1):
        sign = (-1) ** (l + k - 1)
        z = k * x / (l * mean)
        terms.append(sign * math.comb(n - l, k) * (l / k) ** (l - 1) * _expm_taylor_tail(z, l - 1) / mean)
    return terms


def _alpha_pdf_mp(n, l, mean, x, dps=50):
    with mpmath.workdps(dps):
        x, mean = mpmath.mpf(x), mpmath.mpf(mean)
        total = x ** (l - 1) / (mean ** l * mpmath.factorial(l - 1))
        for k in range(1, n - l + 1):
            z = k * x / (l * mean)
            tail = mpmath.exp(-z) - mpmath.fsum((-z) ** m / mpmath.factorial(m) for m in range(l - 1))
            total += (-1) ** (l + k - 1) * mpmath.binomial(n - l, k) * mpmath.mpf(l / k) ** (l - 1) * tail / mean
        return float(mpmath.binomial(n, l) * mpmath.exp(-x / mean) * total)


def alpha_sum(which: str, n: int, l: int, mean: float, arg: float, *, k: int | None = None,
              full_output: bool = False):
    """Sum of the ``l`` largest of ``n`` i.i.d. exponentials (mean ``mean``).

    With spacings ``E_k / k`` of the sorted sample the sum equals
    ``sum_k min(k, l)/k * E_k`` with ``E_k`` i.i.d. exponential, which gives
    the product-form MGF.

    Parameters
    ----------
    which : {"term_mgf", "total_mgf", "closed_pdf"}
        ``term_mgf``: MGF of the ``k``-th weighted spacing,
        ``(1 - w mean min(k,l)/k)^-1``; ``total_mgf``: the full product;
        ``closed_pdf``: alternating-series density at ``arg``.
    arg : float
        ``w`` for the MGFs, ``x`` for the density.
    k : int, optional
        Spacing index for ``term_mgf``.
    full_output : bool
        For ``closed_pdf`` also return ``{"flagged": bool, "condition": float}``;
        ``flagged`` means the double-precision series lost more than
        ``SERIES_PRECISION_BOUND`` relative accuracy and the value was
        recomputed with 50-digit arithmetic.
    """
    if not 1 <= l <= n:
        raise ParameterError("need 1 <= l <= n")
    if not mean > 0:
        raise ParameterError("mean must be positive")
    if which == "term_mgf":
        if k is None or not 1 <= k <= n:
            raise ParameterError("term_mgf needs 1 <= k <= n")
        weight = min(k, l) / k
        if arg * mean * weight >= 1.0:
            raise DomainError("MGF diverges for w * mean >= 1")
        return 1.0 / (1.0 - arg * mean * weight)
    if which == "total_mgf":
        if arg * mean >= 1.0:
            raise DomainError("MGF diverges for w * mean >= 1")
        log_val = -l * math.log1p(-arg * mean)
        log_val -= math.fsum(math.log1p(-arg * mean * l / j) for j in range(l + 1, n + 1))
        return math.exp(log_val)
    if which == "closed_pdf":
        x = float(arg)
        if x < 0:
            raise ParameterError("closed_pdf needs x >= 0")
        terms = _alpha_pdf_terms(n, l, mean, x)
        series = math.fsum(terms)
        scale = math.fsum(abs(t) for t in terms)
        condition = scale / abs(series) if series != 0.0 else math.inf
        flagged = condition * np.finfo(float).eps > SERIES_PRECISION_BOUND
        if flagged:
            value = _alpha_pdf_mp(n, l, mean, x)
        else:
            value = math.comb(n, l) * math.exp(-x / mean) * series
        value = max(value, 0.0)
        if full_output:
            return value, {"flagged": bool(flagged), "condition": condition}
        return value
    raise ParameterError(f"unknown quantity {which!r}")


def subcarrier_joint(which: str, n: int, l: int, mean: float, point) -> float:
    """Densities of ``(Gamma2, Gamma1)`` for exponential subcarriers.

    ``point = (x, y)`` with ``x`` the ``l``-th largest value and ``y`` the
    sum of the ``l - 1`` values above it.

    * ``residual_pdf``: ``(1/mean) exp(-(x - y)/mean)`` for ``x >= y`` (a value
      above the level ``y``).
    * ``cond_gamma1``: density of ``y`` given ``x``, a Gamma(``l-1``) shifted
      by ``(l-1) x``.
    * ``marginal_g2``: density of ``x`` as an alternating exponential sum.
    * ``joint_g2_g1``: the expanded joint density.  The normalization uses
      ``mean**l`` so that it equals ``marginal_g2 * cond_gamma1`` for every
      mean.
    """
    if not 1 <= l <= n:
        raise ParameterError("need 1 <= l <= n")
    x, y = float(point[0]), float(point[1])
    m = float(mean)
    if which == "residual_pdf":
        return math.exp(-(x - y) / m) / m if x >= y else 0.0
    if which == "marginal_g2":
        if x < 0:
            return 0.0
        s = math.fsum((-1) ** h / (math.factorial(n - l - h) * math.factorial(h)) * math.exp(-(l + h) * x / m)
                      for h in range(n - l + 1))
        return math.factorial(n) / (m * math.factorial(l - 1)) * s
    if l < 2:
        raise ParameterError("Gamma1 is empty for l = 1")
    if which == "cond_gamma1":
        u = y - (l - 1) * x
        if x < 0 or u < 0:
            return 0.0
        return u ** (l - 2) * math.exp(-u / m) / (math.factorial(l - 2) * m ** (l - 1))
    if which == "joint_g2_g1":
        u = y - (l - 1) * x
        if x < 0 or u < 0:
            return 0.0
        terms = ((-1) ** h * math.factorial(n) / (math.factorial(n - l - h) * math.factorial(l - 1)
                                                 * math.factorial(l - 2) * math.factorial(h) * m ** l)
                 * u ** (l - 2) * math.exp(-(y + (h + 1) * x) / m) for h in range(n - l + 1))
        return math.fsum(terms)
    raise ParameterError(f"unknown density {which!r}")


def hazard_ratio(base: DistributionDescriptor, x):
    """``(1 - F(x)) / P(x)``; constant (the mean) for the exponential law."""
    return base.sf(x) / base.pdf(x)


def gumbel_max_cdf(l: int, x):
    """Limiting CDF ``exp(-exp(-(x - log l)))`` of the maximum of ``l`` unit exponentials."""
    return np.exp(-np.exp(-(np.asarray(x, dtype=float) - math.log(l))))


def write_density_csv(path, xs, pdf: Callable) -> None:
    """Write ``x,pdf`` rows on a caller-supplied grid."""
    from ._csv import write_csv
    write_csv(path, ["x", "pdf"], ((x, pdf(x)) for x in xs))
