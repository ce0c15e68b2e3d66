"""Moment generating functions, Craig-form Q integrals and error rates."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import erfc

from ._quad import integrate
from .exceptions import DomainError, ParameterError
from .orderstats import DistributionDescriptor

# sin^2(pi/2), the numerator constant of the single-carrier error integral
G_CONST = 1.0


@dataclass(frozen=True)
class MGFRepr:
    """An MGF ``c -> E[exp(c X)]`` with its interval of convergence."""

    eval: Callable[[float], float]
    domain: tuple = (-np.inf, 0.0)

    def __call__(self, c: float) -> float:
        lo, hi = self.domain
        if not lo <= c <= hi:
            raise DomainError(f"MGF argument {c} outside its domain {self.domain}")
        return float(self.eval(c))

    def scaled(self, factor: float) -> "MGFRepr":
        """MGF of ``factor * X`` for ``factor > 0``."""
        if not factor > 0:
            raise ParameterError("scale factor must be positive")
        lo, hi = self.domain
        return MGFRepr(lambda c: self.eval(factor * c), (lo / factor, hi / factor))


@dataclass(frozen=True)
class ErrorRateSpec:
    """Constants of the ``a Q(sqrt(b x))`` error template.

    ``snr_hat`` multiplies the SNR variable whose MGF is supplied.
    """

    a: float = 1.0
    b: float = 1.0
    snr_hat: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.a) and self.a > 0):
            raise ParameterError("a must be finite and positive")
        if not (np.isfinite(self.b) and self.b >= 0):
            raise ParameterError("b must be finite and nonnegative")
        if self.snr_hat < 0:
            raise ParameterError("snr_hat must be nonnegative")


def mgf_from_pdf(pdf: DistributionDescriptor, c: float) -> float:
    """``int P(x) exp(c x) dx`` over the support by quadrature.

    For unbounded support and ``c > 0`` the integrand is probed on a
    geometric grid beyond the bulk; if it does not decay the integral is
    declared divergent.
    """
    lo, hi = pdf.support
    if c > 0 and not np.isfinite(hi):
        scale = pdf.mean if pdf.mean else 1.0
        probes = [lo + scale * 10.0 * 2 ** k for k in range(5)]
        vals = [float(pdf.pdf(x)) * math.exp(min(c * x, 700.0)) for x in probes]
        if vals[-1] > 1e-12 or (vals[-1] > 0 and vals[-1] >= vals[-2]):
            raise DomainError("MGF integral diverges")
    if c == 0:
        f = lambda x: float(pdf.pdf(x))
    else:
        def f(x):
            p = float(pdf.pdf(x))
            return 0.0 if p == 0.0 else p * math.exp(c * x)
    if np.isfinite(hi):
        return integrate(f, lo, hi)
    # split so the bulk is resolved before the infinite tail
    mid = lo + 10.0 * (pdf.mean or 1.0)
    return integrate(f, lo, mid) + integrate(f, mid, np.inf)


def mgf_of(pdf: DistributionDescriptor, domain=(-np.inf, 0.0)) -> MGFRepr:
    """Wrap :func:`mgf_from_pdf` as an :class:`MGFRepr`."""
    return MGFRepr(lambda c: mgf_from_pdf(pdf, c), domain)


def exponential_mgf(mean: float) -> MGFRepr:
    return MGFRepr(lambda c: 1.0 / (1.0 - c * mean), (-np.inf, (1.0 - 1e-12) / mean))


def gamma_mgf(shape: float, scale: float = 1.0) -> MGFRepr:
    return MGFRepr(lambda c: (1.0 - c * scale) ** (-shape), (-np.inf, (1.0 - 1e-12) / scale))


def point_mass_mgf(s: float) -> MGFRepr:
    return MGFRepr(lambda c: math.exp(c * s), (-np.inf, np.inf))


def _central_difference(f, k, h):
    # k-th derivative at 0 from the symmetric binomial stencil on step h
    offsets = np.arange(k + 1) - k / 2
    weights = np.array([(-1) ** (k - j) * math.comb(k, j) for j in range(k + 1)], dtype=float)
    vals = np.array([f(o * h) for o in offsets])
    return float(np.dot(weights, vals) / h ** k)


def mgf_moment(m: MGFRepr, k: int, h0: float | None = None, levels: int = 6) -> float:
    """``k``-th moment ``M^(k)(0)`` by central differences plus Richardson.

    The stencil spacing starts at ``h0`` (the outermost node sits at 40% of
    the distance from zero to the nearest domain edge) and is halved ``levels - 1`` times; the central
    stencils have even error expansions, so each Richardson column removes
    the next power of ``h^2``.
    """
    if k not in (1, 2, 3, 4):
        raise ParameterError("k must be 1, 2, 3 or 4")
    lo, hi = m.domain
    reach = min(-lo if np.isfinite(lo) else 1.0, hi if np.isfinite(hi) else 1.0, 1.0)
    if h0 is None:
        h0 = 0.8 * reach / k
    table = [[_central_difference(m.eval, k, h0 / 2 ** j)] for j in range(levels)]
    for j in range(1, levels):
        for col in range(1, j + 1):
            factor = 4.0 ** col
            table[j].append((factor * table[j][col - 1] - table[j - 1][col - 1]) / (factor - 1.0))
    return table[-1][-1]


def q_function(x):
    """Gaussian tail ``Q(x) = erfc(x / sqrt 2) / 2``."""
    return 0.5 * erfc(np.asarray(x, dtype=float) / math.sqrt(2.0))


def q_craig(x: float, squared: bool = False) -> float:
    """Craig's finite-range form of ``Q(x)`` (or ``Q(x)^2``).

    ``(1/pi) int_0^{pi/2} exp(-x^2 / (2 sin^2 phi)) dphi``; the squared form
    integrates up to ``pi/4``.
    """
    if x < 0:
        raise ParameterError("x must be nonnegative")
    upper = math.pi / 4 if squared else math.pi / 2
    if x == 0:
        return upper / math.pi
    half = 0.5 * x * x
    return integrate(lambda p: math.exp(-half / math.sin(p) ** 2), 0.0, upper,
                     epsabs=1e-15, epsrel=1e-13) / math.pi


def _phi_integral(fn, upper=math.pi / 2):
    return integrate(fn, 0.0, upper, epsabs=1e-13, epsrel=1e-12)


def avg_error_rate(spec: ErrorRateSpec, snr_mgf: MGFRepr) -> float:
    """``(a/pi) int_0^{pi/2} M(-b snr_hat / (2 sin^2 phi)) dphi``."""
    k = spec.b * spec.snr_hat / 2.0
    if k == 0:
        return spec.a / 2.0

    def integrand(p):
        s = math.sin(p)
        if s == 0.0:
            return 0.0
        return snr_mgf(-k / (s * s))

    return spec.a / math.pi * _phi_integral(integrand)


def avg_error_rate_direct(spec: ErrorRateSpec, pdf: DistributionDescriptor) -> float:
    """``int a Q(sqrt(b snr_hat x)) P(x) dx`` over the SNR density."""
    lo, hi = pdf.support
    bb = spec.b * spec.snr_hat

    def integrand(x):
        return spec.a * float(q_function(math.sqrt(bb * max(x, 0.0)))) * float(pdf.pdf(x))

    if np.isfinite(hi):
        return integrate(integrand, lo, hi, epsabs=1e-13, epsrel=1e-12)
    mid = lo + 10.0 * (pdf.mean or 1.0)
    return (integrate(integrand, lo, mid, epsabs=1e-13, epsrel=1e-12)
            + integrate(integrand, mid, np.inf, epsabs=1e-13, epsrel=1e-12))


def p_err_operator(op_mgf: MGFRepr, snr_hat: float) -> float:
    """Single-carrier error probability from the MGF of ``|A_j|^2``.

    ``(1/pi) int_0^{pi/2} M(-g snr_hat / sin^2 phi) dphi`` with ``g = 1``;
    ``op_mgf`` is the MGF of ``|A_j|^2`` and the ``snr_hat`` scaling is
    applied here.
    """
    if snr_hat < 0:
        raise ParameterError("snr_hat must be nonnegative")
    if snr_hat == 0:
        return 0.5

    def integrand(p):
        s = math.sin(p)
        if s == 0.0:
            return 0.0
        return op_mgf(-G_CONST * snr_hat / (s * s))

    return _phi_integral(integrand) / math.pi
