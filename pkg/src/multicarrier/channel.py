"""Sub-channel transmittances, their Fourier images, SNR* and security thresholds.

Conventions
-----------
* The forward transform is the unnormalized DFT
  ``F(T)_i = sum_k T_k exp(-2j*pi*i*k/n)`` (``numpy.fft.fft``), so
  ``sum |F(T_i)|^2 = n * sum |T_i|^2``.
* For ``T_i ~ CN(0, s)`` i.i.d. the images ``F(T_i)`` are i.i.d. ``CN(0, n s)``
  and the magnitudes ``|F(T_i)|^2`` are exponential with mean ``n s``.
* Selection thresholds live on the scale of ``|F(T_i)|^2``; the scan compares
  each magnitude with the common threshold magnitude ``|F(T*)|^2 = lambda``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._csv import write_csv
from .exceptions import ParameterError
from .montecarlo import derive_rng

CLAMP_BOUND = 1.0 / np.sqrt(2.0)


def _as_rng(seed):
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None:
        return np.random.default_rng()
    return derive_rng(seed)


def _vector(value, n, name):
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        arr = np.full(n, float(arr))
    if arr.shape != (n,):
        raise ParameterError(f"{name} must be a scalar or a length-{n} vector")
    return arr


@dataclass(frozen=True)
class ModulationConfig:
    """Modulation and noise variances of an ``n``-sub-channel link.

    Parameters
    ----------
    n, l : int
        Total and used sub-channel counts, ``1 <= l <= n``.
    sigma_omega0_sq : float
        Single-carrier modulation variance.
    sigma_omega_sq : float or array_like
        Subcarrier modulation variance (scalar or per sub-channel).
    sigma_N_sq : float or array_like
        Per-sub-channel Gaussian noise variance on each quadrature.
    sigma_0_sq : float
        Vacuum noise variance.
    """

    n: int
    l: int
    sigma_omega0_sq: float = 1.0
    sigma_omega_sq: object = 1.0
    sigma_N_sq: object = 0.0
    sigma_0_sq: float = 1.0

    def __post_init__(self):
        if self.n < 1 or not 1 <= self.l <= self.n:
            raise ParameterError("need 1 <= l <= n")
        if not (np.isfinite(self.sigma_omega0_sq) and self.sigma_omega0_sq > 0):
            raise ParameterError("sigma_omega0_sq must be finite and positive")
        if not (np.isfinite(self.sigma_0_sq) and self.sigma_0_sq > 0):
            raise ParameterError("sigma_0_sq must be finite and positive")
        omega = _vector(self.sigma_omega_sq, self.n, "sigma_omega_sq")
        noise = _vector(self.sigma_N_sq, self.n, "sigma_N_sq")
        if np.any(~np.isfinite(omega)) or np.any(omega <= 0):
            raise ParameterError("sigma_omega_sq must be finite and positive")
        if np.any(~np.isfinite(noise)) or np.any(noise < 0):
            raise ParameterError("sigma_N_sq must be finite and nonnegative")
        object.__setattr__(self, "sigma_omega_sq", omega)
        object.__setattr__(self, "sigma_N_sq", noise)

    @property
    def snr_hat(self) -> float:
        """Scaled SNR ``sigma_omega0^2 / (2 sigma_N^2)`` with the mean noise."""
        noise = float(np.mean(self.sigma_N_sq))
        return np.inf if noise == 0 else self.sigma_omega0_sq / (2.0 * noise)


@dataclass(frozen=True)
class EavesdropperModel:
    """Per-sub-channel EPR variances ``W_i`` and splitter transmittances."""

    W: np.ndarray
    T_eve_sq: np.ndarray

    def __post_init__(self):
        W = np.asarray(self.W, dtype=float)
        t = np.asarray(self.T_eve_sq, dtype=float)
        if W.shape != t.shape or W.ndim != 1:
            raise ParameterError("W and T_eve_sq must be vectors of equal length")
        if np.any(W < 1):
            raise ParameterError("EPR variances must be >= 1")
        if np.any(t < 0) or np.any(t >= 1):
            raise ParameterError("|T_Eve|^2 must lie in [0, 1)")
        object.__setattr__(self, "W", W)
        object.__setattr__(self, "T_eve_sq", t)

    @classmethod
    def from_transmittance(cls, tv: "TransmittanceVector", W) -> "EavesdropperModel":
        """Couple Eve's splitter to the legitimate gains, ``|T_Eve|^2 = 1 - |T|^2``."""
        t = 1.0 - np.abs(tv.T) ** 2
        return cls(W=_vector(W, t.size, "W"), T_eve_sq=t)

    def excess_noise(self) -> np.ndarray:
        """``N_i = (W_i - 1) |T_Eve,i|^2 / (1 - |T_Eve,i|^2)``."""
        return (self.W - 1.0) * self.T_eve_sq / (1.0 - self.T_eve_sq)


@dataclass(frozen=True)
class TransmittanceVector:
    """Complex gains, their DFT and normalized squared magnitudes."""

    T: np.ndarray
    FT: np.ndarray
    mag_norm: np.ndarray
    l: int = field(default=0)

    @classmethod
    def from_gains(cls, T, l=None) -> "TransmittanceVector":
        T = np.asarray(T, dtype=complex)
        l = T.size if l is None else int(l)
        FT = dft_transmittance(T)
        return cls(T=T, FT=FT, mag_norm=np.abs(FT) ** 2 / l, l=l)

    @property
    def n(self) -> int:
        return self.T.size

    @property
    def mag_sq(self) -> np.ndarray:
        """Unnormalized magnitudes ``|F(T_i)|^2``."""
        return np.abs(self.FT) ** 2


@dataclass(frozen=True)
class Threshold:
    """Security threshold used by the selection scan.

    Attributes
    ----------
    t_star_sq : float
        Threshold magnitude compared against each ``|F(T_i)|^2``.
    lambda_ : float
        Lagrange multiplier (``nu_Eve = 1 / lambda_``); equals ``t_star_sq``
        except after the Lambda-prime reevaluation.
    mu : float or None
        Fallback fraction when the threshold is ``mu * max``.
    varpi : float
        Offset added by the Lambda-prime reevaluation.
    variant : str
        ``"fixed"``, ``"fallback"`` or ``"lambda_prime"``.
    """

    t_star_sq: float
    lambda_: float
    mu: float | None = None
    varpi: float = 0.0
    variant: str = "fixed"

    def __post_init__(self):
        if self.t_star_sq < 0 or self.lambda_ < 0:
            raise ParameterError("threshold magnitudes must be nonnegative")
        if self.varpi < 0:
            raise ParameterError("varpi must be nonnegative")

    @property
    def nu_eve(self) -> float:
        return np.inf if self.lambda_ == 0 else 1.0 / self.lambda_


def dft_transmittance(T) -> np.ndarray:
    """Unnormalized forward DFT ``sum_k T_k exp(-2j pi i k / n)``."""
    T = np.asarray(T, dtype=complex)
    if T.size == 0:
        raise ParameterError("empty vector")
    return np.fft.fft(T)


def idft_transmittance(FT) -> np.ndarray:
    """Inverse of :func:`dft_transmittance` (carries the ``1/n`` factor)."""
    return np.fft.ifft(np.asarray(FT, dtype=complex))


def _clamped_normal(rng, scale, size):
    out = np.empty(size)
    filled = 0
    while filled < size:
        draw = rng.normal(0.0, scale, size=max(2 * (size - filled), 16))
        keep = draw[(draw >= 0.0) & (draw <= CLAMP_BOUND)]
        take = min(keep.size, size - filled)
        out[filled:filled + take] = keep[:take]
        filled += take
    return out


def sample_transmittance_vector(n, sigma_T_sq, seed=None, clamp=False, *, l=None,
                                symmetric=False) -> TransmittanceVector:
    """Draw ``n`` i.i.d. circular complex Gaussian gains.

    Parameters
    ----------
    n : int
        Number of sub-channels.
    sigma_T_sq : float
        Variance ``E|T_i|^2``; each quadrature has variance ``sigma_T_sq / 2``.
    seed : int, numpy.random.Generator or None
        Integer seeds map to stream 0 of :func:`derive_rng`.
    clamp : bool
        Rejection-sample both quadratures into ``[0, 1/sqrt(2)]``.
    l : int, optional
        Normalization count for ``mag_norm``; defaults to ``n``.
    symmetric : bool
        Draw one quadrature and copy it to the other (``Re T = Im T``).
    """
    if n < 1:
        raise ParameterError("n must be positive")
    if not sigma_T_sq > 0:
        raise ParameterError("sigma_T_sq must be positive")
    rng = _as_rng(seed)
    scale = np.sqrt(sigma_T_sq / 2.0)
    draw = (lambda: _clamped_normal(rng, scale, n)) if clamp else (lambda: rng.normal(0.0, scale, n))
    re = draw()
    im = re.copy() if symmetric else draw()
    return TransmittanceVector.from_gains(re + 1j * im, l=l)


def sample_coefficient_magnitudes(trials, n, sigma_T_sq, rng) -> np.ndarray:
    """``|F(T_i)|^2`` for ``trials`` independent gain vectors, shape ``(trials, n)``."""
    scale = np.sqrt(sigma_T_sq / 2.0)
    T = rng.normal(0.0, scale, (trials, n)) + 1j * rng.normal(0.0, scale, (trials, n))
    return np.abs(np.fft.fft(T, axis=1)) ** 2


def lagrange_multiplier(T_star, l=None, n=None) -> float:
    """``lambda = (1/l) sum_{i<l} |sum_{k<l} T*_k exp(-2j pi i k / n)|^2``.

    ``l`` and ``n`` default to ``len(T_star)``; the sum runs over the first
    ``l`` entries, matching the threshold-vector definition literally.
    """
    T_star = np.asarray(T_star, dtype=complex)
    l = T_star.size if l is None else int(l)
    n = T_star.size if n is None else int(n)
    if not 1 <= l <= T_star.size:
        raise ParameterError("l must be between 1 and len(T_star)")
    idx = np.arange(l)
    kernel = np.exp(-2j * np.pi * np.outer(idx, idx) / n)
    return float(np.sum(np.abs(kernel @ T_star[:l]) ** 2) / l)


def reevaluate_threshold(threshold_mag, bad_mags):
    """Lambda-prime reevaluation: returns ``(lambda', varpi)``.

    ``varpi = threshold - min(bad_mags)`` and ``lambda' = threshold + varpi``.
    """
    bad = np.asarray(bad_mags, dtype=float)
    if bad.size == 0:
        raise ParameterError("bad_mags must be nonempty")
    varpi = float(threshold_mag - np.min(bad))
    if varpi < 0:
        raise ParameterError("bad-set magnitudes cannot exceed the threshold")
    return float(threshold_mag + varpi), varpi


def security_threshold(T_star=None, variant="fixed", mu=None, mags=None, *, l=None,
                       n=None, threshold=None) -> Threshold:
    """Build the scan threshold for one of the three variants.

    Parameters
    ----------
    T_star : array_like, optional
        Threshold gain vector; ``lambda`` is computed from its DFT.
    variant : {"fixed", "fallback", "lambda_prime"}
    mu : float, optional
        Fallback fraction in ``(0, 1)``.
    mags : array_like, optional
        All magnitudes (``fallback``) or the bad-set magnitudes
        (``lambda_prime``).
    threshold : float, optional
        Use this threshold magnitude instead of deriving it from ``T_star``.
    """
    if variant == "fallback":
        if mu is None or not 0.0 < mu < 1.0:
            raise ParameterError("mu must lie in (0, 1)")
        m = np.asarray(mags if mags is not None else [], dtype=float)
        if m.size == 0:
            raise ParameterError("fallback threshold needs a nonempty magnitude list")
        t = float(mu * np.max(m))
        return Threshold(t_star_sq=t, lambda_=t, mu=mu, variant="fallback")
    if mu is not None and not 0.0 < mu < 1.0:
        raise ParameterError("mu must lie in (0, 1)")
    if threshold is None:
        if T_star is None:
            raise ParameterError("need T_star or an explicit threshold")
        threshold = lagrange_multiplier(T_star, l=l, n=n)
    if variant == "fixed":
        return Threshold(t_star_sq=float(threshold), lambda_=float(threshold), mu=mu)
    if variant == "lambda_prime":
        lam, varpi = reevaluate_threshold(threshold, mags if mags is not None else [])
        return Threshold(t_star_sq=float(threshold), lambda_=lam, mu=mu, varpi=varpi,
                         variant="lambda_prime")
    raise ParameterError(f"unknown threshold variant {variant!r}")


def _check_selection(selected, size):
    sel = np.asarray(list(selected), dtype=int)
    if sel.size == 0:
        raise ParameterError("selection is empty")
    if np.any(sel < 0) or np.any(sel >= size):
        raise ParameterError("selection index out of range")
    return sel


def single_carrier_coefficient(FT, selected, l=None) -> complex:
    """``A_j = (1/l) sum_{i in selected} F(T_i)``; ``l`` defaults to ``|selected|``."""
    FT = np.asarray(FT, dtype=complex)
    sel = _check_selection(selected, FT.size)
    l = sel.size if l is None else int(l)
    return complex(np.sum(FT[sel]) / l)


def single_carrier_power(mags, selected, l=None) -> float:
    """``|A_j|^2 = (1/l) sum_{i in selected} |F(T_i)|^2`` from magnitudes."""
    mags = np.asarray(mags, dtype=float)
    sel = _check_selection(selected, mags.size)
    l = sel.size if l is None else int(l)
    return float(np.sum(mags[sel]) / l)


def snr_star_terms(cfg: ModulationConfig, eve: EavesdropperModel, FT_mag_sq) -> np.ndarray:
    """Per-sub-channel ``sigma_omega^2 / sigma_N*^2`` (zero where undefined).

    ``sigma_X^2 = sigma_0^2 + N_i`` and the effective noise is
    ``sigma_omega^2 / (a_i - 1)`` with
    ``a_i = (sigma_omega^2 |F|^2 + sigma_X^2) / (1 + sigma_X^2 sigma_omega^2 |F|^2)``,
    so each term equals ``a_i - 1`` when that is positive.
    """
    mag = np.asarray(FT_mag_sq, dtype=float)
    if mag.shape != (cfg.n,):
        raise ParameterError("FT_mag_sq must have length n")
    if np.any(mag < 0):
        raise ParameterError("magnitudes must be nonnegative")
    if eve.W.size != cfg.n:
        raise ParameterError("eavesdropper model has the wrong length")
    sx = cfg.sigma_0_sq + eve.excess_noise()
    s = cfg.sigma_omega_sq * mag
    bracket = (s + sx) / (1.0 + sx * s) - 1.0
    noise = np.where(bracket > 0, cfg.sigma_omega_sq / np.where(bracket > 0, bracket, 1.0), np.inf)
    return np.where(np.isfinite(noise), cfg.sigma_omega_sq / noise, 0.0)


def snr_star(cfg: ModulationConfig, eve: EavesdropperModel, FT_mag_sq, selected) -> float:
    """``SNR*`` of a user: sum of per-sub-channel terms over ``selected``."""
    terms = snr_star_terms(cfg, eve, FT_mag_sq)
    sel = _check_selection(selected, cfg.n)
    return float(np.sum(terms[sel]))


_CONFIG_TYPES = {
    "n": int, "l": int, "seed": int, "clamp": lambda s: s.strip().lower() in ("1", "true", "yes", "on"),
    "sigma_omega_sq": float, "sigma_omega0_sq": float, "sigma_N_sq": float,
    "sigma_0_sq": float, "sigma_T_sq": float,
}


def read_config(path) -> dict:
    """Parse a flat ``key=value`` file; ``#`` starts a comment."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParameterError(f"{path}:{lineno}: expected key=value")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in _CONFIG_TYPES:
                raise ParameterError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                out[key] = _CONFIG_TYPES[key](value)
            except ValueError as exc:
                raise ParameterError(f"{path}:{lineno}: bad value for {key}: {value!r}") from exc
    return out


def config_from_mapping(values: dict) -> ModulationConfig:
    """Build a :class:`ModulationConfig` from parsed config values."""
    omega = values.get("sigma_omega_sq", 1.0)
    return ModulationConfig(
        n=values["n"], l=values.get("l", values["n"]),
        sigma_omega0_sq=values.get("sigma_omega0_sq", omega), sigma_omega_sq=omega,
        sigma_N_sq=values.get("sigma_N_sq", 0.0), sigma_0_sq=values.get("sigma_0_sq", 1.0))


def write_transmittance_csv(path, tv: TransmittanceVector) -> None:
    """Write ``index,re,im,mag_norm`` rows."""
    rows = ((i, t.real, t.imag, m) for i, (t, m) in enumerate(zip(tv.T, tv.mag_norm)))
    write_csv(path, ["index", "re", "im", "mag_norm"], rows)
