"""Large-system transforms of multiuser channel matrices.

The ``l x K`` channel matrix ``F`` (``l`` sub-channels, ``K`` users,
``chi = K / l``) is built from an i.i.d. factor ``Z`` with entry variance
``1/l`` in one of three ways:

``product``
    ``F = X Z Phi`` with ``X`` (``l x l``) and ``Phi`` (``K x K``).
``hadamard``
    ``F = X o (Z Phi)``: ``X`` is an ``l x K`` coefficient matrix multiplied
    entrywise and ``Phi`` is diagonal.  The variance profile is
    ``|Phi_k|^2 |X_ik|^2``.
``identical``
    ``F = X U Phi``: every user sees the same averaged coefficient, ``X`` is
    diagonal and ``U`` is the spreading factor.

Expectations over ``X, Y ~ U[0, 1]`` are grid means at the natural ``l x K``
resolution of a profile.  Row variables (``a``, ``X``) index sub-channels and
column variables (``b``, ``Y``) index users.
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np
from scipy import optimize

from ._csv import write_csv
from ._quad import integrate
from .exceptions import ConvergenceError, ParameterError, UnsupportedModeError
from .montecarlo import EmpiricalDist, derive_rng
from .orderstats import DistributionDescriptor

log = logging.getLogger(__name__)

LOG2E = 1.0 / math.log(2.0)
MODES = ("product", "hadamard", "identical")


# ---------------------------------------------------------------------------
# configuration and fixed points


@dataclass(frozen=True)
class FixedPointConfig:
    """Damped Picard settings: ``x <- x + damping * (g(x) - x)``."""

    tol: float = 1e-9
    max_iter: int = 10_000
    damping: float = 0.5

    def __post_init__(self):
        if not self.tol > 0:
            raise ParameterError("tol must be positive")
        if not 0.0 < self.damping <= 1.0:
            raise ParameterError("damping must lie in (0, 1]")
        if self.max_iter < 1:
            raise ParameterError("max_iter must be at least 1")


def _residual(new, x):
    new, x = np.asarray(new, dtype=float), np.asarray(x, dtype=float)
    scale = np.maximum(np.abs(x), 1.0)
    return float(np.max(np.abs(new - x) / scale)) if x.size else 0.0


def solve_fixed_point(update: Callable, x0, cfg: FixedPointConfig | None = None, path: list | None = None):
    """Damped Picard iteration for ``x = update(x)``.

    The returned point is checked by substituting it back into ``update``.

    Returns
    -------
    x : ndarray
    residual : float
        ``max |update(x) - x| / max(|x|, 1)`` at the returned point.
    iterations : int

    Raises
    ------
    ConvergenceError
        If the residual is still above ``cfg.tol`` after ``cfg.max_iter``
        steps.
    """
    cfg = cfg or FixedPointConfig()
    x = np.array(x0, dtype=float)
    res = math.inf
    for it in range(1, cfg.max_iter + 1):
        new = np.asarray(update(x), dtype=float)
        res = _residual(new, x)
        if path is not None:
            path.append(res)
        if not np.isfinite(res):
            raise ConvergenceError("fixed point iteration produced non-finite values", residual=res,
                                   iterations=it)
        if res < cfg.tol:
            # res is the substitution residual of x itself
            return x, res, it
        x = x + cfg.damping * (new - x)
    raise ConvergenceError(f"no convergence after {cfg.max_iter} iterations", residual=res,
                           iterations=cfg.max_iter)


def solve_scalar_fixed_point(rhs: Callable[[float], float], cfg: FixedPointConfig | None = None) -> float:
    """Root of ``e = rhs(e)`` on ``[0, 1]`` by bracketing.

    Used for efficiency-type unknowns where ``e - rhs(e)`` is increasing and
    changes sign on the unit interval; plain Picard steps can oscillate there
    at high SNR.  The root is verified by substitution.
    """
    cfg = cfg or FixedPointConfig()
    lo, hi = 0.0, 1.0
    f_lo, f_hi = lo - rhs(lo), hi - rhs(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if f_lo > 0 or f_hi < 0:
        raise ConvergenceError("no sign change on [0, 1]", residual=min(abs(f_lo), abs(f_hi)))
    e = optimize.brentq(lambda t: t - rhs(t), lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps,
                        maxiter=cfg.max_iter)
    res = abs(rhs(e) - e)
    if res > cfg.tol:
        raise ConvergenceError("scalar fixed point failed the substitution check", residual=res)
    return float(e)


# ---------------------------------------------------------------------------
# spectra and transforms


@dataclass(frozen=True)
class SpectralSummary:
    """Eigenvalues of a Gram matrix plus the aspect ratio they came from."""

    eigenvalues: np.ndarray
    chi: float = 1.0
    snr_grid: np.ndarray = field(default_factory=lambda: np.array([]))

    def __post_init__(self):
        ev = np.asarray(self.eigenvalues, dtype=float).ravel()
        if ev.size == 0:
            raise ParameterError("empty spectrum")
        if np.any(ev < -1e-10):
            raise ParameterError("eigenvalues below -1e-10")
        object.__setattr__(self, "eigenvalues", np.clip(ev, 0.0, None))


def spectrum(matrix, side: str = "small") -> SpectralSummary:
    """Eigenvalues of ``F F^H`` (``side="left"``), ``F^H F`` (``"right"``) or the smaller one.

    The full-size sides include the zero eigenvalues of a rank-deficient Gram
    matrix.  Negative round-off is clamped to zero.
    """
    f = np.atleast_2d(np.asarray(matrix))
    rows, cols = f.shape
    if side == "small":
        side = "right" if cols < rows else "left"
    if side == "left":
        gram = f @ f.conj().T
    elif side == "right":
        gram = f.conj().T @ f
    else:
        raise ParameterError(f"unknown side {side!r}")
    ev = np.linalg.eigvalsh(gram)
    return SpectralSummary(np.clip(ev, 0.0, None), chi=cols / rows)


@dataclass(frozen=True)
class MarchenkoPastur:
    """Limit law of ``F^H F`` for an ``l x K`` matrix with i.i.d. variance-``1/l`` entries, ``chi = K / l``."""

    chi: float

    def __post_init__(self):
        if not self.chi > 0:
            raise ParameterError("chi must be positive")

    @property
    def support(self):
        return mp_support(self.chi)

    @property
    def atom(self) -> float:
        return max(0.0, 1.0 - 1.0 / self.chi)

    def pdf(self, x):
        return mp_density(self.chi, x)

    def expect(self, fn: Callable) -> float:
        """``E[fn(L)]`` including the atom at zero."""
        u, v = self.support
        mid, half = 0.5 * (u + v), 0.5 * (v - u)
        chi = self.chi

        def integrand(theta):
            x = mid + half * math.cos(theta)
            return fn(x) * half * half * math.sin(theta) ** 2 / (2.0 * math.pi * chi * x)

        cont = integrate(integrand, 0.0, math.pi, epsabs=1e-12, epsrel=1e-11)
        return cont + (self.atom * fn(0.0) if self.atom else 0.0)

    def cdf(self, x):
        """CDF, vectorized over ``x`` by per-point quadrature."""
        xs = np.atleast_1d(np.asarray(x, dtype=float))
        u, v = self.support
        mid, half = 0.5 * (u + v), 0.5 * (v - u)
        chi = self.chi

        def dens(theta):
            t = mid - half * math.cos(theta)
            return half * half * math.sin(theta) ** 2 / (2.0 * math.pi * chi * t)

        out = np.empty_like(xs)
        for i, xi in enumerate(xs):
            if xi < 0:
                out[i] = 0.0
                continue
            val = self.atom
            if xi >= v:
                val += 1.0 - self.atom
            elif xi > u:
                top = math.acos(min(1.0, max(-1.0, (mid - xi) / half)))
                val += integrate(dens, 0.0, top, epsabs=1e-12, epsrel=1e-10)
            out[i] = min(1.0, val)
        return out if np.ndim(x) else float(out[0])


def mp_support(chi: float) -> tuple[float, float]:
    """``((1 - sqrt chi)^2, (1 + sqrt chi)^2)``."""
    if not chi > 0:
        raise ParameterError("chi must be positive")
    r = math.sqrt(chi)
    return (1.0 - r) ** 2, (1.0 + r) ** 2


def mp_density(chi: float, x):
    """Continuous part of the Marchenko-Pastur density.

    ``sqrt((x - u)^+ (v - x)^+) / (2 pi chi x)``; the atom of mass
    ``(1 - 1/chi)^+`` at zero is reported by :class:`MarchenkoPastur`.
    Zero outside ``[u, v]``.
    """
    u, v = mp_support(chi)
    x = np.asarray(x, dtype=float)
    inside = (x > u) & (x < v) & (x > 0)
    safe = np.where(inside, x, 1.0)
    out = np.where(inside, np.sqrt(np.clip((safe - u) * (v - safe), 0.0, None)) / (2.0 * math.pi * chi * safe), 0.0)
    return float(out) if out.ndim == 0 else out


def _expect(spec, fn: Callable) -> float:
    if isinstance(spec, SpectralSummary):
        return math.fsum(np.asarray(fn(spec.eigenvalues), dtype=float).tolist()) / spec.eigenvalues.size
    if isinstance(spec, MarchenkoPastur):
        return spec.expect(fn)
    if isinstance(spec, DistributionDescriptor):
        lo, hi = spec.support
        g = lambda t: float(fn(t)) * float(spec.pdf(t))
        if np.isfinite(hi):
            return integrate(g, lo, hi)
        mid = lo + 10.0 * (spec.mean or 1.0)
        return integrate(g, lo, mid) + integrate(g, mid, np.inf)
    arr = np.atleast_1d(np.asarray(spec, dtype=float))
    if np.any(arr < 0):
        raise ParameterError("values must be nonnegative")
    return math.fsum(np.asarray(fn(arr), dtype=float).tolist()) / arr.size


def eta_transform(spec, gamma: float) -> float:
    """``E[1 / (1 + gamma L)]`` for a spectrum, a law, or a sample (a float is a point mass)."""
    if gamma < 0:
        raise ParameterError("gamma must be nonnegative")
    if gamma == 0:
        return 1.0
    return _expect(spec, lambda x: 1.0 / (1.0 + gamma * np.asarray(x)))


def nu_transform(spec, gamma: float) -> float:
    """Shannon transform ``E[log2(1 + gamma L)]``."""
    if gamma < 0:
        raise ParameterError("gamma must be nonnegative")
    if gamma == 0:
        return 0.0
    return _expect(spec, lambda x: np.log1p(gamma * np.asarray(x)) * LOG2E)


# ---------------------------------------------------------------------------
# channel model


def _cn(rng, shape, var):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * math.sqrt(var / 2.0)


def haar_isometry(rows: int, cols: int, rng) -> np.ndarray:
    """``rows x cols`` matrix with orthonormal columns, Haar distributed (``cols <= rows``)."""
    if cols > rows:
        raise ParameterError("an isometry needs cols <= rows")
    q, r = np.linalg.qr(_cn(rng, (rows, cols), 1.0))
    d = np.diag(r)
    return q * (d / np.abs(d))


@dataclass(frozen=True)
class RandomChannelModel:
    """Factors of an ``l x K`` multiuser channel matrix.

    ``X_factor`` is ``l x l`` (product), ``l x K`` (hadamard) or the diagonal
    ``l x l`` averaged-coefficient matrix (identical).  ``Phi_factor`` is
    ``K x K``.  ``U_factor`` is the spreading matrix of the identical mode.
    """

    l: int
    K: int
    X_factor: np.ndarray
    Z_factor: np.ndarray
    Phi_factor: np.ndarray
    mode: str = "hadamard"
    U_factor: np.ndarray | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise UnsupportedModeError(f"unknown mode {self.mode!r}")
        if self.l < 1 or self.K < 1:
            raise ParameterError("l and K must be positive")
        xs = (self.l, self.K) if self.mode == "hadamard" else (self.l, self.l)
        if np.shape(self.X_factor) != xs:
            raise ParameterError(f"X_factor must be {xs}")
        if np.shape(self.Phi_factor) != (self.K, self.K):
            raise ParameterError("Phi_factor must be K x K")
        if np.shape(self.Z_factor) != (self.l, self.K):
            raise ParameterError("Z_factor must be l x K")
        if self.mode == "identical" and self.U_factor is not None and np.shape(self.U_factor) != (self.l, self.K):
            raise ParameterError("U_factor must be l x K")

    @property
    def chi(self) -> float:
        return self.K / self.l

    def matrix(self) -> np.ndarray:
        """The composed channel matrix."""
        if self.mode == "product":
            return self.X_factor @ self.Z_factor @ self.Phi_factor
        if self.mode == "hadamard":
            return self.X_factor * (self.Z_factor @ self.Phi_factor)
        u = self.U_factor if self.U_factor is not None else self.Z_factor
        return self.X_factor @ u @ self.Phi_factor

    def check(self, delta: float = 0.5) -> dict:
        """Sample checks on the random factor.

        Returns the entry mean and variance of ``Z`` (times ``l``), the
        Lindeberg tail mass above ``delta`` and, for an isometric spreading
        factor, ``max |U^H U - I|``.
        """
        z = self.Z_factor
        out = {"z_mean": complex(z.mean()), "z_var_times_l": float(np.var(z) * self.l),
               "lindeberg": lindeberg_mass(z, delta, self.K)}
        if self.U_factor is not None:
            u = self.U_factor
            out["unitarity"] = float(np.max(np.abs(u.conj().T @ u - np.eye(self.K))))
        return out


def lindeberg_mass(matrix, delta: float, K: int | None = None) -> float:
    """``(1/K) sum |Z_ij|^2 1{|Z_ij| >= delta}`` over the sample."""
    z = np.asarray(matrix)
    K = K or z.shape[1]
    a = np.abs(z)
    return float(np.sum(np.where(a >= delta, a * a, 0.0)) / K)


def allocation_mask(l: int, K: int, r: float) -> np.ndarray:
    """Staggered sub-channel allocation: user ``k`` gets rows ``(k + t) mod l`` for ``t < round(r l)``."""
    if not 0.0 <= r <= 1.0:
        raise ParameterError("r must lie in [0, 1]")
    m = int(round(r * l))
    mask = np.zeros((l, K))
    for k in range(K):
        mask[(k + np.arange(m)) % l, k] = 1.0
    return mask


def sample_model(l: int, K: int, mode: str = "hadamard", seed: int = 0, *, coeffs=None, phi=None,
                 spreading: str = "iid") -> RandomChannelModel:
    """Draw ``Z`` (complex Gaussian, variance ``1/l``) and assemble a model.

    Parameters
    ----------
    coeffs : array_like or float, optional
        ``X`` factor: ``l x K`` for hadamard, ``l x l`` or a diagonal vector
        for product, a scalar or length-``l`` vector of averaged coefficients
        for identical.  Default all ones / identity.
    phi : array_like, optional
        Diagonal of ``Phi`` (length ``K``) or a full ``K x K`` matrix.
    spreading : {"iid", "haar"}
        Identical mode only: ``iid`` uses ``Z`` itself as the spreading
        factor, ``haar`` an exact isometry (needs ``K <= l``).
    """
    if mode not in MODES:
        raise UnsupportedModeError(f"unknown mode {mode!r}")
    rng = derive_rng(seed)
    z = _cn(rng, (l, K), 1.0 / l)
    if phi is None:
        phi_m = np.eye(K)
    else:
        phi = np.asarray(phi)
        phi_m = np.diag(phi) if phi.ndim == 1 else phi
    if mode == "hadamard":
        x = np.ones((l, K)) if coeffs is None else np.broadcast_to(np.asarray(coeffs), (l, K)).copy()
        if phi is not None and not np.allclose(phi_m, np.diag(np.diag(phi_m))):
            raise ParameterError("hadamard mode needs a diagonal Phi")
        return RandomChannelModel(l, K, x, z, phi_m, mode)
    if mode == "product":
        if coeffs is None:
            x = np.eye(l)
        else:
            c = np.asarray(coeffs)
            x = np.diag(c) if c.ndim == 1 else c
        return RandomChannelModel(l, K, x, z, phi_m, mode)
    c = 1.0 if coeffs is None else coeffs
    x = np.diag(np.broadcast_to(np.asarray(c), (l,)).astype(complex))
    if spreading == "iid":
        u = None
    elif spreading == "haar":
        u = haar_isometry(l, K, rng)
    else:
        raise ParameterError(f"unknown spreading {spreading!r}")
    return RandomChannelModel(l, K, x, z, phi_m, mode, U_factor=u)


def build_output(model: RandomChannelModel, input_matrix, noise) -> np.ndarray:
    """``Y = F S + N`` for the ``K x N`` user input ``S`` and ``l x N`` noise ``N``."""
    s = np.atleast_2d(np.asarray(input_matrix))
    n = np.atleast_2d(np.asarray(noise))
    if s.shape[0] != model.K:
        raise ParameterError("input must have K rows")
    if n.shape != (model.l, s.shape[1]):
        raise ParameterError("noise must be l x N")
    return model.matrix() @ s + n


# ---------------------------------------------------------------------------
# profiles


@dataclass(frozen=True)
class ProfileFunction:
    """Piecewise-constant function on ``[0,1]^2``; ``grid[i, j]`` is the value on block ``(i, j)``."""

    grid: np.ndarray
    kind: str = "variance_profile"

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        if g.ndim != 2 or g.size == 0:
            raise ParameterError("profile grid must be a nonempty 2-D array")
        if np.any(g < 0) or not np.all(np.isfinite(g)):
            raise ParameterError("profile values must be finite and nonnegative")
        if self.kind not in ("variance_profile", "channel_profile"):
            raise ParameterError(f"unknown profile kind {self.kind!r}")
        object.__setattr__(self, "grid", g)

    @classmethod
    def constant(cls, value: float, rows: int, cols: int) -> "ProfileFunction":
        return cls(np.full((rows, cols), float(value)))

    @classmethod
    def from_callable(cls, fn: Callable, rows: int, cols: int) -> "ProfileFunction":
        """Sample ``fn(a, b)`` at block midpoints."""
        a = (np.arange(rows) + 0.5) / rows
        b = (np.arange(cols) + 0.5) / cols
        return cls(np.asarray(fn(a[:, None], b[None, :]), dtype=float) * np.ones((rows, cols)))

    def __call__(self, a, b):
        rows, cols = self.grid.shape
        i = np.minimum((np.asarray(a) * rows).astype(int), rows - 1)
        j = np.minimum((np.asarray(b) * cols).astype(int), cols - 1)
        return self.grid[i, j]


def channel_profile(model: RandomChannelModel) -> ProfileFunction:
    """Block profile ``|Phi_k|^2 |X_ik|^2`` of a hadamard-mode model."""
    if model.mode != "hadamard":
        raise UnsupportedModeError("a channel profile is defined for the hadamard mode only")
    phi = np.abs(np.diag(model.Phi_factor)) ** 2
    return ProfileFunction(np.abs(model.X_factor) ** 2 * phi[None, :], kind="channel_profile")


class ProfileSolution(NamedTuple):
    eta: float
    nu: float
    W_grid: np.ndarray
    Upsilon_grid: np.ndarray


def _profile_fixed_point(v, chi, gamma, cfg):
    rows, cols = v.shape

    def update(z):
        w, u = z[:rows], z[rows:]
        w_new = 1.0 / (1.0 + chi * gamma * (v @ u) / cols)
        u_new = 1.0 / (1.0 + gamma * (v.T @ w) / rows)
        return np.concatenate([w_new, u_new])

    z, res, it = solve_fixed_point(update, np.ones(rows + cols), cfg)
    return z[:rows], z[rows:], res


def profile_eta_nu(profile: ProfileFunction, chi: float, gamma: float,
                   cfg: FixedPointConfig | None = None) -> ProfileSolution:
    """Transforms of ``F F^H`` from a variance profile.

    Solves on the grid

    ``W(a) = 1 / (1 + chi gamma E[var(a, Y) Upsilon(Y)])``,
    ``Upsilon(b) = 1 / (1 + gamma E[var(X, b) W(X)])``

    and returns ``eta = E[W(X)]`` and

    ``nu = chi E[log2(1 + gamma E[var W | Y])] + E[log2(1 + gamma chi E[var Upsilon | X])]
    - gamma chi E[var W Upsilon] log2 e``.
    """
    if gamma < 0 or chi <= 0:
        raise ParameterError("need gamma >= 0 and chi > 0")
    v = profile.grid
    rows, cols = v.shape
    if gamma == 0:
        return ProfileSolution(1.0, 0.0, np.ones(rows), np.ones(cols))
    w, u, _ = _profile_fixed_point(v, chi, gamma, cfg)
    eta = float(np.mean(w))
    col = (v.T @ w) / rows
    row = (v @ u) / cols
    cross = float(w @ v @ u) / (rows * cols)
    nu = (chi * np.mean(np.log1p(gamma * col)) + np.mean(np.log1p(gamma * chi * row))
          - gamma * chi * cross) * LOG2E
    return ProfileSolution(eta, float(nu), w, u)


def _nonzero_fractions(v):
    rows_nz = v.mean(axis=1) > 0
    cols_nz = v.mean(axis=0) > 0
    return rows_nz, cols_nz, float(rows_nz.mean()), float(cols_nz.mean())


def effective_ratio(profile: ProfileFunction, chi: float) -> float:
    """``chi' = chi P(E[var | Y] != 0) / P(E[var | X] != 0)``."""
    _, _, p_x, p_y = _nonzero_fractions(profile.grid)
    if p_x == 0:
        raise ParameterError("profile is identically zero")
    return chi * p_y / p_x


def high_snr_tau(profile: ProfileFunction, chi: float, cfg: FixedPointConfig | None = None,
                 ratio_tol: float = 1e-12) -> tuple[float, float]:
    """High-SNR offset ``tau_inf = lim log2(gamma chi) - nu(gamma) / min(chi P_Y, P_X)``.

    ``P_X``, ``P_Y`` are the fractions of rows and columns with nonzero
    energy and ``X'``, ``Y'`` are uniform on those rows and columns.

    * ``chi' < 1``: ``W`` solves ``W(b) = (1/chi') E[v(X', b) / (1 + E[v(X', Y') / W(Y') | X'])]``
      and ``tau = -E[log2(P_Y W(Y') / e)] - (1/chi') E[log2(1 + E[v / W | X'])]``.
    * ``chi' = 1``: ``tau = -E[log2(P_Y v(X', Y') / e)]``.
    * ``chi' > 1``: ``p`` solves ``p(b) = (1/chi') E[v(X', b) / E[v / (1 + p(Y')) | X']]`` and
      ``tau = -E[log2(P_Y E[v / (1 + p) | X'] / e)] - chi' E[log2(1 + p(Y'))]``.

    Returns
    -------
    (chi_prime, tau_inf)
    """
    v = profile.grid
    rows_nz, cols_nz, p_x, p_y = _nonzero_fractions(v)
    if p_x == 0:
        raise ParameterError("profile is identically zero")
    cp = chi * p_y / p_x
    vr = v[rows_nz][:, cols_nz]
    if abs(cp - 1.0) <= ratio_tol:
        if np.any(vr <= 0):
            raise ParameterError("chi' = 1 needs a profile without zero blocks on its support")
        return cp, float(-np.mean(np.log2(p_y * vr)) + LOG2E)
    if cp < 1.0:
        def update(w):
            inner = 1.0 + vr @ (1.0 / w) / vr.shape[1]
            return (vr / inner[:, None]).mean(axis=0) / cp

        w, _, _ = solve_fixed_point(update, np.ones(vr.shape[1]), cfg)
        inner = 1.0 + vr @ (1.0 / w) / vr.shape[1]
        check = float(np.mean(1.0 / inner))
        if abs(check - (1.0 - cp)) > 1e-6:
            raise ConvergenceError("implicit equation for W not satisfied", residual=abs(check - (1.0 - cp)))
        tau = -np.mean(np.log2(p_y * w)) + LOG2E - np.mean(np.log2(inner)) / cp
        return cp, float(tau)

    def update(p):
        inner = vr @ (1.0 / (1.0 + p)) / vr.shape[1]
        return (vr / inner[:, None]).mean(axis=0) / cp

    p, _, _ = solve_fixed_point(update, np.ones(vr.shape[1]), cfg)
    inner = vr @ (1.0 / (1.0 + p)) / vr.shape[1]
    tau = -np.mean(np.log2(p_y * inner)) + LOG2E - cp * np.mean(np.log2(1.0 + p))
    return cp, float(tau)


def tau_asymptote_fit(profile: ProfileFunction, chi: float, gammas=(1e3, 1e4, 1e5),
                      cfg: FixedPointConfig | None = None) -> float:
    """Estimate ``tau_inf`` by fitting ``tau(gamma) = tau_inf + c / gamma`` to the finite-SNR offset."""
    _, _, p_x, p_y = _nonzero_fractions(profile.grid)
    denom = min(chi * p_y, p_x)
    g = np.asarray(gammas, dtype=float)
    tau = np.array([math.log2(x * chi) - profile_eta_nu(profile, chi, x, cfg).nu / denom for x in g])
    design = np.column_stack([np.ones_like(g), 1.0 / g])
    coef, *_ = np.linalg.lstsq(design, tau, rcond=None)
    return float(coef[0])


# ---------------------------------------------------------------------------
# product decomposition


class DecomposedSolution(NamedTuple):
    eta: float
    nu: float
    gamma_d: float
    gamma_t: float


def _g(samples, t):
    return float(np.mean(samples / (1.0 + t * samples)))


def decomposed_eta_nu(model, gamma: float, cfg: FixedPointConfig | None = None) -> DecomposedSolution:
    """Transforms of ``F F^H`` for ``F = X Z Phi`` from the spectra of ``X X^H`` and ``Phi Phi^H``.

    ``gamma_d``, ``gamma_t`` solve

    ``gamma_d gamma_t / gamma = 1 - eta_T(gamma_t)`` and
    ``chi gamma_d gamma_t / gamma = 1 - eta_D(chi gamma_d)``,

    iterated as ``gamma_d = gamma E[T / (1 + gamma_t T)]``,
    ``gamma_t = gamma E[D / (1 + chi gamma_d D)]``.  Then
    ``eta = eta_D(chi gamma_d)`` and
    ``nu = nu_D(chi gamma_d) + chi nu_T(gamma_t) - chi (gamma_d gamma_t / gamma) log2 e``.

    Parameters
    ----------
    model : RandomChannelModel or tuple
        A product-mode model, or ``(d_samples, t_samples, chi)``.
    """
    if isinstance(model, RandomChannelModel):
        if model.mode != "product":
            raise UnsupportedModeError("the decomposition needs a product-mode model")
        d = spectrum(model.X_factor, "left").eigenvalues
        t = spectrum(model.Phi_factor, "left").eigenvalues
        chi = model.chi
    else:
        d, t, chi = model
        d, t = np.asarray(d, dtype=float), np.asarray(t, dtype=float)
    if gamma < 0:
        raise ParameterError("gamma must be nonnegative")
    if gamma == 0:
        return DecomposedSolution(1.0, 0.0, 0.0, 0.0)

    def update(z):
        gd, gt = z
        return np.array([gamma * _g(t, gt), gamma * _g(d, chi * gd)])

    (gd, gt), _, _ = solve_fixed_point(update, np.array([gamma * np.mean(t), gamma * np.mean(d)]), cfg)
    s = chi * gd
    eta = eta_transform(SpectralSummary(d), s)
    nu = nu_transform(SpectralSummary(d), s) + chi * nu_transform(SpectralSummary(t), gt) - chi * gd * gt / gamma * LOG2E
    return DecomposedSolution(float(eta), float(nu), float(gd), float(gt))


# ---------------------------------------------------------------------------
# multiuser efficiency


class MultiuserEfficiency(NamedTuple):
    eta_uk: np.ndarray
    F_grid: np.ndarray
    psi_grid: np.ndarray
    phi_k: np.ndarray


def _hadamard_efficiency(rho, phi_sq, chi, snr, cfg):
    rows, cols = rho.shape
    if snr == 0:
        psi = np.ones(rows)
    else:
        def update(p):
            F = rho.T @ p / rows
            return 1.0 / (1.0 + snr * chi * (rho @ (1.0 / (1.0 + snr * F))) / cols)

        psi, _, _ = solve_fixed_point(update, np.ones(rows), cfg)
    F = rho.T @ psi / rows
    energy = rho.mean(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        eta = np.where(energy > 0, F / np.where(energy > 0, energy, 1.0), np.nan)
        phi_k = np.where(phi_sq > 0, F / np.where(phi_sq > 0, phi_sq, 1.0), np.nan)
    return MultiuserEfficiency(eta, F, psi, phi_k)


def identical_efficiency(c_sq, v_sq, chi: float, snr: float, cfg: FixedPointConfig | None = None) -> float:
    """Scalar multiuser efficiency for users sharing the same sub-channels.

    ``eta = E[c / (1 + snr chi c E[v / (1 + E[c] snr v eta)])] / E[c]`` with
    ``c = |C|^2`` the averaged-coefficient power and ``v`` the user power.
    Depends on ``snr`` and ``c`` only through ``snr E[c]`` and ``c / E[c]``.
    """
    c = np.atleast_1d(np.asarray(c_sq, dtype=float))
    v = np.atleast_1d(np.asarray(v_sq, dtype=float))
    if snr < 0:
        raise ParameterError("snr must be nonnegative")
    mc = float(c.mean())
    if snr == 0 or mc == 0:
        return 1.0

    def rhs(e):
        inner = float(np.mean(v / (1.0 + mc * snr * v * e)))
        return float(np.mean(c / (1.0 + snr * chi * c * inner))) / mc

    return solve_scalar_fixed_point(rhs, cfg)


def _identical_factors(model):
    c_sq = np.abs(np.diag(model.X_factor)) ** 2
    v_sq = np.abs(np.diag(model.Phi_factor)) ** 2
    return c_sq, v_sq


def multiuser_efficiency(model: RandomChannelModel, snr_star: float,
                         cfg: FixedPointConfig | None = None) -> MultiuserEfficiency:
    """Large-system multiuser efficiency of every user.

    Hadamard mode: on the channel profile ``rho``,

    ``psi(a) = 1 / (1 + snr chi E[rho(a, Y) / (1 + snr F(Y))])``,
    ``F(b) = E[rho(X, b) psi(X)]``,

    ``eta_k = F(b_k) / E[rho(X, b_k)]`` and ``phi_k = F(b_k) / |Phi_k|^2``.
    Users without energy get ``nan``.

    Identical mode: the scalar fixed point of :func:`identical_efficiency`,
    reported for every user, with ``F = eta E[|C|^2] |v_k|^2``.
    """
    if snr_star < 0:
        raise ParameterError("snr_star must be nonnegative")
    if model.mode == "hadamard":
        rho = channel_profile(model).grid
        phi_sq = np.abs(np.diag(model.Phi_factor)) ** 2
        return _hadamard_efficiency(rho, phi_sq, model.chi, snr_star, cfg)
    if model.mode == "identical":
        c_sq, v_sq = _identical_factors(model)
        eta = identical_efficiency(c_sq, v_sq, model.chi, snr_star, cfg)
        mc = float(c_sq.mean())
        inner = float(np.mean(v_sq / (1.0 + mc * snr_star * v_sq * eta)))
        psi = 1.0 / (1.0 + snr_star * model.chi * c_sq * inner)
        F = eta * mc * v_sq
        with np.errstate(invalid="ignore", divide="ignore"):
            phi_k = np.where(v_sq > 0, F / np.where(v_sq > 0, v_sq, 1.0), np.nan)
        return MultiuserEfficiency(np.full(model.K, eta), F, psi, phi_k)
    raise UnsupportedModeError("multiuser efficiency needs the hadamard or identical mode")


def mmse_efficiency_sim(l: int, K: int, snr: float, c_sq: float = 1.0, v_sq=None, trials: int = 4,
                        seed: int = 0) -> float:
    """Average MMSE multiuser efficiency of ``C S A`` with i.i.d. spreading ``S`` (variance ``1/l``).

    For user ``k`` with column ``h_k`` the efficiency is
    ``SINR_k / (snr |h_k|^2)``, ``SINR_k = snr h_k^H (I + snr sum_{j != k} h_j h_j^H)^-1 h_k``.
    """
    vals = []
    v = np.ones(K) if v_sq is None else np.asarray(v_sq, dtype=float)
    for tr in range(trials):
        rng = derive_rng(seed, tr)
        h = math.sqrt(c_sq) * _cn(rng, (l, K), 1.0 / l) * np.sqrt(v)[None, :]
        full = np.eye(l) + snr * h @ h.conj().T
        inv = np.linalg.inv(full)
        # h^H (A - s h h^H)^-1 h = q / (1 - s q) with q = h^H A^-1 h
        q = np.real(np.einsum("ik,ij,jk->k", h.conj(), inv, h))
        sinr = snr * q / (1.0 - snr * q)
        vals.append(sinr / (snr * np.sum(np.abs(h) ** 2, axis=0)))
    return float(np.mean(vals))


# ---------------------------------------------------------------------------
# symmetric capacity


class CapacityResult(NamedTuple):
    p_sym: float
    s_sym_bound: float
    f_eff: float


def _sic_ell(rho, chi, snr, cfg=None):
    # SINR of the user at column b when the users in (b, 1] are still undecoded:
    # the MMSE efficiency of the residual system on [b, 1], whose own block
    # enters with half weight at its midpoint
    rows, cols = rho.shape
    ell = np.zeros(cols)
    F = rho.mean(axis=0)
    for j in range(cols - 1, -1, -1):
        sub = rho[:, j:]
        w = np.full(cols - j, 1.0 / cols)
        w[0] = 0.5 / cols

        def update(f, sub=sub, w=w):
            psi = 1.0 / (1.0 + snr * chi * (sub @ (w / (1.0 + snr * f))))
            return sub.T @ psi / rows

        F[j:], _, _ = solve_fixed_point(update, F[j:].copy(), cfg)
        ell[j] = F[j]
    return ell


def _sic_ell_printed(rho, chi, snr):
    # the recursion with each interferer's own cancellation SINR ell(Z) in the load
    rows, cols = rho.shape
    ell = np.zeros(cols)
    tail = np.zeros(rows)
    for j in range(cols - 1, -1, -1):
        col = rho[:, j]
        if not np.any(col > 0):
            continue

        def rhs(e, col=col):
            load = (0.5 * col / (1.0 + snr * e) + tail) / cols
            return float(np.mean(col / (1.0 + snr * chi * load)))

        ell[j] = optimize.brentq(lambda e: e - rhs(e), 0.0, float(col.mean()), xtol=1e-14, rtol=1e-13)
        tail = tail + col / (1.0 + snr * ell[j])
    return ell


def p_sym_long_form(model: RandomChannelModel, snr_total: float, cfg: FixedPointConfig | None = None) -> float:
    """Symmetric capacity from the joint fixed point (hadamard mode).

    ``(1/K) (f_eff + E[log2(1 + snr chi E[rho Upsilon | X])] - chi snr E[F Upsilon] log2 e)``
    with ``Upsilon(b) = 1 / (1 + snr F(b))``.
    """
    if model.mode != "hadamard":
        raise UnsupportedModeError("the long form needs the hadamard mode")
    if snr_total == 0:
        return 0.0
    rho = channel_profile(model).grid
    sol = _hadamard_efficiency(rho, np.ones(model.K), model.chi, snr_total, cfg)
    F = sol.F_grid
    ups = 1.0 / (1.0 + snr_total * F)
    chi = model.chi
    f_eff = chi * float(np.mean(np.log2(1.0 + snr_total * F)))
    mid = float(np.mean(np.log2(1.0 + snr_total * chi * (rho @ ups) / model.K)))
    last = chi * snr_total * float(np.mean(F * ups)) * LOG2E
    return (f_eff + mid - last) / model.K


def identical_eta(c_sq, chi: float, gamma: float, cfg: FixedPointConfig | None = None) -> float:
    """``eta`` of ``F F^H`` for identical sub-channels: ``eta = eta_D(gamma (chi - 1 + eta))``."""
    c = np.atleast_1d(np.asarray(c_sq, dtype=float))
    if gamma == 0:
        return 1.0

    def rhs(e):
        arg = gamma * max(chi - 1.0 + e, 0.0)
        return float(np.mean(1.0 / (1.0 + arg * c)))

    return solve_scalar_fixed_point(rhs, cfg)


def identical_sic_ell(y: float, snr: float, c_sq, chi: float, method: str = "residual",
                      cfg: FixedPointConfig | None = None) -> float:
    """Cancellation SINR of the user at position ``y`` on identical sub-channels (unit user powers).

    ``residual``: ``snr E[c] eta(load chi (1 - y))``, the MMSE SINR against the
    users still undecoded; ``chi E[log2(1 + ell(Y))]`` then equals the Shannon
    transform.  ``printed``: the root of
    ``ell / (1 + ell) = E[snr c / (chi y snr c + 1 + (1 - chi y) ell)]``,
    which is solved by the interference-free value ``ell = snr c``.
    """
    c = np.atleast_1d(np.asarray(c_sq, dtype=float))
    if method == "residual":
        load = chi * (1.0 - y)
        if load <= 0:
            return snr * float(c.mean())
        return snr * float(c.mean()) * identical_efficiency(c, 1.0, load, snr, cfg)
    if method == "printed":
        def f(e):
            return e / (1.0 + e) - float(np.mean(snr * c / (chi * y * snr * c + 1.0 + (1.0 - chi * y) * e)))
        return optimize.brentq(f, 0.0, 10.0 * snr * float(c.max()) + 1.0, xtol=1e-14)
    raise ParameterError(f"unknown method {method!r}")


def eta_integral(eta: Callable[[float], float], gamma: float) -> float:
    """``int_0^gamma (1 - eta(x)) / x dx`` (equals ``nu(gamma) ln 2``)."""
    if gamma == 0:
        return 0.0
    f = lambda x: (1.0 - eta(x)) / x if x > 0 else 0.0
    pts = [p for p in (1.0, 10.0, 100.0) if p < gamma]
    return integrate(f, 0.0, gamma, points=pts or None, epsabs=1e-11, epsrel=1e-9)


def p_sym_s_sym(model: RandomChannelModel, snr_total: float, cfg: FixedPointConfig | None = None,
                spectrum_: SpectralSummary | None = None, check: bool = True,
                ell_method: str = "residual") -> CapacityResult:
    """Symmetric private capacity ``P_sym`` and the key-rate bound ``S_sym <= P_sym``.

    Hadamard mode: ``P_sym = (1/K) chi E[log2(1 + snr ell(Y))]`` with the
    successive-cancellation function

    ``ell(b) = E[rho(X, b) / (1 + snr chi (1 - b) E[rho(X, Z) / (1 + snr ell(Z)) | X])]``,
    ``Z ~ U[b, 1]``, where the interference term ``1 / (1 + snr ell(Z))`` is
    taken from the MMSE fixed point of the residual system of users in
    ``[b, 1]`` (``ell_method="residual"``).  ``ell_method="printed"`` feeds
    each interferer's own cancellation SINR ``ell(Z)`` back instead, which
    overstates the rate by a few percent at high SNR.  The result is checked
    against :func:`p_sym_long_form` (1%).

    Identical mode: ``P_sym = (1/K) log2(e) int_0^snr (1 - eta(x)) / x dx``
    with ``eta`` from :func:`identical_eta` (unit user powers), from
    :func:`decomposed_eta_nu` with the coefficient and user-power spectra
    otherwise, or from ``spectrum_`` (eigenvalues of ``F F^H``) when given.

    ``f_eff = chi E[log2(1 + snr F(Y))]``.
    """
    if snr_total < 0:
        raise ParameterError("snr_total must be nonnegative")
    chi = model.chi
    if snr_total == 0:
        return CapacityResult(0.0, 0.0, 0.0)
    if model.mode == "hadamard":
        rho = channel_profile(model).grid
        if ell_method == "residual":
            ell = _sic_ell(rho, chi, snr_total, cfg)
        elif ell_method == "printed":
            ell = _sic_ell_printed(rho, chi, snr_total)
        else:
            raise ParameterError(f"unknown ell_method {ell_method!r}")
        p = chi * float(np.mean(np.log2(1.0 + snr_total * ell))) / model.K
        sol = _hadamard_efficiency(rho, np.ones(model.K), chi, snr_total, cfg)
        f_eff = chi * float(np.mean(np.log2(1.0 + snr_total * sol.F_grid)))
        p_x, p_y = _nonzero_fractions(rho)[2:]
        gate = p_x > 0 and chi * p_y / p_x < 1.0
        log.debug("effective load below one: %s", gate)
        if check:
            long = p_sym_long_form(model, snr_total, cfg)
            if long > 0 and abs(p - long) > 0.01 * long:
                warnings.warn(f"short and long capacity forms differ: {p} vs {long}", RuntimeWarning)
    elif model.mode == "identical":
        c_sq, v_sq = _identical_factors(model)
        if spectrum_ is not None:
            eta = lambda x: eta_transform(spectrum_, x)
        elif np.all(v_sq == 1.0):
            eta = lambda x: identical_eta(c_sq, chi, x, cfg)
        else:
            eta = lambda x: decomposed_eta_nu((c_sq, v_sq, chi), x, cfg).eta
        p = eta_integral(eta, snr_total) * LOG2E / model.K
        if check and spectrum_ is None and np.ptp(c_sq) == 0 and np.ptp(v_sq) == 0:
            vsum = float(v_sq[0])
            f = lambda y: math.log2(1.0 + identical_sic_ell(y, snr_total * vsum, c_sq, chi, cfg=cfg))
            alt = chi * integrate(f, 0.0, 1.0, epsabs=1e-11, epsrel=1e-9) / model.K
            if p > 0 and abs(alt - p) > 0.01 * p:
                warnings.warn(f"cancellation and eta-integral capacity forms differ: {alt} vs {p}",
                              RuntimeWarning)
        e_uk = identical_efficiency(c_sq, v_sq, chi, snr_total, cfg)
        f_eff = chi * float(np.mean(np.log2(1.0 + c_sq.mean() * snr_total * v_sq * e_uk)))
    else:
        raise UnsupportedModeError("capacity needs the hadamard or identical mode")
    if p < 0:
        warnings.warn(f"negative capacity {p} clamped to zero", RuntimeWarning)
        p = 0.0
    return CapacityResult(p, p, f_eff)


def trace_identity(model: RandomChannelModel, snr_total: float, form: str = "density") -> tuple[float, float]:
    """``(1/K) Tr((I + snr F^H F)^-1)`` against its large-system value.

    ``form="density"`` integrates ``1 / (1 + snr x)`` against the
    Marchenko-Pastur law (atom included); ``form="eta"`` uses
    ``1 - (1 - eta(snr)) / chi`` with ``eta`` of ``F F^H`` from the unit
    profile.  Both assume i.i.d. unit-variance (times ``1/l``) entries.
    """
    f = model.matrix()
    K = model.K
    ev = np.linalg.eigvalsh(f.conj().T @ f)
    lhs = math.fsum((1.0 / (1.0 + snr_total * np.clip(ev, 0.0, None))).tolist()) / K
    chi = model.chi
    if form == "density":
        rhs = MarchenkoPastur(chi).expect(lambda x: 1.0 / (1.0 + snr_total * x))
    elif form == "eta":
        eta = identical_eta(1.0, chi, snr_total)
        rhs = 1.0 - (1.0 - eta) / chi
    else:
        raise ParameterError(f"unknown form {form!r}")
    return lhs, rhs


# ---------------------------------------------------------------------------
# export


def write_spectrum_csv(path, spec: SpectralSummary) -> None:
    write_csv(path, ["lambda"], ([x] for x in spec.eigenvalues))


def write_transform_csv(path, spec, gammas) -> None:
    write_csv(path, ["gamma", "eta", "nu"], ([g, eta_transform(spec, g), nu_transform(spec, g)] for g in gammas))


def write_mp_csv(path, chi: float, xs) -> None:
    write_csv(path, ["x", "f_chi"], ([x, mp_density(chi, x)] for x in xs))


def empirical_dist(spec: SpectralSummary) -> EmpiricalDist:
    return EmpiricalDist.from_sample(spec.eigenvalues)
