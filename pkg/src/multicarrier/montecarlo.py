"""Sampling harness, empirical distributions and goodness-of-fit distances.

Every trial draws from its own Philox stream.  The stream for trial ``i`` under
master seed ``s`` uses key ``s`` and starts at counter ``i << 128``, so streams
are disjoint and depend only on ``(s, i)``, never on scheduling.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ._csv import write_csv
from .exceptions import NumericError, ParameterError

_KEY_MASK = (1 << 128) - 1


def derive_rng(seed: int, index: int = 0) -> np.random.Generator:
    """Return the generator for stream ``index`` under master ``seed``.

    Parameters
    ----------
    seed : int
        Nonnegative master seed; reduced modulo 2**128 to form the Philox key.
    index : int
        Stream index in ``[0, 2**128)``.

    Returns
    -------
    numpy.random.Generator
    """
    seed = int(seed)
    index = int(index)
    if seed < 0:
        raise ParameterError("seed must be nonnegative")
    if not 0 <= index <= _KEY_MASK:
        raise ParameterError("stream index out of range")
    bitgen = np.random.Philox(key=seed & _KEY_MASK, counter=index << 128)
    return np.random.Generator(bitgen)


def stream_id(seed: int, index: int) -> tuple[int, int]:
    """Philox ``(key, counter)`` pair identifying a trial stream."""
    return int(seed) & _KEY_MASK, int(index) << 128


@dataclass(frozen=True)
class TrialPlan:
    """How many trials to run and from which master seed."""

    trials: int
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise ParameterError("trials must be at least 1")
        if self.workers < 1:
            raise ParameterError("workers must be at least 1")


class TrialFailure(RuntimeError):
    """One or more trials raised; carries the failing seeds."""

    def __init__(self, failures):
        self.failures = failures
        lines = [f"trial {i} (seed={s}, stream={i}): {e!r}" for i, s, e in failures]
        super().__init__(f"{len(failures)} trial(s) failed:\n" + "\n".join(lines))


def _fsum_columns(values: np.ndarray) -> np.ndarray:
    if values.ndim == 1:
        return np.array(math.fsum(values.tolist()))
    return np.array([math.fsum(col) for col in values.T.tolist()])


@dataclass(frozen=True)
class TrialAggregate:
    """Per-trial values plus order-independent summary statistics."""

    values: np.ndarray
    mean: np.ndarray | float
    variance: np.ndarray | float
    n: int = field(default=0)

    @property
    def std_error(self):
        return np.sqrt(np.asarray(self.variance) / self.n)

    def histogram(self, bins=50, range=None):
        """Histogram of scalar trial values, returns ``(edges, counts)``."""
        counts, edges = np.histogram(np.ravel(self.values), bins=bins, range=range)
        return edges, counts


def aggregate(values) -> TrialAggregate:
    """Mean and unbiased variance with compensated (``math.fsum``) reductions."""
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    mean = _fsum_columns(values) / n
    if n > 1:
        var = _fsum_columns((values - mean) ** 2) / (n - 1)
    else:
        var = np.zeros_like(mean)
    if values.ndim == 1:
        mean, var = float(mean), float(var)
    return TrialAggregate(values=values, mean=mean, variance=var, n=n)


def run_trials(plan: TrialPlan, trial_fn: Callable[[np.random.Generator], object]) -> TrialAggregate:
    """Run ``plan.trials`` independent trials and aggregate their outputs.

    ``trial_fn`` receives the derived generator for its trial and returns a
    scalar or a 1-D array.  Results are stored by trial index before any
    reduction, so the aggregate does not depend on ``plan.workers``.

    Raises
    ------
    TrialFailure
        If any trial raised; lists every failing index with its seed.
    """
    results: list = [None] * plan.trials
    failures = []

    def one(i):
        try:
            results[i] = np.asarray(trial_fn(derive_rng(plan.seed, i)), dtype=float)
        except Exception as exc:  # noqa: BLE001 - reported with the seed below
            failures.append((i, plan.seed, exc))

    if plan.workers == 1:
        for i in range(plan.trials):
            one(i)
    else:
        with ThreadPoolExecutor(max_workers=plan.workers) as pool:
            list(pool.map(one, range(plan.trials)))
    if failures:
        raise TrialFailure(sorted(failures, key=lambda f: f[0]))
    return aggregate(np.stack(results))


@dataclass(frozen=True)
class EmpiricalDist:
    """Sorted sample defining a right-continuous empirical CDF."""

    sorted_sample: np.ndarray
    n: int

    @classmethod
    def from_sample(cls, sample) -> "EmpiricalDist":
        x = np.sort(np.ravel(np.asarray(sample, dtype=float)))
        if x.size == 0:
            raise ParameterError("empty sample")
        return cls(sorted_sample=x, n=int(x.size))


def empirical_cdf(d: EmpiricalDist, x):
    """Fraction of the sample that is ``<= x`` (vectorized in ``x``)."""
    out = np.searchsorted(d.sorted_sample, x, side="right") / d.n
    return float(out) if np.ndim(out) == 0 else out


def _eval_cdf(cdf: Callable, x: np.ndarray) -> np.ndarray:
    try:
        v = np.asarray(cdf(x), dtype=float)
        if v.shape == x.shape:
            return v
    except (TypeError, ValueError):
        pass
    return np.asarray([cdf(float(xi)) for xi in x], dtype=float)


def ks_distance(d: EmpiricalDist, cdf: Callable) -> float:
    """Kolmogorov distance between the sample and a reference CDF.

    The comparison is made on both sides of every jump: at ``x`` the empirical
    value ``F_n(x)`` is compared with ``F(x)`` and the left limit ``F_n(x-)``
    with ``F(x-)``.  For a continuous ``F`` this is the usual statistic.
    ``cdf`` may be scalar-only; array evaluation is tried first.
    """
    xs = np.unique(d.sorted_sample)
    right = np.searchsorted(d.sorted_sample, xs, side="right") / d.n
    left = np.searchsorted(d.sorted_sample, xs, side="left") / d.n
    f_at = _eval_cdf(cdf, xs)
    f_left = _eval_cdf(cdf, np.nextafter(xs, -np.inf))
    return float(max(np.max(np.abs(right - f_at)), np.max(np.abs(left - f_left))))


def dkw_epsilon(n: int, alpha: float = 0.01) -> float:
    """Half-width of the Dvoretzky-Kiefer-Wolfowitz band at level ``1 - alpha``."""
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * n))


def empirical_spectrum(matrix) -> EmpiricalDist:
    """Eigenvalues of the smaller Gram matrix of ``matrix``, clamped at zero.

    For an ``l x K`` matrix with ``K < l`` the spectrum of ``F^H F`` is used,
    otherwise that of ``F F^H``; the result has ``min(l, K)`` values.
    """
    f = np.atleast_2d(np.asarray(matrix))
    if not np.all(np.isfinite(f)):
        raise NumericError("matrix has non-finite entries")
    rows, cols = f.shape
    gram = f.conj().T @ f if cols < rows else f @ f.conj().T
    try:
        eig = np.linalg.eigvalsh(gram)
    except np.linalg.LinAlgError as exc:
        raise NumericError(str(exc)) from exc
    return EmpiricalDist.from_sample(np.clip(eig, 0.0, None))


def write_histogram_csv(path, edges, counts) -> None:
    """Write ``bin_lo,bin_hi,count`` rows."""
    write_csv(path, ["bin_lo", "bin_hi", "count"], zip(edges[:-1], edges[1:], counts))
