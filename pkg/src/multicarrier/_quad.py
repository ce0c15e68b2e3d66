"""Thin quadrature layer shared by the analytic modules.

All one-dimensional integrals go through :func:`integrate` so the accuracy
contract (absolute tolerance 1e-9 by default) lives in one place.
"""

import warnings

import numpy as np
from scipy import integrate as _si

from .exceptions import NumericError

ABS_TOL = 1e-9
REL_TOL = 1e-10
LIMIT = 500


def integrate(func, a, b, *, epsabs=ABS_TOL, epsrel=REL_TOL, points=None, strict=False):
    """Integrate a scalar function over ``[a, b]``.

    Infinite limits are accepted; QUADPACK maps them onto a finite interval
    internally.

    Parameters
    ----------
    func : callable
        Scalar integrand ``f(x) -> float``.
    a, b : float
        Integration limits, ``b`` may be ``np.inf``.
    epsabs, epsrel : float
        Requested absolute and relative accuracy.
    points : sequence of float, optional
        Interior break points (finite intervals only).
    strict : bool
        Raise :class:`NumericError` when QUADPACK reports a problem instead of
        returning the best estimate.

    Returns
    -------
    float
    """
    if a == b:
        return 0.0
    kwargs = dict(epsabs=epsabs, epsrel=epsrel, limit=LIMIT)
    if points is not None and np.isfinite(a) and np.isfinite(b):
        pts = [p for p in points if a < p < b]
        if pts:
            kwargs["points"] = pts
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", _si.IntegrationWarning)
        value, _err = _si.quad(func, a, b, **kwargs)
    if strict and caught:
        raise NumericError(str(caught[0].message))
    if not np.isfinite(value):
        raise NumericError("quadrature returned a non-finite value")
    return float(value)
