"""scikit-learn style wrappers around the selection scan and spectral transforms."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import ParameterError
from .randmat import MarchenkoPastur, SpectralSummary, eta_transform, nu_transform, spectrum
from .selection import OPERATORS, run_operator_batch


class SubchannelSelector(BaseEstimator, TransformerMixin):
    """Apply a selection operator to rows of sub-channel magnitudes.

    Each row of ``X`` holds ``n`` magnitudes ``|F(T_i)|^2`` of one
    transmission; ``transform`` returns the single-carrier power
    ``|A_j|^2`` of the chosen sub-channels, one per row.

    Parameters
    ----------
    operator : {"lambda0", "lambda", "lambda_prime"}
    l : int
        Number of sub-channels to select.
    threshold : float, optional
        Absolute threshold on the magnitude scale.
    threshold_ratio : float, optional
        Threshold as a multiple of the mean magnitude seen in ``fit``.  Used
        when ``threshold`` is not given.
    mu : float, optional
        Fallback fraction; each row then uses ``mu * max(row)``.

    Attributes
    ----------
    threshold_ : float or None
        Threshold used by ``transform`` (None in fallback mode).
    mean_magnitude_ : float
    n_features_in_ : int
    """

    def __init__(self, operator="lambda0", l=4, threshold=None, threshold_ratio=1.0, mu=None):
        self.operator = operator
        self.l = l
        self.threshold = threshold
        self.threshold_ratio = threshold_ratio
        self.mu = mu

    def _validate_params(self):
        if self.operator not in OPERATORS:
            raise ParameterError(f"unknown operator {self.operator!r}")
        if self.mu is not None:
            if not 0.0 < self.mu < 1.0:
                raise ParameterError("mu must lie in (0, 1)")
            if self.operator != "lambda0":
                raise ParameterError("the fallback threshold is defined for lambda0 only")
        if self.threshold is not None and self.threshold < 0:
            raise ParameterError("threshold must be nonnegative")

    def fit(self, X, y=None):
        self._validate_params()
        X = check_array(X, dtype=float)
        if np.any(X < 0):
            raise ParameterError("magnitudes must be nonnegative")
        if not 1 <= self.l <= X.shape[1]:
            raise ParameterError("need 1 <= l <= n_features")
        self.n_features_in_ = X.shape[1]
        self.mean_magnitude_ = float(X.mean())
        if self.mu is not None:
            self.threshold_ = None
        elif self.threshold is not None:
            self.threshold_ = float(self.threshold)
        else:
            self.threshold_ = float(self.threshold_ratio) * self.mean_magnitude_
        return self

    def scan(self, X) -> dict:
        """Per-row ``iterations``, ``a_j_sq`` and ``selected_count``."""
        check_is_fitted(self, "n_features_in_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ParameterError(f"expected {self.n_features_in_} columns, got {X.shape[1]}")
        return run_operator_batch(self.operator, X, self.l, self.threshold_, mu=self.mu)

    def transform(self, X):
        return self.scan(X)["a_j_sq"][:, None]

    def mean_iterations(self, X) -> float:
        """Average scan length over the rows of ``X``."""
        return float(np.mean(self.scan(X)["iterations"]))


class SpectralTransformer(BaseEstimator, TransformerMixin):
    """Eta and Shannon transforms of a channel-matrix spectrum.

    ``fit`` takes an ``l x K`` complex matrix (or a 1-D eigenvalue sample);
    ``transform`` maps a column of SNR values ``gamma`` to rows
    ``[eta(gamma), nu(gamma)]``.

    Parameters
    ----------
    side : {"small", "left", "right"}
        Gram orientation passed to :func:`multicarrier.randmat.spectrum`.
    reference : {"empirical", "mp"}
        ``mp`` evaluates the transforms against the Marchenko-Pastur law of
        the fitted aspect ratio instead of the eigenvalue sample.

    Attributes
    ----------
    spectrum_ : SpectralSummary
    chi_ : float
    """

    def __init__(self, side="small", reference="empirical"):
        self.side = side
        self.reference = reference

    def fit(self, X, y=None):
        if self.reference not in ("empirical", "mp"):
            raise ParameterError(f"unknown reference {self.reference!r}")
        a = np.asarray(X)
        if a.ndim == 1:
            self.spectrum_ = SpectralSummary(np.asarray(a, dtype=float), chi=1.0)
        elif a.ndim == 2:
            self.spectrum_ = spectrum(a, side=self.side)
        else:
            raise ParameterError("expected a matrix or an eigenvalue vector")
        self.chi_ = float(self.spectrum_.chi)
        return self

    def _law(self):
        if self.reference == "mp":
            return MarchenkoPastur(self.chi_)
        return self.spectrum_

    def transform(self, X):
        check_is_fitted(self, "spectrum_")
        g = check_array(np.asarray(X, dtype=float).reshape(-1, 1), dtype=float).ravel()
        if np.any(g < 0):
            raise ParameterError("gamma must be nonnegative")
        law = self._law()
        return np.array([[eta_transform(law, x), nu_transform(law, x)] for x in g]).reshape(-1, 2)
