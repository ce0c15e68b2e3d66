"""Sub-channel selection statistics and large-system multiuser capacity.

Modules
-------
channel
    Transmittance vectors, DFT images, security thresholds and SNR terms.
orderstats
    Ordered, joint, conditional and partial-sum densities of i.i.d. coefficients.
mgf
    MGFs, Craig-form Q integrals and averaged error rates.
selection
    The three selection operators, their probabilities, iteration counts and MGFs.
randmat
    Spectra, eta/Shannon transforms, fixed points and symmetric capacity.
montecarlo
    Seeded trial streams, empirical distributions and distances.
estimators
    scikit-learn style wrappers.
"""

from .channel import Threshold, TransmittanceVector, sample_transmittance_vector
from .estimators import SpectralTransformer, SubchannelSelector
from .exceptions import (ConvergenceError, DomainError, NumericError, ParameterError, SingularityError,
                         UnsupportedModeError)
from .montecarlo import EmpiricalDist, TrialPlan, derive_rng, ks_distance, run_trials
from .orderstats import DistributionDescriptor, OrderedEnsemble, exponential
from .randmat import MarchenkoPastur, RandomChannelModel, eta_transform, nu_transform, sample_model, spectrum
from .selection import operator_mgf, run_operator, run_operator_batch

__version__ = "0.1.0"

__all__ = [
    "Threshold", "TransmittanceVector", "sample_transmittance_vector", "SpectralTransformer",
    "SubchannelSelector", "ConvergenceError", "DomainError", "NumericError", "ParameterError",
    "SingularityError", "UnsupportedModeError", "EmpiricalDist", "TrialPlan", "derive_rng", "ks_distance",
    "run_trials", "DistributionDescriptor", "OrderedEnsemble", "exponential", "MarchenkoPastur",
    "RandomChannelModel", "eta_transform", "nu_transform", "sample_model", "spectrum", "operator_mgf",
    "run_operator", "run_operator_batch",
]
