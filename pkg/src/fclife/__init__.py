"""Fuel-cell lifetime estimation from impedance spectra.

Pipeline: validate a spectrum, fit a 4-parameter logsig curve to the real
part and a K=3 mixture of cubic regimes with a logistic gate to the
imaginary part, collect the 18 descriptors, then regress operating hours
on exhaustively selected feature subsets under leave-one-out evaluation.
"""

__version__ = "0.1.0"

from . import errors
from .features import FeatureVector, extract_features, feature_names
from .logsig import LogsigParams, fit_logsig, logsig_eval
from .regression import (
    Dataset,
    LinearModel,
    LooResult,
    loo_cv,
    mean_error,
    ols_fit,
    predict,
)
from .rhlp import (
    RhlpConfig,
    RhlpModel,
    Segmentation,
    approximate,
    density,
    fit_em,
    irls_update,
    log_likelihood,
    logistic_probs,
    regressor_vector,
    segment,
)
from .selection import SelectionReport, exhaustive_select
from .simplex import SimplexConfig, SimplexResult, minimize
from .spectra import ImpedanceSpectrum, log_axis, validate_spectrum
from .synth import AgeRule, SynthSpec, gen_ageing_dataset, gen_spectrum

__all__ = [
    "AgeRule",
    "Dataset",
    "FeatureVector",
    "ImpedanceSpectrum",
    "LinearModel",
    "LogsigParams",
    "LooResult",
    "RhlpConfig",
    "RhlpModel",
    "Segmentation",
    "SelectionReport",
    "SimplexConfig",
    "SimplexResult",
    "SynthSpec",
    "approximate",
    "density",
    "errors",
    "exhaustive_select",
    "extract_features",
    "feature_names",
    "fit_em",
    "fit_logsig",
    "gen_ageing_dataset",
    "gen_spectrum",
    "irls_update",
    "log_axis",
    "log_likelihood",
    "logistic_probs",
    "logsig_eval",
    "loo_cv",
    "mean_error",
    "minimize",
    "ols_fit",
    "predict",
    "regressor_vector",
    "segment",
    "validate_spectrum",
]
