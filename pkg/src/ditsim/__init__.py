"""Coupled cavity-dot transmission simulator.

Two routes to the same physics: full master-equation emission spectra under
incoherent pumping, and the analytic input-output transfer function, with
shared feature analysis for comparing the transparency window they predict.
"""

__version__ = "0.1.0"

from . import errors
from .features import (
    ComparisonReport,
    DITMetrics,
    FeatureKind,
    SpectralFeature,
    compare_methods,
    dit_metrics,
    extract_features,
    fit_pump_rate,
    predicted_linewidths,
    strong_coupling_check,
)
from .input_output import Port, iof_spectrum, transfer_amplitude, transmission_amplitude
from .liouville import build_liouvillian, build_operators, steady_state
from .moments import cavity_population_closed_form, moment_steady_state
from .operators import SystemParams
from .spectra import (
    Channel,
    ChannelMode,
    FrequencyGrid,
    Method,
    Normalization,
    Spectrum,
    channel_spectra,
    ipm_transmission,
    regression_spectrum,
)

__all__ = [
    "__version__",
    "errors",
    "SystemParams",
    "FrequencyGrid",
    "Spectrum",
    "Method",
    "Channel",
    "ChannelMode",
    "Normalization",
    "Port",
    "build_operators",
    "build_liouvillian",
    "steady_state",
    "regression_spectrum",
    "channel_spectra",
    "ipm_transmission",
    "iof_spectrum",
    "transfer_amplitude",
    "transmission_amplitude",
    "moment_steady_state",
    "cavity_population_closed_form",
    "SpectralFeature",
    "FeatureKind",
    "DITMetrics",
    "ComparisonReport",
    "extract_features",
    "dit_metrics",
    "compare_methods",
    "fit_pump_rate",
    "predicted_linewidths",
    "strong_coupling_check",
]
