"""Simulator for two-crystal induced-coherence single-photon interference.

Builds the cascade of two parametric down-converters sharing an idler mode,
predicts singles and coincidence fringes against pump and signal delays,
Monte-Carlo samples photon counts, and fits fringe parameters back out.
"""

from .config import ConfigError, ExperimentConfig, ScanSettings, default_config, parse_config
from .counting import (
    CountingConfig,
    CountSample,
    accidental_rate,
    calibrate,
    double_pair_probability,
    sample_counts,
)
from .expectation import (
    RatePrediction,
    compose_setup,
    coincidence_rate,
    phase_averaged_rates,
    singles_rate,
)
from .fockoracle import FockState, build_state, detection_moments
from .operators import (
    BeamSplitterParams,
    CrystalParams,
    DelaySetting,
    LadderKind,
    LadderTerm,
    ModeLabel,
    ModeRole,
    OperatorExpansion,
    attenuate,
    beam_splitter,
    commutator_norm,
    phase_delay,
    spdc,
    truncate,
    vacuum,
)
from .scan import (
    FitNonConvergenceError,
    FringeFit,
    NoFringeError,
    ScanRecord,
    estimate_period,
    fit_fringe,
    run_scan,
    visibility_minmax,
)
from .spectral import (
    SpectralProfile,
    coherence_length,
    envelope,
    frequency_fwhm,
    modulated_rates,
)

__version__ = "0.1.0"

__all__ = [
    "BeamSplitterParams",
    "ConfigError",
    "CountSample",
    "CountingConfig",
    "CrystalParams",
    "DelaySetting",
    "ExperimentConfig",
    "FitNonConvergenceError",
    "FockState",
    "FringeFit",
    "LadderKind",
    "LadderTerm",
    "ModeLabel",
    "ModeRole",
    "NoFringeError",
    "OperatorExpansion",
    "RatePrediction",
    "ScanRecord",
    "ScanSettings",
    "SpectralProfile",
    "accidental_rate",
    "attenuate",
    "beam_splitter",
    "build_state",
    "calibrate",
    "coherence_length",
    "coincidence_rate",
    "commutator_norm",
    "compose_setup",
    "default_config",
    "detection_moments",
    "double_pair_probability",
    "envelope",
    "estimate_period",
    "fit_fringe",
    "frequency_fwhm",
    "modulated_rates",
    "parse_config",
    "phase_averaged_rates",
    "phase_delay",
    "run_scan",
    "sample_counts",
    "singles_rate",
    "spdc",
    "truncate",
    "vacuum",
    "visibility_minmax",
]
