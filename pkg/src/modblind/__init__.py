"""Blind deconvolution of randomly modulated bandlimited signals."""
from .estimator import ModulatedBlindDeconvolution
from .harness import (
    GridResult,
    InstanceSpec,
    TrialRecord,
    gen_instance,
    noise_sweep,
    oversampling_sweep,
    phase_transition,
    run_trial,
)
from .metrics import relative_error, sin_angle
from .objective import Iterate, NeighborhoodSpec, RegularizerParams, in_neighborhoods
from .operator import ModulatedConvOperator, NoiseSpec, add_noise, snr_db
from .solver import InitResult, SolverConfig, descend, initialize, solve
from .spectral import CoherencePair, ProblemDims, coherences

__all__ = [
    "CoherencePair",
    "GridResult",
    "InitResult",
    "InstanceSpec",
    "Iterate",
    "ModulatedBlindDeconvolution",
    "ModulatedConvOperator",
    "NeighborhoodSpec",
    "NoiseSpec",
    "ProblemDims",
    "RegularizerParams",
    "SolverConfig",
    "TrialRecord",
    "add_noise",
    "coherences",
    "descend",
    "gen_instance",
    "in_neighborhoods",
    "initialize",
    "noise_sweep",
    "oversampling_sweep",
    "phase_transition",
    "relative_error",
    "run_trial",
    "sin_angle",
    "snr_db",
    "solve",
]

__version__ = "0.1.0"
