"""Stabilizing output-feedback controllers from noisy input-output data."""
from __future__ import annotations

__version__ = "0.1.0"

from .auxiliary import aux_shift, aux_system
from .consistency import ConsistentSet, build_set, contains
from .errors import (
    Assumption2Violated,
    Infeasible,
    NioSynthError,
    NoiseBoundViolated,
    NotContractive,
    NotNeeded,
    NumericalFailure,
    SchemaError,
    Unobservable,
)
from .experiment import NoiseLaw, UniformLaw, assemble, collect, energy_bound
from .lti import StateSpaceModel, io_parameter, observability_index
from .synthesis import DynController, make_controller, synthesize
from .verify import certify, closed_loop, report

__all__ = [
    "Assumption2Violated", "ConsistentSet", "DynController", "Infeasible", "NioSynthError", "NoiseBoundViolated", "NoiseLaw",
    "NotContractive", "NotNeeded", "NumericalFailure", "SchemaError", "StateSpaceModel", "UniformLaw",
    "Unobservable", "assemble", "aux_shift", "aux_system", "build_set", "certify", "closed_loop", "collect",
    "contains", "energy_bound", "io_parameter", "make_controller", "observability_index", "report", "synthesize",
]
