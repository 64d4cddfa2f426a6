"""Quantum state-vector simulation with log-polar low-precision amplitudes."""

from .codec import DETERMINISTIC, FormatSpec, PackedTriplet, RoundingMode, decode, encode, min_modulus
from .error_model import (
    conversion_error_bound,
    conversion_error_random,
    effective_gate_count,
    error_budget,
    max_gates,
    optimal_triplet,
)
from .estimators import LogPolarQuantizer
from .gates import Circuit, Gate, parse_circuit
from .simulator import PackedState, ReferenceState, run

__all__ = [
    "DETERMINISTIC",
    "FormatSpec",
    "PackedTriplet",
    "RoundingMode",
    "decode",
    "encode",
    "min_modulus",
    "conversion_error_bound",
    "conversion_error_random",
    "effective_gate_count",
    "error_budget",
    "max_gates",
    "optimal_triplet",
    "LogPolarQuantizer",
    "Circuit",
    "Gate",
    "parse_circuit",
    "PackedState",
    "ReferenceState",
    "run",
]

__version__ = "0.1.0"
