"""Trace-driven inspection scheduling simulators."""

from .backend import backend_name, compiled_available
from .engine import (
    FATE_BACKLOG,
    FATE_DROPPED,
    FATE_INSPECTED,
    SimulationConfig,
    SimulationOutcome,
    derive_city_inspection_fractions,
    simulate_borough_policy,
    simulate_city_policy,
)
from .synthetic import generate_synthetic_trace

__all__ = [
    "FATE_BACKLOG",
    "FATE_DROPPED",
    "FATE_INSPECTED",
    "SimulationConfig",
    "SimulationOutcome",
    "backend_name",
    "compiled_available",
    "derive_city_inspection_fractions",
    "generate_synthetic_trace",
    "simulate_borough_policy",
    "simulate_city_policy",
]
