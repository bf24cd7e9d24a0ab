from .model import (
    AmoebotSystem,
    ParticleConfig,
    SystemConfig,
    TransitionTable,
    validate_delta_output,
)
from .engine import Scheduler, Trace, activate, run
from .files import SpecError, format_system, load_system, parse_system, write_trace

__all__ = [
    "AmoebotSystem",
    "ParticleConfig",
    "SystemConfig",
    "TransitionTable",
    "validate_delta_output",
    "Scheduler",
    "Trace",
    "activate",
    "run",
    "SpecError",
    "format_system",
    "load_system",
    "parse_system",
    "write_trace",
]
