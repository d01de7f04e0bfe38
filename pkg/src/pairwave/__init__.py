"""Simulation of parallel EPR-pair generation between resonator pairs coupled to one qutrit."""

from .model import SystemSpec, derive, baseline_spec, validate
from .sweep import run_point, sweep_grid

__all__ = ["SystemSpec", "derive", "baseline_spec", "validate", "run_point", "sweep_grid"]
__version__ = "0.1.0"
