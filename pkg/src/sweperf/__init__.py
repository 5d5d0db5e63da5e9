"""Shallow-water solver with a performance-measurement harness."""

from .grid import FieldSet, GridSpec, ScenarioConfig, flat_index, read_config
from .driver import RunReport, run_dambreak_1d, run_simulation

__all__ = ["FieldSet", "GridSpec", "ScenarioConfig", "RunReport", "flat_index", "read_config",
           "run_dambreak_1d", "run_simulation"]
__version__ = "0.1.0"
