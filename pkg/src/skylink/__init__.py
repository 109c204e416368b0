"""Satellite quantum-communication simulator.

Pass geometry, free-space link budgets, photon-level source and detector
models, QKD protocols with post-processing, entanglement and teleportation,
gravity-induced decorrelation, and an end-to-end mission runner.
"""

from __future__ import annotations

from .errors import ConfigError, SkylinkError
from .mission import MissionReport, constellation_throughput, intercontinental_demo, run_scenario
from .report import emit_report
from .scenario import PRESET_NAMES, Scenario, dump_scenario, load_preset, parse_scenario

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "MissionReport",
    "PRESET_NAMES",
    "Scenario",
    "SkylinkError",
    "constellation_throughput",
    "dump_scenario",
    "emit_report",
    "intercontinental_demo",
    "load_preset",
    "parse_scenario",
    "run_scenario",
]
