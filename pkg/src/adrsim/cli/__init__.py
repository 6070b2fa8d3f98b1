"""Scenario files, experiment presets and the command line."""

from __future__ import annotations

from .io import CSV_HEADER, ResultRow, load_scenario, read_csv, write_csv
from .main import main
from .presets import PRESETS, TEMPLATES, ExperimentPreset, get_preset
from .runner import METRICS, PresetResult, derive_seed, run_preset

__all__ = [
    "CSV_HEADER",
    "ExperimentPreset",
    "METRICS",
    "PRESETS",
    "PresetResult",
    "ResultRow",
    "TEMPLATES",
    "derive_seed",
    "get_preset",
    "load_scenario",
    "main",
    "read_csv",
    "run_preset",
    "write_csv",
]
