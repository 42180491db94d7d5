"""Experiment harness: specs, presets, runner, CSV output and the CLI."""

from .io import emit_csv, read_csv, read_meta
from .runner import P0, P1, RunRecord, run_experiment
from .spec import ExperimentKind, ExperimentSpec, build_spec, load_preset, parse_config_text, preset_names

__all__ = [
    "ExperimentKind",
    "ExperimentSpec",
    "RunRecord",
    "build_spec",
    "load_preset",
    "parse_config_text",
    "preset_names",
    "run_experiment",
    "emit_csv",
    "read_csv",
    "read_meta",
    "P0",
    "P1",
]
