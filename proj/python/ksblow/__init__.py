"""Radial Keller-Segel blowup explorer.

Thin wrapper over the C++ core; JSON reports are returned as dicts.
"""

import json
from pathlib import Path

from ._core import (
    SERIES_HEADER,
    ConfigError,
    KsblowError,
    Model,
    canonical_config,
    config_hash,
    initial_data as _initial_data,
    sweep as _sweep,
    _conditions_json,
    _simulate_json,
)

__all__ = [
    "SERIES_HEADER",
    "ConfigError",
    "KsblowError",
    "Model",
    "canonical_config",
    "check_model",
    "config_hash",
    "initial_data",
    "simulate",
    "sweep",
]


def _text(config):
    """Accepts config text or a path to a config file."""
    if isinstance(config, Path) or (isinstance(config, str) and "{" not in config):
        return Path(config).read_text()
    return config


def check_model(model, sampled=False):
    """Condition report and regime label of a model (or model spec string)."""
    if isinstance(model, str):
        model = Model.from_spec(model)
    return json.loads(_conditions_json(model, sampled))


def simulate(config, refinements=None):
    """Runs a config and returns the summary dict written by the CLI."""
    return json.loads(_simulate_json(_text(config), refinements))


def initial_data(config):
    d = _initial_data(_text(config))
    d["report"] = json.loads(d["report"])
    return d


def sweep(config, jobs=0, refinements=None):
    return _sweep(_text(config), jobs, refinements)
