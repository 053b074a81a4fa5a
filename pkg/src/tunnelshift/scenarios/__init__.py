"""Named reproduction scenarios, their configuration and the CSV runner."""
from .catalog import CATALOG, SCENARIO_IDS, Column, Table, get
from .config import ConfigError, ScenarioConfig, parse_config
from .runner import RunManifest, ScenarioFailure, compute, render_csv, run

__all__ = [
    "CATALOG",
    "SCENARIO_IDS",
    "Column",
    "ConfigError",
    "RunManifest",
    "ScenarioConfig",
    "ScenarioFailure",
    "Table",
    "compute",
    "get",
    "parse_config",
    "render_csv",
    "run",
]
