"""Decentralized multi-UAV detection, tracking, fusion and target allocation."""

from .config import ScenarioConfig, parse_config
from .runlog import RunLog
from .sim import run_scenario

__all__ = ["RunLog", "ScenarioConfig", "parse_config", "run_scenario"]
__version__ = "0.1.0"
