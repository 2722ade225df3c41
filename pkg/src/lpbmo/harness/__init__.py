from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .experiments import RUNNERS, run_experiment
from .report import ExperimentReport

__all__ = ["ConfigError", "ExperimentConfig", "ExperimentReport", "RUNNERS", "load_config",
           "parse_config", "run_experiment"]
