from .config import ExperimentConfig, load_config
from .pipeline import ExperimentResult, ResultRow, run_experiment

__all__ = ["ExperimentConfig", "ExperimentResult", "ResultRow", "load_config", "run_experiment"]
