from .config import ExperimentConfig, PRESETS, load_config, preset, validate_config
from .experiments import run_experiment

__all__ = ["ExperimentConfig", "PRESETS", "load_config", "preset", "run_experiment", "validate_config"]
