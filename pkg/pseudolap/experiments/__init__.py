"""Batch experiment driver: config parsing, experiment kinds and report writers."""
from .config import ExperimentConfig, parse_config, read_config
from .run import main, run
