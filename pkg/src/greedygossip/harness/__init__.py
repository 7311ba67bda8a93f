from .config import AlgorithmSpec, ConfigError, ExperimentConfig, dump_config, load_config, parse_config
from .experiments import (cmd_bounds, cmd_multihop, cmd_run, cmd_stale, cmd_sweep, cmd_topology,
                          simulate)
from .results import Curve, ResultTable
from .seeds import derive_seed

__all__ = ["AlgorithmSpec", "ConfigError", "Curve", "ExperimentConfig", "ResultTable",
           "cmd_bounds", "cmd_multihop", "cmd_run", "cmd_stale", "cmd_sweep", "cmd_topology",
           "derive_seed", "dump_config", "load_config", "parse_config", "simulate"]
