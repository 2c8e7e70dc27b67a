from .config import ConfigError, ExperimentConfig, load_config, reference_controller, reference_system, parse_config
from .experiment import MetricsRecord, RunResult, run_monte_carlo, run_single
from .prbs import Prbs, prbs
from .spectrum import spectrum

__all__ = [
    "ConfigError", "ExperimentConfig", "MetricsRecord", "Prbs", "RunResult", "load_config",
    "reference_controller", "reference_system", "parse_config", "prbs", "run_monte_carlo",
    "run_single", "spectrum",
]
