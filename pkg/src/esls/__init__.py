"""Multi-agent source localisation combining extremum seeking with bearing-only least squares."""
from ._backend import BACKEND
from .config import ConfigError, SimConfig, load_config, reference_config
from .engine import RunTrace, run

__version__ = "0.1.0"

__all__ = ["BACKEND", "ConfigError", "RunTrace", "SimConfig", "load_config", "reference_config", "run",
           "__version__"]
