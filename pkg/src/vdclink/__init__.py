"""Variable dc-link traction drive: switching patterns, converter, machine, losses."""

from .config import Config, ConfigError, default_config
from .kernel import BACKEND
from .opp import SolverError, SwitchingPattern, nine_pulse_table, solve_angles

__version__ = "0.1.0"

__all__ = [
           "BACKEND",
           "Config",
           "ConfigError",
           "SolverError",
           "SwitchingPattern",
           "__version__",
           "default_config",
           "nine_pulse_table",
           "solve_angles",
]
