"""Time-domain engine and scenario library."""

from ..spectrum import HarmonicLine, WindowingError, fft_spectrum
from .engine import Engine, Models, Recorder, ScenarioError, SimConfig, build_models
from .scenarios import (
                        METHODS,
                        RPM,
                        BalancingResult,
                        Comparison,
                        DriveTrace,
                        OperatingPointResult,
                        OperatingPointSpec,
                        WindowMeasurement,
                        compare_methods,
                        measure_operating_point,
                        operating_points,
                        run_balancing_scenario,
                        run_drive_scenario,
                        run_operating_point,
)

__all__ = [
                        "METHODS",
                        "RPM",
                        "BalancingResult",
                        "Comparison",
                        "DriveTrace",
                        "Engine",
                        "HarmonicLine",
                        "Models",
                        "OperatingPointResult",
                        "OperatingPointSpec",
                        "Recorder",
                        "ScenarioError",
                        "SimConfig",
                        "WindowMeasurement",
                        "WindowingError",
                        "build_models",
                        "compare_methods",
                        "fft_spectrum",
                        "measure_operating_point",
                        "operating_points",
                        "run_balancing_scenario",
                        "run_drive_scenario",
                        "run_operating_point",
]
