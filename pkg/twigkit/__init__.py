"""
twigkit - Time-widening Fisher information analysis of bifurcations in ODE models
"""

__version__ = "0.1.0"
__author__ = "twigkit team"

from .models import build_model, ModelSystem
from .integrate import SampleGrid, integrate_with_sensitivities
from .executor import SweepConfig, SweepExecutor, run_sweep
from .classify import TwigReport, classify
from .config import Config
from .cli import main

__all__ = [
    "main", "build_model", "ModelSystem", "SampleGrid", "integrate_with_sensitivities",
    "SweepConfig", "SweepExecutor", "run_sweep", "TwigReport", "classify", "Config",
]
