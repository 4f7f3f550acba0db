"""Stochastic extremum seeking for static maps behind distinct input delays.

Closed-loop simulation with predictor feedback, the averaged transport
system with its Lyapunov certificate, Monte Carlo metrics and a CLI.
"""

from .averaged import AveragedTrajectory, c_star, sandwich_bounds, simulate_averaged
from .config import ConfigError, ScenarioConfig, load_config, preset_names
from .controller import ControllerConfig, SimSettings, Trajectory, run, simulate
from .delayline import DelayLine
from .dither import DitherParams
from .estimator import AveragedAnalyzer, ExtremumSeeker
from .metrics import residuals, success_probability
from .quadmap import StaticQuadraticMap, benchmark_map, evaluate, true_gradient
from ._validation import InvalidInputError

__version__ = "0.1.0"

__all__ = [
    "AveragedAnalyzer",
    "AveragedTrajectory",
    "ConfigError",
    "ControllerConfig",
    "DelayLine",
    "DitherParams",
    "ExtremumSeeker",
    "InvalidInputError",
    "ScenarioConfig",
    "SimSettings",
    "StaticQuadraticMap",
    "Trajectory",
    "benchmark_map",
    "c_star",
    "evaluate",
    "load_config",
    "preset_names",
    "residuals",
    "run",
    "sandwich_bounds",
    "simulate",
    "simulate_averaged",
    "success_probability",
    "true_gradient",
]
