"""Finite-time quantum Stirling heat engine simulator.

A single particle in a 1-D box with a time-dependent central delta barrier,
thermalized through a Lindblad master equation, driven through a four-stroke
Stirling cycle in finite time.
"""

__version__ = "0.1.0"

from .engine import CycleConfig, CycleLedger, default_config, run_cycle
from .spectrum import ModelParams, Spectrum, solve_spectrum
from .state import BathParams, DensityMatrix, gibbs_state

__all__ = [
    "BathParams", "CycleConfig", "CycleLedger", "DensityMatrix", "ModelParams",
    "Spectrum", "default_config", "gibbs_state", "run_cycle", "solve_spectrum",
    "__version__",
]
