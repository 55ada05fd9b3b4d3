"""Gaussian, stochastic and quantum-jump simulation of one-mode open quantum systems.

Quadratic Hamiltonians with a single Lindblad operator linear in ``(x, p)``
are propagated along three routes (Lindblad parameter flow, stochastic
Schroedinger trajectories, quantum jumps in a moving Hagedorn basis) and
checked against a dense truncated-Fock oracle.
"""

__version__ = "0.1.0"

from .core import OMEGA, hermitian_form, mat_exp_2x2
from .dynamics import NoiseDriver, lindblad_closed_form, run_sse, sse_g_closed_form
from .ensemble import compare_to_lindblad, run_ensemble
from .flow import propagate_frame, propagate_frames
from .gaussian import GaussianState, WignerGrid, covariance_from_g
from .jump import FrameTable, run_scheme_a, run_scheme_b
from .model import (
    ModelConfig, LinearLindbladian, QuadraticHamiltonian, build_effective_k, damped_oscillator,
    position_measurement, preset,
)

__all__ = [
    "OMEGA", "hermitian_form", "mat_exp_2x2", "NoiseDriver", "lindblad_closed_form", "run_sse",
    "sse_g_closed_form", "compare_to_lindblad", "run_ensemble", "propagate_frame", "propagate_frames",
    "GaussianState", "WignerGrid", "covariance_from_g", "FrameTable", "run_scheme_a", "run_scheme_b",
    "ModelConfig", "LinearLindbladian", "QuadraticHamiltonian", "build_effective_k",
    "damped_oscillator", "position_measurement", "preset", "__version__",
]
