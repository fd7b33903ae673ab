"""Lattice particle approximation of the sticky-reflected stochastic heat equation."""

from __future__ import annotations

from .config import ScenarioConfig, SweepPlan, validate
from .dynamics import DriftSpec, SchemeParams, simulate
from .functions import Constant, Cosine, FunctionSpec, NormalizedIndicator, Sine, Tabulated
from .lattice import DIRICHLET, NEUMANN, LatticeState
from .noise import SeedPolicy, build_noise_factor
from .spectral import EigenSpec, GridFunction

__all__ = [
    "Constant", "Cosine", "DIRICHLET", "DriftSpec", "EigenSpec", "FunctionSpec", "GridFunction",
    "LatticeState", "NEUMANN", "NormalizedIndicator", "ScenarioConfig", "SchemeParams", "SeedPolicy",
    "Sine", "SweepPlan", "Tabulated", "build_noise_factor", "simulate", "validate",
]
