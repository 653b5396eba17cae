"""Contractive polyhedral sets and self-triggered control of constrained linear systems."""
from ._kernels import BACKEND
from .errors import SettrigError
from .invariance import (ConstraintSet, ContractiveSet, SystemModel, compute_contractive_set,
                         verify_contractive)
from .polytope import HPolytope, VPolytope
from .simkit import ContinuousModel, metrics, simulate, zoh_discretize
from .tolerance import Tolerance, default_tolerance
from .triggered_explicit import ExplicitController, ExplicitMap, ShellDecomposition, build_explicit_map
from .triggered_online import OnlineConfig, OnlineController

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "ConstraintSet", "ContinuousModel", "ContractiveSet", "ExplicitController",
    "ExplicitMap", "HPolytope", "OnlineConfig", "OnlineController", "SettrigError",
    "ShellDecomposition", "SystemModel", "Tolerance", "VPolytope", "build_explicit_map",
    "compute_contractive_set", "default_tolerance", "metrics", "simulate", "verify_contractive",
    "zoh_discretize",
]
