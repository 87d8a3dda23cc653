"""Polytope Division Method and Greedy Sampling for configuration optimization."""

from .division import Division, DivisionReport, check_proper, init_division
from .geometry import Box, BoundaryPolytope, BoxFace, Simplex
from .gsm import GsmConfig, gsm_run
from .numerics import Rng
from .objectives import Configuration, EIMObjective, FillDistance, RBObjective
from .pdm import PdmConfig, StepRecord, pdm_run

__version__ = "0.1.0"

__all__ = [
    "Box",
    "BoxFace",
    "BoundaryPolytope",
    "Configuration",
    "Division",
    "DivisionReport",
    "EIMObjective",
    "FillDistance",
    "GsmConfig",
    "PdmConfig",
    "RBObjective",
    "Rng",
    "Simplex",
    "StepRecord",
    "check_proper",
    "gsm_run",
    "init_division",
    "pdm_run",
]
