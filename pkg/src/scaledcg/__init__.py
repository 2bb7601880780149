"""Fletcher-Reeves conjugate gradient on Riemannian manifolds with a
norm-controlled vector transport."""

from .cg import CgConfig, CgResult, CgState, cg_solve, cg_step
from .core import (
    DegenerateTransportError,
    DomainError,
    FeasibilityError,
    Manifold,
    ManifoldError,
    Pair,
    RankError,
    UsageError,
)
from .linesearch import LineSearchError, WolfeConfig, strong_wolfe_search
from .manifolds import PeculiarSphere, ProductStiefel, Sphere, Stiefel
from .problems import BrockettProblem, RayleighProblem, SvdProblem
from .transports import transport_scaled, transport_switch

__version__ = "0.1.0"

__all__ = [
    "BrockettProblem", "CgConfig", "CgResult", "CgState", "DegenerateTransportError",
    "DomainError", "FeasibilityError", "LineSearchError", "Manifold", "ManifoldError",
    "Pair", "PeculiarSphere", "ProductStiefel", "RankError", "RayleighProblem", "Sphere",
    "Stiefel", "SvdProblem", "UsageError", "WolfeConfig", "cg_solve", "cg_step",
    "strong_wolfe_search", "transport_scaled", "transport_switch",
]
