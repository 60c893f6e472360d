"""Radial numerical laboratory for the inhomogeneous NLS  i u_t + Δu = ±|x|^{-b}|u|^α u."""

from inls.exponents import (
    INF,
    PhysParams,
    critical_exponents,
    classify_regime,
    is_admissible_pair,
    lemma31_feasible,
    appendix_feasible,
)
from inls.field import RadialGrid, RadialField, functionals, make_weight_phi, make_cutoff_chi
from inls.groundstate import solve_ground_state, GroundStateProfile

__all__ = [
    "INF",
    "PhysParams",
    "critical_exponents",
    "classify_regime",
    "is_admissible_pair",
    "lemma31_feasible",
    "appendix_feasible",
    "RadialGrid",
    "RadialField",
    "functionals",
    "make_weight_phi",
    "make_cutoff_chi",
    "solve_ground_state",
    "GroundStateProfile",
]

__version__ = "0.1.0"
