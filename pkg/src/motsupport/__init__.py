"""Exact support analysis for discrete martingale optimal transport.

Decides the weak exact predictable representation property (WEP) of a
finite support, extremality of martingale couplings, 2-link and erasure
structure, and builds explicit perturbations certifying non-extremality.
"""

__version__ = "0.1.0"

from .measure import DiscreteMeasure, check_convex_order  # noqa: E402
from .support import MartingaleCoupling, Mesh, Support, validate_coupling  # noqa: E402
from .combinatorics import erasure_fixpoint, find_2link_ordering, is_fully_erasable  # noqa: E402
from .wep import grow_2nets, verify_saturation_theorem, wep_decompose, wep_holds  # noqa: E402
from .cycles import (  # noqa: E402
    build_pool_perturbation,
    extremality_kernel,
    find_free_pool,
    find_mesh_cycles,
)

__all__ = [
    "DiscreteMeasure",
    "MartingaleCoupling",
    "Mesh",
    "Support",
    "build_pool_perturbation",
    "check_convex_order",
    "erasure_fixpoint",
    "extremality_kernel",
    "find_2link_ordering",
    "find_free_pool",
    "find_mesh_cycles",
    "grow_2nets",
    "is_fully_erasable",
    "validate_coupling",
    "verify_saturation_theorem",
    "wep_decompose",
    "wep_holds",
]
