"""Named reference instances."""

from __future__ import annotations

from fractions import Fraction as F

from .cycles import Cycle, CyclePool
from .support import MartingaleCoupling, Support, make_positive_coupling


def shared_triple() -> Support:
    """Two x-points whose sections share the same three y-points."""
    return Support.from_sections({F(2): (1, 2, 3), F(5, 2): (1, 2, 3)})


def free_cycle() -> Support:
    """Ten paths on three x-points: no cycle of 2-meshes, yet not WEP."""
    return Support.from_sections({
        F(6): (10, 6, 5),
        F(4): (6, 5, 2, 1),
        F(3): (10, 2, 1),
    })


def free_cycle_pool() -> CyclePool:
    """The three cycles the free-cycle support is built from."""
    return CyclePool((
        Cycle.canonical((6, 6, 4, 5)),
        Cycle.canonical((4, 2, 3, 1)),
        Cycle.canonical((6, 10, 3, 2, 4, 6)),
    ))


def binomial_mesh() -> Support:
    return Support.from_sections({F(1): (F(1, 2), F(3, 2))})


def positive(S: Support) -> MartingaleCoupling:
    return make_positive_coupling(S)


NAMED = {
    "shared-triple": shared_triple,
    "free-cycle": free_cycle,
    "binomial-mesh": binomial_mesh,
}
