"""Shared helpers for the test suite."""

from __future__ import annotations

from beadlab.hexlattice import TorusBeadConfig, staircase_config
from beadlab.rng import SplitMix64
from beadlab.slopes import Slope


def random_hex_config(L, slope, seed, n_flips=None) -> TorusBeadConfig:
    """Scramble the sector staircase with a run of random legal flips.

    Uses only lattice-level moves, no sampler machinery, so geometry
    tests do not depend on the modules they are meant to check.
    """
    rng = SplitMix64(seed)
    config = staircase_config(L, slope)
    if n_flips is None:
        n_flips = 20 * L * L
    for _ in range(n_flips):
        j = rng.below(2 * L * L)
        l = j % L
        u = 2 * ((j // L) % L) + (l % 2)
        direction = "up" if j >= L * L else "down"
        if config.can_flip(l, u, direction):
            config.elementary_flip(l, u, direction)
    return config


SYMMETRIC = Slope("1/3", "1/3")
TILTED = Slope("1/2", "1/4")
