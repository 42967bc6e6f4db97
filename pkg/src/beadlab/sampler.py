"""Uniform sector sampling by reversible elementary-flip MCMC.

One sweep proposes L^2 uniformly random (face, direction) flips.  The
proposal is symmetric and each flip is an involution, so the chain is
reversible for the uniform measure on the winding sector it starts in;
flips never leave the sector.

The compiled engine (module fasthex) runs the identical proposal stream,
so a python/compiled pair with the same seed produces the same sample.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

from .hexlattice import TorusBeadConfig, staircase_config
from .rng import SplitMix64
from .slopes import Slope
from .squarelattice import SquareSlope, SquareTorusConfig, sq_staircase


@dataclass
class SamplerSpec:
    """Parameters of one sampling run."""

    L: int
    slope: Slope
    seed: int
    burn_sweeps: Optional[int] = None  # default 10 * L^2
    engine: str = "auto"  # auto | python | compiled
    diagnostic_window: int = 50  # sweeps with zero accepted flips that warrant a warning

    def __post_init__(self) -> None:
        if self.L < 3:
            raise ValueError(f"L must be at least 3, got {self.L}")
        if self.burn_sweeps is None:
            self.burn_sweeps = 10 * self.L * self.L
        if self.burn_sweeps < 1:
            raise ValueError("burn-in must be at least one sweep")
        if self.engine not in ("auto", "python", "compiled"):
            raise ValueError(f"unknown engine {self.engine!r}")


def sweep_accept_count(config: TorusBeadConfig, rng: SplitMix64) -> int:
    """One sweep of L^2 proposals in place; returns accepted flip count."""
    L = config.L
    n_faces = L * L
    accepted = 0
    for _ in range(n_faces):
        j = rng.below(2 * n_faces)
        l = j % L
        u = 2 * ((j // L) % L) + (l % 2)
        direction = "up" if j < n_faces else "down"
        if config.can_flip(l, u, direction):
            config.elementary_flip(l, u, direction)
            accepted += 1
    return accepted


def mcmc_sweep(config: TorusBeadConfig, rng: SplitMix64) -> TorusBeadConfig:
    """One sweep of L^2 random flip proposals; mutates and returns config."""
    sweep_accept_count(config, rng)
    return config


def sample_gibbs(spec: SamplerSpec) -> TorusBeadConfig:
    """One sample of the uniform sector measure.

    Seeds a staircase, runs the burn-in, returns the final state.  Calls
    with distinct seeds give independent replicas.  A long run of sweeps
    with no accepted flip is reported as a warning (frozen chain
    diagnostic), not an error.
    """
    config = staircase_config(spec.L, spec.slope)
    if spec.engine in ("auto", "compiled"):
        from . import fasthex

        if fasthex.AVAILABLE:
            fasthex.run_sweeps(config, spec.seed, spec.burn_sweeps)
            return config
        if spec.engine == "compiled":
            raise RuntimeError("compiled engine requested but not available")
    rng = SplitMix64(spec.seed)
    idle = 0
    for _ in range(spec.burn_sweeps):
        if sweep_accept_count(config, rng) == 0:
            idle += 1
            if idle == spec.diagnostic_window:
                warnings.warn(
                    f"no accepted flips for {idle} consecutive sweeps "
                    f"(L={spec.L}, slope {spec.slope})",
                    RuntimeWarning,
                )
        else:
            idle = 0
    return config


def sq_sweep_accept_count(config: SquareTorusConfig, rng: SplitMix64) -> int:
    """One sweep of 2 L^2 rotation proposals on the square torus."""
    L = config.L
    n_faces = 2 * L * L
    accepted = 0
    for _ in range(n_faces):
        j = rng.below(2 * n_faces)
        l = j % L
        tau = (j // L) % (2 * L)
        direction = "up" if j < n_faces else "down"
        if config.can_flip(l, tau, direction):
            config.elementary_flip(l, tau, direction)
            accepted += 1
    return accepted


def sq_sample_gibbs(
    L: int, slope: SquareSlope, seed: int, burn_sweeps: Optional[int] = None
) -> SquareTorusConfig:
    """Uniform-sector sample on the square torus, python chain only."""
    config = sq_staircase(L, slope)
    rng = SplitMix64(seed)
    for _ in range(burn_sweeps if burn_sweeps is not None else 10 * L * L):
        sq_sweep_accept_count(config, rng)
    return config
