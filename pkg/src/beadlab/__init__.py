"""Simulation and numerics laboratory for bead dynamics on dimer tori.

Subpackage map:

* :mod:`beadlab.hexlattice`   hexagonal torus, configurations, heights
* :mod:`beadlab.squarelattice` square-lattice torus counterpart
* :mod:`beadlab.sampler`      uniform sector sampling by local flips
* :mod:`beadlab.dynamics`     irreversible bead jump dynamics
* :mod:`beadlab.determinantal` inverse-transfer kernel and exact targets
* :mod:`beadlab.hammersley`   discrete interacting particle limit model
* :mod:`beadlab.experiments`  statistical experiments and result tables
* :mod:`beadlab.cli`          command line entry point
"""

from .errors import (
    BeadlabError,
    EmptyColumn,
    ExtremalSlope,
    InterlacingViolation,
    InvalidPath,
    NoConvergence,
    NotFlippable,
    UnrealizableSector,
    WindowExceeded,
)
from .slopes import Slope

__version__ = "0.1.0"

__all__ = [
    "BeadlabError",
    "EmptyColumn",
    "ExtremalSlope",
    "InterlacingViolation",
    "InvalidPath",
    "NoConvergence",
    "NotFlippable",
    "UnrealizableSector",
    "WindowExceeded",
    "Slope",
    "__version__",
]
