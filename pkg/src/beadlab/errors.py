"""Exception types shared across the package.

Every error raised on a user-facing code path is one of these (or a plain
ValueError for malformed arguments that never reach lattice logic).
"""

from __future__ import annotations


class BeadlabError(Exception):
    """Base class for all package-specific errors."""


class InterlacingViolation(BeadlabError):
    """Bead columns fail the cyclic interlacing constraint."""


class EmptyColumn(BeadlabError):
    """A column holds no beads where at least one is required."""


class NotFlippable(BeadlabError):
    """The requested elementary move is blocked in the current configuration."""


class InvalidPath(BeadlabError):
    """A face path contains a step between non-adjacent faces."""


class UnrealizableSector(BeadlabError):
    """No configuration exists with the requested size and winding numbers."""


class ExtremalSlope(BeadlabError):
    """The slope lies on the boundary of the admissible region."""


class NoConvergence(BeadlabError):
    """An iterative numeric routine failed to meet its tolerance."""


class WindowExceeded(BeadlabError):
    """A particle reached the frozen boundary of a finite simulation window."""
