"""Slope parameters for translation-invariant bead measures.

A slope is a pair (rho1, rho2) of exact rationals with rho1, rho2 > 0 and
rho1 + rho2 < 1.  The third density rho3 = 1 - rho1 - rho2 is the bead
density per column.  Exact arithmetic is used throughout so that sector
quantities (bead counts, winding numbers) are computed without float
rounding.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Tuple, Union

from .errors import ExtremalSlope

RationalLike = Union[Fraction, int, str]


def _as_fraction(value: RationalLike) -> Fraction:
    if isinstance(value, float):
        raise TypeError(
            "slope components must be exact rationals (Fraction, int or "
            f"'a/b' string), got float {value!r}"
        )
    return Fraction(value)


@dataclass(frozen=True)
class Slope:
    """Exact slope (rho1, rho2) of a bead measure on the hexagonal lattice.

    rho1 is the density of falling rhombi, rho2 of rising rhombi and
    rho3 = 1 - rho1 - rho2 the density of beads.  All three must be
    strictly positive; a zero component is an extremal slope for which
    the measures degenerate.
    """

    rho1: Fraction
    rho2: Fraction

    def __init__(self, rho1: RationalLike, rho2: RationalLike) -> None:
        object.__setattr__(self, "rho1", _as_fraction(rho1))
        object.__setattr__(self, "rho2", _as_fraction(rho2))
        if not (0 < self.rho1 and 0 < self.rho2 and self.rho1 + self.rho2 < 1):
            raise ExtremalSlope(
                f"slope ({self.rho1}, {self.rho2}) is outside the open "
                "admissible triangle"
            )

    @property
    def rho3(self) -> Fraction:
        return 1 - self.rho1 - self.rho2

    def n_beads(self, L: int) -> int:
        """Beads per column on a torus of size L (floor of rho3 * L)."""
        return (self.rho3 * L).__floor__()

    def windings(self, L: int) -> Tuple[int, int]:
        """Height winding numbers (w2, w3) of the sector at size L.

        w2 = floor(rho2 * L) is the winding along the rising diagonal
        loop, w3 = floor(rho3 * L) - L along the vertical loop.  The
        third winding is always -w2 - w3 and is not free.
        """
        w2 = (self.rho2 * L).__floor__()
        w3 = self.n_beads(L) - L
        return w2, w3

    def as_floats(self) -> Tuple[float, float, float]:
        return float(self.rho1), float(self.rho2), float(self.rho3)

    def __str__(self) -> str:
        return f"{self.rho1} {self.rho2}"

    @staticmethod
    def parse(text: str) -> "Slope":
        """Inverse of str(): two fractions separated by whitespace."""
        parts = text.split()
        if len(parts) != 2:
            raise ValueError(f"expected two fractions, got {text!r}")
        return Slope(parts[0], parts[1])
