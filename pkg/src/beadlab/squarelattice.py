"""Domino analog of the bead model: dimers on the square-lattice torus.

Columns are zig-zag strips of faces indexed (l, t) with t running over
2L face positions; column l owns the 2L "slots" transversal to it (the
vertical and horizontal edges a bead can occupy).  The shared boundary
between columns l and l+1 is a cyclic path of 2L vertices; a bead marks
one vertex on each adjacent path, column-l beads landing on even path
indices and column-(l+1) beads on odd ones.  Unmarked stretches must be
covered by path edges, which forces marks to alternate: that is the
interlacing constraint, and it makes the bead lists of any two adjacent
columns interleave cyclically exactly as on the honeycomb.

An elementary move rotates two dimers around one face, sliding a bead
by one slot; longer jumps are chains of rotations.  Heights live on
faces in quarter units (stored times four) and change across an edge by
the occupancy minus a quarter, signed by the side the white vertex is
on.  Winding a height path once along a torus direction recovers the
floor of L times the matching slope component.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, FrozenSet, List, Optional, Sequence, Set, Tuple

import numpy as np

from .errors import (
    EmptyColumn,
    InterlacingViolation,
    InvalidPath,
    NotFlippable,
    UnrealizableSector,
)
from .slopes import _as_fraction

SqFace = Tuple[int, int]  # (column, face index t in Z_2L)
Vertex = Tuple[int, int]  # normalized ((x - y) mod 2L, (x + y) mod 2L)


@dataclass(frozen=True)
class SquareSlope:
    """Tilt of the square-lattice height profile, components in (-1/2, 1/2)."""

    s1: Fraction
    s2: Fraction

    def __init__(self, s1, s2):
        f1, f2 = _as_fraction(s1), _as_fraction(s2)
        for f in (f1, f2):
            if not -Fraction(1, 2) < f < Fraction(1, 2):
                raise UnrealizableSector(
                    f"slope component {f} outside the open interval (-1/2, 1/2)"
                )
        object.__setattr__(self, "s1", f1)
        object.__setattr__(self, "s2", f2)

    def n_beads(self, L: int) -> int:
        return L // 2 + (self.s1 * L).__floor__()

    def windings(self, L: int) -> Tuple[int, int]:
        return ((self.s1 * L).__floor__(), (self.s2 * L).__floor__())

    def __str__(self) -> str:
        return f"{self.s1} {self.s2}"


class SquareTorusConfig:
    """Bead (transversal dimer) positions per column of the square torus."""

    __slots__ = ("L", "columns", "occ")

    def __init__(self, L: int, columns: Sequence[Sequence[int]]):
        if L < 4 or L % 2:
            raise ValueError(f"L must be even and at least 4, got {L}")
        if len(columns) != L:
            raise ValueError(f"expected {L} columns, got {len(columns)}")
        self.L = L
        self.columns: List[List[int]] = []
        self.occ = np.zeros((L, 2 * L), dtype=np.uint8)
        n0 = len(columns[0])
        for l, col in enumerate(columns):
            cc = sorted(t % (2 * L) for t in col)
            if len(cc) != n0:
                raise ValueError("columns must hold equally many beads")
            if len(set(cc)) != len(cc):
                raise ValueError(f"duplicate slot in column {l}")
            if not cc:
                raise EmptyColumn(f"column {l} holds no beads")
            self.columns.append(cc)
            for t in cc:
                self.occ[l, t] = 1

    # ----- basic queries ---------------------------------------------------

    def clone(self) -> "SquareTorusConfig":
        return SquareTorusConfig(self.L, [list(c) for c in self.columns])

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, SquareTorusConfig)
            and self.L == other.L
            and self.columns == other.columns
        )

    def __hash__(self):
        return hash((self.L, tuple(tuple(c) for c in self.columns)))

    def occupied(self, l: int, t: int) -> bool:
        return bool(self.occ[l % self.L, t % (2 * self.L)])

    def first_above(self, l: int, t: int) -> int:
        """Smallest bead slot strictly above t in column l, in t's frame."""
        col = self.columns[l % self.L]
        L2 = 2 * self.L
        tn = t % L2
        i = bisect_left(col, tn + 1)
        if i < len(col):
            return t + (col[i] - tn)
        return t + (col[0] + L2 - tn)

    def first_below(self, l: int, t: int) -> int:
        """Largest bead slot strictly below t in column l, in t's frame."""
        col = self.columns[l % self.L]
        L2 = 2 * self.L
        tn = t % L2
        i = bisect_left(col, tn)
        if i > 0:
            return t - (tn - col[i - 1])
        return t - (tn - col[-1] + L2)

    def first_at_or_above(self, l: int, t: int) -> int:
        if self.occupied(l, t):
            return t
        return self.first_above(l, t)

    def first_at_or_below(self, l: int, t: int) -> int:
        if self.occupied(l, t):
            return t
        return self.first_below(l, t)

    # ----- elementary rotations --------------------------------------------

    def can_flip(self, l: int, tau: int, direction: str) -> bool:
        """Legality of the rotation at face (l, tau).

        Up slides the bead at slot tau-1 to tau, down slides tau to
        tau-1.  The cross-column requirement depends only on the face:
        even faces consult the left column, odd faces the right one.
        """
        if direction not in ("up", "down"):
            raise ValueError(f"unknown direction {direction!r}")
        if direction == "up":
            if not self.occupied(l, tau - 1) or self.occupied(l, tau) or self.occupied(l, tau + 1):
                return False
        else:
            if not self.occupied(l, tau) or self.occupied(l, tau - 1) or self.occupied(l, tau - 2):
                return False
        if tau % 2 == 0:
            return not (self.occupied(l - 1, tau + 1) or self.occupied(l - 1, tau + 2))
        return not (self.occupied(l + 1, tau - 3) or self.occupied(l + 1, tau - 2))

    def elementary_flip(self, l: int, tau: int, direction: str) -> Tuple[int, int]:
        if not self.can_flip(l, tau, direction):
            raise NotFlippable(f"no legal {direction} rotation at face ({l}, {tau})")
        L2 = 2 * self.L
        ln = l % self.L
        src = (tau - 1) % L2 if direction == "up" else tau % L2
        dst = tau % L2 if direction == "up" else (tau - 1) % L2
        col = self.columns[ln]
        col.remove(src)
        col.insert(bisect_left(col, dst), dst)
        self.occ[ln, src] = 0
        self.occ[ln, dst] = 1
        return ln, dst

    # ----- jump ranges -----------------------------------------------------

    def up_gap(self, l: int, t: int) -> int:
        """Number of slots the bead at (l, t) can reach jumping upward."""
        if not self.occupied(l, t):
            raise ValueError(f"no bead at ({l}, {t})")
        own = self.first_above(l, t) - 2
        w = self.first_at_or_above(l - 1, t + 2)
        if w == t + 2 and w % 2 == 0:
            # that bead only constrains the even face below the start
            w = self.first_at_or_above(l - 1, t + 3)
        cap_left = w - 3 if w % 2 == 0 else w - 2
        v0 = self.first_at_or_above(l + 1, t - 2)
        if v0 == t - 2 and v0 % 2 == 0:
            cap_right = t
        else:
            v = self.first_at_or_above(l + 1, t - 1)
            cap_right = v + 2 if v % 2 == 0 else v + 1
        return max(0, min(own, cap_left, cap_right) - t)

    def down_gap(self, l: int, t: int) -> int:
        """Number of slots the bead at (l, t) can reach jumping downward."""
        if not self.occupied(l, t):
            raise ValueError(f"no bead at ({l}, {t})")
        own = self.first_below(l, t) + 2
        w0 = self.first_at_or_below(l - 1, t + 2)
        if w0 == t + 2 and w0 % 2 == 0:
            floor_left = t
        else:
            w = self.first_at_or_below(l - 1, t + 1)
            floor_left = w - 2 if w % 2 == 0 else w - 1
        v = self.first_at_or_below(l + 1, t - 2)
        if v == t - 2 and v % 2 == 0:
            # that bead only constrains the odd face above the start
            v = self.first_at_or_below(l + 1, t - 3)
        floor_right = v + 3 if v % 2 == 0 else v + 2
        return max(0, t - max(own, floor_left, floor_right))

    def sq_available_positions(self, l: int, n: int) -> Tuple[List[int], List[int]]:
        """Reachable target slots of bead n of column l, (upward, downward)."""
        t = self.columns[l][n]
        ups = [t + k for k in range(1, self.up_gap(l, t) + 1)]
        downs = [t - k for k in range(1, self.down_gap(l, t) + 1)]
        return ups, downs

    def move_bead(self, l: int, t: int, target: int) -> None:
        """Slide a bead to target by repeated rotations, validating each."""
        if target == t:
            return
        step = 1 if target > t else -1
        cur = t
        while cur != target:
            if step > 0:
                self.elementary_flip(l, cur + 1, "up")
            else:
                self.elementary_flip(l, cur, "down")
            cur += step

    # ----- boundary-path marks and full dimer reconstruction ---------------

    def path_marked(self, l: int, j: int) -> bool:
        """Is vertex j of the boundary path between columns l and l+1 marked?

        Even indices are marked by column-l beads, odd ones by beads of
        column l+1.
        """
        if j % 2 == 0:
            return self.occupied(l, j) or self.occupied(l, j - 1)
        return self.occupied(l + 1, j - 3) or self.occupied(l + 1, j - 2)

    def path_edge_covered(self, l: int, j: int) -> bool:
        """Is the boundary-path edge (j, j+1) of path l a dimer?

        True when both endpoints are unmarked and the stretch below j
        has odd offset from the nearest mark, which is how the forced
        matching of each unmarked stretch falls.
        """
        if self.path_marked(l, j) or self.path_marked(l, j + 1):
            return False
        m = j - 1
        steps = 0
        while not self.path_marked(l, m):
            m -= 1
            steps += 1
            if steps > 2 * self.L:
                raise InterlacingViolation(f"boundary path {l} carries no marks")
        return (j - m) % 2 == 1

    def _slot_vertices(self, l: int, t: int) -> Tuple[Tuple[int, int], Tuple[int, int]]:
        s, r = divmod(t, 2)
        if r == 0:
            a = 2 * l + s + 1
            return (a, s), (a, s + 1)
        a = 2 * l + s + 1
        return (a, s + 1), (a + 1, s + 1)

    def _path_vertex(self, l: int, j: int) -> Tuple[int, int]:
        s, r = divmod(j, 2)
        return (2 * l + 1 + s + r, s)

    def normalize_vertex(self, v: Tuple[int, int]) -> Vertex:
        x, y = v
        L2 = 2 * self.L
        return ((x - y) % L2, (x + y) % L2)

    def beads_to_dimers(self) -> Set[FrozenSet[Vertex]]:
        """Full dimer cover: bead slots plus the forced boundary-path edges."""
        L2 = 2 * self.L
        out: Set[FrozenSet[Vertex]] = set()
        for l in range(self.L):
            for t in self.columns[l]:
                p, q = self._slot_vertices(l, t)
                out.add(frozenset((self.normalize_vertex(p), self.normalize_vertex(q))))
            for j in range(L2):
                if self.path_edge_covered(l, j):
                    p = self._path_vertex(l, j)
                    q = self._path_vertex(l, j + 1)
                    out.add(frozenset((self.normalize_vertex(p), self.normalize_vertex(q))))
        covered: Dict[Vertex, int] = {}
        for d in out:
            for v in d:
                covered[v] = covered.get(v, 0) + 1
        if len(covered) != 2 * self.L * self.L or any(c != 1 for c in covered.values()):
            raise InterlacingViolation("bead data does not extend to a dimer cover")
        return out

    # ----- heights ---------------------------------------------------------

    def _crossing(self, f1: SqFace, f2: SqFace) -> Tuple[bool, int]:
        """Occupancy and sign of the edge crossed going f1 -> f2.

        Faces must be adjacent: consecutive in one column, or one of the
        cross-column pairs sharing a boundary-path edge.
        """
        l1, t1 = f1
        l2, t2 = f2
        L2 = 2 * self.L
        dl = (l2 - l1) % self.L
        dt = (t2 - t1) % L2
        # each adjacency class fixes the crossed edge and the step direction
        if dl == 0 and dt == 1:
            occ = self.occupied(l1, t1)
            kind = ("slot", l1, t1)
            d = (1, 0) if t1 % 2 == 0 else (0, 1)
        elif dl == 0 and dt == L2 - 1:
            occ = self.occupied(l1, t1 - 1)
            kind = ("slot", l1, t1 - 1)
            d = (0, -1) if t1 % 2 == 0 else (-1, 0)
        elif dl == self.L - 1 and t1 % 2 == 0 and dt in (1, 3):
            j = t1 + 1 if dt == 1 else t1 + 2
            occ = self.path_edge_covered(l1 - 1, j)
            kind = ("path", l1 - 1, j)
            d = (-1, 0) if dt == 1 else (0, 1)
        elif dl == 1 and t1 % 2 == 1 and dt in (L2 - 1, L2 - 3):
            j = t1 if dt == L2 - 1 else t1 - 1
            occ = self.path_edge_covered(l1, j)
            kind = ("path", l1, j)
            d = (1, 0) if dt == L2 - 1 else (0, -1)
        else:
            raise InvalidPath(f"faces {f1} and {f2} are not adjacent")
        if kind[0] == "slot":
            p, q = self._slot_vertices(kind[1], kind[2] % L2)
        else:
            p = self._path_vertex(kind[1], kind[2])
            q = self._path_vertex(kind[1], kind[2] + 1)
        white, other = (p, q) if (p[0] + p[1]) % 2 == 0 else (q, p)
        # sigma is +1 when the white endpoint lies left of the direction
        e = (other[0] - white[0], other[1] - white[1])
        cross = d[0] * e[1] - d[1] * e[0]
        sigma = 1 if cross < 0 else -1
        return occ, sigma

    def sq_height_diff(self, path: Sequence[SqFace]) -> Fraction:
        """Height change along a face path, in quarter units."""
        if not path:
            raise InvalidPath("empty path")
        total = 0  # in quarter units
        for f1, f2 in zip(path, path[1:]):
            occ, sigma = self._crossing(f1, f2)
            total += sigma * ((4 if occ else 0) - 1)
        return Fraction(total, 4)

    def winding_e1(self) -> Fraction:
        path = [(0, t) for t in range(2 * self.L + 1)]
        return self.sq_height_diff(path)

    def winding_e2(self) -> Fraction:
        path: List[SqFace] = [(0, 0)]
        l, t = 0, 0
        for _ in range(self.L):
            if t % 2 == 0:
                path.append((l - 1, t + 1))
                path.append((l - 1, t + 2))
            else:
                path.append((l, t + 1))
                path.append((l - 1, t + 2))
            l, t = l - 1, t + 2
        return self.sq_height_diff(path)

    # ----- global validation -----------------------------------------------

    def validate(self, slope: Optional[SquareSlope] = None) -> None:
        for l in range(self.L):
            col = self.columns[l]
            if not col:
                raise EmptyColumn(f"column {l} holds no beads")
            if sorted(col) != col or len(set(col)) != len(col):
                raise InterlacingViolation(f"column {l} slot list corrupt")
            occ_col = {t for t in range(2 * self.L) if self.occ[l, t]}
            if occ_col != set(col):
                raise InterlacingViolation(f"column {l} occupancy out of step")
        for l in range(self.L):
            marks = []
            for j in range(2 * self.L):
                if self.path_marked(l, j):
                    marks.append(j)
            if len(marks) != len(self.columns[l]) + len(self.columns[(l + 1) % self.L]):
                raise InterlacingViolation(
                    f"boundary path {l}: bead marks collide or go missing"
                )
            for a, b in zip(marks, marks[1:] + [marks[0] + 2 * self.L]):
                if (a - b) % 2 == 0:
                    raise InterlacingViolation(
                        f"boundary path {l}: marks at {a} and {b} do not alternate"
                    )
        self.beads_to_dimers()
        if slope is not None:
            n_b = slope.n_beads(self.L)
            if len(self.columns[0]) != n_b:
                raise UnrealizableSector(
                    f"expected {n_b} beads per column, found {len(self.columns[0])}"
                )
            w1, w2 = slope.windings(self.L)
            got = (self.winding_e1(), self.winding_e2())
            if got != (Fraction(w1), Fraction(w2)):
                raise UnrealizableSector(
                    f"windings {got} do not match sector ({w1}, {w2})"
                )


def sq_staircase(L: int, slope: SquareSlope) -> SquareTorusConfig:
    """Deterministic valid configuration in the sector of the slope.

    Evenly spread slots with a per-column shift; the shift and offset
    are searched over a small grid and the first candidate passing full
    validation wins.
    """
    n_b = slope.n_beads(L)
    if not 1 <= n_b <= L:
        raise UnrealizableSector(f"bead count {n_b} impossible at L={L}")
    L2 = 2 * L
    for beta in (0, 1, -1, 2, -2, 3, -3):
        for c in range(n_b):
            cols = []
            for l in range(L):
                cols.append(
                    sorted({(beta * l + (L2 * m + c * l) // n_b) % L2 for m in range(n_b)})
                )
            if any(len(col) != n_b for col in cols):
                continue
            try:
                config = SquareTorusConfig(L, cols)
                config.validate(slope)
                return config
            except (InterlacingViolation, UnrealizableSector, EmptyColumn, ValueError):
                continue
    raise UnrealizableSector(
        f"no staircase found for slope ({slope}) at L={L}; sector may be empty"
    )


def sq_dimers_to_beads(L: int, dimers: Set[FrozenSet[Vertex]]) -> SquareTorusConfig:
    """Inverse of beads_to_dimers: pick out the transversal dimers.

    The remaining dimers must coincide with the forced boundary-path
    cover of the bead set, otherwise the input was not a cover this
    model produces.
    """
    L2 = 2 * L
    cols: List[List[int]] = []
    for l in range(L):
        col = []
        for t in range(L2):
            s, r = divmod(t, 2)
            a = 2 * l + s + 1
            p, q = ((a, s), (a, s + 1)) if r == 0 else ((a, s + 1), (a + 1, s + 1))
            key = frozenset(
                (((p[0] - p[1]) % L2, (p[0] + p[1]) % L2),
                 ((q[0] - q[1]) % L2, (q[0] + q[1]) % L2))
            )
            if key in dimers:
                col.append(t)
        cols.append(col)
    config = SquareTorusConfig(L, cols)
    if config.beads_to_dimers() != dimers:
        raise InterlacingViolation(
            "dimer cover is not the boundary-path completion of its beads"
        )
    return config


def sq_gap_sums(config: SquareTorusConfig) -> Tuple[int, int]:
    """(total upward range, total downward range) over all beads."""
    s_up = s_down = 0
    for l in range(config.L):
        for t in config.columns[l]:
            s_up += config.up_gap(l, t)
            s_down += config.down_gap(l, t)
    return s_up, s_down


def classify_rotation(config: SquareTorusConfig, l: int, tau: int) -> str:
    """Position of the nearest constraining cross-column bead at a face.

    A legal rotation at an even face requires the left-column slots
    just above it clear, so the nearest left bead sits at the window
    top or beyond; odd faces mirror with the right column below.  The
    three local cases are: that bead touching the window, one slot
    clear of it, or further away.
    """
    if tau % 2 == 0:
        ref = tau + 3
        b = config.first_at_or_above(l - 1, ref)
        dist = b - ref
    else:
        ref = tau - 4
        b = config.first_at_or_below(l + 1, ref)
        dist = ref - b
    if dist == 0:
        return "touching"
    if dist == 1:
        return "near"
    return "far"
