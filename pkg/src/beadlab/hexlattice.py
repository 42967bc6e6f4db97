"""Hexagonal torus geometry, bead configurations and height machinery.

Coordinates
-----------
Columns are indexed by ``l`` in ``Z_L``.  Vertical positions use doubled
integers ``u`` in ``Z_{2L}`` so that both column parities live on one
integer grid: beads (horizontal dimers) of column ``l`` sit at positions
``u == l (mod 2)``.  The torus glues columns with a shear,

    (l + L, u)  ==  (l, u + L),

so wrapping one full turn in the column direction shifts heights by L
doubled units.  Faces of the hexagonal lattice are labelled ``(l, u)``
with ``u == l (mod 2)``; the face ``(l, u)`` has the horizontal edge at
``(l, u)`` as its bottom edge.

Three edge families exist per column, each named by what the edge does
geometrically:

* ``h``  at ``(l, u)``: horizontal edge, occupied exactly when a bead of
  column ``l`` sits at ``u``;
* ``ne`` at ``(l, t)``: rising edge from column ``l`` toward ``l + 1``
  (occupied rising rhombi have density rho2);
* ``nw`` at ``(l, t)``: falling edge from column ``l`` toward ``l + 1``
  (density rho1).

Heights live on faces and are defined up to a constant by the increment
rules in :meth:`TorusBeadConfig.height_diff`.  Winding numbers along the
two fundamental loops classify configurations into sectors; the uniform
measure on one sector is the finite-volume Gibbs state.
"""

from __future__ import annotations

from bisect import bisect_left, insort
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np

from .errors import (
    EmptyColumn,
    InterlacingViolation,
    NotFlippable,
    InvalidPath,
    UnrealizableSector,
)
from .slopes import Slope

Face = Tuple[int, int]
Edge = Tuple[str, int, int]

# Face translations: adding one of these to (l, u) moves to the adjacent
# face in the named lattice direction.
STEP_UP = (0, 2)
STEP_DOWN = (0, -2)
STEP_E2 = (1, -1)
STEP_E2_BACK = (-1, 1)
STEP_E1 = (-1, -1)
STEP_E1_BACK = (1, 1)
_ALL_STEPS = (STEP_UP, STEP_DOWN, STEP_E2, STEP_E2_BACK, STEP_E1, STEP_E1_BACK)


@dataclass(frozen=True)
class TorusGeometry:
    """Size and coordinate normalization of the hexagonal torus."""

    L: int

    def __post_init__(self) -> None:
        if self.L < 3:
            raise ValueError(f"torus size must be at least 3, got {self.L}")

    def normalize(self, l: int, u: int) -> Tuple[int, int]:
        """Map any (l, u) pair to its canonical representative.

        Uses the sheared gluing (l + L, u) == (l, u + L).
        """
        L = self.L
        k = l // L
        return l - k * L, (u + k * L) % (2 * L)

    def faces(self) -> List[Face]:
        return [(l, u) for l in range(self.L) for u in range(l % 2, 2 * self.L, 2)]

    def edges(self) -> List[Edge]:
        out: List[Edge] = []
        for l in range(self.L):
            for u in range(l % 2, 2 * self.L, 2):
                out.extend((("h", l, u), ("ne", l, u), ("nw", l, u)))
        return out

    def face_valid(self, l: int, u: int) -> bool:
        return 0 <= l < self.L and 0 <= u < 2 * self.L and (u - l) % 2 == 0


class TorusBeadConfig:
    """Bead configuration on the hexagonal torus.

    Holds the per-column sorted position lists and an occupancy array in
    lockstep.  Positions are doubled integers in ``[0, 2L)`` with the
    parity of their column index.  Within a column, bead ``n`` refers to
    the ``n``-th smallest current position (label 0 is anchored at the
    smallest position).
    """

    __slots__ = ("geometry", "columns", "occ")

    def __init__(self, geometry: TorusGeometry, columns: Sequence[Sequence[int]]):
        L = geometry.L
        if len(columns) != L:
            raise ValueError(f"expected {L} columns, got {len(columns)}")
        self.geometry = geometry
        self.columns: List[List[int]] = []
        self.occ = np.zeros((L, 2 * L), dtype=np.uint8)
        for l, col in enumerate(columns):
            col = sorted(int(u) % (2 * L) for u in col)
            for u in col:
                if (u - l) % 2 != 0:
                    raise ValueError(
                        f"position {u} has wrong parity for column {l}"
                    )
                if self.occ[l, u]:
                    raise ValueError(f"duplicate bead at ({l}, {u})")
                self.occ[l, u] = 1
            self.columns.append(col)

    # ----- basic accessors -------------------------------------------------

    @property
    def L(self) -> int:
        return self.geometry.L

    def clone(self) -> "TorusBeadConfig":
        return TorusBeadConfig(self.geometry, [list(c) for c in self.columns])

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, TorusBeadConfig)
            and self.L == other.L
            and self.columns == other.columns
        )

    def __hash__(self):
        return hash((self.L, tuple(tuple(c) for c in self.columns)))

    def occupied(self, l: int, u: int) -> bool:
        """Bead present at (l, u), any integer coordinates."""
        ln, un = self.geometry.normalize(l, u)
        return bool(self.occ[ln, un])

    def bead_count(self) -> int:
        return sum(len(c) for c in self.columns)

    # ----- cyclic position queries ----------------------------------------

    def first_at_or_below(self, l: int, u: int) -> int:
        """Largest lifted bead position of column l that is <= u.

        The result is returned in the caller's frame: subtracting u gives
        the (non-positive) cyclic distance.  Raises EmptyColumn on an
        empty column.
        """
        L2 = 2 * self.L
        ln, un = self.geometry.normalize(l, u)
        col = self.columns[ln]
        if not col:
            raise EmptyColumn(f"column {ln} holds no beads")
        i = bisect_left(col, un + 1) - 1
        if i >= 0:
            dist = un - col[i]
        else:
            dist = un - col[-1] + L2
        return u - dist

    def first_above(self, l: int, u: int) -> int:
        """Smallest lifted bead position of column l strictly above u."""
        L2 = 2 * self.L
        ln, un = self.geometry.normalize(l, u)
        col = self.columns[ln]
        if not col:
            raise EmptyColumn(f"column {ln} holds no beads")
        i = bisect_left(col, un + 1)
        if i < len(col):
            dist = col[i] - un
        else:
            dist = col[0] - un + L2
        return u + dist

    def first_below(self, l: int, u: int) -> int:
        """Largest lifted bead position of column l strictly below u."""
        return self.first_at_or_below(l, u - 1)

    # ----- jump freedom ----------------------------------------------------

    def up_gap(self, l: int, u: int) -> int:
        """Number of positions the bead at (l, u) can reach moving up."""
        v = self.first_above(l - 1, u)
        w = self.first_above(l + 1, u)
        return (min(v, w) - u - 1) // 2

    def down_gap(self, l: int, u: int) -> int:
        """Number of positions the bead at (l, u) can reach moving down."""
        v = self.first_below(l - 1, u)
        w = self.first_below(l + 1, u)
        return (u - max(v, w) - 1) // 2

    def available_positions(self, l: int, n: int) -> Tuple[List[int], List[int]]:
        """Reachable target positions for bead n of column l.

        Returns (upward, downward) position lists in the caller frame
        (not wrapped), ordered by increasing jump length.
        """
        u = self.columns[l][n]
        up = [u + 2 * k for k in range(1, self.up_gap(l, u) + 1)]
        down = [u - 2 * k for k in range(1, self.down_gap(l, u) + 1)]
        return up, down

    # ----- elementary moves ------------------------------------------------

    def can_flip(self, l: int, u: int, direction: str) -> bool:
        """Legality of the elementary flip at face (l, u).

        An upward flip moves the bead at (l, u) to (l, u + 2); a downward
        flip moves the bead at (l, u + 2) to (l, u).  Both need the two
        half-level sites next to the face to be free of beads.
        """
        if direction == "up":
            if not (self.occupied(l, u) and not self.occupied(l, u + 2)):
                return False
        elif direction == "down":
            if not (self.occupied(l, u + 2) and not self.occupied(l, u)):
                return False
        else:
            raise ValueError(f"direction must be 'up' or 'down', got {direction!r}")
        return not (self.occupied(l - 1, u + 1) or self.occupied(l + 1, u + 1))

    def elementary_flip(self, l: int, u: int, direction: str) -> Tuple[int, int]:
        """Apply the flip at face (l, u); returns the bead's new (l, u).

        Raises NotFlippable when the move is blocked.
        """
        if not self.can_flip(l, u, direction):
            raise NotFlippable(f"no {direction} flip at face ({l}, {u})")
        ln, un = self.geometry.normalize(l, u)
        if direction == "up":
            src = un
            dst = (un + 2) % (2 * self.L)
        else:
            src = (un + 2) % (2 * self.L)
            dst = un
        col = self.columns[ln]
        col.pop(bisect_left(col, src))
        insort(col, dst)
        self.occ[ln, src] = 0
        self.occ[ln, dst] = 1
        return ln, dst

    def move_bead(self, l: int, u: int, target: int) -> None:
        """Move the bead at (l, u) to the lifted position target.

        The move is applied as the corresponding sequence of elementary
        flips so that exactly the legal jumps of the dynamics are
        expressible.  Raises NotFlippable if any flip in the chain is
        blocked.
        """
        if target == u:
            return
        step = 2 if target > u else -2
        cur = u
        while cur != target:
            if step > 0:
                self.elementary_flip(l, cur, "up")
            else:
                self.elementary_flip(l, cur - 2, "down")
            cur += step

    # ----- dimer occupancy -------------------------------------------------

    def edge_occupied(self, kind: str, l: int, t: int) -> bool:
        """Occupancy of the dimer edge (kind, l, t).

        ``h`` edges mirror bead occupancy.  A rising edge ``ne(l, t)`` is
        occupied when, scanning downward from height t on the seam
        between columns l and l + 1, the first bead marker found belongs
        to column l + 1; a falling edge ``nw(l, t)`` is occupied when the
        first marker at or below t - 1 belongs to column l.
        """
        if kind == "h":
            return self.occupied(l, t)
        if kind == "ne":
            b = self.first_at_or_below(l, t)
            w = self.first_at_or_below(l + 1, t)
            return w > b
        if kind == "nw":
            b = self.first_at_or_below(l, t - 1)
            w = self.first_at_or_below(l + 1, t - 1)
            return b > w
        raise ValueError(f"unknown edge kind {kind!r}")

    def beads_to_dimers(self) -> Set[Edge]:
        """Full dimer cover induced by the bead positions.

        Walks every seam between adjacent columns, merging the two bead
        lists into alternating markers, and fills the gaps with rising
        and falling edges.  Raises InterlacingViolation if any seam fails
        to alternate strictly.
        """
        L = self.L
        L2 = 2 * L
        cover: Set[Edge] = set()
        for l in range(L):
            for u in self.columns[l]:
                cover.add(("h", l, u))
        for l in range(L):
            blacks = self.columns[l]
            if l + 1 < L:
                whites = self.columns[l + 1]
            else:
                whites = sorted((u - L) % L2 for u in self.columns[0])
            if len(blacks) != len(whites):
                raise InterlacingViolation(
                    f"seam {l}: {len(blacks)} vs {len(whites)} beads"
                )
            if not blacks:
                raise EmptyColumn(f"column {l} holds no beads")
            merged = sorted(
                [(u, "b") for u in blacks] + [(w, "w") for w in whites]
            )
            for (u1, c1), (u2, c2) in zip(merged, merged[1:] + [(merged[0][0] + L2, merged[0][1])]):
                if c1 == c2:
                    raise InterlacingViolation(
                        f"seam {l}: consecutive {c1} markers at {u1}, {u2}"
                    )
                if c1 == "b":
                    # falling edges between a bead of column l and the
                    # next marker of column l + 1 above it
                    for t in range(u1 + 2, u2, 2):
                        cover.add(("nw", l, t % L2))
                else:
                    for t in range(u1 + 1, u2 - 1, 2):
                        cover.add(("ne", l, t % L2))
        return cover

    # ----- heights ---------------------------------------------------------

    def _step_increment(self, l: int, u: int, step: Tuple[int, int]) -> int:
        if step == STEP_UP:
            return (1 if self.edge_occupied("h", l, u + 2) else 0) - 1
        if step == STEP_DOWN:
            return 1 - (1 if self.edge_occupied("h", l, u) else 0)
        if step == STEP_E2:
            return 1 if self.edge_occupied("ne", l, u) else 0
        if step == STEP_E2_BACK:
            return -1 if self.edge_occupied("ne", l - 1, u + 1) else 0
        if step == STEP_E1:
            return 1 if self.edge_occupied("nw", l - 1, u + 1) else 0
        if step == STEP_E1_BACK:
            return -1 if self.edge_occupied("nw", l, u + 2) else 0
        raise InvalidPath(f"no lattice step {step}")

    def height_diff(self, path: Sequence[Face]) -> int:
        """Height difference accumulated along a face path.

        Consecutive faces must be lattice neighbours (in normalized or
        lifted coordinates); InvalidPath is raised otherwise.  The height
        increases by 1 when the step crosses an occupied rising or
        falling edge, and decreases by 1 on an upward step that crosses
        no dimer (with the reversed rules for reversed steps).
        """
        if len(path) < 2:
            return 0
        total = 0
        norm = self.geometry.normalize
        for (l1, u1), (l2, u2) in zip(path, path[1:]):
            a = norm(l1, u1)
            step = None
            for cand in _ALL_STEPS:
                if norm(l1 + cand[0], u1 + cand[1]) == norm(l2, u2):
                    step = cand
                    break
            if step is None or not self.geometry.face_valid(*a):
                raise InvalidPath(f"faces ({l1},{u1}) -> ({l2},{u2}) are not adjacent")
            total += self._step_increment(l1, u1, step)
        return total

    def windings(self) -> Tuple[int, int]:
        """Winding numbers (w2, w3) along the two fundamental loops.

        w3 is the height change along the vertical loop through L faces
        of one column; w2 along the rising diagonal loop, which closes
        thanks to the sheared gluing.
        """
        l0, u0 = 0, 0
        loop3 = [(l0, u0 + 2 * i) for i in range(self.L)] + [(l0, u0)]
        w3 = self.height_diff(loop3)
        loop2 = [(l0 + i, u0 - i) for i in range(self.L)] + [(l0, u0)]
        w2 = self.height_diff(loop2)
        return w2, w3

    def winding_e1(self) -> int:
        """Height change along the falling diagonal loop (equals -w2-w3)."""
        loop1 = [(-i, -i) for i in range(self.L)] + [(0, 0)]
        return self.height_diff(loop1)

    # ----- validation ------------------------------------------------------

    def validate(self, slope: Optional[Slope] = None) -> None:
        """Check every structural invariant; raise on the first failure.

        Verifies lockstep of the two representations, equal per-column
        bead counts, strict seam alternation (via beads_to_dimers) and,
        when a slope is given, the sector data (bead count and winding
        numbers).
        """
        L = self.L
        counts = {len(c) for c in self.columns}
        if len(counts) != 1:
            raise InterlacingViolation(f"unequal column counts: {sorted(counts)}")
        n_b = counts.pop()
        if n_b == 0:
            raise EmptyColumn("configuration has no beads")
        occ_check = np.zeros_like(self.occ)
        for l, col in enumerate(self.columns):
            if col != sorted(set(col)):
                raise ValueError(f"column {l} positions not sorted/unique")
            for u in col:
                occ_check[l, u] = 1
        if not np.array_equal(occ_check, self.occ):
            raise ValueError("occupancy array out of sync with position lists")
        self.beads_to_dimers()
        if slope is not None:
            want_nb = slope.n_beads(L)
            if n_b != want_nb:
                raise UnrealizableSector(
                    f"bead count {n_b} does not match sector ({want_nb})"
                )
            if self.windings() != slope.windings(L):
                raise UnrealizableSector(
                    f"windings {self.windings()} do not match sector "
                    f"{slope.windings(L)}"
                )


def _interlacing_ok(config: TorusBeadConfig) -> bool:
    try:
        config.beads_to_dimers()
    except (InterlacingViolation, EmptyColumn):
        return False
    return True


def _repair_interlacing(config: TorusBeadConfig, max_passes: int = 40) -> bool:
    """Nudge beads by one step to remove seam violations.

    Returns True when the configuration alternates on every seam.  Used
    only by the staircase constructor on rounded positions; the final
    validator still runs afterwards.
    """
    L = config.L
    L2 = 2 * L
    for _ in range(max_passes):
        moved = False
        for l in range(L):
            blacks = list(config.columns[l])
            if l + 1 < L:
                whites = config.columns[l + 1]
                shift = 0
            else:
                whites = config.columns[0]
                shift = -L
            marks = sorted(
                [(u % L2, "b", u % L2) for u in blacks]
                + [((w + shift) % L2, "w", w) for w in whites]
            )
            n = len(marks)
            for i in range(n):
                u1, c1, raw1 = marks[i]
                u2, c2, raw2 = marks[(i + 1) % n]
                if c1 != c2:
                    continue
                # push the upper marker of the clashing pair upward
                col = l if c2 == "b" else (l + 1) % L
                src = raw2
                dst = (src + 2) % L2
                if not config.occ[col, dst]:
                    ci = config.columns[col]
                    ci.pop(bisect_left(ci, src))
                    insort(ci, dst)
                    config.occ[col, src] = 0
                    config.occ[col, dst] = 1
                    moved = True
                    break
            if moved:
                break
        if not moved:
            return _interlacing_ok(config)
    return _interlacing_ok(config)


def staircase_config(L: int, slope: Slope) -> TorusBeadConfig:
    """Deterministic member of the sector prescribed by (L, slope).

    Positions are laid on a sheared staircase u(l, m) = beta * l +
    2 * floor((L * m + c * l) / n_b) with an odd column shear beta and an
    integer phase c.  The pair (beta, c) is searched near the slope's
    ideal shear until the measured winding numbers match the sector;
    rounding artefacts on the seams are repaired by local nudges first.
    Raises UnrealizableSector when no candidate works.
    """
    geometry = TorusGeometry(L)
    n_b = slope.n_beads(L)
    if n_b < 1:
        raise UnrealizableSector(
            f"slope {slope} gives no beads at L={L}"
        )
    w2, w3 = slope.windings(L)
    ideal = (2 * L - 2 * w2) / n_b - 1
    beta0 = int(round((ideal - 1) / 2)) * 2 + 1
    candidates = []
    for db in (0, -2, 2, -4, 4, -6, 6):
        for c in range(n_b):
            candidates.append((beta0 + db, c))
    for beta, c in candidates:
        cols = [
            [(beta * l + 2 * ((L * m + c * l) // n_b)) % (2 * L) for m in range(n_b)]
            for l in range(L)
        ]
        try:
            config = TorusBeadConfig(geometry, cols)
        except ValueError:
            continue
        if not _interlacing_ok(config) and not _repair_interlacing(config):
            continue
        if len({len(col) for col in config.columns}) != 1:
            continue
        if config.windings() == (w2, w3):
            config.validate(slope)
            return config
    raise UnrealizableSector(
        f"no staircase found for L={L}, slope {slope} (windings ({w2}, {w3}))"
    )
