"""Irreversible bead jump dynamics on the torus.

Each bead carries two families of moves: it may jump upward to any of
the ``up_gap`` positions reachable without touching another bead, each
at rate p, and downward likewise at rate q.  This per-(bead, target)
formulation is equivalent to the clock-per-site description (every ring
of an empty site's clock triggers at most one specific bead's jump) and
is the one simulated: a Gillespie chain over the move set.

Moves are executed as sequences of elementary flips so each crossed face
is accounted; the face counters Q_x decrease by one per upward crossing
and increase by one per downward crossing, matching the height change
of the face.

The module also provides the single-flip comparison dynamics (jumps
truncated to one step), the clock-semantics reference used in tests,
the V-count observable behind the current formula, and the exact
rational identities satisfied by the generator (column charges and the
gradient structure used to prove stationarity on the torus).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Set, Tuple

from .errors import EmptyColumn
from .hexlattice import Face, TorusBeadConfig
from .rng import SplitMix64


@dataclass
class DynamicsSpec:
    """Rates and horizon of one dynamics run."""

    p: float
    q: float
    T: float
    seed: int
    lattice: str = "hex"
    engine: str = "auto"  # auto | python | compiled

    def __post_init__(self) -> None:
        if self.p < 0 or self.q < 0 or self.p + self.q <= 0:
            raise ValueError(f"rates must be nonnegative with p + q > 0, got {self.p}, {self.q}")
        if self.T < 0:
            raise ValueError(f"horizon must be nonnegative, got {self.T}")
        if self.lattice not in ("hex", "square"):
            raise ValueError(f"unknown lattice tag {self.lattice!r}")


@dataclass
class ObservableTracker:
    """Running observables updated at event times.

    faces: faces whose flux counter Q_x is tracked (Q_x equals the height
    change of the face since time zero).
    tagged: optional (column, label) bead whose net displacement in slots
    is accumulated.
    gap_radius: when set, the running maximum bead spacing over all
    columns within that cyclic distance of column 0 is maintained.
    """

    faces: Tuple[Face, ...] = ()
    tagged: Optional[Tuple[int, int]] = None
    gap_radius: Optional[int] = None
    record_events: bool = False

    q_x: Dict[Face, int] = field(default_factory=dict)
    tagged_shift: int = 0
    sup_gap: int = 0
    n_events: int = 0
    event_log: List[Tuple[float, int, int, int, int]] = field(default_factory=list)
    _gap_columns: Set[int] = field(default_factory=set)

    def bind(self, config: TorusBeadConfig) -> None:
        """Normalize face keys and take the time-zero gap baseline."""
        L = config.L
        self.q_x = {config.geometry.normalize(*f): 0 for f in self.faces}
        self.faces = tuple(self.q_x)
        self.tagged_shift = 0
        self.n_events = 0
        self.event_log = []
        if self.gap_radius is not None:
            R = self.gap_radius
            self._gap_columns = {l for l in range(L) if min(l, L - l) <= R}
            self.sup_gap = max(
                self._column_max_gap(config, l) for l in self._gap_columns
            )

    @staticmethod
    def _column_max_gap(config: TorusBeadConfig, l: int) -> int:
        col = config.columns[l]
        if not col:
            raise EmptyColumn(f"column {l} holds no beads")
        L2 = 2 * config.L
        worst = 0
        for a, b in zip(col, col[1:] + [col[0] + L2]):
            worst = max(worst, (b - a) // 2)
        return worst

    def on_jump(self, t: float, l: int, n: int, u_norm: int, delta: int, L: int) -> None:
        L2 = 2 * L
        k = abs(delta) // 2
        if self.q_x:
            if delta > 0:
                for j in range(k):
                    f = (l, (u_norm + 2 * j) % L2)
                    if f in self.q_x:
                        self.q_x[f] -= 1
            else:
                for j in range(k):
                    f = (l, (u_norm + delta + 2 * j) % L2)
                    if f in self.q_x:
                        self.q_x[f] += 1
        if self.tagged is not None and self.tagged == (l, n):
            self.tagged_shift += delta // 2
        if self.record_events:
            self.event_log.append((t, l, n, u_norm, delta))
        self.n_events += 1


class Fenwick:
    """Prefix-sum tree over nonnegative integer weights."""

    __slots__ = ("n", "tree", "vals", "total", "_top_bit")

    def __init__(self, n: int):
        self.n = n
        self.tree = [0] * (n + 1)
        self.vals = [0] * n
        self.total = 0
        self._top_bit = 1 << n.bit_length()

    def set(self, i: int, value: int) -> None:
        delta = value - self.vals[i]
        if delta == 0:
            return
        self.vals[i] = value
        self.total += delta
        j = i + 1
        while j <= self.n:
            self.tree[j] += delta
            j += j & (-j)

    def search(self, v: int) -> Tuple[int, int]:
        """Smallest index i with prefix(0..i) > v; returns (i, v - prefix(0..i-1))."""
        i = 0
        rem = v
        bit = self._top_bit
        while bit:
            j = i + bit
            if j <= self.n and self.tree[j] <= rem:
                rem -= self.tree[j]
                i = j
            bit >>= 1
        return i, rem


class HexDynamicsState:
    """Configuration plus the incremental structures of the event chain.

    Labels are fixed at construction: bead (l, n) is the n-th smallest
    position of column l at time zero, and labels ride with beads from
    then on.  Lifted positions (never wrapped) stay strictly increasing
    in the label, which keeps cyclic order bookkeeping trivial.

    When ``capped`` is true the per-bead weights are min(gap, 1), which
    turns the same machinery into the single-flip dynamics.
    """

    def __init__(self, config: TorusBeadConfig, capped: bool = False):
        config.validate()
        self.config = config
        self.capped = capped
        L = config.L
        self.L = L
        self.n_b = len(config.columns[0])
        n = L * self.n_b
        self.pos_lift: List[List[int]] = [list(col) for col in config.columns]
        self.label_at: List[List[int]] = [[-1] * (2 * L) for _ in range(L)]
        for l in range(L):
            for bn, u in enumerate(self.pos_lift[l]):
                self.label_at[l][u] = bn
        self.fw_up = Fenwick(n)
        self.fw_down = Fenwick(n)
        for l in range(L):
            for bn in range(self.n_b):
                self.refresh_bead(l, bn)

    def _weight(self, gap: int) -> int:
        return min(gap, 1) if self.capped else gap

    def refresh_bead(self, l: int, n: int) -> None:
        u = self.pos_lift[l][n] % (2 * self.L)
        i = l * self.n_b + n
        self.fw_up.set(i, self._weight(self.config.up_gap(l, u)))
        self.fw_down.set(i, self._weight(self.config.down_gap(l, u)))

    def neighbor_labels(self, l: int, u: int) -> Set[Tuple[int, int]]:
        """The up-to-4 beads in adjacent columns whose gaps involve (l, u)."""
        out: Set[Tuple[int, int]] = set()
        norm = self.config.geometry.normalize
        for dl in (-1, 1):
            for v in (self.config.first_above(l + dl, u), self.config.first_below(l + dl, u)):
                ln, un = norm(l + dl, v)
                out.add((ln, self.label_at[ln][un]))
        return out

    def apply_move(self, t: float, l: int, n: int, delta: int, tracker: Optional[ObservableTracker]) -> None:
        """Jump bead (l, n) by delta doubled units (delta even, nonzero)."""
        L2 = 2 * self.L
        u_lift = self.pos_lift[l][n]
        u_norm = u_lift % L2
        affected = self.neighbor_labels(l, u_norm)
        affected.add((l, n))
        # seam alternation shields the own-column neighbours (their caps
        # are always met first by a cross-column bead), but refreshing
        # them is a cheap no-op and keeps the invariant local to read
        affected.add((l, (n - 1) % self.n_b))
        affected.add((l, (n + 1) % self.n_b))
        self.config.move_bead(l, u_norm, u_norm + delta)
        self.pos_lift[l][n] = u_lift + delta
        self.label_at[l][u_norm] = -1
        self.label_at[l][(u_norm + delta) % L2] = n
        if tracker is not None:
            tracker.on_jump(t, l, n, u_norm, delta, self.L)
            if tracker.gap_radius is not None and l in tracker._gap_columns:
                prev_l = self.pos_lift[l][(n - 1) % self.n_b]
                next_l = self.pos_lift[l][(n + 1) % self.n_b]
                cur = u_lift + delta
                if self.n_b == 1:
                    tracker.sup_gap = max(tracker.sup_gap, self.L)
                else:
                    above = (next_l - cur) % L2 // 2 or self.L
                    below = (cur - prev_l) % L2 // 2 or self.L
                    tracker.sup_gap = max(tracker.sup_gap, above, below)
        for al, an in affected:
            self.refresh_bead(al, an)

    def totals(self) -> Tuple[int, int]:
        return self.fw_up.total, self.fw_down.total


Move = Tuple[int, int, int, str]  # (column, label, target position, direction)


def enumerate_moves(config: TorusBeadConfig) -> List[Move]:
    """All jumps available from config, in canonical order.

    Each entry (l, n, target, direction) is one (bead, target) pair;
    upward entries carry rate p, downward rate q.  The order is fixed
    (column, label, direction, distance) for reproducible selection.
    """
    moves: List[Move] = []
    for l in range(config.L):
        for n in range(len(config.columns[l])):
            ups, downs = config.available_positions(l, n)
            moves.extend((l, n, z, "up") for z in ups)
            moves.extend((l, n, z, "down") for z in downs)
    return moves


def clock_outcomes(config: TorusBeadConfig) -> Dict[Tuple[int, int, str], Optional[Move]]:
    """Outcome of a single ring of every site clock, by direct semantics.

    A ring of the up-clock at an empty site moves the first bead below it
    up to the site, unless the interlacing constraint forbids the jump;
    the down-clock mirrors this with the first bead above.  Rings at
    occupied sites do nothing (None).
    """
    out: Dict[Tuple[int, int, str], Optional[Move]] = {}
    L2 = 2 * config.L
    for l in range(config.L):
        for z in range(l % 2, L2, 2):
            for which in ("up", "down"):
                key = (l, z, which)
                if config.occupied(l, z):
                    out[key] = None
                    continue
                if which == "up":
                    u = config.first_below(l, z)
                    ok = (z - u) // 2 <= config.up_gap(l, u % L2)
                else:
                    u = config.first_above(l, z)
                    ok = (u - z) // 2 <= config.down_gap(l, u % L2)
                if not ok:
                    out[key] = None
                    continue
                un = u % L2
                n = config.columns[l].index(un)
                target = un + (z - u if which == "up" else -(u - z))
                out[key] = (l, n, target, which)
    return out


def _python_run(
    config: TorusBeadConfig,
    spec: DynamicsSpec,
    tracker: Optional[ObservableTracker],
    capped: bool,
) -> Tuple[TorusBeadConfig, Optional[ObservableTracker]]:
    state = HexDynamicsState(config, capped=capped)
    rng = SplitMix64(spec.seed)
    if tracker is not None:
        tracker.bind(config)
    t = 0.0
    p, q, T = spec.p, spec.q, spec.T
    while True:
        s_up, s_down = state.totals()
        rate = p * s_up + q * s_down
        if rate == 0.0:
            break
        t += rng.exponential(rate)
        if t > T:
            break
        go_up = rng.uniform() * rate < p * s_up
        if go_up:
            v = rng.below(s_up)
            i, rem = state.fw_up.search(v)
            delta = 2 * (rem + 1)
        else:
            v = rng.below(s_down)
            i, rem = state.fw_down.search(v)
            delta = -2 * (rem + 1)
        state.apply_move(t, i // state.n_b, i % state.n_b, delta, tracker)
    return config, tracker


def run(
    config: TorusBeadConfig,
    spec: DynamicsSpec,
    tracker: Optional[ObservableTracker] = None,
) -> Tuple[TorusBeadConfig, Optional[ObservableTracker]]:
    """Advance the jump dynamics to time T in place.

    The compiled engine is used when available (identical event chain by
    construction; see fasthex); the pure Python chain is the reference.
    """
    if spec.engine in ("auto", "compiled"):
        from . import fasthex

        if fasthex.AVAILABLE:
            return fasthex.run_dynamics(config, spec, tracker)
        if spec.engine == "compiled":
            raise RuntimeError("compiled engine requested but not available")
    return _python_run(config, spec, tracker, capped=False)


def single_flip_run(
    config: TorusBeadConfig,
    spec: DynamicsSpec,
    tracker: Optional[ObservableTracker] = None,
) -> Tuple[TorusBeadConfig, Optional[ObservableTracker]]:
    """Comparison dynamics with jumps truncated to single elementary flips.

    Every bead with room moves one step up at rate p and one step down at
    rate q, regardless of how much further room it has.  This is the
    growth dynamics whose stationary states differ from the sector
    measures; run() is the bead dynamics proper.
    """
    if spec.engine in ("auto", "compiled"):
        from . import fasthex

        if fasthex.AVAILABLE:
            return fasthex.run_dynamics(config, spec, tracker, capped=True)
        if spec.engine == "compiled":
            raise RuntimeError("compiled engine requested but not available")
    return _python_run(config, spec, tracker, capped=True)


def gillespie_step(
    config: TorusBeadConfig,
    spec: DynamicsSpec,
    rng: SplitMix64,
    tracker: Optional[ObservableTracker] = None,
    state: Optional[HexDynamicsState] = None,
) -> Tuple[TorusBeadConfig, float]:
    """One event of the chain; returns (config, waiting time).

    When no move exists the waiting time is infinite and the config is
    untouched.  Building the incremental state costs O(beads); callers
    stepping repeatedly should pass a persistent state.
    """
    if state is None:
        state = HexDynamicsState(config)
    if tracker is not None and not tracker.q_x and tracker.faces:
        tracker.bind(config)
    s_up, s_down = state.totals()
    rate = spec.p * s_up + spec.q * s_down
    if rate == 0.0:
        return config, math.inf
    dt = rng.exponential(rate)
    go_up = rng.uniform() * rate < spec.p * s_up
    if go_up:
        i, rem = state.fw_up.search(rng.below(s_up))
        delta = 2 * (rem + 1)
    else:
        i, rem = state.fw_down.search(rng.below(s_down))
        delta = -2 * (rem + 1)
    state.apply_move(dt, i // state.n_b, i % state.n_b, delta, tracker)
    return config, dt


# ----- observables and exact identities ------------------------------------


def compute_V_counts(config: TorusBeadConfig, face: Face) -> Tuple[int, int]:
    """Counts of sites whose up-move (down-move) would cross the face.

    For the face x, the up-count is the number of empty-or-occupied
    sites e in x's column such that the first bead below e can legally
    jump to e crossing x on the way; mirrored for down-moves.  The mean
    of either count under the sector measure is the stationary current
    through the face.
    """
    l, u_f = config.geometry.normalize(*face)
    L2 = 2 * config.L
    b = config.first_at_or_below(l, u_f)
    d_up = (u_f - b) // 2
    up = max(0, config.up_gap(l, b % L2) - d_up)
    a = config.first_above(l, u_f)
    d_down = (a - u_f - 2) // 2
    down = max(0, config.down_gap(l, a % L2) - d_down)
    return up, down


def gap_sums(config: TorusBeadConfig) -> Tuple[int, int]:
    """(sum of up gaps, sum of down gaps) over all beads."""
    s_up = s_down = 0
    for l in range(config.L):
        for u in config.columns[l]:
            s_up += config.up_gap(l, u)
            s_down += config.down_gap(l, u)
    return s_up, s_down


def column_charge(config: TorusBeadConfig, l: int) -> int:
    """X(l): signed mobility of column l (up gaps minus down gaps)."""
    return sum(
        config.up_gap(l, u) - config.down_gap(l, u) for u in config.columns[l]
    )


def column_potential(config: TorusBeadConfig, l: int, p: Fraction, q: Fraction) -> Fraction:
    """Y(l): the discrete potential whose second difference is drift of X."""
    y = Fraction(0)
    for u in config.columns[l]:
        gu = config.up_gap(l, u)
        gd = config.down_gap(l, u)
        y += -(p * gu * (gu + 1)) / 2 + (q * gd * (gd + 1)) / 2
    return y


def charge_drift(config: TorusBeadConfig, l: int, p: Fraction, q: Fraction) -> Fraction:
    """Exact generator drift of X(l): sum over moves of rate times change.

    Computed by brute force: every available jump is applied on a clone
    and the charge recomputed.  Rational arithmetic throughout, so the
    gradient identity can be checked exactly.
    """
    x0 = column_charge(config, l)
    drift = Fraction(0)
    for ml, mn, target, direction in enumerate_moves(config):
        probe = config.clone()
        probe.move_bead(ml, probe.columns[ml][mn], target)
        rate = p if direction == "up" else q
        drift += rate * (column_charge(probe, l) - x0)
    return drift


def gradient_identity_residual(
    config: TorusBeadConfig, l: int, p: Fraction = Fraction(1), q: Fraction = Fraction(1)
) -> Fraction:
    """Drift of X(l) minus the discrete Laplacian of Y at l (exact).

    Zero on every configuration, for any rates (the up and down parts
    are separately of gradient form); this is the structure that forces
    the stationary current to telescope on the torus.
    """
    drift = charge_drift(config, l, p, q)
    y_prev = column_potential(config, l - 1 if l > 0 else config.L - 1, p, q)
    y_here = column_potential(config, l, p, q)
    y_next = column_potential(config, (l + 1) % config.L, p, q)
    return drift - ((y_here - y_prev) - (y_next - y_here))
