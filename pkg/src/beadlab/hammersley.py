"""One-dimensional discrete Hammersley dynamics and its last-passage form.

Particles sit on Z, strictly ordered by label.  Every site carries a
rate-lambda clock; when a clock rings at an empty site, the nearest
particle to its right jumps onto the site.  The variational formula
expresses the label-n position at time t as an infimum over lower
labels of initial position plus a last-passage width: the minimal
horizontal stretch of a rectangle containing a chain of field points
strictly increasing in both space and time.

Finite windows replace the infinite system.  The clock field stops at
the lowest initial position, which pins the bottom particle in place
(it is the frozen boundary standing in for the tail below), and a ring
with no particle to its right moves nothing in the closed system; with
closed=False that situation raises WindowExceeded instead, for use as
an audited window into a larger system.  Under this matching the
simulated trajectory and the variational formula describe the same
finite process, so their agreement is pathwise and exact, not
statistical.
"""

from __future__ import annotations

import math
from bisect import bisect_left
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from numba import njit

from .errors import WindowExceeded
from .rng import SplitMix64


@dataclass
class DhdState:
    """Strictly increasing particle positions; index is the label."""

    positions: List[int]

    def __post_init__(self) -> None:
        if not self.positions:
            raise ValueError("at least one particle required")
        for a, b in zip(self.positions, self.positions[1:]):
            if b <= a:
                raise ValueError(f"positions must strictly increase, got {a} then {b}")

    def clone(self) -> "DhdState":
        return DhdState(list(self.positions))


def _poisson_count(mean: float, rng: SplitMix64) -> int:
    """Poisson draw by chunked multiplication of uniforms."""
    n = 0
    while mean > 0:
        chunk = min(mean, 500.0)
        mean -= chunk
        threshold = math.exp(-chunk)
        prod = rng.uniform()
        while prod >= threshold:
            n += 1
            prod *= rng.uniform()
    return n


@dataclass
class PoissonField:
    """Clock realization: ring times per site over [x_min, x_max] x [0, horizon]."""

    x_min: int
    x_max: int
    horizon: float
    rate: float
    times_by_site: List[List[float]]

    @classmethod
    def sample(
        cls, x_min: int, x_max: int, horizon: float, rate: float, rng: SplitMix64
    ) -> "PoissonField":
        if x_max < x_min:
            raise ValueError("empty site window")
        while True:
            times: List[List[float]] = []
            for _ in range(x_max - x_min + 1):
                site: List[float] = []
                t = rng.exponential(rate)
                while t <= horizon:
                    site.append(t)
                    t += rng.exponential(rate)
                times.append(site)
            merged = sorted(t for site in times for t in site)
            if all(a != b for a, b in zip(merged, merged[1:])):
                return cls(x_min, x_max, horizon, rate, times)
            # simultaneous rings are a measure-zero event; resample

    def events(self) -> List[Tuple[float, int]]:
        """All rings as (time, site), time-ordered."""
        out = [
            (t, self.x_min + i)
            for i, site in enumerate(self.times_by_site)
            for t in site
        ]
        out.sort()
        return out

    def points(self, a: int, b: int, s: float, t: float) -> List[Tuple[float, int]]:
        """Rings in the half-open rectangle (a, b] x (s, t], time-ordered."""
        lo = max(a + 1, self.x_min)
        hi = min(b, self.x_max)
        out = [
            (tt, x)
            for x in range(lo, hi + 1)
            for tt in self.times_by_site[x - self.x_min]
            if s < tt <= t
        ]
        out.sort()
        return out


# ===== last-passage counts =================================================


def lpp_count(field: PoissonField, a: int, s: float, b: int, t: float) -> int:
    """Longest chain of rings strictly increasing in space and time.

    Patience sorting: scan points in time order, keep the minimal
    possible space value for each chain length.
    """
    tails: List[int] = []
    for _, x in field.points(a, b, s, t):
        i = bisect_left(tails, x)
        if i == len(tails):
            tails.append(x)
        else:
            tails[i] = x
    return len(tails)


@njit(cache=True)
def _gamma_kernel(ptr, times, start, end, horizon, widths):  # pragma: no cover
    # Columns are scanned left to right; within a column, times run
    # downward so no two rings of one site can join the same chain.
    # tails holds the minimal latest-time of a chain of each length.
    n_total = ptr[end] - ptr[start]
    tails = np.empty(n_total, dtype=np.float64)
    m = 0
    reached = 0
    k_max = widths.shape[0] - 1
    for col in range(start, end):
        for j in range(ptr[col + 1] - 1, ptr[col] - 1, -1):
            tt = times[j]
            if tt > horizon:
                continue
            lo, hi = 0, m
            while lo < hi:
                mid = (lo + hi) // 2
                if tails[mid] < tt:
                    lo = mid + 1
                else:
                    hi = mid
            tails[lo] = tt
            if lo == m:
                m += 1
        while reached < m and reached < k_max:
            reached += 1
            widths[reached] = col - start + 1
    return reached


class _FieldIndex:
    """CSR layout of a field's ring times for the compiled kernel."""

    def __init__(self, field: PoissonField):
        self.field = field
        counts = [len(site) for site in field.times_by_site]
        self.ptr = np.zeros(len(counts) + 1, dtype=np.int64)
        np.cumsum(counts, out=self.ptr[1:])
        self.times = np.fromiter(
            (t for site in field.times_by_site for t in site),
            dtype=np.float64,
            count=int(self.ptr[-1]),
        )


def gamma_widths(
    field: PoissonField,
    a: int,
    t: float,
    k_max: int,
    index: Optional[_FieldIndex] = None,
) -> List[int]:
    """Minimal widths g with g[k] = inf{h : chain of k rings in (a, a+h] x (0, t]}.

    Returns the achieved prefix: g[0] = 0 and one entry per chain length
    realized inside the stored window; lengths beyond the window edge
    are absent rather than guessed.
    """
    if index is None:
        index = _FieldIndex(field)
    start = max(a + 1, field.x_min) - field.x_min
    end = field.x_max - field.x_min + 1
    widths = np.zeros(k_max + 1, dtype=np.int64)
    if start >= end or k_max == 0:
        return [0]
    reached = _gamma_kernel(index.ptr, index.times, start, end, t, widths)
    base = max(a + 1, field.x_min) - 1 - a  # nonzero only if a is left of the window
    return [0] + [int(w) + base for w in widths[1 : reached + 1]]


# ===== dynamics and the variational formula ================================


def dhd_simulate(
    initial: DhdState, field: PoissonField, closed: bool = True
) -> List[Tuple[float, List[int]]]:
    """Trajectory of the ring dynamics: list of (time, positions).

    Rings are processed in time order; a ring at an empty site moves the
    nearest particle to its right onto the site.  A ring with no stored
    particle to its right is a no-op in the closed system and a
    WindowExceeded error otherwise.
    """
    z = list(initial.positions)
    out = [(0.0, list(z))]
    for t, x in field.events():
        i = bisect_left(z, x)
        if i < len(z) and z[i] == x:
            continue  # occupied site
        if i == len(z):
            if closed:
                continue
            raise WindowExceeded(
                f"ring at site {x} at time {t:.6f} has no stored particle to its right"
            )
        z[i] = x
        out.append((t, list(z)))
    return out


def dhd_lpp_all(
    initial: DhdState, field: PoissonField, t: float, index: Optional[_FieldIndex] = None
) -> List[int]:
    """All particle positions at time t by the variational formula.

    Position n is the minimum over labels j <= n of the initial position
    of j plus the minimal width holding a chain of n - j rings.  The
    window is audited: if a truncated width could still have lowered
    some minimum, WindowExceeded is raised instead of returning a guess.
    """
    z0 = initial.positions
    m = len(z0)
    if index is None:
        index = _FieldIndex(field)
    best = [None] * m
    truncated: List[Tuple[int, int]] = []  # (j, first unreached chain length)
    for j in range(m):
        g = gamma_widths(field, z0[j], t, m - 1 - j, index)
        for k, w in enumerate(g):
            n = j + k
            v = z0[j] + w
            if best[n] is None or v < best[n]:
                best[n] = v
        if len(g) <= m - 1 - j:
            truncated.append((j, len(g)))
    for j, k0 in truncated:
        for n in range(j + k0, m):
            # any unreached width exceeds the window edge, so the term is
            # at least x_max + 1
            if field.x_max + 1 < best[n]:
                raise WindowExceeded(
                    f"window edge {field.x_max} could hide the minimizer for label {n}"
                )
    return [int(v) for v in best]


def dhd_lpp(initial: DhdState, field: PoissonField, n: int, t: float) -> int:
    """Position of label n at time t by the variational formula."""
    return dhd_lpp_all(initial, field, t)[n]


def tail_bound(k: int, h: float, t: float) -> float:
    """Chain-length tail bound (t h)^k / (k!)^2, evaluated in log space."""
    if k < 1:
        raise ValueError(f"chain length must be at least 1, got {k}")
    if h <= 0 or t <= 0:
        return 0.0
    return math.exp(k * (math.log(t) + math.log(h)) - 2 * math.lgamma(k + 1))


# ===== cyclic variant for the column domination coupling ===================


class CyclicDhd:
    """Ring dynamics on a cycle of sites, tracked by lifted positions.

    Used as the unconstrained comparison process for one torus column:
    it shares the column's down-clock stream and its initial bead
    positions, but ignores the interlacing constraints, so its particles
    descend at least as fast.  Positions are stored lifted (label order
    strictly increasing, consecutive lifts spanning one period) so
    per-label comparisons need no wrap bookkeeping.
    """

    def __init__(self, period: int, positions: Sequence[int]):
        if not positions:
            raise ValueError("at least one particle required")
        self.period = period
        self.lifts = list(positions)
        for a, b in zip(self.lifts, self.lifts[1:]):
            if b <= a:
                raise ValueError("initial lifts must strictly increase")
        if self.lifts[-1] - self.lifts[0] >= period:
            raise ValueError("initial lifts must fit in one period")

    def occupied(self, site: int) -> bool:
        return any((z - site) % self.period == 0 for z in self.lifts)

    def ring_down(self, site: int) -> bool:
        """Clock at site: the nearest particle above descends onto it.

        Returns True when a particle moved.  With a single particle the
        whole cycle above is its range; occupied sites are no-ops.
        """
        if self.occupied(site):
            return False
        n_best = None
        d_best = None
        for n, z in enumerate(self.lifts):
            d = (z - site) % self.period
            if d_best is None or d < d_best:
                d_best, n_best = d, n
        self.lifts[n_best] -= d_best
        return True
