"""Compiled engines for the hexagonal torus.

Every kernel here replays the corresponding pure Python engine draw for
draw: the generator update, the uniform/exponential/bounded-integer
formulas and the order in which they are consumed are copied exactly, so
a compiled run with a given seed produces the same event chain as the
Python run (integer event data identical, times equal to rounding).
The pure engines remain the reference; these exist so the large
experiment grids fit in a sensible wall-clock budget on one core.

Weight refreshes after a jump touch the same beads as the Python state
object.  Refresh order is immaterial (weights are recomputed from the
configuration, and the prefix-sum totals are order independent), so the
two engines agree without simulating Python set iteration order.
"""

from __future__ import annotations

import math

import numpy as np

try:
    from numba import njit

    AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    AVAILABLE = False

    def njit(*args, **kwargs):  # type: ignore
        def wrap(f):
            return f

        return wrap if not (args and callable(args[0])) else args[0]


_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MULT1 = np.uint64(0xBF58476D1CE4E5B9)
_MULT2 = np.uint64(0x94D049BB133111EB)
_U32_MASK = np.uint64(0xFFFFFFFF)
_TWO32 = np.uint64(1 << 32)


@njit(cache=True)
def _next_u64(state):
    state = state + _GAMMA
    z = state
    z = (z ^ (z >> np.uint64(30))) * _MULT1
    z = (z ^ (z >> np.uint64(27))) * _MULT2
    return state, z ^ (z >> np.uint64(31))


@njit(cache=True)
def _uniform(state):
    state, z = _next_u64(state)
    return state, np.float64(z >> np.uint64(11)) * (2.0 ** -53)


@njit(cache=True)
def _below(state, n):
    nn = np.uint64(n)
    t = _TWO32 % nn
    while True:
        state, z = _next_u64(state)
        x = z >> np.uint64(32)
        m = x * nn
        if (m & _U32_MASK) >= t:
            return state, np.int64(m >> np.uint64(32))


@njit(cache=True)
def _norm_l(l, L):
    return l - (l // L) * L


@njit(cache=True)
def _norm_u(l, u, L):
    return (u + (l // L) * L) % (2 * L)


@njit(cache=True)
def _first_above(cols, l, u, L, n_b):
    L2 = 2 * L
    ln = _norm_l(l, L)
    un = _norm_u(l, u, L)
    row = cols[ln]
    i = np.searchsorted(row, un + 1)
    if i < n_b:
        dist = row[i] - un
    else:
        dist = row[0] - un + L2
    return u + dist


@njit(cache=True)
def _first_at_or_below(cols, l, u, L, n_b):
    L2 = 2 * L
    ln = _norm_l(l, L)
    un = _norm_u(l, u, L)
    row = cols[ln]
    i = np.searchsorted(row, un + 1) - 1
    if i >= 0:
        dist = un - row[i]
    else:
        dist = un - row[n_b - 1] + L2
    return u - dist


@njit(cache=True)
def _up_gap(cols, l, u, L, n_b):
    v = _first_above(cols, l - 1, u, L, n_b)
    w = _first_above(cols, l + 1, u, L, n_b)
    m = v if v < w else w
    return (m - u - 1) // 2


@njit(cache=True)
def _down_gap(cols, l, u, L, n_b):
    v = _first_at_or_below(cols, l - 1, u - 1, L, n_b)
    w = _first_at_or_below(cols, l + 1, u - 1, L, n_b)
    m = v if v > w else w
    return (u - m - 1) // 2


@njit(cache=True)
def _fen_set(tree, vals, i, value, totals, which):
    delta = value - vals[i]
    if delta == 0:
        return
    vals[i] = value
    totals[which] += delta
    j = i + 1
    n = vals.shape[0]
    while j <= n:
        tree[j] += delta
        j += j & (-j)


@njit(cache=True)
def _fen_search(tree, top_bit, v):
    i = 0
    rem = v
    bit = top_bit
    n = tree.shape[0] - 1
    while bit:
        j = i + bit
        if j <= n and tree[j] <= rem:
            rem -= tree[j]
            i = j
        bit >>= 1
    return i, rem


@njit(cache=True)
def _occ_at(occ, l, u, L):
    return occ[_norm_l(l, L), _norm_u(l, u, L)]


@njit(cache=True)
def _sweep_kernel(occ, L, seed, n_sweeps):
    """MCMC sweeps on the occupancy array; mirrors the python sweep."""
    state = np.uint64(seed)
    n_faces = L * L
    L2 = 2 * L
    for _ in range(n_sweeps):
        for _ in range(n_faces):
            state, j = _below(state, 2 * n_faces)
            l = j % L
            u = 2 * ((j // L) % L) + (l % 2)
            if j < n_faces:
                ok = occ[l, u] == 1 and _occ_at(occ, l, u + 2, L) == 0
            else:
                ok = _occ_at(occ, l, u + 2, L) == 1 and occ[l, u] == 0
            if ok and _occ_at(occ, l - 1, u + 1, L) == 0 and _occ_at(occ, l + 1, u + 1, L) == 0:
                if j < n_faces:
                    occ[l, u] = 0
                    occ[l, (u + 2) % L2] = 1
                else:
                    occ[l, (u + 2) % L2] = 0
                    occ[l, u] = 1
    return state


@njit(cache=True)
def _refresh(cols, l, n, L, n_b, capped, tree_up, vals_up, tree_down, vals_down, totals, pos_lift):
    u = pos_lift[l, n] % (2 * L)
    i = l * n_b + n
    gu = _up_gap(cols, l, u, L, n_b)
    gd = _down_gap(cols, l, u, L, n_b)
    if capped:
        if gu > 1:
            gu = 1
        if gd > 1:
            gd = 1
    _fen_set(tree_up, vals_up, i, gu, totals, 0)
    _fen_set(tree_down, vals_down, i, gd, totals, 1)


@njit(cache=True)
def _dyn_kernel(
    L,
    n_b,
    capped,
    p,
    q,
    T,
    seed,
    occ,
    cols,
    label_at,
    pos_lift,
    tree_up,
    vals_up,
    tree_down,
    vals_down,
    totals,
    top_bit,
    faces_l,
    faces_u,
    qx,
    tagged_l,
    tagged_n,
    gap_mask,
    gap_enabled,
    out,
    record,
    ev_t,
    ev_l,
    ev_n,
    ev_u,
    ev_delta,
):
    """The Gillespie chain; out = [n_events, tagged_shift, sup_gap]."""
    L2 = 2 * L
    n_faces_tracked = faces_l.shape[0]
    ev_cap = ev_t.shape[0]
    # initial weights
    for l in range(L):
        for n in range(n_b):
            _refresh(cols, l, n, L, n_b, capped, tree_up, vals_up, tree_down, vals_down, totals, pos_lift)
    state = np.uint64(seed)
    t = 0.0
    aff_l = np.empty(8, np.int64)
    aff_n = np.empty(8, np.int64)
    while True:
        s_up = totals[0]
        s_down = totals[1]
        rate = p * s_up + q * s_down
        if rate == 0.0:
            break
        state, u01 = _uniform(state)
        t += -math.log1p(-u01) / rate
        if t > T:
            break
        state, u01 = _uniform(state)
        go_up = u01 * rate < p * s_up
        if go_up:
            state, v = _below(state, s_up)
            i, rem = _fen_search(tree_up, top_bit, v)
            delta = 2 * (rem + 1)
        else:
            state, v = _below(state, s_down)
            i, rem = _fen_search(tree_down, top_bit, v)
            delta = -2 * (rem + 1)
        l = i // n_b
        n = i % n_b
        u_lift = pos_lift[l, n]
        u_norm = u_lift % L2
        # beads whose gaps this jump touches
        n_aff = 0
        for dl in (-1, 1):
            va = _first_above(cols, l + dl, u_norm, L, n_b)
            vb = _first_at_or_below(cols, l + dl, u_norm - 1, L, n_b)
            for v2 in (va, vb):
                ln = _norm_l(l + dl, L)
                un = _norm_u(l + dl, v2, L)
                an = label_at[ln, un]
                dup = False
                for a2 in range(n_aff):
                    if aff_l[a2] == ln and aff_n[a2] == an:
                        dup = True
                        break
                if not dup:
                    aff_l[n_aff] = ln
                    aff_n[n_aff] = an
                    n_aff += 1
        for an in (n, (n - 1) % n_b, (n + 1) % n_b):
            dup = False
            for a2 in range(n_aff):
                if aff_l[a2] == l and aff_n[a2] == an:
                    dup = True
                    break
            if not dup:
                aff_l[n_aff] = l
                aff_n[n_aff] = an
                n_aff += 1
        # apply the move
        dst = (u_norm + delta) % L2
        row = cols[l]
        src_i = np.searchsorted(row, u_norm)
        dst_i = np.searchsorted(row, dst)
        if src_i < dst_i:
            for m in range(src_i, dst_i - 1):
                row[m] = row[m + 1]
            row[dst_i - 1] = dst
        elif dst_i < src_i:
            for m in range(src_i, dst_i, -1):
                row[m] = row[m - 1]
            row[dst_i] = dst
        else:
            row[src_i] = dst
        occ[l, u_norm] = 0
        occ[l, dst] = 1
        label_at[l, u_norm] = -1
        label_at[l, dst] = n
        pos_lift[l, n] = u_lift + delta
        # tracked observables
        for f in range(n_faces_tracked):
            if faces_l[f] == l:
                if delta > 0:
                    d = (faces_u[f] - u_norm) % L2
                    if d % 2 == 0 and d < delta:
                        qx[f] -= 1
                else:
                    d = (faces_u[f] - (u_norm + delta)) % L2
                    if d % 2 == 0 and d < -delta:
                        qx[f] += 1
        if tagged_l == l and tagged_n == n:
            out[1] += delta // 2
        if gap_enabled and gap_mask[l]:
            if n_b == 1:
                if out[2] < L:
                    out[2] = L
            else:
                cur = u_lift + delta
                above = (pos_lift[l, (n + 1) % n_b] - cur) % L2 // 2
                if above == 0:
                    above = L
                below_g = (cur - pos_lift[l, (n - 1) % n_b]) % L2 // 2
                if below_g == 0:
                    below_g = L
                if above > out[2]:
                    out[2] = above
                if below_g > out[2]:
                    out[2] = below_g
        if record and out[0] < ev_cap:
            k = out[0]
            ev_t[k] = t
            ev_l[k] = l
            ev_n[k] = n
            ev_u[k] = u_norm
            ev_delta[k] = delta
        out[0] += 1
        for a2 in range(n_aff):
            _refresh(
                cols, aff_l[a2], aff_n[a2], L, n_b, capped,
                tree_up, vals_up, tree_down, vals_down, totals, pos_lift,
            )
    return t


def run_sweeps(config, seed: int, n_sweeps: int) -> None:
    """Burn the MCMC chain in place via the compiled sweep kernel."""
    L = config.L
    _sweep_kernel(config.occ, L, np.uint64(seed & 0xFFFFFFFFFFFFFFFF), n_sweeps)
    for l in range(L):
        config.columns[l] = [int(u) for u in range(2 * L) if config.occ[l, u]]


def _pack_state(config):
    L = config.L
    n_b = len(config.columns[0])
    cols = np.array(config.columns, dtype=np.int64)
    label_at = np.full((L, 2 * L), -1, dtype=np.int64)
    pos_lift = cols.copy()
    for l in range(L):
        for n in range(n_b):
            label_at[l, cols[l, n]] = n
    return n_b, cols, label_at, pos_lift


def run_dynamics(config, spec, tracker=None, capped: bool = False):
    """Compiled counterpart of the python Gillespie run."""
    config.validate()
    L = config.L
    n_b, cols, label_at, pos_lift = _pack_state(config)
    n = L * n_b
    tree_up = np.zeros(n + 1, dtype=np.int64)
    vals_up = np.zeros(n, dtype=np.int64)
    tree_down = np.zeros(n + 1, dtype=np.int64)
    vals_down = np.zeros(n, dtype=np.int64)
    totals = np.zeros(2, dtype=np.int64)
    top_bit = 1 << n.bit_length()

    if tracker is not None:
        tracker.bind(config)
        faces = tracker.faces
        faces_l = np.array([f[0] for f in faces], dtype=np.int64)
        faces_u = np.array([f[1] for f in faces], dtype=np.int64)
        tagged = tracker.tagged if tracker.tagged is not None else (-1, -1)
        gap_enabled = tracker.gap_radius is not None
        gap_mask = np.zeros(L, dtype=np.uint8)
        for l in tracker._gap_columns:
            gap_mask[l] = 1
        sup0 = tracker.sup_gap
        record = tracker.record_events
    else:
        faces_l = np.zeros(0, dtype=np.int64)
        faces_u = np.zeros(0, dtype=np.int64)
        tagged = (-1, -1)
        gap_enabled = False
        gap_mask = np.zeros(L, dtype=np.uint8)
        sup0 = 0
        record = False
    qx = np.zeros(faces_l.shape[0], dtype=np.int64)

    def call(ev_cap, record_now, occ_k, cols_k, label_k, pos_k, qx_k):
        tree_up[:] = 0
        vals_up[:] = 0
        tree_down[:] = 0
        vals_down[:] = 0
        totals[:] = 0
        out = np.array([0, 0, sup0], dtype=np.int64)
        ev_t = np.zeros(max(ev_cap, 1), dtype=np.float64)
        ev_l = np.zeros(max(ev_cap, 1), dtype=np.int64)
        ev_n = np.zeros(max(ev_cap, 1), dtype=np.int64)
        ev_u = np.zeros(max(ev_cap, 1), dtype=np.int64)
        ev_d = np.zeros(max(ev_cap, 1), dtype=np.int64)
        _dyn_kernel(
            L, n_b, capped, float(spec.p), float(spec.q), float(spec.T),
            np.uint64(spec.seed & 0xFFFFFFFFFFFFFFFF), occ_k, cols_k, label_k, pos_k,
            tree_up, vals_up, tree_down, vals_down, totals, top_bit,
            faces_l, faces_u, qx_k, tagged[0], tagged[1],
            gap_mask, gap_enabled, out, record_now,
            ev_t, ev_l, ev_n, ev_u, ev_d,
        )
        return out, ev_t, ev_l, ev_n, ev_u, ev_d

    if record:
        # first pass on throwaway state counts events to size the log
        out, *_ = call(0, False, config.occ.copy(), cols.copy(), label_at.copy(), pos_lift.copy(), qx.copy())
        n_events = int(out[0])
        out, ev_t, ev_l, ev_n, ev_u, ev_d = call(n_events, True, config.occ, cols, label_at, pos_lift, qx)
    else:
        out, ev_t, ev_l, ev_n, ev_u, ev_d = call(0, False, config.occ, cols, label_at, pos_lift, qx)

    for l in range(L):
        config.columns[l] = [int(u) for u in cols[l]]
    if tracker is not None:
        tracker.n_events = int(out[0])
        tracker.tagged_shift = int(out[1])
        if tracker.gap_radius is not None:
            tracker.sup_gap = int(out[2])
        tracker.q_x = {f: int(qx[i]) for i, f in enumerate(tracker.faces)}
        if record:
            tracker.event_log = [
                (float(ev_t[k]), int(ev_l[k]), int(ev_n[k]), int(ev_u[k]), int(ev_d[k]))
                for k in range(int(out[0]))
            ]
    return config, tracker
