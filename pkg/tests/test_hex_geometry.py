"""Geometry, height and staircase tests for the hexagonal torus."""

from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import SYMMETRIC, TILTED, random_hex_config
from beadlab.errors import (
    EmptyColumn,
    ExtremalSlope,
    InterlacingViolation,
    InvalidPath,
    NotFlippable,
    UnrealizableSector,
)
from beadlab.hexlattice import TorusBeadConfig, TorusGeometry, staircase_config
from beadlab.slopes import Slope


def test_slope_validation():
    with pytest.raises(ExtremalSlope):
        Slope(0, "1/2")
    with pytest.raises(ExtremalSlope):
        Slope("1/2", "1/2")
    with pytest.raises(ExtremalSlope):
        Slope("2/3", "2/3")
    s = Slope("1/3", "1/3")
    assert s.rho3 == Slope("1/6", "1/2").rho3


def test_slope_sector_arithmetic():
    assert SYMMETRIC.n_beads(12) == 4
    assert SYMMETRIC.windings(12) == (4, -8)
    assert SYMMETRIC.n_beads(3) == 1
    assert SYMMETRIC.windings(3) == (1, -2)
    assert TILTED.n_beads(12) == 3
    assert TILTED.windings(12) == (3, -9)
    assert SYMMETRIC.n_beads(64) == 21
    assert SYMMETRIC.windings(64) == (21, -43)


def test_smallest_staircase_exact_member():
    config = staircase_config(3, SYMMETRIC)
    assert config.columns == [[0], [3], [0]]
    config.validate(SYMMETRIC)


@pytest.mark.parametrize(
    "L,slope",
    [
        (3, SYMMETRIC),
        (6, SYMMETRIC),
        (8, SYMMETRIC),
        (12, SYMMETRIC),
        (16, SYMMETRIC),
        (33, SYMMETRIC),
        (36, SYMMETRIC),
        (64, SYMMETRIC),
        (128, SYMMETRIC),
        (8, TILTED),
        (12, TILTED),
        (16, TILTED),
        (32, TILTED),
        (12, Slope("1/5", "3/5")),
        (15, Slope("2/5", "1/5")),
        (10, Slope("1/10", "1/10")),
    ],
)
def test_staircase_lands_in_sector(L, slope):
    config = staircase_config(L, slope)
    config.validate(slope)
    assert len(config.columns[0]) == slope.n_beads(L)
    assert config.windings() == slope.windings(L)


def test_unrealizable_when_no_beads():
    with pytest.raises(UnrealizableSector):
        staircase_config(4, Slope("9/20", "9/20"))


def _vertex_cover(config):
    """Map each lattice vertex to the list of occupied dimers touching it."""
    geometry = config.geometry
    cover = {}

    def touch(colour, l, u, edge):
        key = (colour, *geometry.normalize(l, u))
        cover.setdefault(key, []).append(edge)

    for kind, l, t in config.beads_to_dimers():
        if kind == "h":
            touch("b", l, t, (kind, l, t))
            touch("w", l, t, (kind, l, t))
        elif kind == "ne":
            touch("b", l, t, (kind, l, t))
            touch("w", l + 1, t + 1, (kind, l, t))
        else:
            touch("b", l, t, (kind, l, t))
            touch("w", l + 1, t - 1, (kind, l, t))
    return cover


@pytest.mark.parametrize("L,slope,seed", [(6, SYMMETRIC, 1), (12, SYMMETRIC, 2), (12, TILTED, 3)])
def test_dimer_cover_is_perfect_matching(L, slope, seed):
    config = random_hex_config(L, slope, seed)
    cover = _vertex_cover(config)
    assert len(cover) == 2 * L * L
    bad = {v: es for v, es in cover.items() if len(es) != 1}
    assert not bad, f"vertices covered != once: {bad}"


@pytest.mark.parametrize("L,slope,seed", [(6, SYMMETRIC, 11), (9, SYMMETRIC, 12), (12, TILTED, 13)])
def test_edge_predicates_match_dimer_fill(L, slope, seed):
    config = random_hex_config(L, slope, seed)
    cover = config.beads_to_dimers()
    for kind, l, t in config.geometry.edges():
        assert config.edge_occupied(kind, l, t) == ((kind, l, t) in cover)


@pytest.mark.parametrize("L,slope,seed", [(6, SYMMETRIC, 21), (12, TILTED, 22)])
def test_height_vanishes_around_every_vertex(L, slope, seed):
    """The triangle of faces meeting at any vertex is a closed loop."""
    config = random_hex_config(L, slope, seed)
    for l in range(L):
        for u in range(l % 2, 2 * L, 2):
            around_black = [(l, u), (l, u - 2), (l + 1, u - 1), (l, u)]
            around_white = [(l, u), (l - 1, u - 1), (l, u - 2), (l, u)]
            assert config.height_diff(around_black) == 0
            assert config.height_diff(around_white) == 0


def test_height_path_reversal_antisymmetry():
    config = random_hex_config(6, SYMMETRIC, 31)
    path = [(0, 0), (0, 2), (1, 1), (2, 2), (2, 4), (1, 5)]
    assert config.height_diff(path) == -config.height_diff(path[::-1])


def test_invalid_path_rejected():
    config = staircase_config(6, SYMMETRIC)
    with pytest.raises(InvalidPath):
        config.height_diff([(0, 0), (0, 4)])
    with pytest.raises(InvalidPath):
        config.height_diff([(0, 0), (2, 2)])


def test_winding_base_point_independence():
    config = random_hex_config(9, SYMMETRIC, 41)
    w2, w3 = config.windings()
    for l0, u0 in [(2, 4), (5, 1), (8, 0)]:
        loop3 = [(l0, u0 + 2 * i) for i in range(9)] + [(l0, u0)]
        loop2 = [(l0 + i, u0 - i) for i in range(9)] + [(l0, u0)]
        assert config.height_diff(loop3) == w3
        assert config.height_diff(loop2) == w2
    assert config.winding_e1() == -w2 - w3


@pytest.mark.parametrize("L,slope,seed", [(6, SYMMETRIC, 51), (12, TILTED, 52)])
def test_flips_preserve_sector(L, slope, seed):
    config = random_hex_config(L, slope, seed)
    config.validate(slope)


def test_flip_involution_and_height_drop():
    L = 6
    config = random_hex_config(L, SYMMETRIC, 61)
    # find a flippable face
    target = None
    for l in range(L):
        for u in range(l % 2, 2 * L, 2):
            if config.can_flip(l, u, "up"):
                target = (l, u)
                break
        if target:
            break
    assert target is not None
    l, u = target

    def height_field(c):
        """Heights of all faces relative to face (0, 0), along fixed paths."""
        field = {}
        for lf in range(L):
            for uf_i in range(L):
                uf = 2 * uf_i + (lf % 2)
                path = [(0, 0)]
                cl, cu = 0, 0
                while cl < lf:
                    path.append((cl + 1, cu - 1))
                    cl, cu = cl + 1, cu - 1
                while (cu - uf) % (2 * L) != 0:
                    path.append((cl, cu + 2))
                    cu += 2
                field[(lf, uf)] = c.height_diff(path)
        return field

    base = ((l + 2) % L, u)
    assert base != (l, u)
    before = height_field(config)
    snapshot = config.clone()
    config.elementary_flip(l, u, "up")
    after = height_field(config)
    diffs = {
        f: (after[f] - after[base]) - (before[f] - before[base])
        for f in before
        if (after[f] - after[base]) != (before[f] - before[base])
    }
    assert diffs == {(l, u): -1}
    config.elementary_flip(l, u, "down")
    assert config == snapshot


def test_not_flippable_raises():
    config = staircase_config(3, SYMMETRIC)
    # only one bead per column; the bead at (0, 0) has both neighbours at
    # half-levels 3 -> moving up to 2 is fine, but a blocked case exists
    blocked = [
        (l, u)
        for l in range(3)
        for u in range(l % 2, 6, 2)
        if not config.can_flip(l, u, "up")
    ]
    assert blocked
    l, u = blocked[0]
    with pytest.raises(NotFlippable):
        config.elementary_flip(l, u, "up")


def brute_force_gaps(config, l, u):
    """Oracle: count reachable positions by repeated single flips."""
    up = 0
    probe = config.clone()
    while True:
        cur = u + 2 * up
        ln, un = probe.geometry.normalize(l, cur)
        if not probe.can_flip(ln, un, "up"):
            break
        probe.elementary_flip(ln, un, "up")
        up += 1
    down = 0
    probe = config.clone()
    while True:
        cur = u - 2 * down
        ln, un = probe.geometry.normalize(l, cur - 2)
        if not probe.can_flip(ln, un, "down"):
            break
        probe.elementary_flip(ln, un, "down")
        down += 1
    return up, down


@pytest.mark.parametrize("L,slope,seed", [(6, SYMMETRIC, 71), (9, SYMMETRIC, 72), (12, TILTED, 73)])
def test_gap_formulas_match_flip_oracle(L, slope, seed):
    config = random_hex_config(L, slope, seed)
    for l in range(L):
        for u in list(config.columns[l]):
            up, down = brute_force_gaps(config, l, u)
            assert config.up_gap(l, u) == up, (l, u)
            assert config.down_gap(l, u) == down, (l, u)


def test_available_positions_are_exactly_reachable():
    config = random_hex_config(6, SYMMETRIC, 81)
    for l in range(6):
        for n, u in enumerate(list(config.columns[l])):
            ups, downs = config.available_positions(l, n)
            assert len(ups) == config.up_gap(l, u)
            assert len(downs) == config.down_gap(l, u)
            for target in ups + downs:
                probe = config.clone()
                probe.move_bead(l, u, target)
                probe.validate()
            if ups:
                probe = config.clone()
                with pytest.raises(NotFlippable):
                    probe.move_bead(l, u, ups[-1] + 2)
            if downs:
                probe = config.clone()
                with pytest.raises(NotFlippable):
                    probe.move_bead(l, u, downs[-1] - 2)


@settings(max_examples=25, deadline=None)
@given(
    seed=st.integers(min_value=0, max_value=2**32),
    L=st.sampled_from([6, 9, 12]),
    tilted=st.booleans(),
)
def test_random_flip_walks_stay_valid(seed, L, tilted):
    slope = TILTED if tilted else SYMMETRIC
    config = random_hex_config(L, slope, seed, n_flips=6 * L * L)
    config.validate(slope)


def test_bad_column_data_rejected():
    geometry = TorusGeometry(4)
    with pytest.raises(ValueError):
        TorusBeadConfig(geometry, [[1], [1], [0], [1]])  # parity wrong in col 0
    with pytest.raises(ValueError):
        TorusBeadConfig(geometry, [[0, 0], [1], [0], [1]])  # duplicate
    cfg = TorusBeadConfig(geometry, [[0], [1], [2], [3]])
    with pytest.raises(InterlacingViolation):
        TorusBeadConfig(geometry, [[0, 2], [1], [0], [1]]).validate()
    with pytest.raises(EmptyColumn):
        TorusBeadConfig(geometry, [[], [], [], []]).validate()
    cfg.validate()
