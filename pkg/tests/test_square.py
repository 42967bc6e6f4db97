"""Square-torus bead configurations: geometry, rotations, heights."""

from __future__ import annotations

import random
from fractions import Fraction

import pytest

from beadlab.errors import (
    EmptyColumn,
    InterlacingViolation,
    InvalidPath,
    NotFlippable,
    UnrealizableSector,
)
from beadlab.sampler import sq_sample_gibbs, sq_sweep_accept_count
from beadlab.rng import SplitMix64
from beadlab.squarelattice import (
    SquareSlope,
    SquareTorusConfig,
    classify_rotation,
    sq_dimers_to_beads,
    sq_gap_sums,
    sq_staircase,
)

FLAT = SquareSlope(0, 0)


def legal_rotations(config):
    out = []
    for l in range(config.L):
        for tau in range(2 * config.L):
            for direction in ("up", "down"):
                if config.can_flip(l, tau, direction):
                    out.append((l, tau, direction))
    return out


def random_config(L, slope, rnd, n_flips=200):
    config = sq_staircase(L, slope)
    for _ in range(n_flips):
        moves = legal_rotations(config)
        if not moves:
            break
        l, tau, direction = rnd.choice(moves)
        config.elementary_flip(l, tau, direction)
    return config


def explore_by_rotations(config, l, n):
    """Oracle: slots bead n of column l reaches by single rotations."""
    t0 = config.columns[l][n]
    ups = []
    c = config.clone()
    t = t0
    while c.can_flip(l, t + 1, "up"):
        c.elementary_flip(l, t + 1, "up")
        t += 1
        ups.append(t)
    downs = []
    c = config.clone()
    t = t0
    while c.can_flip(l, t, "down"):
        c.elementary_flip(l, t, "down")
        t -= 1
        downs.append(t)
    return ups, downs


def test_flat_staircase_is_evenly_spread():
    config = sq_staircase(8, FLAT)
    assert all(col == [0, 4, 8, 12] for col in config.columns)
    config.validate(FLAT)


def test_validate_rejects_broken_interlacing():
    config = sq_staircase(8, FLAT)
    # shove two beads of one column next to each other without touching
    # the neighbours: the boundary-path marks stop alternating
    config.columns[3] = [0, 1, 8, 12]
    config.occ[3] = 0
    for t in config.columns[3]:
        config.occ[3, t] = 1
    with pytest.raises(InterlacingViolation):
        config.validate()


def test_empty_column_rejected():
    with pytest.raises((EmptyColumn, ValueError)):
        SquareTorusConfig(4, [[0, 4], [], [0, 4], [2, 6]])


def test_odd_or_small_L_rejected():
    with pytest.raises(ValueError):
        SquareTorusConfig(5, [[0]] * 5)
    with pytest.raises(ValueError):
        SquareTorusConfig(2, [[0]] * 2)


def test_available_positions_match_rotation_exploration():
    rnd = random.Random(4101)
    for trial in range(50):
        config = random_config(8, FLAT if trial % 2 else SquareSlope(Fraction(1, 8), 0), rnd)
        for l in range(config.L):
            for n in range(len(config.columns[l])):
                got = config.sq_available_positions(l, n)
                want = explore_by_rotations(config, l, n)
                assert got == want, (trial, l, n, got, want)


def test_moves_preserve_validity():
    rnd = random.Random(993)
    config = sq_staircase(8, FLAT)
    for _ in range(300):
        moves = legal_rotations(config)
        l, tau, direction = rnd.choice(moves)
        config.elementary_flip(l, tau, direction)
        config.validate(FLAT)


def test_long_jump_equals_chained_rotations():
    rnd = random.Random(7)
    for _ in range(20):
        config = random_config(8, FLAT, rnd)
        for l in range(config.L):
            for n in range(len(config.columns[l])):
                ups, downs = config.sq_available_positions(l, n)
                t = config.columns[l][n]
                for target in ups + downs:
                    c = config.clone()
                    c.move_bead(l, t, target)
                    c.validate()


def test_illegal_rotation_raises():
    config = sq_staircase(8, FLAT)
    with pytest.raises(NotFlippable):
        config.elementary_flip(0, 2, "up")  # no bead at slot 1


def test_flux_balance_on_random_configs():
    rnd = random.Random(515)
    for trial in range(30):
        slope = [FLAT, SquareSlope(Fraction(1, 8), 0), SquareSlope(0, Fraction(1, 8))][trial % 3]
        config = random_config(8, slope, rnd, n_flips=150)
        s_up, s_down = sq_gap_sums(config)
        assert s_up == s_down


def test_height_path_independence():
    rnd = random.Random(22)
    for _ in range(50):
        config = random_config(8, FLAT, rnd, n_flips=60)
        # two routes from face (0,0) to face (0,3): straight up the
        # column, or a detour through column 7 and back
        direct = [(0, 0), (0, 1), (0, 2), (0, 3)]
        detour = [(0, 0), (-1, 1), (-1, 2), (-1, 3), (0, 2), (0, 3)]
        assert config.sq_height_diff(direct) == config.sq_height_diff(detour)


def test_height_loop_around_vertex_vanishes():
    rnd = random.Random(23)
    for _ in range(20):
        config = random_config(8, FLAT, rnd, n_flips=60)
        for tau in (1, 2, 5, 8):
            # the four faces around one endpoint of slot (3, tau)
            if tau % 2 == 0:
                loop = [(3, tau), (3, tau + 1), (3, tau + 2), (2, tau + 3), (3, tau)]
            else:
                loop = [(3, tau), (4, tau - 1), (3, tau + 2), (3, tau + 1), (3, tau)]
            assert config.sq_height_diff(loop) == 0, (tau, loop)


def test_height_step_values_quarter_units():
    config = sq_staircase(8, FLAT)
    d = config.sq_height_diff([(0, 0), (0, 1)])
    assert d.denominator in (1, 2, 4)
    assert abs(d) in (Fraction(1, 4), Fraction(3, 4))


def test_invalid_path_raises():
    config = sq_staircase(8, FLAT)
    with pytest.raises(InvalidPath):
        config.sq_height_diff([(0, 0), (0, 5)])
    with pytest.raises(InvalidPath):
        config.sq_height_diff([])


def test_windings_flat():
    config = sq_staircase(8, FLAT)
    assert config.winding_e1() == 0
    assert config.winding_e2() == 0


@pytest.mark.parametrize(
    "s1,s2",
    [
        (Fraction(1, 8), Fraction(0)),
        (Fraction(-1, 8), Fraction(0)),
        (Fraction(0), Fraction(1, 8)),
        (Fraction(0), Fraction(-1, 8)),
        (Fraction(1, 8), Fraction(1, 8)),
    ],
)
def test_windings_follow_slope(s1, s2):
    slope = SquareSlope(s1, s2)
    L = 8
    config = sq_staircase(L, slope)
    assert config.winding_e1() == (s1 * L).__floor__()
    assert config.winding_e2() == (s2 * L).__floor__()
    assert len(config.columns[0]) == L // 2 + (s1 * L).__floor__()


def test_windings_stable_under_flips():
    rnd = random.Random(99)
    slope = SquareSlope(Fraction(1, 8), Fraction(1, 8))
    config = random_config(8, slope, rnd, n_flips=120)
    config.validate(slope)


def test_slope_domain():
    with pytest.raises(UnrealizableSector):
        SquareSlope(Fraction(1, 2), 0)
    with pytest.raises(UnrealizableSector):
        SquareSlope(0, Fraction(-5, 8))
    with pytest.raises(TypeError):
        SquareSlope(0.25, 0)


def test_dimer_cover_round_trip():
    rnd = random.Random(61)
    for trial in range(20):
        slope = FLAT if trial % 2 else SquareSlope(Fraction(1, 8), 0)
        config = random_config(8, slope, rnd, n_flips=80)
        dimers = config.beads_to_dimers()
        assert len(dimers) == config.L * config.L
        back = sq_dimers_to_beads(config.L, dimers)
        assert back == config


def test_dimers_to_beads_rejects_foreign_cover():
    config = sq_staircase(8, FLAT)
    dimers = set(config.beads_to_dimers())
    dimers.pop()
    with pytest.raises(InterlacingViolation):
        sq_dimers_to_beads(8, dimers)


def test_three_local_cases_all_preserve_balance():
    """Elementary moves sorted by the nearest cross-column bead position.

    Whatever the local pattern, one rotation never unbalances the
    total up-range against the total down-range.
    """
    rnd = random.Random(404)
    seen = set()
    for _ in range(60):
        config = random_config(8, FLAT, rnd, n_flips=40)
        before_up, before_down = sq_gap_sums(config)
        assert before_up == before_down
        for l, tau, direction in legal_rotations(config):
            label = classify_rotation(config, l, tau)
            seen.add(label)
            c = config.clone()
            c.elementary_flip(l, tau, direction)
            after_up, after_down = sq_gap_sums(c)
            assert after_up - after_down == before_up - before_down, (
                label, l, tau, direction,
            )
    assert seen == {"touching", "near", "far"}


def test_square_gibbs_sampling_smoke():
    rng = SplitMix64(12)
    config = sq_staircase(8, FLAT)
    accepted = sum(sq_sweep_accept_count(config, rng) for _ in range(5))
    assert accepted > 0
    config.validate(FLAT)
    sample = sq_sample_gibbs(8, FLAT, seed=3, burn_sweeps=30)
    sample.validate(FLAT)
    other = sq_sample_gibbs(8, FLAT, seed=3, burn_sweeps=30)
    assert other == sample
