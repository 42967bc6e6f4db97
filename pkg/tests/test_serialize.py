"""Round-trip and rejection tests for the config text format."""

from __future__ import annotations

import pytest
from hypothesis import given, settings, strategies as st

from beadlab.hexlattice import staircase_config
from beadlab.sampler import SamplerSpec, sample_gibbs, sq_sample_gibbs
from beadlab.serialize import dump_config, load_config, parse_config, save_config
from beadlab.slopes import Slope
from beadlab.squarelattice import SquareSlope, sq_staircase


def hex_sample(L: int, seed: int, slope=("1/3", "1/3")):
    return sample_gibbs(
        SamplerSpec(L=L, slope=Slope(*slope), seed=seed, burn_sweeps=3 * L * L)
    )


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**63 - 1))
def test_hex_round_trip(seed):
    config = hex_sample(6, seed)
    text = dump_config(config)
    back = parse_config(text)
    assert back == config
    assert dump_config(back) == text


@pytest.mark.parametrize(
    "slope", [("1/8", "1/8"), ("-1/8", "1/4"), ("-1/4", "1/8")]
)
def test_square_round_trip(slope):
    config = sq_sample_gibbs(8, SquareSlope(*slope), seed=42, burn_sweeps=100)
    text = dump_config(config)
    back = parse_config(text)
    assert back == config
    assert dump_config(back) == text


def test_header_records_realized_densities():
    # At L=8 a requested (1/3, 1/3) slope floors to (1/2, 1/4, 1/4); the
    # file must carry what the torus actually realizes.
    config = hex_sample(8, 5)
    text = dump_config(config)
    assert "lattice hex" in text
    assert "rho 1/2 1/4" in text


def test_staircase_round_trips_both_lattices():
    hx = staircase_config(9, Slope("1/3", "1/3"))
    assert parse_config(dump_config(hx)) == hx
    sq = sq_staircase(6, SquareSlope("1/6", "1/6"))
    assert parse_config(dump_config(sq)) == sq


def test_save_and_load_paths(tmp_path):
    config = hex_sample(6, 9)
    path = tmp_path / "cfg.txt"
    save_config(config, path)
    assert load_config(path) == config


def test_comments_and_blank_lines_ignored():
    config = hex_sample(6, 1)
    lines = dump_config(config).splitlines()
    noisy = "\n\n".join([lines[0] + "  # header"] + ["# noise"] + lines[1:]) + "\n"
    assert parse_config(noisy) == config


@pytest.mark.parametrize(
    "mangle, fragment",
    [
        (lambda t: t.replace("beadlab config v1", "beadlab config v2"), "expected"),
        (lambda t: t.replace("lattice hex\n", ""), "missing header"),
        (lambda t: t.replace("rho 1/2 1/4", "rho 1/3 1/3"), "does not match"),
        (lambda t: t.replace("lattice hex", "lattice cubic"), "unknown lattice"),
        (lambda t: t + "column 2 0 10\n", "repeated"),
        (lambda t: t + "spin up\n", "unknown key"),
        (lambda t: t.replace("column 7", "column 9"), "expected columns"),
    ],
)
def test_malformed_input_rejected(mangle, fragment):
    text = dump_config(hex_sample(8, 5))
    with pytest.raises(ValueError, match=fragment):
        parse_config(mangle(text))


def test_empty_input_rejected():
    with pytest.raises(ValueError, match="empty input"):
        parse_config("\n# only a comment\n")


def test_position_edits_cannot_change_sector_silently():
    # Deleting one bead changes the realized bead density, which the
    # rho line then contradicts.
    text = dump_config(hex_sample(8, 5))
    lines = text.splitlines()
    idx = next(i for i, ln in enumerate(lines) if ln.startswith("column 0"))
    lines[idx] = " ".join(lines[idx].split()[:-1])
    with pytest.raises(ValueError):
        parse_config("\n".join(lines) + "\n")
