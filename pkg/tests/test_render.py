"""Geometry and well-formedness of the SVG snapshots."""

from __future__ import annotations

import math
import xml.etree.ElementTree as ET
from collections import Counter

import pytest

from beadlab.hexlattice import staircase_config
from beadlab.render import (
    HEX_FILLS,
    SQ_FILLS,
    hex_lozenge_quad,
    render_hex_svg,
    render_square_svg,
    render_svg,
)
from beadlab.sampler import SamplerSpec, sample_gibbs, sq_sample_gibbs
from beadlab.slopes import Slope
from beadlab.squarelattice import SquareSlope, sq_staircase


def hex_sample(L, seed, slope=("1/3", "1/3")):
    return sample_gibbs(
        SamplerSpec(L=L, slope=Slope(*slope), seed=seed, burn_sweeps=3 * L * L)
    )


def test_staircase_polygon_count():
    svg = render_hex_svg(staircase_config(12, Slope("1/3", "1/3")))
    ET.fromstring(svg)
    assert svg.count("<polygon") == 3 * 12 * 12


@pytest.mark.parametrize("L,seed", [(6, 2), (8, 11)])
def test_sampled_config_polygon_count_and_fills(L, seed):
    config = hex_sample(L, seed)
    svg = render_hex_svg(config)
    ET.fromstring(svg)
    assert svg.count("<polygon") == 3 * L * L
    for fill in HEX_FILLS.values():
        assert fill in svg
    # one colored lozenge per dimer
    colored = sum(svg.count(f'fill="{f}"') for f in HEX_FILLS.values())
    assert colored == len(config.beads_to_dimers()) == L * L


@pytest.mark.parametrize("L,slope,seed", [(8, ("1/3", "1/3"), 11), (6, ("1/6", "1/2"), 3)])
def test_cover_lozenges_claim_each_vertex_once(L, slope, seed):
    # The lozenge of an edge owns the edge's two endpoints.  Any valid
    # cover must claim every torus vertex exactly once, which pins down
    # the assignment of edge kinds to hexagon sides.
    config = hex_sample(L, seed, slope)
    s = 22.0
    h2 = s * math.sqrt(3.0) / 2.0
    claims = Counter()
    for kind, l, t in config.beads_to_dimers():
        quad = hex_lozenge_quad(L, s, kind, l, t)
        for x, y in (quad[0], quad[2]):
            p, q = round(x / (s / 2)), round(y / h2)
            k = p // (3 * L)
            claims[(p - 3 * L * k, (q - L * k) % (2 * L))] += 1
    assert len(claims) == 2 * L * L
    assert max(claims.values()) == 1


def test_lozenge_quads_are_rhombi():
    quads = [hex_lozenge_quad(6, 10.0, kind, 2, 4) for kind in ("h", "ne", "nw")]
    for quad in quads:
        sides = [
            math.dist(quad[i], quad[(i + 1) % 4]) for i in range(4)
        ]
        assert max(sides) == pytest.approx(min(sides))
    with pytest.raises(ValueError):
        hex_lozenge_quad(6, 10.0, "sw", 0, 0)


def test_square_dominoes():
    config = sq_staircase(8, SquareSlope("1/8", "-1/8"))
    svg = render_square_svg(config)
    ET.fromstring(svg)
    # one rect per dimer plus the background
    assert svg.count("<rect") == len(config.beads_to_dimers()) + 1
    for fill in SQ_FILLS.values():
        assert fill in svg


def test_square_sampled_render_well_formed():
    config = sq_sample_gibbs(6, SquareSlope("1/6", "1/6"), seed=3, burn_sweeps=100)
    ET.fromstring(render_square_svg(config))


def test_render_svg_dispatch(tmp_path):
    assert "<polygon" in render_svg(hex_sample(6, 1))
    assert "<rect" in render_svg(sq_staircase(6, SquareSlope("1/6", "0")))
    with pytest.raises(TypeError):
        render_svg(object())


def test_scale_changes_viewbox():
    config = staircase_config(6, Slope("1/3", "1/3"))
    small = render_hex_svg(config, scale=10.0)
    large = render_hex_svg(config, scale=40.0)
    assert small != large
    assert small.count("<polygon") == large.count("<polygon")
