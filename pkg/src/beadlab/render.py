"""SVG snapshots of torus configurations.

Hexagonal configs are drawn in the dual rhombus picture: every edge of
the honeycomb owns one lozenge (the quadrilateral spanned by the edge's
endpoints and the two adjacent face centers), so the image always holds
exactly ``3 * L**2`` lozenge polygons.  Covered edges are filled in
three colors, one per edge orientation; uncovered lozenges stay a
neutral background tone.  Because distinct edges own disjoint pairs of
center-corner triangles, the colored lozenges never overlap and jointly
touch every lattice vertex exactly once.

Square configs are drawn as dominoes: each dimer of the full cover
(transversal beads plus the forced boundary-path edges) becomes a
rounded rectangle, horizontal and vertical dimers in two colors.  The
fundamental domain of this torus is a diamond in the original square
lattice, so the picture is diamond shaped.

Output is plain SVG 1.1 with no external references, deterministic for
a given configuration.
"""

from __future__ import annotations

import math
from pathlib import Path
from typing import List, Tuple, Union

from .hexlattice import TorusBeadConfig
from .squarelattice import SquareTorusConfig

AnyConfig = Union[TorusBeadConfig, SquareTorusConfig]

HEX_FILLS = {"h": "#e8a33d", "ne": "#4e79a7", "nw": "#59a14f"}
EMPTY_FILL = "#f2f0eb"
EMPTY_STROKE = "#c9c4ba"
EDGE_STROKE = "#3a3732"
SQ_FILLS = {"horizontal": "#4e79a7", "vertical": "#e8a33d"}


def _fmt(x: float) -> str:
    return f"{x:.2f}".rstrip("0").rstrip(".")


def _polygon(points: List[Tuple[float, float]], fill: str, stroke: str, width: float) -> str:
    pts = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in points)
    return (
        f'<polygon points="{pts}" fill="{fill}" stroke="{stroke}" '
        f'stroke-width="{_fmt(width)}" stroke-linejoin="round"/>'
    )


def _svg_document(elements: List[str], xs: List[float], ys: List[float], margin: float) -> str:
    x0, y0 = min(xs) - margin, min(ys) - margin
    w, h = max(xs) - min(xs) + 2 * margin, max(ys) - min(ys) + 2 * margin
    head = (
        '<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
        f'viewBox="{_fmt(x0)} {_fmt(y0)} {_fmt(w)} {_fmt(h)}" '
        f'width="{_fmt(w)}" height="{_fmt(h)}">'
    )
    background = (
        f'<rect x="{_fmt(x0)}" y="{_fmt(y0)}" width="{_fmt(w)}" '
        f'height="{_fmt(h)}" fill="#ffffff"/>'
    )
    return "\n".join([head, background] + elements + ["</svg>"]) + "\n"


def hex_lozenge_quad(
    L: int, scale: float, kind: str, l: int, t: int
) -> List[Tuple[float, float]]:
    """Lozenge of edge (kind, l, t): endpoints alternating with the two
    adjacent face centers.  Faces sit at x = 1.5*scale*l with position t
    increasing upward; the assignment of kinds to hexagon sides is the
    unique one (up to a global shift) under which any valid cover claims
    every lattice vertex exactly once.
    """
    s = scale
    h2 = s * math.sqrt(3.0) / 2.0
    cx, cy = 1.5 * s * l, h2 * (2 * L - t)
    if kind == "h":
        return [
            (cx + s / 2, cy - h2),
            (cx, cy - 2 * h2),
            (cx - s / 2, cy - h2),
            (cx, cy),
        ]
    if kind == "ne":
        return [
            (cx + s / 2, cy - h2),
            (cx + 1.5 * s, cy - h2),
            (cx + s, cy - 2 * h2),
            (cx, cy - 2 * h2),
        ]
    if kind == "nw":
        return [
            (cx + s, cy),
            (cx + 1.5 * s, cy - h2),
            (cx + s / 2, cy - h2),
            (cx, cy),
        ]
    raise ValueError(f"unknown edge kind {kind!r}")


def render_hex_svg(config: TorusBeadConfig, scale: float = 22.0) -> str:
    """Lozenge snapshot of a hexagonal configuration."""
    L = config.L
    s = scale
    cover = config.beads_to_dimers()

    empty: List[str] = []
    filled: List[str] = []
    xs: List[float] = []
    ys: List[float] = []
    for l in range(L):
        for t in range(l % 2, 2 * L, 2):
            for kind in ("h", "ne", "nw"):
                quad = hex_lozenge_quad(L, s, kind, l, t)
                xs.extend(p[0] for p in quad)
                ys.extend(p[1] for p in quad)
                if (kind, l, t) in cover:
                    filled.append(
                        _polygon(quad, HEX_FILLS[kind], EDGE_STROKE, s / 14)
                    )
                else:
                    empty.append(_polygon(quad, EMPTY_FILL, EMPTY_STROKE, s / 28))
    return _svg_document(empty + filled, xs, ys, margin=s)


def _unrotate_dimer(d0: int, s0: int, w: Tuple[int, int], L2: int) -> Tuple[int, int]:
    """Offsets (dd, ds) in {-1,+1}^2 placing w next to the (d0, s0) rep."""
    for dd in (1, -1):
        for ds in (1, -1):
            if ((d0 + dd) % L2, (s0 + ds) % L2) == w:
                return dd, ds
    raise ValueError(f"dimer endpoints ({d0}, {s0}) and {w} are not adjacent")


def render_square_svg(config: SquareTorusConfig, scale: float = 22.0) -> str:
    """Domino snapshot of a square-lattice configuration."""
    L2 = 2 * config.L
    pad = 0.42
    elements: List[str] = []
    xs: List[float] = []
    ys: List[float] = []
    dimers = sorted(sorted(d) for d in config.beads_to_dimers())
    for v, w in dimers:
        d0, s0 = v
        dd, ds = _unrotate_dimer(d0, s0, w, L2)
        x0, y0 = (d0 + s0) / 2.0, (s0 - d0) / 2.0
        x1, y1 = x0 + (dd + ds) / 2.0, y0 + (ds - dd) / 2.0
        orient = "horizontal" if y0 == y1 else "vertical"
        rx = (min(x0, x1) - pad) * scale
        ry = (min(y0, y1) - pad) * scale
        rw = (abs(x1 - x0) + 2 * pad) * scale
        rh = (abs(y1 - y0) + 2 * pad) * scale
        xs.extend((rx, rx + rw))
        ys.extend((ry, ry + rh))
        elements.append(
            f'<rect x="{_fmt(rx)}" y="{_fmt(ry)}" width="{_fmt(rw)}" '
            f'height="{_fmt(rh)}" rx="{_fmt(0.16 * scale)}" '
            f'fill="{SQ_FILLS[orient]}" stroke="{EDGE_STROKE}" '
            f'stroke-width="{_fmt(scale / 14)}"/>'
        )
    return _svg_document(elements, xs, ys, margin=scale)


def render_svg(config: AnyConfig, scale: float = 22.0) -> str:
    if isinstance(config, TorusBeadConfig):
        return render_hex_svg(config, scale)
    if isinstance(config, SquareTorusConfig):
        return render_square_svg(config, scale)
    raise TypeError(f"cannot render {type(config).__name__}")


def save_svg(config: AnyConfig, path: Union[str, Path], scale: float = 22.0) -> None:
    Path(path).write_text(render_svg(config, scale), encoding="utf-8")
