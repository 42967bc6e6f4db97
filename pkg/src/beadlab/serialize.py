"""Versioned text serialization for torus configurations.

A config file is line oriented, UTF-8, with ``#`` comments and blank
lines ignored::

    beadlab config v1
    lattice hex
    L 6
    rho 1/3 1/3
    column 0 0 2 4
    column 1 1 3 5
    ...

The ``rho`` line records the realized sector densities, not a sampling
request: for the hexagonal lattice the pair (rho1, rho2) with
rho3 = n_beads / L implied, for the square lattice the tilt components
(s1, s2) recovered from the winding numbers.  On load the densities are
checked against the winding numbers measured from the positions, so a
hand-edited file that moved beads across sectors is rejected rather
than silently reinterpreted.

Positions are the doubled vertical coordinates used everywhere else in
the package; writers emit each column sorted, and the loader accepts any
order the constructors accept.
"""

from __future__ import annotations

from fractions import Fraction
from pathlib import Path
from typing import List, Tuple, Union

from .hexlattice import TorusBeadConfig, TorusGeometry
from .squarelattice import SquareTorusConfig

AnyConfig = Union[TorusBeadConfig, SquareTorusConfig]

FORMAT_LINE = "beadlab config v1"


def _hex_densities(config: TorusBeadConfig) -> Tuple[Fraction, Fraction]:
    L = config.L
    w2, w3 = config.windings()
    rho3 = Fraction(w3 + L, L)
    rho2 = Fraction(w2, L)
    return Fraction(1) - rho2 - rho3, rho2


def _square_densities(config: SquareTorusConfig) -> Tuple[Fraction, Fraction]:
    L = config.L
    return config.winding_e1() / L, config.winding_e2() / L


def dump_config(config: AnyConfig) -> str:
    """Serialize a configuration to the v1 text format."""
    if isinstance(config, TorusBeadConfig):
        lattice = "hex"
        r1, r2 = _hex_densities(config)
    elif isinstance(config, SquareTorusConfig):
        lattice = "square"
        r1, r2 = _square_densities(config)
    else:
        raise TypeError(f"cannot serialize {type(config).__name__}")
    lines = [
        FORMAT_LINE,
        f"lattice {lattice}",
        f"L {config.L}",
        f"rho {r1} {r2}",
    ]
    for l, col in enumerate(config.columns):
        lines.append("column " + " ".join(str(u) for u in [l] + list(col)))
    return "\n".join(lines) + "\n"


def _parse_fraction(token: str, where: str) -> Fraction:
    try:
        return Fraction(token)
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"{where}: bad fraction {token!r}") from exc


def parse_config(text: str) -> AnyConfig:
    """Parse the v1 text format back into a configuration.

    Raises ValueError on malformed input and on a rho line that does not
    match the winding numbers of the listed positions.
    """
    lattice = None
    L = None
    rho: Tuple[Fraction, Fraction] | None = None
    columns: dict[int, List[int]] = {}
    versioned = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if not versioned:
            if line != FORMAT_LINE:
                raise ValueError(
                    f"line {lineno}: expected {FORMAT_LINE!r}, got {line!r}"
                )
            versioned = True
            continue
        key, _, rest = line.partition(" ")
        fields = rest.split()
        if key == "lattice":
            if fields != ["hex"] and fields != ["square"]:
                raise ValueError(f"line {lineno}: unknown lattice {rest!r}")
            lattice = fields[0]
        elif key == "L":
            if len(fields) != 1 or not fields[0].isdigit():
                raise ValueError(f"line {lineno}: bad size {rest!r}")
            L = int(fields[0])
        elif key == "rho":
            if len(fields) != 2:
                raise ValueError(f"line {lineno}: rho needs two components")
            rho = (
                _parse_fraction(fields[0], f"line {lineno}"),
                _parse_fraction(fields[1], f"line {lineno}"),
            )
        elif key == "column":
            if not fields:
                raise ValueError(f"line {lineno}: empty column line")
            try:
                values = [int(f) for f in fields]
            except ValueError as exc:
                raise ValueError(f"line {lineno}: bad position in {rest!r}") from exc
            if values[0] in columns:
                raise ValueError(f"line {lineno}: column {values[0]} repeated")
            columns[values[0]] = values[1:]
        else:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
    if not versioned:
        raise ValueError("empty input, expected a config file")
    if lattice is None or L is None or rho is None:
        missing = [
            name
            for name, val in (("lattice", lattice), ("L", L), ("rho", rho))
            if val is None
        ]
        raise ValueError(f"missing header line(s): {', '.join(missing)}")
    if sorted(columns) != list(range(L)):
        raise ValueError(
            f"expected columns 0..{L - 1}, got indices {sorted(columns)}"
        )
    ordered = [columns[l] for l in range(L)]
    try:
        if lattice == "hex":
            config: AnyConfig = TorusBeadConfig(TorusGeometry(L), ordered)
        else:
            config = SquareTorusConfig(L, ordered)
    except Exception as exc:
        raise ValueError(f"invalid configuration: {exc}") from exc
    measured = (
        _hex_densities(config)
        if lattice == "hex"
        else _square_densities(config)
    )
    if measured != rho:
        raise ValueError(
            f"rho line {rho[0]} {rho[1]} does not match densities "
            f"{measured[0]} {measured[1]} measured from the positions"
        )
    return config


def save_config(config: AnyConfig, path: Union[str, Path]) -> None:
    Path(path).write_text(dump_config(config), encoding="utf-8")


def load_config(path: Union[str, Path]) -> AnyConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))
