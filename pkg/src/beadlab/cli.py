"""Command-line interface: batch runs, tables, and snapshots.

Subcommands
-----------
sample               draw Gibbs configurations, write the v1 text format
dynamics             drive a fresh sample, write per-face flux CSV
determinantal-table  evaluate kernel constants at a slope into a CSV table
dhd                  compare ring dynamics against the variational formula
experiment           run one statistical experiment from the config file
render               draw a configuration as SVG

Parameters live in a flat key-value config file (INI syntax), one
section per subcommand; see the keys referenced by each handler below.
Every run derives all randomness from a single 64-bit seed, taken from
``--seed`` or else from system entropy, and the seed in effect is
always echoed on stdout so any run can be replayed.  Item i of a
multi-item run uses stream seed XOR i; the experiment module documents
its own per-replica split.  Identical (config, seed) pairs produce
byte-identical CSV files, and summaries carry no timestamps.

Exit codes: 0 success, 1 validation failure, 2 usage error, 3 an
experiment completed but a hard acceptance row failed.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import secrets
import sys
from fractions import Fraction
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

from . import __version__
from .determinantal import c_rho, j_explicit, kinv, weights_from_slope
from .dynamics import DynamicsSpec, ObservableTracker, run
from .errors import BeadlabError
from .experiments import ExperimentSpec, run_experiment, spread_faces
from .hammersley import DhdState, PoissonField, dhd_lpp_all, dhd_simulate
from .render import render_svg
from .rng import SplitMix64
from .sampler import SamplerSpec, sample_gibbs, sq_sample_gibbs
from .serialize import dump_config, load_config
from .slopes import Slope
from .squarelattice import SquareSlope
from .hexlattice import staircase_config
from .squarelattice import sq_staircase

Section = configparser.SectionProxy


def _fractions(section: Section, key: str, count: int) -> List[Fraction]:
    raw = section.get(key)
    if raw is None:
        raise ValueError(f"missing key {key!r} in section [{section.name}]")
    parts = raw.split()
    if len(parts) != count:
        raise ValueError(f"{key} needs {count} components, got {raw!r}")
    return [Fraction(p) for p in parts]


def _ints(section: Section, key: str) -> List[int]:
    return [int(p) for p in section.get(key, "").split()]


def _floats(section: Section, key: str) -> List[float]:
    return [float(p) for p in section.get(key, "").split()]


def _csv_writer(path: Path):
    handle = path.open("w", newline="", encoding="utf-8")
    handle.write(f"# beadlab results v{__version__}\r\n")
    return handle, csv.writer(handle)


def _cmd_sample(section: Section, args: argparse.Namespace, seed: int) -> int:
    lattice = section.get("lattice", "hex")
    L = section.getint("L")
    count = section.getint("count", 1)
    burn = section.getint("burn_sweeps", fallback=None)
    out = Path(args.out)
    written = []
    for i in range(count):
        item_seed = seed ^ i
        if lattice == "hex":
            slope = Slope(*_fractions(section, "rho", 2))
            spec = SamplerSpec(
                L=L,
                slope=slope,
                seed=item_seed,
                burn_sweeps=burn,
                engine=section.get("engine", "auto"),
            )
            config = sample_gibbs(spec)
        elif lattice == "square":
            slope = SquareSlope(*_fractions(section, "rho", 2))
            config = sq_sample_gibbs(L, slope, item_seed, burn_sweeps=burn)
        else:
            raise ValueError(f"unknown lattice {lattice!r}")
        path = out / f"config_{i:03d}.txt"
        path.write_text(dump_config(config), encoding="utf-8")
        written.append(path.name)
    print(f"sample: {count} {lattice} configuration(s) at L={L} -> {', '.join(written)}")
    return 0


def _cmd_dynamics(section: Section, args: argparse.Namespace, seed: int) -> int:
    L = section.getint("L")
    slope = Slope(*_fractions(section, "rho", 2))
    sampler = SamplerSpec(
        L=L,
        slope=slope,
        seed=seed,
        burn_sweeps=section.getint("burn_sweeps", fallback=None),
        engine=section.get("engine", "auto"),
    )
    config = sample_gibbs(sampler)
    spec = DynamicsSpec(
        p=section.getfloat("p", 0.0),
        q=section.getfloat("q", 1.0),
        T=section.getfloat("T"),
        seed=seed ^ 1,
        engine=section.get("engine", "auto"),
    )
    faces = spread_faces(L, section.getint("faces", 4))
    record = section.getboolean("record", False)
    tracker = ObservableTracker(faces=faces, record_events=record)
    run(config, spec, tracker)
    out = Path(args.out)
    handle, writer = _csv_writer(out / "qx.csv")
    with handle:
        writer.writerow(["face_l", "face_u", "q_x"])
        for (fl, fu), q in sorted(tracker.q_x.items()):
            writer.writerow([fl, fu, q])
    (out / "final_config.txt").write_text(dump_config(config), encoding="utf-8")
    if record:
        handle, writer = _csv_writer(out / "events.csv")
        with handle:
            writer.writerow(["time", "column", "label", "position", "delta"])
            for t, l, n, u, delta in tracker.event_log:
                writer.writerow([f"{t:.12g}", l, n, u, delta])
    print(
        f"dynamics: L={L} T={spec.T:g} p={spec.p:g} q={spec.q:g} "
        f"events={tracker.n_events} net_flux={sum(tracker.q_x.values())}"
    )
    return 0


def _cmd_determinantal(section: Section, args: argparse.Namespace, seed: int) -> int:
    slope = Slope(*_fractions(section, "rho", 2))
    tol = args.tol if args.tol is not None else section.getfloat("tol", 1e-8)
    k = weights_from_slope(slope)
    c = c_rho(slope, tol=tol)
    rows = [
        ("k1", k.k1),
        ("k2", k.k2),
        ("k3", k.k3),
        ("c_rho", c),
        ("sqrt_k1k2_times_c", (k.k1 * k.k2) ** 0.5 * c),
        ("k3_kinv_origin", k.k3 * kinv(slope, 0, 0, tol=tol)),
        ("flux_constant", j_explicit(slope)),
    ]
    out = Path(args.out)
    handle, writer = _csv_writer(out / "determinantal_table.csv")
    with handle:
        writer.writerow(["quantity", "value"])
        for name, value in rows:
            writer.writerow([name, f"{value:.10g}"])
    print(
        "determinantal-table: rho=(%s, %s) sqrt_k1k2_times_c=%.6f" % (slope.rho1, slope.rho2, rows[4][1])
    )
    return 0


def _cmd_dhd(section: Section, args: argparse.Namespace, seed: int) -> int:
    particles = section.getint("particles", 40)
    spacing = section.getint("spacing", 2)
    horizon = section.getfloat("T", 5.0)
    trials = section.getint("trials", 100)
    initial = DhdState([spacing * i for i in range(particles)])
    out = Path(args.out)
    mismatches = 0
    handle, writer = _csv_writer(out / "dhd_trials.csv")
    with handle:
        writer.writerow(["trial", "n_mismatch"])
        for i in range(trials):
            rng = SplitMix64(seed ^ i)
            field = PoissonField.sample(
                initial.positions[0], initial.positions[-1], horizon, 1.0, rng
            )
            final = dhd_simulate(initial, field)[-1][1]
            predicted = dhd_lpp_all(initial, field, horizon)
            bad = sum(1 for a, b in zip(final, predicted) if a != b)
            mismatches += bad
            writer.writerow([i, bad])
    print(
        f"dhd: {trials} trials, {particles} particles, horizon {horizon:g}, "
        f"total mismatches {mismatches}"
    )
    return 0 if mismatches == 0 else 3


def _cmd_experiment(section: Section, args: argparse.Namespace, seed: int) -> int:
    kwargs = {}
    for key, getter in (
        ("burn_sweeps", section.getint),
        ("n_faces", section.getint),
        ("contrast_replicas", section.getint),
        ("trend_replicas", section.getint),
        ("radius", section.getint),
    ):
        if section.get(key) is not None:
            kwargs[key] = getter(key)
    if section.get("trend_sizes") is not None:
        kwargs["trend_sizes"] = tuple(_ints(section, "trend_sizes"))
    if section.get("r_windows") is not None:
        kwargs["r_windows"] = tuple(_ints(section, "r_windows"))
    spec = ExperimentSpec(
        kind=section.get("kind"),
        L=section.getint("L"),
        slope=Slope(*_fractions(section, "rho", 2)),
        p=section.getfloat("p", 0.0),
        q=section.getfloat("q", 1.0),
        t_grid=tuple(_floats(section, "t_grid")),
        replicas=section.getint("replicas"),
        seed=seed,
        **kwargs,
    )
    table = run_experiment(spec, jobs=args.jobs)
    out = Path(args.out)
    with (out / "results.csv").open("w", newline="", encoding="utf-8") as handle:
        table.to_csv(handle)
    print(table.summary())
    hard = table.hard_failures()
    if hard:
        print(f"experiment: {len(hard)} hard row(s) failed")
        return 3
    print("experiment: all hard rows passed")
    return 0


def _cmd_render(section: Section, args: argparse.Namespace, seed: int) -> int:
    source = section.get("source", "staircase")
    scale = section.getfloat("scale", 22.0)
    if source == "file":
        config = load_config(section.get("path"))
    else:
        lattice = section.get("lattice", "hex")
        L = section.getint("L")
        if lattice == "hex":
            slope = Slope(*_fractions(section, "rho", 2))
            if source == "staircase":
                config = staircase_config(L, slope)
            elif source == "gibbs":
                config = sample_gibbs(SamplerSpec(L=L, slope=slope, seed=seed))
            else:
                raise ValueError(f"unknown source {source!r}")
        elif lattice == "square":
            slope = SquareSlope(*_fractions(section, "rho", 2))
            if source == "staircase":
                config = sq_staircase(L, slope)
            elif source == "gibbs":
                config = sq_sample_gibbs(L, slope, seed)
            else:
                raise ValueError(f"unknown source {source!r}")
        else:
            raise ValueError(f"unknown lattice {lattice!r}")
    svg = render_svg(config, scale=scale)
    path = Path(args.out) / "snapshot.svg"
    path.write_text(svg, encoding="utf-8")
    print(f"render: wrote {path.name} ({svg.count('<polygon')} polygons, {svg.count('<rect')} rects)")
    return 0


HANDLERS: Dict[str, Callable[[Section, argparse.Namespace, int], int]] = {
    "sample": _cmd_sample,
    "dynamics": _cmd_dynamics,
    "determinantal-table": _cmd_determinantal,
    "dhd": _cmd_dhd,
    "experiment": _cmd_experiment,
    "render": _cmd_render,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="beadlab",
        description="bead dynamics laboratory: sampling, numerics, experiments",
    )
    parser.add_argument("--version", action="version", version=f"beadlab {__version__}")
    parser.add_argument(
        "subcommand",
        choices=sorted(HANDLERS),
        help="what to run; parameters come from the matching config section",
    )
    parser.add_argument("--config", required=True, metavar="PATH", help="parameter file")
    parser.add_argument("--out", default=".", metavar="DIR", help="output directory")
    parser.add_argument("--seed", type=int, default=None, metavar="N", help="64-bit master seed")
    parser.add_argument(
        "--jobs",
        type=int,
        default=1,
        metavar="N",
        help="replica farm parallelism degree (experiment subcommand)",
    )
    parser.add_argument(
        "--tol",
        type=float,
        default=None,
        metavar="X",
        help="quadrature tolerance override (determinantal-table)",
    )
    parser.add_argument("--verbose", action="store_true", help="echo the parsed section to stderr")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
        read = cp.read(args.config)
        if not read:
            raise ValueError(f"cannot read config file {args.config!r}")
        if args.subcommand not in cp:
            raise ValueError(f"config file has no [{args.subcommand}] section")
        section = cp[args.subcommand]
        if args.verbose:
            for key, value in section.items():
                print(f"[{args.subcommand}] {key} = {value}", file=sys.stderr)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        seed = args.seed if args.seed is not None else secrets.randbits(64)
        print(f"seed: {seed}")
        return HANDLERS[args.subcommand](section, args, seed)
    except (BeadlabError, ValueError, OSError, KeyError) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
