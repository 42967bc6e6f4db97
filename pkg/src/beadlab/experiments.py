"""Statistical experiments tying the simulators to the kernel numerics.

Each experiment samples the sector measure, optionally drives it, and
reduces the observations to a table of (estimate, standard error,
reference) rows with a pass/fail verdict at three standard errors.
Standard errors always come from dispersion across replicas; nothing is
ever estimated from the time axis of a single trajectory.

Seed discipline: replica i of an experiment with base seed s draws its
sample from stream s XOR 2i and runs its dynamics from stream
s XOR (2i + 1), so every row can be replayed exactly from the base seed
alone.

Finite-size convention: a torus of size L cannot hold an irrational
slope; the winding sector realizes the floor-quantized slope returned
by realized_slope, and all kernel references are evaluated there.  The
drift experiment additionally reports the quantization drift of the
reference itself across sizes, since acceptance compares against the
infinite-lattice value.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Tuple

import numpy as np

from . import __version__
from .determinantal import KernelGrid, correlation, j_explicit
from .dynamics import (
    DynamicsSpec,
    ObservableTracker,
    compute_V_counts,
    run,
    single_flip_run,
)
from .hexlattice import TorusBeadConfig
from .sampler import SamplerSpec, sample_gibbs
from .slopes import Slope

Face = Tuple[int, int]

_KINDS = ("stationarity", "drift", "speed", "variance", "gap_tail")


def realized_slope(L: int, slope: Slope) -> Slope:
    """The slope the winding sector actually carries at finite size.

    Bead count per column and diagonal winding are floors of rho3 L and
    rho2 L; the remainder accrues to rho1.  At sizes where the requested
    slope is exactly representable this is the identity.
    """
    rho3 = Fraction((slope.rho3 * L).__floor__(), L)
    rho2 = Fraction((slope.rho2 * L).__floor__(), L)
    return Slope(1 - rho2 - rho3, rho2)


@dataclass(frozen=True)
class ExperimentSpec:
    """Declarative description of one experiment run."""

    kind: str
    L: int
    slope: Slope
    p: float
    q: float
    t_grid: Tuple[float, ...]
    replicas: int
    seed: int
    lattice: str = "hex"
    burn_sweeps: Optional[int] = None
    n_faces: int = 8
    contrast_replicas: int = 0
    trend_sizes: Tuple[int, ...] = ()
    trend_replicas: int = 50
    r_windows: Tuple[int, ...] = (4, 8, 16)
    radius: int = 4

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise ValueError(f"unknown experiment kind {self.kind!r}")
        if self.lattice != "hex":
            raise ValueError("experiments drive the hexagonal lattice only")
        if self.replicas < 2:
            raise ValueError(f"at least 2 replicas required, got {self.replicas}")
        if self.p < 0 or self.q < 0:
            raise ValueError(f"clock rates must be nonnegative, got p={self.p} q={self.q}")
        if not self.t_grid or any(
            b <= a for a, b in zip(self.t_grid, self.t_grid[1:])
        ):
            raise ValueError("t_grid must be nonempty and strictly increasing")
        if self.kind == "variance" and self.t_grid[-1] < 16 * self.t_grid[0]:
            # about two decades; the growth fits are meaningless on a
            # narrower window
            raise ValueError("variance t_grid must span a factor >= 16")
        if max(self.t_grid) > self.L / 4:
            # wrap-contamination rule; the growth-law grid deliberately
            # crosses it to reach its top decade, so it only warns there
            if self.kind == "variance":
                warnings.warn(
                    f"horizon {max(self.t_grid)} exceeds L/4 = {self.L / 4}; "
                    "periodic wrap may bias the top of the grid",
                    RuntimeWarning,
                )
            else:
                raise ValueError(
                    f"horizon {max(self.t_grid)} exceeds L/4 = {self.L / 4}; "
                    "periodic wrap would contaminate the statistics"
                )

    def sampler_seed(self, i: int) -> int:
        return self.seed ^ (2 * i)

    def dynamics_seed(self, i: int) -> int:
        return self.seed ^ (2 * i + 1)


@dataclass(frozen=True)
class Row:
    """One table line; passed None marks an observation-only row."""

    experiment: str
    observable: str
    parameters: str
    estimate: float
    stderr: Optional[float]
    reference: Optional[float]
    passed: Optional[bool]


@dataclass
class ResultTable:
    rows: List[Row] = field(default_factory=list)

    def add(
        self,
        experiment: str,
        observable: str,
        parameters: str,
        estimate: float,
        stderr: Optional[float] = None,
        reference: Optional[float] = None,
        passed: Optional[bool] = None,
    ) -> Row:
        row = Row(experiment, observable, parameters, estimate, stderr, reference, passed)
        self.rows.append(row)
        return row

    def add_checked(
        self,
        experiment: str,
        observable: str,
        parameters: str,
        estimate: float,
        stderr: float,
        reference: float,
        slack: float = 0.0,
    ) -> Row:
        """Row that passes iff |estimate - reference| <= 3 stderr + slack.

        A zero standard error marks a deterministic observable, checked
        for exact agreement instead.
        """
        if stderr == 0.0:
            ok = abs(estimate - reference) <= 1e-12 + slack
        else:
            ok = abs(estimate - reference) <= 3.0 * stderr + slack
        return self.add(experiment, observable, parameters, estimate, stderr, reference, ok)

    def hard_failures(self) -> List[Row]:
        """Failed rows that should gate an exit code.

        Rows whose parameters carry ``label=soft`` keep their pass/fail
        flag in the table but never gate: they are either evidence rows
        for limit statements or members of a panel whose aggregated rule
        row is the gate.
        """
        return [
            r
            for r in self.rows
            if r.passed is False and "label=soft" not in r.parameters
        ]

    def extend(self, other: "ResultTable") -> None:
        self.rows.extend(other.rows)

    @staticmethod
    def _fmt(x: Optional[float]) -> str:
        if x is None:
            return ""
        return f"{x:.10g}"

    def to_csv(self, stream) -> None:
        """RFC-4180 rows behind a version comment line."""
        stream.write(f"# beadlab results v{__version__}\r\n")
        w = csv.writer(stream)
        w.writerow(
            ["experiment", "observable", "parameters", "estimate", "stderr", "reference", "passed"]
        )
        for r in self.rows:
            w.writerow(
                [
                    r.experiment,
                    r.observable,
                    r.parameters,
                    self._fmt(r.estimate),
                    self._fmt(r.stderr),
                    self._fmt(r.reference),
                    "" if r.passed is None else str(r.passed),
                ]
            )

    def summary(self) -> str:
        lines = []
        for r in self.rows:
            tag = "info" if r.passed is None else ("PASS" if r.passed else "FAIL")
            se = "" if r.stderr is None else f" +- {r.stderr:.3g}"
            ref = "" if r.reference is None else f" (ref {r.reference:.6g})"
            lines.append(
                f"[{tag}] {r.experiment} / {r.observable}: {r.estimate:.6g}{se}{ref}  [{r.parameters}]"
            )
        return "\n".join(lines)


def _mean_se(x: np.ndarray) -> Tuple[float, float]:
    n = x.shape[0]
    return float(np.mean(x)), float(np.std(x, ddof=1) / math.sqrt(n))


def spread_faces(L: int, n: int) -> Tuple[Face, ...]:
    """n faces spaced evenly around the torus, one height row."""
    cols = sorted({round(k * L / n) % L for k in range(n)})
    return tuple((l, l % 2) for l in cols)


def _sample(spec: ExperimentSpec, i: int, L: Optional[int] = None) -> TorusBeadConfig:
    return sample_gibbs(
        SamplerSpec(
            L=L if L is not None else spec.L,
            slope=spec.slope,
            seed=spec.sampler_seed(i),
            burn_sweeps=spec.burn_sweeps,
        )
    )


def _static_current(config: TorusBeadConfig) -> float:
    """Mean up-crossing count over every face; one replica's J estimate."""
    L = config.L
    tot = 0
    for l in range(L):
        for u in range(l % 2, 2 * L, 2):
            tot += compute_V_counts(config, (l, u))[0]
    return tot / (L * L)


# ----- local edge statistics -------------------------------------------------

# Chosen so no linear combination of the four pair counts is a sector
# invariant (e.g. the h-h diagonal and nw-nw stacked counts differ by a
# per-sector constant, so only one of that family appears).
PANEL_PAIRS: Tuple[Tuple[Tuple[str, int, int], Tuple[str, int, int]], ...] = (
    (("h", 0, 0), ("h", 0, 2)),
    (("h", 0, 0), ("h", 1, 1)),
    (("h", 0, 0), ("ne", 1, 1)),
    (("ne", 0, 0), ("ne", 0, 2)),
)

PANEL_NAMES: Tuple[str, ...] = (
    "density_h",
    "density_ne",
    "density_nw",
    "pair_h_h_above",
    "pair_h_h_diag",
    "pair_h_ne_diag",
    "pair_ne_ne_above",
)


def edge_panel(config: TorusBeadConfig) -> np.ndarray:
    """The seven-component local observable vector of one configuration.

    Three single-edge densities and four two-edge correlations, averaged
    over all even-parity anchors of the torus.
    """
    L = config.L
    vals = np.zeros(7)
    n_anchor = L * L
    for l in range(L):
        for t in range(l % 2, 2 * L, 2):
            vals[0] += config.edge_occupied("h", l, t)
            vals[1] += config.edge_occupied("ne", l, t)
            vals[2] += config.edge_occupied("nw", l, t)
            for k, (e1, e2) in enumerate(PANEL_PAIRS):
                if config.edge_occupied(e1[0], l + e1[1], t + e1[2]) and config.edge_occupied(
                    e2[0], l + e2[1], t + e2[2]
                ):
                    vals[3 + k] += 1
    return vals / n_anchor


def panel_references(rs: Slope) -> np.ndarray:
    """Kernel predictions for edge_panel under the slope-rs Gibbs state.

    These are infinite-lattice values.  On a torus sector the densities
    hold exactly, while pair components sit a measured O(1/L^2) away
    (about 1e-3 at L=16, 2e-4 at L=32, consistent signs across sizes).
    """
    grid = KernelGrid(rs)
    refs = [float(rs.rho3), float(rs.rho2), float(rs.rho1)]
    refs += [correlation(rs, list(pair), grid) for pair in PANEL_PAIRS]
    return np.array(refs)


# ----- experiments -----------------------------------------------------------


def stationarity_experiment(spec: ExperimentSpec) -> ResultTable:
    """Local statistics after driving must match the sector predictions.

    For each replica the panel is measured on the fresh sample and again
    after running the asymmetric dynamics to every horizon of the grid
    (prefix runs of one chain).  Deterministic rows (the densities are
    sector invariants) are checked exactly; the multiplicity rule for
    each horizon allows one marginal 3-sigma excursion among the seven
    as long as it stays below four.
    """
    if spec.kind != "stationarity":
        raise ValueError(f"spec kind {spec.kind!r} is not stationarity")
    rs = realized_slope(spec.L, spec.slope)
    refs = panel_references(rs)
    n, grid = spec.replicas, spec.t_grid
    panel0 = np.zeros((n, 7))
    panelT = np.zeros((len(grid), n, 7))
    for i in range(n):
        cfg = _sample(spec, i)
        panel0[i] = edge_panel(cfg)
        for k, T in enumerate(grid):
            probe = cfg.clone()
            run(probe, DynamicsSpec(p=spec.p, q=spec.q, T=T, seed=spec.dynamics_seed(i)))
            panelT[k, i] = edge_panel(probe)

    table = ResultTable()
    base = f"L={spec.L} slope={rs.rho1},{rs.rho2} p={spec.p} q={spec.q} seed={spec.seed} n={n}"

    def panel_block(tag: str, block: np.ndarray) -> None:
        # Member rows are soft: the references are infinite-lattice
        # kernel values, and the pair observables carry measured
        # finite-size offsets of order 1/L^2 (about 2e-4 at L=32), so a
        # single member straying past 3 sigma is expected behaviour.
        # The aggregated rule row is the gate: all seven within 3 sigma
        # except at most one marginal excursion below 4 sigma.
        worst = 0.0
        n_fail = 0
        for j, name in enumerate(PANEL_NAMES):
            m, se = _mean_se(block[:, j])
            soft = base + " label=soft" if se > 0 else base
            table.add_checked("stationarity", f"{tag}_{name}", soft, m, se, float(refs[j]))
            if se > 0:
                z = abs(m - refs[j]) / se
                worst = max(worst, z)
                n_fail += z > 3.0
        panel_ok = n_fail <= 1 and worst <= 4.0
        table.add(
            "stationarity", f"{tag}_panel", base + " rule=max1of7marginal",
            worst, None, 3.0, panel_ok,
        )

    panel_block("t0", panel0)
    for k, T in enumerate(grid):
        panel_block(f"T{T:g}", panelT[k])
        # paired drift against time zero, the sharpest stationarity
        # probe: both sides share whatever finite-size offsets exist,
        # so the reference really is zero.  Gate on the worst of the
        # four at 4 sigma; member rows stay soft 3-sigma evidence.
        worst_d = 0.0
        for j, name in enumerate(PANEL_NAMES[3:], start=3):
            d = panelT[k, :, j] - panel0[:, j]
            m, se = _mean_se(d)
            table.add_checked(
                "stationarity", f"T{T:g}_drift_{name}", base + " label=soft", m, se, 0.0
            )
            if se > 0:
                worst_d = max(worst_d, abs(m) / se)
        table.add(
            "stationarity", f"T{T:g}_drift_panel", base + " rule=worst4sigma",
            worst_d, None, 4.0, worst_d <= 4.0,
        )
    if spec.contrast_replicas > 0:
        _stationarity_contrast(spec, refs, table, base)
    return table


def _stationarity_contrast(
    spec: ExperimentSpec, refs: np.ndarray, table: ResultTable, base: str
) -> None:
    """Observation rows: the single-flip dynamics does drift the panel."""
    T = spec.t_grid[-1]
    nc = spec.contrast_replicas
    panel = np.zeros((nc, 7))
    for i in range(nc):
        cfg = _sample(spec, i)
        single_flip_run(cfg, DynamicsSpec(p=spec.p, q=spec.q, T=T, seed=spec.dynamics_seed(i)))
        panel[i] = edge_panel(cfg)
    worst = 0.0
    for j in range(3, 7):
        m, se = _mean_se(panel[:, j])
        if se > 0:
            worst = max(worst, abs(m - refs[j]) / se)
    table.add(
        "stationarity", f"T{T:g}_singleflip_worst_z", base + f" contrast n={nc}",
        worst, None, None, None,
    )


def drift_experiment(spec: ExperimentSpec) -> ResultTable:
    """Static and dynamic estimates of the stationary current.

    The dynamic estimator reads the tracked face counters at the final
    horizon; the static one averages, over the same samples, the count
    of sites whose upward jump would cross a tracked face.  Both are
    compared to the closed-form current, with the slope-quantization
    drift of the reference documented and granted as slack.
    """
    if spec.kind != "drift":
        raise ValueError(f"spec kind {spec.kind!r} is not drift")
    rs = realized_slope(spec.L, spec.slope)
    faces = spread_faces(spec.L, spec.n_faces)
    T = spec.t_grid[-1]
    n = spec.replicas
    j_nominal = j_explicit(spec.slope)
    j_sector = j_explicit(rs)
    asym = spec.q - spec.p

    static = np.zeros(n)
    dyn = np.zeros(n)
    for i in range(n):
        cfg = _sample(spec, i)
        static[i] = _static_current(cfg)
        tracker = ObservableTracker(faces=faces)
        run(cfg, DynamicsSpec(p=spec.p, q=spec.q, T=T, seed=spec.dynamics_seed(i)), tracker)
        q_mean = float(np.mean([tracker.q_x[f] for f in tracker.faces]))
        dyn[i] = q_mean / (T * asym) if asym != 0 else q_mean

    table = ResultTable()
    base = f"L={spec.L} slope={rs.rho1},{rs.rho2} p={spec.p} q={spec.q} T={T} seed={spec.seed} n={n}"
    slack = abs(j_sector - j_nominal)
    if asym == 0:
        m, se = _mean_se(dyn)
        table.add_checked("drift", "mean_Q_symmetric", base, m, se, 0.0)
    else:
        m, se = _mean_se(dyn)
        table.add_checked(
            "drift", "J_dynamic", base + f" slack={slack:.3g}", m, se, j_nominal, slack=slack
        )
        ms, ses = _mean_se(static)
        table.add_checked(
            "drift", "J_static", base + f" slack={slack:.3g}", ms, ses, j_nominal, slack=slack
        )
        md, sed = _mean_se(dyn - static)
        table.add_checked("drift", "J_estimator_agreement", base, md, sed, 0.0)
        table.add("drift", "J_sector_reference", base, j_sector, None, j_nominal, None)
    for Lt in spec.trend_sizes:
        _drift_trend_rows(spec, Lt, table)
    return table


def _drift_trend_rows(spec: ExperimentSpec, Lt: int, table: ResultTable) -> None:
    rs_t = realized_slope(Lt, spec.slope)
    n = spec.trend_replicas
    vals = np.zeros(n)
    for i in range(n):
        vals[i] = _static_current(_sample(spec, i, L=Lt))
    m, se = _mean_se(vals)
    ref = j_explicit(rs_t)
    table.add_checked(
        "drift", f"J_static_L{Lt}",
        f"L={Lt} slope={rs_t.rho1},{rs_t.rho2} seed={spec.seed} n={n}",
        m, se, ref,
    )


def _palm_moment(config: TorusBeadConfig) -> float:
    """Bead-averaged g(g+1)/2 of the upward gap; the tagged-speed moment."""
    tot = 0
    count = 0
    for l in range(config.L):
        for u in config.columns[l]:
            g = config.up_gap(l, u)
            tot += g * (g + 1) // 2
            count += 1
    return tot / count


def speed_consistency(spec: ExperimentSpec) -> ResultTable:
    """Tagged-bead speed, measured and predicted, and the current identity.

    The dynamic speed is a per-replica through-origin regression of the
    tagged displacement on the horizon grid; the static prediction is
    (p - q) times the bead-averaged upward-gap moment.  The same moment
    times the bead density must reproduce the face current, tying the
    tagged and height pictures together.

    The tagged rank cycles through the replicas.  Tagging a fixed rank
    would be a length-biased pick (the bead above the wrap seam sits
    there for as many vertical shifts as its downward spacing is long),
    and measurably inflates the speed; cycling ranks restores the
    uniform-bead average.  Replica counts divisible by the bead count
    per column make the cycle exact.
    """
    if spec.kind != "speed":
        raise ValueError(f"spec kind {spec.kind!r} is not speed")
    rs = realized_slope(spec.L, spec.slope)
    rho3 = float(rs.rho3)
    faces = spread_faces(spec.L, spec.n_faces)
    grid = spec.t_grid
    n = spec.replicas
    t_arr = np.array(grid)
    asym = spec.p - spec.q

    v_dyn = np.zeros(n)
    v_static = np.zeros(n)
    j_dyn = np.zeros(n)
    j_palm = np.zeros(n)
    env0 = np.zeros((n, 2))  # tagged upward gap, gap emptiness at t = 0
    envT = np.zeros((n, 2))
    for i in range(n):
        cfg = _sample(spec, i)
        moment = _palm_moment(cfg)
        v_static[i] = asym * moment
        j_palm[i] = rho3 * moment
        rank = i % len(cfg.columns[0])
        u0 = cfg.columns[0][rank]
        g0 = cfg.up_gap(0, u0)
        env0[i] = (g0, g0 == 0)
        shifts = np.zeros(len(grid))
        final = None
        for k, T in enumerate(grid):
            probe = cfg.clone()
            tracker = ObservableTracker(faces=faces, tagged=(0, rank))
            run(probe, DynamicsSpec(p=spec.p, q=spec.q, T=T, seed=spec.dynamics_seed(i)), tracker)
            shifts[k] = tracker.tagged_shift
            if k == len(grid) - 1:
                final = (probe, tracker)
        v_dyn[i] = float(np.dot(shifts, t_arr) / np.dot(t_arr, t_arr))
        probe, tracker = final
        q_mean = float(np.mean([tracker.q_x[f] for f in tracker.faces]))
        j_dyn[i] = q_mean / (grid[-1] * (spec.q - spec.p)) if spec.p != spec.q else q_mean
        uT = (u0 + 2 * tracker.tagged_shift) % (2 * spec.L)
        gT = probe.up_gap(0, uT)
        envT[i] = (gT, gT == 0)

    table = ResultTable()
    base = f"L={spec.L} slope={rs.rho1},{rs.rho2} p={spec.p} q={spec.q} seed={spec.seed} n={n}"
    m_dyn, se_dyn = _mean_se(v_dyn)
    table.add("speed", "v_dynamic", base, m_dyn, se_dyn, None, None)
    m_st, se_st = _mean_se(v_static)
    table.add("speed", "v_static", base, m_st, se_st, None, None)
    m, se = _mean_se(v_dyn - v_static)
    table.add_checked("speed", "v_agreement", base, m, se, 0.0)
    if spec.p == spec.q:
        table.add_checked("speed", "v_symmetric_zero", base, m_dyn, se_dyn, 0.0)
    else:
        m, se = _mean_se(j_dyn - j_palm)
        table.add_checked("speed", "current_equals_rho3_moment", base, m, se, 0.0)
    for j, name in enumerate(("tagged_up_gap", "tagged_up_gap_zero")):
        m, se = _mean_se(envT[:, j] - env0[:, j])
        table.add_checked("speed", f"palm_env_drift_{name}", base, m, se, 0.0)
    return table


def _jackknife_se(stat, n: int) -> float:
    """Delete-one standard error of stat(leave_out_index)."""
    vals = np.array([stat(i) for i in range(n)])
    return float(math.sqrt((n - 1) / n * np.sum((vals - vals.mean()) ** 2)))


def _face_variances(q_mat: np.ndarray, skip: Optional[int] = None) -> np.ndarray:
    """Across-replica variance per face, optionally deleting one replica."""
    m = np.delete(q_mat, skip, axis=0) if skip is not None else q_mat
    return np.var(m, axis=0, ddof=1)


def _power_fit_rss(t_arr: np.ndarray, v_arr: np.ndarray) -> Tuple[float, float]:
    """Best (alpha, rss) of c t^alpha by scan plus local refinement."""
    best = (math.inf, 0.0)
    for alpha in np.linspace(0.0, 1.5, 301):
        ta = t_arr ** alpha
        c = float(np.dot(v_arr, ta) / np.dot(ta, ta))
        rss = float(np.sum((v_arr - c * ta) ** 2))
        if rss < best[0]:
            best = (rss, alpha)
    lo, hi = best[1] - 0.01, best[1] + 0.01
    for alpha in np.linspace(lo, hi, 101):
        ta = t_arr ** alpha
        c = float(np.dot(v_arr, ta) / np.dot(ta, ta))
        rss = float(np.sum((v_arr - c * ta) ** 2))
        if rss < best[0]:
            best = (rss, alpha)
    return best[1], best[0]


def _log_fit_rss(t_arr: np.ndarray, v_arr: np.ndarray) -> float:
    x = np.log(t_arr)
    design = np.stack([x, np.ones_like(x)], axis=1)
    coef, *_ = np.linalg.lstsq(design, v_arr, rcond=None)
    return float(np.sum((v_arr - design @ coef) ** 2))


def variance_growth(spec: ExperimentSpec) -> ResultTable:
    """Growth law of the face-counter variance across the horizon grid.

    Per horizon, the variance is estimated per face across replicas and
    averaged over faces; its standard error is a delete-one-replica
    jackknife, which respects the correlation between faces of one
    replica.  The growth exponent is the log-log regression slope, and
    the shape question is settled by comparing residuals of a linear-in-
    log-T fit against the best single power law.
    """
    if spec.kind != "variance":
        raise ValueError(f"spec kind {spec.kind!r} is not variance")
    faces = spread_faces(spec.L, spec.n_faces)
    grid = spec.t_grid
    n = spec.replicas
    q_mat = np.zeros((len(grid), n, len(faces)))
    for i in range(n):
        cfg = _sample(spec, i)
        for k, T in enumerate(grid):
            probe = cfg.clone()
            tracker = ObservableTracker(faces=faces)
            run(probe, DynamicsSpec(p=spec.p, q=spec.q, T=T, seed=spec.dynamics_seed(i)), tracker)
            q_mat[k, i] = [tracker.q_x[f] for f in tracker.faces]

    rs = realized_slope(spec.L, spec.slope)
    table = ResultTable()
    base = (
        f"L={spec.L} slope={rs.rho1},{rs.rho2} p={spec.p} q={spec.q} "
        f"seed={spec.seed} n={n} faces={len(faces)}"
    )
    t_arr = np.array(grid)
    v_est = np.zeros(len(grid))
    for k, T in enumerate(grid):
        v_est[k] = float(np.mean(_face_variances(q_mat[k])))
        se = _jackknife_se(lambda i: float(np.mean(_face_variances(q_mat[k], i))), n)
        table.add("variance", f"varQ_T{T:g}", base, v_est[k], se, None, None)

    def alpha_of(skip: Optional[int]) -> float:
        v = np.array([np.mean(_face_variances(q_mat[k], skip)) for k in range(len(grid))])
        slope_fit = np.polyfit(np.log(t_arr), np.log(v), 1)
        return float(slope_fit[0])

    alpha = alpha_of(None)
    alpha_se = _jackknife_se(alpha_of, n)
    table.add("variance", "power_exponent", base, alpha, alpha_se, 0.25, alpha < 0.25)
    rss_log = _log_fit_rss(t_arr, v_est)
    _, rss_pow = _power_fit_rss(t_arr, v_est)
    ratio = rss_log / rss_pow if rss_pow > 0 else math.inf
    table.add("variance", "logfit_vs_powerfit_rss", base + " label=soft", ratio, None, 1.0, ratio < 1.0)
    return table


def _window_count(config: TorusBeadConfig, l: int, u0: int, r: int) -> int:
    L2 = 2 * config.L
    return sum(config.occupied(l, (u0 + 2 * j) % L2) for j in range(r))


def gap_tail_experiment(spec: ExperimentSpec) -> ResultTable:
    """Window occupation means, gap-tail decay, and the driven gap record.

    Window counts anchor at a fixed offset of a few spread columns so
    they stay random (averaging over all anchors would collapse them to
    the deterministic sector density).  The tail check regresses the log
    survival function of the upward gap on the gap size; the dynamic
    rows tabulate the running maximum gap near column zero up to the
    final horizon.
    """
    if spec.kind != "gap_tail":
        raise ValueError(f"spec kind {spec.kind!r} is not gap_tail")
    rs = realized_slope(spec.L, spec.slope)
    rho3 = float(rs.rho3)
    n = spec.replicas
    anchor_cols = sorted({round(k * spec.L / 4) % spec.L for k in range(4)})
    max_gap = spec.L
    win = np.zeros((n, len(spec.r_windows)))
    tail_counts = np.zeros((n, max_gap + 1))
    n_beads = np.zeros(n)
    deltas = np.zeros(n)
    for i in range(n):
        cfg = _sample(spec, i)
        for j, r in enumerate(spec.r_windows):
            win[i, j] = float(
                np.mean([_window_count(cfg, l, l % 2, r) for l in anchor_cols])
            )
        for l in range(spec.L):
            for u in cfg.columns[l]:
                tail_counts[i, cfg.up_gap(l, u)] += 1
        n_beads[i] = sum(len(c) for c in cfg.columns)
        tracker = ObservableTracker(gap_radius=spec.radius)
        run(
            cfg,
            DynamicsSpec(p=spec.p, q=spec.q, T=spec.t_grid[-1], seed=spec.dynamics_seed(i)),
            tracker,
        )
        deltas[i] = tracker.sup_gap

    table = ResultTable()
    base = f"L={spec.L} slope={rs.rho1},{rs.rho2} p={spec.p} q={spec.q} seed={spec.seed} n={n}"
    for j, r in enumerate(spec.r_windows):
        m, se = _mean_se(win[:, j])
        table.add_checked("gap_tail", f"window_mean_r{r}", base, m, se, rho3 * r)

    # survival function of the upward gap, pooled per replica
    surv = np.cumsum(tail_counts[:, ::-1], axis=1)[:, ::-1] / n_beads[:, None]
    pooled = surv.mean(axis=0)
    g_max = int(np.max(np.nonzero(pooled > 0)[0]))
    g_lo, g_hi = 1, g_max  # g = 0 is the full mass point

    def tail_slope(skip: Optional[int]) -> float:
        s = np.delete(surv, skip, axis=0).mean(axis=0) if skip is not None else pooled
        g = np.arange(g_lo, g_hi + 1)
        mask = s[g] > 0
        return float(np.polyfit(g[mask], np.log(s[g][mask]), 1)[0])

    slope_hat = tail_slope(None)
    slope_se = _jackknife_se(tail_slope, n)
    table.add(
        "gap_tail", "tail_log_slope", base + f" g={g_lo}..{g_hi}",
        slope_hat, slope_se, 0.0, slope_hat + 3.0 * slope_se < 0.0,
    )
    for name, val in (
        ("delta_mean", float(np.mean(deltas))),
        ("delta_q95", float(np.quantile(deltas, 0.95))),
        ("delta_max", float(np.max(deltas))),
    ):
        table.add(
            "gap_tail", name,
            base + f" R={spec.radius} T={spec.t_grid[-1]:g}",
            val, None, None, None,
        )
    return table


RUNNERS = {
    "stationarity": stationarity_experiment,
    "drift": drift_experiment,
    "speed": speed_consistency,
    "variance": variance_growth,
    "gap_tail": gap_tail_experiment,
}


def run_experiment(spec: ExperimentSpec, jobs: int = 1) -> ResultTable:
    """Run the experiment named by spec.kind.

    jobs sets the replica-farm parallelism degree.  Every replica owns
    its two seed streams through the spec alone, so the result table is
    identical for any degree; the current dispatcher executes replicas
    in index order in process.
    TODO: dispatch replica batches to a process pool when jobs > 1.
    """
    if jobs < 1:
        raise ValueError(f"jobs must be positive, got {jobs}")
    return RUNNERS[spec.kind](spec)
