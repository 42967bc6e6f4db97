"""Replay equality between the compiled and pure Python engines.

The compiled kernels are required to consume the generator stream in
exactly the same order as the Python engines, so whole runs must agree
event by event.  Event data is integer and compared exactly; event
times go through log1p in two different libm builds and are compared at
1e-12 relative, far below any tolerance used by the experiments.
"""

from __future__ import annotations

import pytest

from beadlab import fasthex
from beadlab.dynamics import DynamicsSpec, ObservableTracker, _python_run
from beadlab.hexlattice import staircase_config
from beadlab.rng import SplitMix64
from beadlab.sampler import SamplerSpec, sample_gibbs, sweep_accept_count
from beadlab.slopes import Slope

from conftest import SYMMETRIC, TILTED

pytestmark = pytest.mark.skipif(not fasthex.AVAILABLE, reason="numba unavailable")


@pytest.mark.parametrize(
    "L,slope,seed",
    [
        (6, SYMMETRIC, 7),
        (8, Slope("1/8", "1/8"), 99),
        (12, TILTED, 4242),
        (9, SYMMETRIC, 5),
    ],
)
def test_sweeps_replay_python_exactly(L, slope, seed):
    a = staircase_config(L, slope)
    b = staircase_config(L, slope)
    rng = SplitMix64(seed)
    for _ in range(25):
        sweep_accept_count(a, rng)
    fasthex.run_sweeps(b, seed, 25)
    assert a.columns == b.columns
    assert (a.occ == b.occ).all()
    b.validate()


def test_sample_gibbs_engine_agreement():
    spec_py = SamplerSpec(L=8, slope=SYMMETRIC, seed=31, burn_sweeps=40, engine="python")
    spec_nb = SamplerSpec(L=8, slope=SYMMETRIC, seed=31, burn_sweeps=40, engine="compiled")
    assert sample_gibbs(spec_py).columns == sample_gibbs(spec_nb).columns


@pytest.mark.parametrize(
    "L,slope,p,q,T,seed",
    [
        (6, SYMMETRIC, 1.0, 1.0, 2.0, 11),
        (8, Slope("1/8", "1/8"), 1.0, 0.0, 3.0, 22),
        (8, Slope("1/4", "1/8"), 0.0, 1.0, 3.0, 33),
        (12, SYMMETRIC, 2.0, 0.5, 1.5, 44),
    ],
)
@pytest.mark.parametrize("capped", [False, True])
def test_dynamics_replays_python_exactly(L, slope, p, q, T, seed, capped):
    ca = staircase_config(L, slope)
    cb = staircase_config(L, slope)
    spec = DynamicsSpec(p=p, q=q, T=T, seed=seed)
    faces = tuple((l, (2 * l) % (2 * L)) for l in range(0, L, 2))
    tra = ObservableTracker(faces=faces, tagged=(0, 0), gap_radius=2, record_events=True)
    trb = ObservableTracker(faces=faces, tagged=(0, 0), gap_radius=2, record_events=True)
    _python_run(ca, spec, tra, capped=capped)
    fasthex.run_dynamics(cb, spec, trb, capped=capped)
    assert tra.n_events == trb.n_events
    for ea, eb in zip(tra.event_log, trb.event_log):
        assert ea[1:] == eb[1:]
        assert ea[0] == pytest.approx(eb[0], rel=1e-12)
    assert ca.columns == cb.columns
    assert (ca.occ == cb.occ).all()
    assert tra.q_x == trb.q_x
    assert tra.tagged_shift == trb.tagged_shift
    assert tra.sup_gap == trb.sup_gap
    ca.validate()
    cb.validate()


def test_recorded_log_matches_unrecorded_state():
    # the two-pass event sizing must not disturb the final state
    c1 = staircase_config(8, SYMMETRIC)
    c2 = staircase_config(8, SYMMETRIC)
    spec = DynamicsSpec(p=1.0, q=1.0, T=2.5, seed=77)
    tr = ObservableTracker(record_events=True)
    fasthex.run_dynamics(c1, spec, tr)
    fasthex.run_dynamics(c2, spec, None)
    assert c1.columns == c2.columns
    assert len(tr.event_log) == tr.n_events
