import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coopsec.channel import GeometryConfig, sample_scenario
from coopsec.design import DesignProblem, Objective
from coopsec.errors import InvalidConfig
from coopsec.montecarlo import (
    P0_FIG45,
    Strategy,
    SweepConfig,
    _mean_stderr,
    preset,
    run_sweep,
    run_trial,
    trial_seed,
    worker_count,
)

SMALL = dict(n_nodes=(4, 8), n_eavesdroppers=(1, 2), trials=12, base_seed=5)


def test_strategy_properties():
    assert Strategy.COOP_MIN_POWER.cooperative
    assert not Strategy.DIRECT_MAX_SECRECY.cooperative
    assert Strategy.DIRECT_MIN_POWER.metric_name == "transmit_power_w"
    assert Strategy.COOP_MAX_SECRECY.objective is Objective.MAX_SECRECY


def test_run_trial_nearer_eavesdropper():
    geom = GeometryConfig(n_nodes=10, n_eavesdroppers=1, eav_distance_range=(8.0, 8.0))
    sc = sample_scenario(geom, 3)
    problem = DesignProblem(Objective.MAX_SECRECY, P0_FIG45)
    direct = run_trial(sc, problem, Strategy.DIRECT_MAX_SECRECY)
    coop = run_trial(sc, problem, Strategy.COOP_MAX_SECRECY)
    assert direct.metric == 0.0
    assert coop.metric > 0.0


def test_run_trial_insufficient_nodes_is_infeasible():
    sc = sample_scenario(GeometryConfig(n_nodes=2, n_eavesdroppers=3), 1)
    out = run_trial(sc, DesignProblem(Objective.MIN_POWER, 3.0), Strategy.COOP_MIN_POWER)
    assert not out.feasible
    assert out.reason.startswith("InsufficientNodes")


def test_run_trial_objective_mismatch():
    sc = sample_scenario(GeometryConfig(), 1)
    with pytest.raises(InvalidConfig):
        run_trial(sc, DesignProblem(Objective.MIN_POWER, 3.0), Strategy.COOP_MAX_SECRECY)


def test_single_trial_equals_run_trial():
    cfg = SweepConfig(n_nodes=(6,), n_eavesdroppers=(2,), trials=1, base_seed=9)
    res = run_sweep(cfg, workers=1)
    sc = sample_scenario(replace(cfg.geometry, n_nodes=6, n_eavesdroppers=2), trial_seed(9, 0))
    out = run_trial(sc, cfg.problem(), Strategy.COOP_MIN_POWER)
    row = res.row(6, 2, Strategy.COOP_MIN_POWER)
    assert row.mean == out.metric
    assert row.stderr == 0.0
    assert row.trials == 1 and row.infeasible == 0


def test_reproducible_and_worker_independent():
    cfg = SweepConfig(strategies=(Strategy.COOP_MIN_POWER, Strategy.DIRECT_MIN_POWER), **SMALL)
    a = run_sweep(cfg, workers=1)
    b = run_sweep(cfg, workers=1)
    c = run_sweep(cfg, workers=2)
    assert a.rows == b.rows == c.rows


def test_trial_seed_depends_only_on_base_and_index():
    assert trial_seed(1, 5) == trial_seed(1, 5)
    assert len({trial_seed(1, t) for t in range(100)}) == 100
    assert trial_seed(1, 0) != trial_seed(2, 0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(1e-12, 1e3), min_size=1, max_size=40), st.randoms())
def test_mean_is_order_independent(values, rnd):
    x = np.array(values)
    y = x.copy()
    rnd.shuffle(y)
    assert _mean_stderr(x) == _mean_stderr(y)


def test_mean_stderr_edges():
    m, s = _mean_stderr(np.array([]))
    assert math.isnan(m) and math.isnan(s)
    assert _mean_stderr(np.array([2.0, 4.0])) == (3.0, 1.0)


def test_direct_constant_in_n():
    cfg = preset("fig4", n_nodes=(10, 30), n_eavesdroppers=(1, 3), trials=20)
    res = run_sweep(cfg, workers=1)
    for j in (1, 3):
        a = res.row(10, j, Strategy.DIRECT_MAX_SECRECY)
        b = res.row(30, j, Strategy.DIRECT_MAX_SECRECY)
        assert a.mean == b.mean and a.stderr == b.stderr


def test_cooperative_monotone_per_trial():
    # common random numbers make the trends hold trial by trial
    cfg = preset("fig2", n_nodes=(10, 30, 50), n_eavesdroppers=(1, 3), trials=10)
    res = run_sweep(cfg, workers=1)
    for j in (1, 3):
        p = [res.samples[(n, j, "coop_min_power")] for n in (10, 30, 50)]
        for lo, hi in zip(p, p[1:]):
            ok = ~np.isnan(lo) & ~np.isnan(hi)
            assert np.all(hi[ok] <= lo[ok] * (1 + 1e-9))


def test_imperfect_csi_sweep():
    cfg = preset("fig4", n_nodes=(10,), n_eavesdroppers=(1, 2), trials=10, csi_error_variance=1e-12)
    res = run_sweep(cfg, workers=1)
    exact = run_sweep(replace(cfg, csi_error_variance=None), workers=1)
    for j in (1, 2):
        noisy = res.row(10, j, Strategy.COOP_MAX_SECRECY)
        clean = exact.row(10, j, Strategy.COOP_MAX_SECRECY)
        assert noisy.infeasible == 0
        assert noisy.mean < clean.mean


def test_metadata_echo():
    res = run_sweep(SweepConfig(**SMALL), workers=1)
    assert res.metadata["seed"] == 5
    assert res.metadata["config"]["direct_rate_factor"] == 1.0
    assert "PCG64" in res.metadata["prng"]


def test_invalid_sweep_configs():
    with pytest.raises(InvalidConfig):
        SweepConfig(trials=0)
    with pytest.raises(InvalidConfig):
        SweepConfig(strategies=(Strategy.COOP_MIN_POWER, Strategy.COOP_MAX_SECRECY))
    with pytest.raises(InvalidConfig):
        preset("fig9")


def test_worker_count(monkeypatch):
    monkeypatch.setenv("SECRECY_THREADS", "1")
    assert worker_count() == 1
    monkeypatch.setenv("SECRECY_THREADS", "many")
    with pytest.raises(InvalidConfig):
        worker_count()
    monkeypatch.delenv("SECRECY_THREADS")
    assert worker_count() >= 1
