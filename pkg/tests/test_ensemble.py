import math
import os

import numpy as np
import pytest

from twintrap.dynamics import RateConfig, step_trajectory
from twintrap.ensemble import (EnsembleSpec, aggregate, derive_seed,
                               prepare_by_detections, run_ensemble,
                               run_trajectories, run_trajectory,
                               scatter_points)
from twintrap.pumping import PumpPlan, one_way_rate
from twintrap.twinstate import new_number_state


def pumped_setup(n=10):
    chi = one_way_rate(n, n, 1.0, 0.0, 0.0, 1e4, 1e4)
    plan = PumpPlan("one_way", chi)
    rates = RateConfig(gamma=1.0, n_bath1=1e4, n_bath2=1e4)
    return rates, plan


def test_derive_seed_frozen_values():
    # pinned so seeds stay stable across platforms and versions
    assert derive_seed(1, 0) == 10451216379200822465
    assert derive_seed(1, 1) == 13757245211066428519
    assert derive_seed(42, 7) == 14769051326987775908
    assert derive_seed(0, 0) == 16294208416658607535


def test_same_seed_identical_records_kernel_path():
    rates, plan = pumped_setup()
    args = dict(horizon=3.0, grid_dt=0.1, seed=5, record_events=False)
    a = run_trajectory(new_number_state(10, 10), rates, plan, **args)
    b = run_trajectory(new_number_state(10, 10), rates, plan, **args)
    for name in ("n1", "n2", "beta", "sigma_n", "sigma_phi", "f",
                 "coherence"):
        assert np.array_equal(getattr(a.samples, name),
                              getattr(b.samples, name))


def test_same_seed_identical_records_python_path(monkeypatch):
    monkeypatch.setenv("TWINTRAP_PURE_PYTHON", "1")
    rates, plan = pumped_setup()
    args = dict(horizon=2.0, grid_dt=0.1, seed=5, record_events=True)
    a = run_trajectory(new_number_state(10, 10), rates, plan, **args)
    b = run_trajectory(new_number_state(10, 10), rates, plan, **args)
    assert len(a.events) == len(b.events)
    for ea, eb in zip(a.events, b.events):
        assert ea.t == eb.t and ea.channel == eb.channel
    assert np.array_equal(a.samples.beta, b.samples.beta)


def test_kernel_and_python_paths_agree(monkeypatch):
    rates, plan = pumped_setup()
    args = dict(horizon=1.5, grid_dt=0.05, seed=9, record_events=False)
    fast = run_trajectory(new_number_state(10, 10), rates, plan, **args)
    monkeypatch.setenv("TWINTRAP_PURE_PYTHON", "1")
    slow = run_trajectory(new_number_state(10, 10), rates, plan, **args)
    for name in ("n1", "n2", "beta", "sigma_n", "sigma_phi", "f"):
        assert np.allclose(getattr(fast.samples, name),
                           getattr(slow.samples, name), atol=1e-7)


def test_run_trajectory_matches_step_composition(monkeypatch):
    # the inlined event loop and the one-jump-at-a-time composition walk
    # the same random stream and produce the same events
    monkeypatch.setenv("TWINTRAP_PURE_PYTHON", "1")
    rates = RateConfig(gamma=1.0, kappa=0.4, chi1_in=0.02, chi2_in=0.02,
                       n_bath1=10.0, n_bath2=10.0)
    rec = run_trajectory(new_number_state(6, 6), rates, None,
                         horizon=2.0, grid_dt=0.5, seed=31,
                         record_events=True)
    rng = np.random.default_rng(31)
    state = new_number_state(6, 6)
    t = 0.0
    for ev in rec.events:
        state, ref = step_trajectory(state, rates, rng, t0=t, snapshot=False)
        assert ref.t == pytest.approx(ev.t, rel=1e-9, abs=1e-12)
        assert ref.channel.kind == ev.channel.kind
        assert ref.channel.trap == ev.channel.trap
        if ev.channel.kind == "detect":
            assert ref.channel.phi == pytest.approx(ev.channel.phi,
                                                    abs=1e-8)
        t = ref.t


def test_detection_only_run_exhausts_atoms():
    rates = RateConfig(gamma=1.0)
    rec = run_trajectory(new_number_state(100, 100), rates, None,
                         horizon=5.0, grid_dt=0.1, seed=17,
                         record_events=True)
    assert len(rec.events) == 200
    assert all(e.channel.kind == "detect" for e in rec.events)
    assert rec.samples.n1[-1] + rec.samples.n2[-1] == pytest.approx(0.0)
    assert rec.halted_at is not None


def test_halted_run_keeps_sampling_deterministically():
    # prepared phase state evolving under collisions alone: no jumps,
    # but the visibility collapses and revives with period pi/kappa
    kappa = 0.5
    rates = RateConfig(gamma=0.0, kappa=kappa)
    rec = run_trajectory(new_number_state(10, 10), rates, None,
                         horizon=7.0, grid_dt=0.01, seed=3,
                         initial_detections=4, record_events=True)
    assert rec.events == []
    assert rec.halted_at == 0.0
    beta = rec.samples.beta
    t = rec.samples.t
    period = math.pi / kappa
    revived = beta[np.argmin(np.abs(t - period))]
    collapsed = beta[np.argmin(np.abs(t - period / 2))]
    assert revived == pytest.approx(beta[0], rel=0.02)
    assert collapsed < 0.5 * beta[0]


def test_prepare_by_detections_structure():
    rng = np.random.default_rng(23)
    state = prepare_by_detections(new_number_state(10, 10), 5, rng)
    assert state.total_number == 15
    assert len(state.coeffs) == 6
    assert state.norm_squared() == pytest.approx(1.0, abs=1e-12)


def test_prepare_by_detections_empty_raises():
    rng = np.random.default_rng(2)
    with pytest.raises(ValueError):
        prepare_by_detections(new_number_state(1, 1), 3, rng)


def test_run_ensemble_degenerate_zero_stderr():
    spec = EnsembleSpec(5, 5, RateConfig(gamma=0.0), None,
                        horizon=1.0, grid_dt=0.25)
    stats = run_ensemble(spec, 4, master_seed=1)
    assert np.all(stats.beta_stderr == 0.0)
    assert np.all(stats.n1_stderr == 0.0)
    assert np.all(stats.beta_mean == 0.0)


def test_run_ensemble_initial_beta_zero():
    rates, plan = pumped_setup()
    spec = EnsembleSpec(10, 10, rates, plan, horizon=0.5, grid_dt=0.25,
                        burn_in=0.0)
    stats = run_ensemble(spec, 8, master_seed=4)
    assert stats.beta_mean[0] == 0.0
    assert stats.grid[0] == 0.0
    assert stats.n_traj == 8


def test_ensemble_seeds_are_derived_per_index():
    rates, plan = pumped_setup()
    spec = EnsembleSpec(5, 5, rates, plan, horizon=0.5, grid_dt=0.25)
    records = run_trajectories(spec, 3, master_seed=77)
    assert [r.seed for r in records] == [derive_seed(77, i)
                                         for i in range(3)]


def test_parallel_matches_serial(monkeypatch):
    rates, plan = pumped_setup()
    spec = EnsembleSpec(8, 8, rates, plan, horizon=1.0, grid_dt=0.1,
                        burn_in=0.2)
    monkeypatch.setenv("TWINTRAP_THREADS", "1")
    serial = run_ensemble(spec, 8, master_seed=11)
    monkeypatch.setenv("TWINTRAP_THREADS", "2")
    parallel = run_ensemble(spec, 8, master_seed=11)
    for name in ("beta_mean", "beta_stderr", "n1_mean", "sigma_n_mean",
                 "uncertainty_product_rms", "coherence_mean"):
        assert np.array_equal(getattr(serial, name), getattr(parallel, name))
    assert serial.time_averaged_beta == parallel.time_averaged_beta


def test_ensemble_mean_coherence_vanishes():
    # the relative phase is random run to run, so the complex coherence
    # averages to zero across the ensemble
    rates = RateConfig(gamma=1.0)
    spec = EnsembleSpec(10, 10, rates, None, horizon=1.0, grid_dt=0.5,
                        burn_in=0.0)
    stats = run_ensemble(spec, 64, master_seed=13)
    for j in range(1, len(stats.grid)):
        assert abs(stats.coherence_mean[j].real) <= max(
            3 * stats.coherence_re_stderr[j], 1e-12)
        assert abs(stats.coherence_mean[j].imag) <= max(
            3 * stats.coherence_im_stderr[j], 1e-12)


def test_aggregate_requires_two_trajectories():
    rates, plan = pumped_setup()
    spec = EnsembleSpec(5, 5, rates, plan, horizon=0.5, grid_dt=0.25)
    with pytest.raises(ValueError):
        run_ensemble(spec, 1, master_seed=0)


def test_scatter_points_cap_and_bounds():
    rates, plan = pumped_setup()
    spec = EnsembleSpec(10, 10, rates, plan, horizon=2.0, grid_dt=0.05,
                        burn_in=0.0)
    records = run_trajectories(spec, 6, master_seed=21)
    pts = scatter_points(records, burn_in=0.1, cap=100)
    assert pts.shape == (100, 2)
    assert np.all(np.abs(pts[:, 0]) <= 1.0)
    assert np.all((pts[:, 1] >= 0.0) & (pts[:, 1] <= 1.0))
    few = scatter_points(records, burn_in=0.1, cap=10**9)
    assert len(few) == 6 * int(round(1.9 / 0.05))
    empty = scatter_points(records, burn_in=5.0)
    assert empty.shape == (0, 2)


def test_time_averaged_beta_uses_burn_in():
    rates, plan = pumped_setup()
    spec = EnsembleSpec(10, 10, rates, plan, horizon=1.0, grid_dt=0.25,
                        burn_in=0.5)
    records = run_trajectories(spec, 4, master_seed=3)
    stats = aggregate(records, burn_in=0.5)
    betas = np.stack([r.samples.beta for r in records])
    tail = records[0].samples.t > 0.5
    expected = betas[:, tail].mean(axis=1)
    assert stats.time_averaged_beta == pytest.approx(expected.mean())
    assert stats.time_averaged_beta_std == pytest.approx(
        expected.std(ddof=1))


def test_regular_schedule_through_kernel_path():
    # static rates plus a deterministic injection schedule exercises the
    # deadline handoff between compiled spans
    plan = PumpPlan("regular", injection_period1=0.3,
                    injection_period2=math.inf)
    rates = RateConfig(gamma=1.0)
    rec = run_trajectory(new_number_state(3, 3), rates, plan,
                         horizon=2.0, grid_dt=0.1, seed=8,
                         record_events=False)
    rec_py = None
    os.environ["TWINTRAP_PURE_PYTHON"] = "1"
    try:
        rec_py = run_trajectory(new_number_state(3, 3), rates, plan,
                                horizon=2.0, grid_dt=0.1, seed=8,
                                record_events=False)
    finally:
        del os.environ["TWINTRAP_PURE_PYTHON"]
    assert np.allclose(rec.samples.n1, rec_py.samples.n1, atol=1e-9)
    assert np.allclose(rec.samples.beta, rec_py.samples.beta, atol=1e-9)
