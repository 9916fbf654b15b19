"""Seeded trajectory ensembles on uniform sample grids.

A trajectory owns its state and random stream; ensembles fan
trajectories out over processes (capped by the TWINTRAP_THREADS
environment variable) and aggregate per-grid-point statistics.  Every
result is fully determined by the master seed, independent of worker
count and execution order.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dynamics import (TWO_PI, JumpChannel, JumpEvent, RateConfig,
                       _inverse_fringe_cdf, _solve_norm_decay, propagate,
                       sample_detection_phase)
from .observables import measure_state
from .pumping import PumpPlan, merge_schedules
from .twinstate import (DEFAULT_TRUNCATION, TwinTrapState,
                        apply_detection_operator, new_number_state, normalize,
                        truncate)

THREADS_ENV = "TWINTRAP_THREADS"
PURE_PYTHON_ENV = "TWINTRAP_PURE_PYTHON"

_MASK64 = (1 << 64) - 1
_UNIFORM_BLOCK = 8192
_kernel_probe: list = []


def _compiled_kernel():
    """Compiled trajectory loop, unless disabled or unavailable."""
    if os.environ.get(PURE_PYTHON_ENV, "") == "1":
        return None
    if not _kernel_probe:
        try:
            from ._kernels import event_loop
            _kernel_probe.append(event_loop)
        except ImportError:
            _kernel_probe.append(None)
    return _kernel_probe[0]


def derive_seed(master_seed: int, index: int) -> int:
    """Stable 64-bit per-trajectory seed from (master_seed, index).

    SplitMix64-style mixing: pure integer arithmetic, identical on
    every platform.
    """
    z = (master_seed + (index + 1) * 0x9E3779B97F4A7C15) & _MASK64
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & _MASK64
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & _MASK64
    z ^= z >> 31
    return z


@dataclass
class SampleSeries:
    """Uniform-grid observables samples of one trajectory."""

    t: np.ndarray
    n1: np.ndarray
    n2: np.ndarray
    n1_sq: np.ndarray
    n2_sq: np.ndarray
    f: np.ndarray
    beta: np.ndarray
    theta: np.ndarray
    sigma_n: np.ndarray
    sigma_phi: np.ndarray
    coherence: np.ndarray


@dataclass
class TrajectoryRecord:
    """Events and grid samples of a single trajectory.

    halted_at records the time from which no jump channel had positive
    rate any more (the state keeps evolving deterministically and keeps
    being sampled).
    """

    events: list[JumpEvent]
    samples: SampleSeries
    seed: int
    halted_at: float | None = None


def prepare_by_detections(state: TwinTrapState, m: int,
                          rng: np.random.Generator,
                          truncation: float = DEFAULT_TRUNCATION
                          ) -> TwinTrapState:
    """Apply m immediate detections with conditionally sampled phases.

    Builds the entangled relative-phase state that a burst of fast
    detections would leave, without advancing time.
    """
    for _ in range(m):
        phi = sample_detection_phase(state, rng.random())
        state, weight = apply_detection_operator(state, phi)
        if weight <= 0.0:
            raise ValueError("ran out of atoms during state preparation")
        state = truncate(state, truncation)
    return state


def _finish_jump(coeffs: np.ndarray, b1: int, b2: int, k_min: int,
                 threshold: float) -> tuple[TwinTrapState, float]:
    """Trim, renormalize and phase-canonicalize a raw post-jump vector.

    Single-pass equivalent of normalize + truncate on the applied jump
    result; returns the state and the squared pre-normalization weight.
    """
    mags = np.abs(coeffs)
    norm2 = float((mags * mags).sum())
    if norm2 <= 0.0:
        raise AssertionError("jump channel annihilated the state")
    # the floor also strips exact zeros at the ends (occupancy bounds)
    cut = max(threshold * math.sqrt(norm2), 5e-324)
    n = len(mags)
    lo = 0
    while lo < n and mags[lo] < cut:
        lo += 1
    hi = n
    while hi > lo and mags[hi - 1] < cut:
        hi -= 1
    c = coeffs[lo:hi]
    m = mags[lo:hi]
    c = c / math.sqrt(float((m * m).sum()))
    j = int(np.argmax(m))
    cj = c[j]
    mag = abs(cj)
    if mag > 0.0:
        c = c * (cj.conjugate() / mag)
    return TwinTrapState(b1, b2, k_min + lo, c), norm2


def _sample_row(c: np.ndarray, occ1: np.ndarray, occ2: np.ndarray,
                ntot: int) -> tuple:
    """Observables of an (possibly unnormalized) amplitude vector."""
    w = np.abs(c) ** 2
    s = float(w.sum())
    n1m = float(np.dot(w, occ1)) / s
    n2m = float(np.dot(w, occ2)) / s
    n1sq = float(np.dot(w, occ1 * occ1)) / s
    n2sq = float(np.dot(w, occ2 * occ2)) / s
    diff = occ1 - occ2
    var = float(np.dot(w, diff * diff)) / s - (n1m - n2m) ** 2
    sigma_n = math.sqrt(max(var, 0.0))
    f = (n1m - n2m) / ntot if ntot > 0 else 0.0
    if len(c) > 1:
        pair = np.conj(c[:-1]) * c[1:]
        coh = complex(np.sum(pair * np.sqrt(occ1[:-1] * (occ2[:-1] + 1.0))))
        coh /= s
        overlap = abs(complex(np.sum(pair))) / s
    else:
        coh = 0j
        overlap = 0.0
    beta = 2.0 * abs(coh) / ntot if ntot > 0 else 0.0
    theta = -math.atan2(coh.imag, coh.real) if beta > 0.0 else 0.0
    sigma_phi = math.sqrt(max(1.0 - overlap * overlap, 0.0))
    return (n1m, n2m, n1sq, n2sq, f, beta, theta, sigma_n, sigma_phi, coh)


def _store_row(series: SampleSeries, idx: int, row: tuple) -> None:
    (series.n1[idx], series.n2[idx], series.n1_sq[idx], series.n2_sq[idx],
     series.f[idx], series.beta[idx], series.theta[idx],
     series.sigma_n[idx], series.sigma_phi[idx],
     series.coherence[idx]) = row


def _run_compiled(kernel, state: TwinTrapState, rng: np.random.Generator,
                  schedule: list[tuple[float, int]], horizon: float,
                  times: np.ndarray, run_rates: RateConfig,
                  truncation: float, seed: int) -> TrajectoryRecord:
    """Drive the compiled event loop, refilling uniforms and applying
    scheduled injections between kernel calls."""
    n_grid = len(times)
    rows = np.zeros((9, n_grid))
    coh_row = np.zeros(n_grid, dtype=complex)
    gamma, kappa = run_rates.gamma, run_rates.kappa
    l1, l2 = run_rates.loss_coefficient(1), run_rates.loss_coefficient(2)
    g1, g2 = run_rates.gain_coefficient(1), run_rates.gain_coefficient(2)
    stim = run_rates.gain_model == "stimulated"
    c = state.coeffs
    b1, b2, k_min = state.base_n1, state.base_n2, state.k_min
    buf = rng.random(_UNIFORM_BLOCK)
    u_pos = 0
    t_cur = 0.0
    g = 0
    sched_pos = 0
    halted_at: float | None = None
    horizon_fill = math.nextafter(horizon, math.inf)
    while True:
        if sched_pos < len(schedule):
            t_sched, sched_trap = schedule[sched_pos]
        else:
            t_sched, sched_trap = math.inf, 0
        t_stop = min(t_sched, horizon)
        fill_limit = t_sched if t_sched <= horizon else horizon_fill
        c, b1, b2, k_min, t_cur, g, u_pos, done, halted = kernel(
            c, b1, b2, k_min, gamma, kappa, l1, l2, g1, g2, stim,
            buf, u_pos, t_cur, t_stop, fill_limit, times, g,
            rows, coh_row, truncation)
        if not done:
            buf = np.concatenate([buf[u_pos:], rng.random(_UNIFORM_BLOCK)])
            u_pos = 0
            continue
        if t_sched <= horizon:
            # propagate to the injection instant, add the atom, carry on
            decayed = propagate(TwinTrapState(b1, b2, k_min, c), run_rates,
                                t_sched - t_cur)
            kvec = k_min + np.arange(len(c))
            occ = (b1 - kvec if sched_trap == 1 else b2 + kvec).astype(float)
            nb1 = b1 + 1 if sched_trap == 1 else b1
            nb2 = b2 + 1 if sched_trap == 2 else b2
            new_state, _ = _finish_jump(decayed.coeffs * np.sqrt(occ + 1.0),
                                        nb1, nb2, k_min, truncation)
            c, b1, b2, k_min = (new_state.coeffs, new_state.base_n1,
                                new_state.base_n2, new_state.k_min)
            t_cur = t_sched
            sched_pos += 1
            continue
        if halted and sched_pos >= len(schedule):
            halted_at = t_cur
        break
    series = SampleSeries(times, rows[0], rows[1], rows[2], rows[3],
                          rows[4], rows[5], rows[6], rows[7], rows[8],
                          coh_row)
    return TrajectoryRecord([], series, seed, halted_at)


def run_trajectory(initial: TwinTrapState, rates: RateConfig,
                   plan: PumpPlan | None, horizon: float, grid_dt: float,
                   seed: int, *, truncation: float = DEFAULT_TRUNCATION,
                   initial_detections: int = 0,
                   record_events: bool = True) -> TrajectoryRecord:
    """Simulate one trajectory up to the horizon.

    Stochastic jumps are interleaved with any scheduled regular
    injections from the plan (a scheduled event preempts the pending
    waiting-time draw, which is then redrawn; the exponential clocks
    are memoryless so this is exact).  Observables are sampled on the
    uniform grid from the deterministically propagated state, i.e. a
    grid point between jumps sees the decayed state at that instant.

    The loop exploits two structural shortcuts: when the per-component
    decay rates do not depend on k (symmetric loss/gain coefficients)
    the waiting time is a single logarithm, and when additionally
    kappa = 0 the state between jumps differs from the post-jump state
    only by a global factor, so samples and channel weights can reuse
    it directly.
    """
    if horizon <= 0 or grid_dt <= 0:
        raise ValueError("horizon and grid_dt must be positive")
    rng = np.random.default_rng(seed)
    run_rates = plan.configure_rates(rates) if plan is not None else rates

    state = normalize(initial)
    if initial_detections:
        state = prepare_by_detections(state, initial_detections, rng,
                                      truncation)

    schedule: list[tuple[float, int]] = []
    if plan is not None and plan.mode == "regular":
        per_trap = {}
        if math.isfinite(plan.injection_period1) and plan.injection_period1 > 0:
            per_trap[1] = 1.0 / plan.injection_period1
        if math.isfinite(plan.injection_period2) and plan.injection_period2 > 0:
            per_trap[2] = 1.0 / plan.injection_period2
        schedule = merge_schedules(per_trap, horizon)
    sched_pos = 0

    n_grid = int(math.floor(horizon / grid_dt * (1.0 + 1e-12))) + 1
    times = np.arange(n_grid) * grid_dt
    empty = np.zeros(n_grid)
    series = SampleSeries(times, empty.copy(), empty.copy(), empty.copy(),
                          empty.copy(), empty.copy(), empty.copy(),
                          empty.copy(), empty.copy(), empty.copy(),
                          np.zeros(n_grid, dtype=complex))
    events: list[JumpEvent] = []
    halted_at: float | None = None
    t_cur = 0.0
    g = 0

    gamma, kappa = run_rates.gamma, run_rates.kappa
    l1, l2 = run_rates.loss_coefficient(1), run_rates.loss_coefficient(2)
    g1, g2 = run_rates.gain_coefficient(1), run_rates.gain_coefficient(2)
    stim = run_rates.gain_model == "stimulated"
    # k-dependence of Gamma_k; zero means a single exponential clock
    slope = (l2 - l1) + ((g2 - g1) if stim else 0.0)
    static = slope == 0.0 and kappa == 0.0

    kernel = _compiled_kernel() if not record_events else None
    if kernel is not None:
        return _run_compiled(kernel, state, rng, schedule, horizon, times,
                             run_rates, truncation, seed)

    interval_row: tuple | None = None

    while True:
        c = state.coeffs
        b1, b2 = state.base_n1, state.base_n2
        ntot = b1 + b2
        kvec = state.k_min + np.arange(len(c))
        occ1 = occ2 = gam_vec = phase_rate = None

        def geometry():
            nonlocal occ1, occ2, gam_vec, phase_rate
            if occ1 is not None:
                return
            occ1 = (b1 - kvec).astype(float)
            occ2 = (b2 + kvec).astype(float)
            if slope != 0.0:
                gam_vec = gamma * ntot + l1 * occ1 + l2 * occ2
                if stim:
                    gam_vec = gam_vec + g1 * (occ1 + 1.0) + g2 * (occ2 + 1.0)
                else:
                    gam_vec = gam_vec + (g1 + g2)
            if kappa != 0.0:
                phase_rate = 0.5 * kappa * (occ1 * occ1 + occ2 * occ2)

        def decay_to(dt: float) -> np.ndarray:
            geometry()
            rate = gam0 if slope == 0.0 else gam_vec
            out = c * np.exp(-0.5 * dt * rate)
            if kappa != 0.0:
                out = out * np.exp(-1j * np.mod(phase_rate * dt, TWO_PI))
            return out

        w = np.abs(c) ** 2
        r = 1.0 - rng.random()
        if slope == 0.0:
            gam0 = gamma * ntot + l1 * b1 + l2 * b2
            gam0 += g1 * (b1 + 1.0) + g2 * (b2 + 1.0) if stim else g1 + g2
            wait = -math.log(r) / gam0 if gam0 > 0.0 else math.inf
        else:
            gam0 = 0.0
            geometry()
            wait = _solve_norm_decay(w, gam_vec, r)

        t_jump = t_cur + wait if math.isfinite(wait) else math.inf
        if sched_pos < len(schedule):
            t_sched, sched_trap = schedule[sched_pos]
        else:
            t_sched, sched_trap = math.inf, 0
        scheduled = t_sched < t_jump
        t_event = t_sched if scheduled else t_jump

        if g < n_grid and times[g] < t_event:
            if static:
                if interval_row is None:
                    geometry()
                    interval_row = _sample_row(c, occ1, occ2, ntot)
                while g < n_grid and times[g] < t_event:
                    _store_row(series, g, interval_row)
                    g += 1
            else:
                geometry()
                while g < n_grid and times[g] < t_event:
                    _store_row(series, g, _sample_row(
                        decay_to(times[g] - t_cur), occ1, occ2, ntot))
                    g += 1

        if t_event > horizon:
            if not math.isfinite(t_event):
                halted_at = t_cur
            break

        # state at the event instant (a pure ray; normalization deferred)
        if static:
            work = state
            w_ev, s_ev = w, 1.0
        else:
            work = TwinTrapState(b1, b2, state.k_min,
                                 decay_to(t_event - t_cur))
            w_ev = np.abs(work.coeffs) ** 2
            s_ev = float(w_ev.sum())

        geometry()
        cw = work.coeffs
        km0 = state.k_min
        if scheduled:
            sched_pos += 1
            channel = JumpChannel("gain", trap=sched_trap)
            if sched_trap == 1:
                state, _ = _finish_jump(cw * np.sqrt(occ1 + 1.0),
                                        b1 + 1, b2, km0, truncation)
            else:
                state, _ = _finish_jump(cw * np.sqrt(occ2 + 1.0),
                                        b1, b2 + 1, km0, truncation)
        else:
            km = float(np.dot(w_ev, kvec))
            s1 = b1 * s_ev - km
            s2 = b2 * s_ev + km
            rate_det = gamma * ntot * s_ev
            rate_l1, rate_l2 = l1 * s1, l2 * s2
            if stim:
                rate_g1, rate_g2 = g1 * (s1 + s_ev), g2 * (s2 + s_ev)
            else:
                rate_g1, rate_g2 = g1 * s_ev, g2 * s_ev
            x = rng.random() * (rate_det + rate_l1 + rate_l2
                                + rate_g1 + rate_g2)
            if x < rate_det:
                pair = np.conj(cw[:-1]) * cw[1:]
                coh = complex((pair * np.sqrt(occ1[:-1]
                                              * (occ2[:-1] + 1.0))).sum())
                beta = 2.0 * abs(coh) / (ntot * s_ev)
                theta = (-math.atan2(coh.imag, coh.real) if beta > 0.0
                         else 0.0)
                phi = _inverse_fringe_cdf(beta, theta, rng.random())
                channel = JumpChannel("detect", phi=phi)
                new = np.empty(len(cw) + 1, dtype=complex)
                new[0] = 0.0
                new[1:] = np.sqrt(occ1) * cw
                new[:-1] += np.exp(-1j * phi) * np.sqrt(occ2) * cw
                state, _ = _finish_jump(new, b1 - 1, b2, km0 - 1, truncation)
            elif x < rate_det + rate_l1:
                channel = JumpChannel("loss", trap=1)
                state, _ = _finish_jump(cw * np.sqrt(occ1), b1 - 1, b2,
                                        km0, truncation)
            elif x < rate_det + rate_l1 + rate_l2:
                channel = JumpChannel("loss", trap=2)
                state, _ = _finish_jump(cw * np.sqrt(occ2), b1, b2 - 1,
                                        km0, truncation)
            elif x < rate_det + rate_l1 + rate_l2 + rate_g1:
                channel = JumpChannel("gain", trap=1)
                state, _ = _finish_jump(cw * np.sqrt(occ1 + 1.0),
                                        b1 + 1, b2, km0, truncation)
            else:
                channel = JumpChannel("gain", trap=2)
                state, _ = _finish_jump(cw * np.sqrt(occ2 + 1.0),
                                        b1, b2 + 1, km0, truncation)
        interval_row = None
        if record_events:
            events.append(JumpEvent(t_event, channel,
                                    measure_state(normalize(work))))
        t_cur = t_event

    return TrajectoryRecord(events, series, seed, halted_at)


@dataclass
class EnsembleSpec:
    """Everything one trajectory needs except its seed."""

    initial_n1: int
    initial_n2: int
    rates: RateConfig
    plan: PumpPlan | None
    horizon: float
    grid_dt: float
    burn_in: float = 0.0
    truncation: float = DEFAULT_TRUNCATION
    initial_detections: int = 0
    record_events: bool = False


def _run_indexed(args: tuple[EnsembleSpec, int]) -> TrajectoryRecord:
    spec, seed = args
    return run_trajectory(new_number_state(spec.initial_n1, spec.initial_n2),
                          spec.rates, spec.plan, spec.horizon, spec.grid_dt,
                          seed, truncation=spec.truncation,
                          initial_detections=spec.initial_detections,
                          record_events=spec.record_events)


def resolve_workers(n_jobs: int) -> int:
    """Worker count from TWINTRAP_THREADS (0 or unset = auto)."""
    raw = os.environ.get(THREADS_ENV, "0")
    try:
        cap = int(raw)
    except ValueError as exc:
        raise ValueError(f"{THREADS_ENV} must be an integer") from exc
    if cap < 0:
        raise ValueError(f"{THREADS_ENV} must be nonnegative")
    workers = cap if cap > 0 else (os.cpu_count() or 1)
    return max(1, min(workers, n_jobs))


def run_trajectories(spec: EnsembleSpec, n_traj: int,
                     master_seed: int) -> list[TrajectoryRecord]:
    """Run n_traj seeded trajectories, in parallel when allowed.

    Trajectory i gets seed derive_seed(master_seed, i); the returned
    list is ordered by index, so results never depend on scheduling.
    """
    args = [(spec, derive_seed(master_seed, i)) for i in range(n_traj)]
    workers = resolve_workers(n_traj)
    if workers <= 1 or n_traj < 4:
        return [_run_indexed(a) for a in args]
    chunk = max(1, n_traj // (4 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_indexed, args, chunksize=chunk))


@dataclass
class EnsembleStats:
    """Per-grid-point ensemble statistics.

    Standard errors are sample standard deviations divided by the
    square root of the trajectory count.  uncertainty_product_rms is
    the root mean square of sigma_n * sigma_phi across trajectories.
    time_averaged_beta averages each trajectory's post-burn-in mean
    visibility; its spread across trajectories is reported as a
    standard deviation.
    """

    grid: np.ndarray
    n_traj: int
    burn_in: float
    beta_mean: np.ndarray
    beta_stderr: np.ndarray
    n1_mean: np.ndarray
    n1_stderr: np.ndarray
    n2_mean: np.ndarray
    n2_stderr: np.ndarray
    n1_sq_mean: np.ndarray
    n1_sq_stderr: np.ndarray
    n2_sq_mean: np.ndarray
    n2_sq_stderr: np.ndarray
    f_mean: np.ndarray
    f_stderr: np.ndarray
    sigma_n_mean: np.ndarray
    sigma_n_stderr: np.ndarray
    sigma_phi_mean: np.ndarray
    sigma_phi_stderr: np.ndarray
    uncertainty_product_rms: np.ndarray
    coherence_mean: np.ndarray
    coherence_re_stderr: np.ndarray
    coherence_im_stderr: np.ndarray
    time_averaged_beta: float
    time_averaged_beta_std: float


def _mean_stderr(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = matrix.shape[0]
    mean = matrix.mean(axis=0)
    if n > 1:
        err = matrix.std(axis=0, ddof=1) / math.sqrt(n)
    else:
        err = np.zeros_like(mean)
    return mean, err


def aggregate(records: list[TrajectoryRecord],
              burn_in: float) -> EnsembleStats:
    """Reduce trajectory records to EnsembleStats on their shared grid."""
    if len(records) < 2:
        raise ValueError("need at least 2 trajectories")
    grid = records[0].samples.t
    stack = {name: np.stack([getattr(r.samples, name) for r in records])
             for name in ("beta", "n1", "n2", "n1_sq", "n2_sq", "f",
                          "sigma_n", "sigma_phi")}
    coh = np.stack([r.samples.coherence for r in records])
    n = len(records)
    means, errs = {}, {}
    for name, mat in stack.items():
        means[name], errs[name] = _mean_stderr(mat)
    product = stack["sigma_n"] * stack["sigma_phi"]
    product_rms = np.sqrt(np.mean(product ** 2, axis=0))
    tail = grid > burn_in
    if np.any(tail):
        per_traj = stack["beta"][:, tail].mean(axis=1)
        tavg = float(per_traj.mean())
        tavg_std = float(per_traj.std(ddof=1)) if n > 1 else 0.0
    else:
        tavg, tavg_std = math.nan, math.nan
    coh_mean = coh.mean(axis=0)
    coh_re_err = coh.real.std(axis=0, ddof=1) / math.sqrt(n)
    coh_im_err = coh.imag.std(axis=0, ddof=1) / math.sqrt(n)
    return EnsembleStats(
        grid=grid, n_traj=n, burn_in=burn_in,
        beta_mean=means["beta"], beta_stderr=errs["beta"],
        n1_mean=means["n1"], n1_stderr=errs["n1"],
        n2_mean=means["n2"], n2_stderr=errs["n2"],
        n1_sq_mean=means["n1_sq"], n1_sq_stderr=errs["n1_sq"],
        n2_sq_mean=means["n2_sq"], n2_sq_stderr=errs["n2_sq"],
        f_mean=means["f"], f_stderr=errs["f"],
        sigma_n_mean=means["sigma_n"], sigma_n_stderr=errs["sigma_n"],
        sigma_phi_mean=means["sigma_phi"],
        sigma_phi_stderr=errs["sigma_phi"],
        uncertainty_product_rms=product_rms,
        coherence_mean=coh_mean, coherence_re_stderr=coh_re_err,
        coherence_im_stderr=coh_im_err,
        time_averaged_beta=tavg, time_averaged_beta_std=tavg_std)


def run_ensemble(spec: EnsembleSpec, n_traj: int,
                 master_seed: int) -> EnsembleStats:
    """Run a seeded ensemble and aggregate it (see aggregate)."""
    if n_traj < 2:
        raise ValueError("need at least 2 trajectories")
    return aggregate(run_trajectories(spec, n_traj, master_seed),
                     spec.burn_in)


def scatter_points(records: list[TrajectoryRecord], burn_in: float,
                   cap: int = 10000) -> np.ndarray:
    """Post-burn-in (f, beta) sample pairs, capped by uniform subsampling.

    Flattens all grid samples with t > burn_in across trajectories and,
    when more than cap points are available, keeps an evenly strided
    subset of exactly cap points.
    """
    fs, bs = [], []
    for rec in records:
        tail = rec.samples.t > burn_in
        fs.append(rec.samples.f[tail])
        bs.append(rec.samples.beta[tail])
    f = np.concatenate(fs) if fs else np.zeros(0)
    b = np.concatenate(bs) if bs else np.zeros(0)
    total = len(f)
    if total > cap:
        idx = (np.arange(cap) * total) // cap
        f, b = f[idx], b[idx]
    return np.column_stack([f, b])
