"""Command-line scenarios and flat key=value configuration.

Scenario presets are plain config text (see PRESETS) so users can copy
them into a file, edit, and rerun via ``twintrap run --config FILE``.
All outputs are CSV with a header row and full round-trippable decimal
formatting; collapse fits are written as a JSON sidecar.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from .analytics import fit_collapse_revival, mean_visibility_exact
from .dynamics import RateConfig
from .ensemble import (EnsembleSpec, derive_seed, run_ensemble,
                       run_trajectories, run_trajectory, scatter_points)
from .oracle import integrate, expectation, number_state_density
from .pumping import (PumpPlan, one_way_rate, one_way_trap_rates,
                      two_way_rate)
from .twinstate import new_number_state

SCENARIOS = ("fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8",
             "oracle_check")
PUMP_MODES = ("none", "one_way", "two_way", "regular")
GAIN_MODELS = ("stimulated", "constant")
DETECTION_MEASURES = ("normalized", "bare")


class ConfigError(ValueError):
    pass


@dataclass
class ScenarioConfig:
    scenario: str = "fig2"
    n1: int = 100
    n2: int = 100
    gamma: float = 1.0
    kappa: float = 0.0
    nu1: float = 0.0
    nu2: float = 0.0
    chi1_in: float = 0.0
    chi1_out: float = 0.0
    chi2_in: float = 0.0
    chi2_out: float = 0.0
    n_bath1: float = 1e6
    n_bath2: float = 1e6
    pump_mode: str = "none"
    pump_n1: float | None = None
    pump_n2: float | None = None
    horizon: float = 10.0
    grid_dt: float = 0.01
    n_traj: int = 200
    master_seed: int = 1
    truncation: float = 1e-12
    burn_in: float | None = None
    initial_detections: int = 0
    gain_model: str = "stimulated"
    detection_measure: str = "normalized"
    n_max: int = 6
    scatter_cap: int = 10000
    kappa_values: tuple[float, ...] = ()
    p_values: tuple[float, ...] = (1.0, 2.0, 4.0)
    out: str = "."

    def effective_burn_in(self) -> float:
        """Configured burn-in, or the regime-dependent default."""
        if self.burn_in is not None:
            return self.burn_in
        if self.horizon > 50.0:
            return self.horizon / 2.0
        return min(5.0, self.horizon / 2.0)


_INT_KEYS = {"n1", "n2", "n_traj", "master_seed", "initial_detections",
             "n_max", "scatter_cap"}
_FLOAT_KEYS = {"gamma", "kappa", "nu1", "nu2", "chi1_in", "chi1_out",
               "chi2_in", "chi2_out", "n_bath1", "n_bath2", "pump_n1",
               "pump_n2", "horizon", "grid_dt", "truncation", "burn_in"}
_LIST_KEYS = {"kappa_values", "p_values"}
_STR_KEYS = {"scenario", "pump_mode", "gain_model", "detection_measure",
             "out"}
_KNOWN_KEYS = _INT_KEYS | _FLOAT_KEYS | _LIST_KEYS | _STR_KEYS


def parse_pairs(text: str) -> dict[str, object]:
    """Parse key = value lines into typed values; '#' starts a comment.

    Later occurrences of a key override earlier ones, which lets preset
    text be extended by user config and command-line overrides.
    """
    out: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', "
                              f"got {raw.strip()!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            if key in _INT_KEYS:
                out[key] = int(value)
            elif key in _FLOAT_KEYS:
                out[key] = float(value)
            elif key in _LIST_KEYS:
                out[key] = tuple(float(v) for v in value.split(",") if
                                 v.strip())
            else:
                out[key] = value
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value {value!r} for "
                              f"{key!r}") from exc
    return out


def _check_ranges(cfg: ScenarioConfig) -> None:
    if cfg.scenario not in SCENARIOS:
        raise ConfigError(f"scenario must be one of {SCENARIOS}, "
                          f"got {cfg.scenario!r}")
    if cfg.pump_mode not in PUMP_MODES:
        raise ConfigError(f"pump_mode must be one of {PUMP_MODES}")
    if cfg.gain_model not in GAIN_MODELS:
        raise ConfigError(f"gain_model must be one of {GAIN_MODELS}")
    if cfg.detection_measure not in DETECTION_MEASURES:
        raise ConfigError(f"detection_measure must be one of "
                          f"{DETECTION_MEASURES}")
    for name in ("n1", "n2", "gamma", "kappa", "nu1", "nu2", "chi1_in",
                 "chi1_out", "chi2_in", "chi2_out", "n_bath1", "n_bath2",
                 "truncation", "initial_detections"):
        if getattr(cfg, name) < 0:
            raise ConfigError(f"{name} must be nonnegative")
    for name in ("horizon", "grid_dt"):
        if getattr(cfg, name) <= 0:
            raise ConfigError(f"{name} must be positive")
    for name in ("n_traj", "n_max", "scatter_cap"):
        if getattr(cfg, name) < 1:
            raise ConfigError(f"{name} must be at least 1")
    if cfg.burn_in is not None and cfg.burn_in < 0:
        raise ConfigError("burn_in must be nonnegative")
    for name in ("pump_n1", "pump_n2"):
        val = getattr(cfg, name)
        if val is not None and val < 0:
            raise ConfigError(f"{name} must be nonnegative")


def config_from_pairs(pairs: dict[str, object]) -> ScenarioConfig:
    cfg = ScenarioConfig(**pairs)
    _check_ranges(cfg)
    return cfg


def parse_config(text: str) -> ScenarioConfig:
    """Parse one config text into a validated ScenarioConfig."""
    return config_from_pairs(parse_pairs(text))


def build_rates(cfg: ScenarioConfig) -> RateConfig:
    return RateConfig(gamma=cfg.gamma, kappa=cfg.kappa, nu1=cfg.nu1,
                      nu2=cfg.nu2, chi1_in=cfg.chi1_in,
                      chi1_out=cfg.chi1_out, chi2_in=cfg.chi2_in,
                      chi2_out=cfg.chi2_out, n_bath1=cfg.n_bath1,
                      n_bath2=cfg.n_bath2, gain_model=cfg.gain_model)


def build_plan(cfg: ScenarioConfig) -> PumpPlan | None:
    """Pump plan for the configured mode and target occupancies."""
    if cfg.pump_mode == "none":
        return None
    t1 = cfg.pump_n1 if cfg.pump_n1 is not None else float(cfg.n1)
    t2 = cfg.pump_n2 if cfg.pump_n2 is not None else float(cfg.n2)
    if cfg.pump_mode == "one_way":
        chi = one_way_rate(t1, t2, cfg.gamma, cfg.nu1, cfg.nu2,
                           cfg.n_bath1, cfg.n_bath2)
        return PumpPlan("one_way", chi)
    if cfg.pump_mode == "two_way":
        chi = two_way_rate(t1, t2, cfg.gamma, cfg.nu1, cfg.nu2,
                           cfg.n_bath1, cfg.n_bath2)
        return PumpPlan("two_way", chi)
    rate1 = (cfg.gamma + cfg.nu1) * t1
    rate2 = (cfg.gamma + cfg.nu2) * t2
    return PumpPlan("regular",
                    injection_period1=1.0 / rate1 if rate1 > 0 else math.inf,
                    injection_period2=1.0 / rate2 if rate2 > 0 else math.inf)


def build_spec(cfg: ScenarioConfig, *, record_events: bool = False,
               n1: int | None = None, n2: int | None = None,
               plan: PumpPlan | None = None) -> EnsembleSpec:
    return EnsembleSpec(
        initial_n1=n1 if n1 is not None else cfg.n1,
        initial_n2=n2 if n2 is not None else cfg.n2,
        rates=build_rates(cfg),
        plan=plan if plan is not None else build_plan(cfg),
        horizon=cfg.horizon, grid_dt=cfg.grid_dt,
        burn_in=cfg.effective_burn_in(), truncation=cfg.truncation,
        initial_detections=cfg.initial_detections,
        record_events=record_events)


def _fmt(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return repr(float(value))


def write_csv(path: str, header: list[str], rows) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) if not isinstance(v, str) else v
                              for v in row) + "\n")
    os.replace(tmp, path)


def _single_trajectory(cfg: ScenarioConfig):
    spec = build_spec(cfg)
    return run_trajectory(new_number_state(spec.initial_n1, spec.initial_n2),
                          spec.rates, spec.plan, spec.horizon, spec.grid_dt,
                          derive_seed(cfg.master_seed, 0),
                          truncation=spec.truncation,
                          initial_detections=spec.initial_detections,
                          record_events=False)


def _run_fig2(cfg: ScenarioConfig, outdir: str) -> list[str]:
    rec = _single_trajectory(cfg)
    s = rec.samples
    path = os.path.join(outdir, f"{cfg.scenario}.csv")
    write_csv(path, ["t", "beta", "n1", "n2"],
              zip(s.t, s.beta, s.n1, s.n2))
    return [path]


def _run_fig3(cfg: ScenarioConfig, outdir: str) -> list[str]:
    spec = build_spec(cfg)
    records = run_trajectories(spec, cfg.n_traj, cfg.master_seed)
    pts = scatter_points(records, spec.burn_in, cfg.scatter_cap)
    path = os.path.join(outdir, f"{cfg.scenario}.csv")
    envelope = np.sqrt(1.0 - np.clip(pts[:, 0], -1.0, 1.0) ** 2)
    write_csv(path, ["f", "beta", "beta_envelope"],
              zip(pts[:, 0], pts[:, 1], envelope))
    return [path]


def _run_fig4(cfg: ScenarioConfig, outdir: str) -> list[str]:
    total = cfg.n1 + cfg.n2
    rows = []
    for idx, p in enumerate(cfg.p_values):
        n1_t = round(total * p / (1.0 + p))
        n2_t = total - n1_t
        # unequal mean occupancies need per-trap pump balance
        chi1, chi2 = one_way_trap_rates(n1_t, n2_t, cfg.gamma, cfg.nu1,
                                        cfg.nu2, cfg.n_bath1, cfg.n_bath2)
        sub = ScenarioConfig(**{**cfg.__dict__, "n1": n1_t, "n2": n2_t,
                                "pump_mode": "none", "chi1_in": chi1,
                                "chi2_in": chi2, "chi1_out": 0.0,
                                "chi2_out": 0.0})
        spec = build_spec(sub)
        stats = run_ensemble(spec, cfg.n_traj, cfg.master_seed + idx)
        stderr = stats.time_averaged_beta_std / math.sqrt(stats.n_traj)
        rows.append((p, stats.time_averaged_beta, stderr,
                     mean_visibility_exact(n1_t, n2_t)))
    path = os.path.join(outdir, "fig4.csv")
    write_csv(path, ["p", "beta_mean", "stderr", "analytic"], rows)
    return [path]


def _run_fig5(cfg: ScenarioConfig, outdir: str) -> list[str]:
    spec = build_spec(cfg)
    stats = run_ensemble(spec, cfg.n_traj, cfg.master_seed)
    path = os.path.join(outdir, "fig5.csv")
    write_csv(path, ["t", "beta_mean", "stderr"],
              zip(stats.grid, stats.beta_mean, stats.beta_stderr))
    return [path]


def _run_kappa_sweep(cfg: ScenarioConfig, outdir: str) -> list[str]:
    kappas = cfg.kappa_values or (0.0, 0.125, 0.25, 0.5, 1.0)
    short_regime = cfg.scenario == "fig6"
    rows = []
    for idx, kappa in enumerate(kappas):
        sub = ScenarioConfig(**{**cfg.__dict__, "kappa": kappa})
        spec = build_spec(sub)
        stats = run_ensemble(spec, cfg.n_traj, cfg.master_seed + idx)
        if short_regime:
            rows.append((kappa, stats.beta_mean[-1], stats.sigma_n_mean[-1],
                         stats.sigma_phi_mean[-1],
                         stats.uncertainty_product_rms[-1]))
        else:
            tail = stats.grid > spec.burn_in
            rows.append((kappa, stats.time_averaged_beta,
                         float(stats.sigma_n_mean[tail].mean()),
                         float(stats.sigma_phi_mean[tail].mean()),
                         float(stats.uncertainty_product_rms[tail].mean())))
    path = os.path.join(outdir, f"{cfg.scenario}.csv")
    write_csv(path, ["kappa", "beta_mean", "sigma_n", "sigma_phi",
                     "product_rms"], rows)
    return [path]


def _run_fig8(cfg: ScenarioConfig, outdir: str) -> list[str]:
    rec = _single_trajectory(cfg)
    s = rec.samples
    path = os.path.join(outdir, "fig8.csv")
    write_csv(path, ["t", "beta", "n1", "n2", "sigma_n"],
              zip(s.t, s.beta, s.n1, s.n2, s.sigma_n))
    fit = fit_collapse_revival(s.t, s.beta, cfg.kappa)
    sidecar = os.path.join(outdir, "fig8_fit.json")
    payload = {
        "kappa": cfg.kappa,
        "peak_times": fit.peak_times.tolist(),
        "peak_heights": fit.peak_heights.tolist(),
        "widths": fit.widths.tolist(),
        "sigma_a_estimates": fit.sigma_a_estimates.tolist(),
        "revival_period": fit.revival_period,
    }
    tmp = sidecar + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(payload, fh, indent=2)
    os.replace(tmp, sidecar)
    return [path, sidecar]


def _run_oracle_check(cfg: ScenarioConfig, outdir: str) -> list[str]:
    spec = build_spec(cfg)
    stats = run_ensemble(spec, cfg.n_traj, cfg.master_seed)
    rho0 = number_state_density(cfg.n1, cfg.n2, cfg.n_max)
    rhos = integrate(rho0, spec.rates, stats.grid,
                     detection_measure=cfg.detection_measure,
                     boundary_tol=1e-3)
    rows = []
    pairs = [("n1", stats.n1_mean, stats.n1_stderr),
             ("n2", stats.n2_mean, stats.n2_stderr),
             ("n1_sq", stats.n1_sq_mean, stats.n1_sq_stderr),
             ("n2_sq", stats.n2_sq_mean, stats.n2_sq_stderr)]
    for i, t in enumerate(stats.grid):
        for name, mean, err in pairs:
            rows.append((t, name, mean[i], err[i],
                         expectation(rhos[i], name).real))
    path = os.path.join(outdir, "oracle_check.csv")
    write_csv(path, ["t", "observable", "mcwf_mean", "mcwf_stderr",
                     "oracle_value"], rows)
    return [path]


_RECIPES = {
    "fig2": _run_fig2,
    "fig3": _run_fig3,
    "fig4": _run_fig4,
    "fig5": _run_fig5,
    "fig6": _run_kappa_sweep,
    "fig7": _run_kappa_sweep,
    "fig8": _run_fig8,
    "oracle_check": _run_oracle_check,
}


def run_scenario(cfg: ScenarioConfig, outdir: str | None = None) -> list[str]:
    """Run the configured scenario; returns the written file paths.

    Any error removes files already written by this invocation, so a
    nonzero exit never leaves partial output behind.
    """
    outdir = outdir if outdir is not None else cfg.out
    os.makedirs(outdir, exist_ok=True)
    recipe = _RECIPES[cfg.scenario]
    try:
        written = recipe(cfg, outdir)
    except Exception:
        for path in _recipe_outputs(cfg.scenario, outdir):
            if os.path.exists(path):
                os.unlink(path)
        raise
    return written


def _recipe_outputs(scenario: str, outdir: str) -> list[str]:
    paths = [os.path.join(outdir, f"{scenario}.csv")]
    if scenario == "fig8":
        paths.append(os.path.join(outdir, "fig8_fit.json"))
    return paths


PRESETS: dict[str, str] = {
    "fig2a": """\
scenario = fig2
pump_mode = two_way
n1 = 100
n2 = 100
kappa = 0
horizon = 8
grid_dt = 0.01
""",
    "fig2b": """\
scenario = fig2
pump_mode = one_way
n1 = 100
n2 = 100
kappa = 0
horizon = 8
grid_dt = 0.01
""",
    "fig2c": """\
scenario = fig2
pump_mode = regular
n1 = 100
n2 = 100
kappa = 0.5
horizon = 8
grid_dt = 0.01
""",
    "fig3a": """\
scenario = fig3
pump_mode = two_way
n1 = 100
n2 = 100
kappa = 0
horizon = 42
grid_dt = 0.05
burn_in = 2
n_traj = 13
""",
    "fig3b": """\
scenario = fig3
pump_mode = one_way
n1 = 100
n2 = 100
kappa = 0
horizon = 42
grid_dt = 0.05
burn_in = 2
n_traj = 13
""",
    "fig4": """\
scenario = fig4
pump_mode = one_way
n1 = 100
n2 = 100
kappa = 0
horizon = 400
grid_dt = 0.05
burn_in = 200
n_traj = 24
p_values = 1, 2, 4
""",
    "fig5": """\
scenario = fig5
pump_mode = one_way
n1 = 100
n2 = 100
kappa = 0
horizon = 400
grid_dt = 0.05
burn_in = 200
n_traj = 50
""",
    "fig6": """\
scenario = fig6
pump_mode = one_way
n1 = 100
n2 = 100
horizon = 4
grid_dt = 0.02
n_traj = 200
kappa_values = 0, 0.125, 0.25, 0.5, 1.0
""",
    "fig7": """\
scenario = fig7
pump_mode = one_way
n1 = 100
n2 = 100
horizon = 400
grid_dt = 0.05
burn_in = 200
n_traj = 24
kappa_values = 0, 0.25, 0.5, 1.0
""",
    "fig8": """\
scenario = fig8
n1 = 500
n2 = 500
initial_detections = 200
kappa = 0.25
gamma = 0
nu1 = 1
nu2 = 1
pump_mode = one_way
pump_n1 = 400
pump_n2 = 400
horizon = 60
grid_dt = 0.02
""",
    "fig8_nopump": """\
scenario = fig8
n1 = 500
n2 = 500
initial_detections = 200
kappa = 0.25
gamma = 0
pump_mode = none
horizon = 60
grid_dt = 0.02
""",
    "oracle-check": """\
scenario = oracle_check
n1 = 2
n2 = 2
gamma = 1
kappa = 0.3
n_bath1 = 1
n_bath2 = 1
chi1_in = 0.2
chi2_in = 0.2
n_max = 6
horizon = 3
grid_dt = 0.3
n_traj = 500
burn_in = 0
""",
}


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="twintrap",
        description="Trajectory simulations of pumped twin-trap condensates")
    parser.add_argument("command",
                        help="scenario preset (%s), 'run', or 'oracle-check'"
                             % ", ".join(sorted(PRESETS)))
    parser.add_argument("--config", help="key = value config file")
    parser.add_argument("--seed", type=int, help="override master_seed")
    parser.add_argument("--traj", type=int, help="override n_traj")
    parser.add_argument("--out", help="output directory")
    args = parser.parse_args(argv)

    try:
        pairs: dict[str, object] = {}
        if args.command == "run":
            if not args.config:
                raise ConfigError("'run' requires --config FILE")
        elif args.command in PRESETS:
            pairs.update(parse_pairs(PRESETS[args.command]))
        else:
            raise ConfigError(
                f"unknown command {args.command!r}; expected 'run', "
                f"'oracle-check' or one of {', '.join(sorted(PRESETS))}")
        if args.config:
            with open(args.config) as fh:
                pairs.update(parse_pairs(fh.read()))
        if args.seed is not None:
            pairs["master_seed"] = args.seed
        if args.traj is not None:
            pairs["n_traj"] = args.traj
        cfg = config_from_pairs(pairs)
        written = run_scenario(cfg, args.out)
    except Exception as exc:  # noqa: BLE001 - single reporting point
        print(f"twintrap: error: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
