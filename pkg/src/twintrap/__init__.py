"""Quantum-jump trajectory simulator for pumped twin-trap condensates."""

from .analytics import (CollapseFit, a_coefficients, collapse_envelope,
                        fit_collapse_revival, mean_visibility_asymptotic,
                        mean_visibility_exact, timescales,
                        visibility_from_occupancy)
from .dynamics import (JumpChannel, JumpEvent, RateConfig,
                       per_component_decay_rate, propagate,
                       sample_detection_phase, sample_waiting_time,
                       select_channel, step_trajectory)
from .ensemble import (EnsembleSpec, EnsembleStats, TrajectoryRecord,
                       run_ensemble, run_trajectories, run_trajectory,
                       scatter_points)
from .observables import (StateObservables, conditional_fringe,
                          cross_coherence, measure_state, number_stats,
                          phase_width)
from .oracle import (DensityMatrix, expectation, integrate, liouvillian_rhs,
                     number_state_density)
from .pumping import (PumpPlan, one_way_rate, regular_injection_times,
                      two_way_rate)
from .twinstate import (TwinTrapState, apply_annihilation, apply_creation,
                        apply_detection_operator, new_number_state, normalize,
                        truncate)

__all__ = [
    "CollapseFit", "DensityMatrix", "EnsembleSpec", "EnsembleStats",
    "JumpChannel", "JumpEvent", "PumpPlan", "RateConfig", "StateObservables",
    "TrajectoryRecord", "TwinTrapState", "a_coefficients",
    "apply_annihilation", "apply_creation", "apply_detection_operator",
    "collapse_envelope", "conditional_fringe", "cross_coherence",
    "expectation", "fit_collapse_revival", "integrate", "liouvillian_rhs",
    "mean_visibility_asymptotic", "mean_visibility_exact", "measure_state",
    "new_number_state", "normalize", "number_state_density", "number_stats",
    "one_way_rate", "per_component_decay_rate", "phase_width", "propagate",
    "regular_injection_times", "run_ensemble", "run_trajectories",
    "run_trajectory", "sample_detection_phase", "sample_waiting_time",
    "scatter_points", "select_channel", "step_trajectory", "timescales",
    "truncate", "two_way_rate", "visibility_from_occupancy",
]

__version__ = "0.1.0"
