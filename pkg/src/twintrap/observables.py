"""Per-state measurements: occupancies, fringe parameters and widths."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .twinstate import TwinTrapState


@dataclass
class StateObservables:
    """Snapshot of everything we track about a single state.

    beta and theta parametrize the next-detection probability
    P(phi) ~ 1 + beta cos(phi + theta); sigma_n is the width of the
    number-difference distribution and sigma_phi the phase width.
    """

    n1_mean: float
    n2_mean: float
    f: float
    beta: float
    theta: float
    sigma_n: float
    sigma_phi: float


def cross_coherence(state: TwinTrapState) -> complex:
    """Matrix element <a_1^dag a_2> of the (normalized) state.

    Equals sum_k c_k^* c_{k+1} sqrt((n1 - k)(n2 + k + 1)); zero for any
    single-component state.
    """
    c = state.coeffs
    if len(c) < 2:
        return 0j
    occ1, occ2 = state.occupancies()
    w = np.sqrt(occ1[:-1] * (occ2[:-1] + 1))
    return complex(np.sum(np.conj(c[:-1]) * c[1:] * w))


def conditional_fringe(state: TwinTrapState) -> tuple[float, float]:
    """Visibility beta and phase theta of the next-detection fringe.

    theta = -arg<a_1^dag a_2>, so P(phi) ~ 1 + beta cos(phi + theta);
    theta is 0 by convention when the fringe vanishes.
    """
    n = state.total_number
    if n == 0:
        raise ValueError("empty system has no detection fringe")
    coh = cross_coherence(state)
    beta = 2.0 * abs(coh) / n
    theta = -math.atan2(coh.imag, coh.real) if beta > 0.0 else 0.0
    return beta, theta


def number_stats(state: TwinTrapState) -> tuple[float, float, float, float]:
    """Means <n1>, <n2>, number-difference width sigma_n and relative
    occupancy f = (<n1> - <n2>)/N."""
    w = np.abs(state.coeffs) ** 2
    occ1, occ2 = state.occupancies()
    n1_mean = float(np.dot(w, occ1))
    n2_mean = float(np.dot(w, occ2))
    diff = occ1 - occ2
    var = float(np.dot(w, diff.astype(float) ** 2)) - (n1_mean - n2_mean) ** 2
    sigma_n = math.sqrt(max(var, 0.0))
    n = state.total_number
    f = (n1_mean - n2_mean) / n if n > 0 else 0.0
    return n1_mean, n2_mean, sigma_n, f


def phase_width(state: TwinTrapState) -> float:
    """Phase width sigma_phi = sqrt(1 - |sum_k c_k^* c_{k+1}|^2).

    Uses the bare coefficient overlap, with no occupancy weights; this
    is deliberately distinct from cross_coherence.
    """
    c = state.coeffs
    if len(c) < 2:
        return 1.0
    overlap = np.sum(np.conj(c[:-1]) * c[1:])
    return math.sqrt(max(1.0 - abs(overlap) ** 2, 0.0))


def measure_state(state: TwinTrapState) -> StateObservables:
    """Full observables snapshot; safe on the empty system (zero fringe)."""
    n1_mean, n2_mean, sigma_n, f = number_stats(state)
    if state.total_number > 0:
        beta, theta = conditional_fringe(state)
    else:
        beta, theta = 0.0, 0.0
    return StateObservables(n1_mean, n2_mean, f, beta, theta,
                            sigma_n, phase_width(state))
