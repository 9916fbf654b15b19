"""Randomized property suites over small states.

Each check runs a configurable number of cases (1000 in the acceptance
gate) with a fixed seed; they are also exercised here as part of the
regular suite.
"""

import math

import numpy as np

from twintrap.dynamics import (RateConfig, propagate, step_trajectory)
from twintrap.observables import number_stats
from twintrap.twinstate import (TwinTrapState, apply_annihilation,
                                apply_creation, apply_detection_operator,
                                normalize, truncate)

N_CASES = 1000


def _random_state(rng):
    n = int(rng.integers(1, 9))
    b1 = int(rng.integers(n // 2, 12))
    b2 = int(rng.integers(n // 2, 12))
    k_min = -int(rng.integers(0, min(b2, n - 1) + 1))
    k_max = k_min + n - 1
    if b1 - k_max < 0:
        k_min -= k_max - b1
        k_max = k_min + n - 1
    c = rng.normal(size=n) + 1j * rng.normal(size=n)
    return normalize(TwinTrapState(b1, b2, k_min, c))


def _random_rates(rng):
    return RateConfig(gamma=float(rng.uniform(0.1, 2.0)),
                      kappa=float(rng.uniform(0.0, 1.0)),
                      nu1=float(rng.uniform(0.0, 0.5)),
                      nu2=float(rng.uniform(0.0, 0.5)),
                      chi1_in=float(rng.uniform(0.0, 0.05)),
                      chi2_in=float(rng.uniform(0.0, 0.05)),
                      n_bath1=float(rng.uniform(1.0, 20.0)),
                      n_bath2=float(rng.uniform(1.0, 20.0)))


def check_number_conservation(n_cases=N_CASES, seed=101):
    rng = np.random.default_rng(seed)
    for _ in range(n_cases):
        s = _random_state(rng)
        n = s.total_number
        kind = rng.integers(0, 4)
        if kind == 0:
            out, w = apply_detection_operator(s, rng.uniform(0, 2 * math.pi))
            assert out.total_number == (n - 1 if w > 0 else n)
        elif kind == 1:
            trap = int(rng.integers(1, 3))
            out, w = apply_annihilation(s, trap)
            assert out.total_number == (n - 1 if w > 0 else n)
        elif kind == 2:
            out, _ = apply_creation(s, int(rng.integers(1, 3)))
            assert out.total_number == n + 1
        else:
            assert truncate(s, 1e-12).total_number == n


def check_weight_identities(n_cases=N_CASES, seed=103):
    rng = np.random.default_rng(seed)
    for _ in range(n_cases):
        s = _random_state(rng)
        n1, n2, _, _ = number_stats(s)
        _, w1 = apply_annihilation(s, 1)
        _, w2 = apply_annihilation(s, 2)
        assert abs(w1 - n1) <= 1e-12 * max(n1, 1.0)
        assert abs(w2 - n2) <= 1e-12 * max(n2, 1.0)
        _, wc = apply_creation(s, 1)
        assert abs(wc - (n1 + 1.0)) <= 1e-12 * (n1 + 1.0)


def check_propagation_composition(n_cases=N_CASES, seed=107):
    rng = np.random.default_rng(seed)
    for _ in range(n_cases):
        s = _random_state(rng)
        rates = _random_rates(rng)
        dt1, dt2 = rng.uniform(0.0, 1.5, size=2)
        once = propagate(s, rates, dt1 + dt2)
        twice = propagate(propagate(s, rates, dt1), rates, dt2)
        assert np.max(np.abs(once.coeffs - twice.coeffs)) < 1e-12


def check_seed_determinism(n_cases=N_CASES, seed=109):
    rng = np.random.default_rng(seed)
    for _ in range(n_cases):
        s = _random_state(rng)
        rates = _random_rates(rng)
        run_seed = int(rng.integers(0, 2**32))
        out1, ev1 = step_trajectory(s, rates,
                                    np.random.default_rng(run_seed),
                                    snapshot=False)
        out2, ev2 = step_trajectory(s, rates,
                                    np.random.default_rng(run_seed),
                                    snapshot=False)
        assert ev1.t == ev2.t and ev1.channel == ev2.channel
        assert np.array_equal(out1.coeffs, out2.coeffs)


def check_truncation_norm_loss(n_cases=N_CASES, seed=113):
    rng = np.random.default_rng(seed)
    threshold = 1e-12
    for _ in range(n_cases):
        body = rng.normal(size=7) + 1j * rng.normal(size=7)
        n_tail = int(rng.integers(0, 4))
        tail = rng.uniform(0, threshold / 2, size=n_tail) * np.exp(
            2j * math.pi * rng.random(n_tail))
        left = int(rng.integers(0, n_tail + 1))
        c = np.concatenate([tail[:left], body, tail[left:]])
        s = normalize(TwinTrapState(20, 20, -5, c))
        kept = truncate(s, threshold)
        dropped = len(s.coeffs) - len(kept.coeffs)
        lo = kept.k_min - s.k_min
        lost = (np.sum(np.abs(s.coeffs[:lo]) ** 2)
                + np.sum(np.abs(s.coeffs[lo + len(kept.coeffs):]) ** 2))
        assert lost <= dropped * threshold ** 2
        assert abs(kept.norm_squared() - 1.0) < 1e-12


def test_number_conservation_properties():
    check_number_conservation()


def test_weight_identity_properties():
    check_weight_identities()


def test_propagation_composition_properties():
    check_propagation_composition()


def test_seed_determinism_properties():
    check_seed_determinism(200)


def test_truncation_norm_loss_properties():
    check_truncation_norm_loss()
