import math

import numpy as np
import pytest

from twintrap.dynamics import RateConfig
from twintrap.oracle import (CutoffOverflowError, DensityMatrix,
                             detection_dissipator_quadrature, expectation,
                             integrate, liouvillian_rhs, mode_operators,
                             number_state_density)


def random_density(n_max, seed=0):
    rng = np.random.default_rng(seed)
    d = (n_max + 1) ** 2
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = a @ a.conj().T
    rho /= np.trace(rho).real
    return DensityMatrix(n_max, rho)


def test_single_atom_decay_rate():
    rho = number_state_density(1, 0, 3)
    rhs = liouvillian_rhs(rho, RateConfig(gamma=1.0))
    n1_op = mode_operators(3).observable("n1")
    dn1 = np.einsum("ij,ji->", rhs.elements, n1_op).real
    assert dn1 == pytest.approx(-1.0)


def test_collisions_leave_diagonal_states_still():
    rng = np.random.default_rng(1)
    d = 16
    rho = DensityMatrix(3, np.diag(rng.random(d)).astype(complex))
    rho.elements /= rho.trace()
    rhs = liouvillian_rhs(rho, RateConfig(gamma=0.0, kappa=0.8),
                          boundary_tol=None)
    assert np.max(np.abs(rhs.elements)) < 1e-14


def test_phase_integrated_detection_reduces_to_plain_decay():
    rho = random_density(3, seed=2)
    gamma = 0.7
    quad = detection_dissipator_quadrature(rho, gamma, n_nodes=64)
    ops = mode_operators(3)
    direct = np.zeros_like(rho.elements)
    for a, n in ((ops.a1, ops.n1), (ops.a2, ops.n2)):
        direct += gamma * (a @ rho.elements @ a.conj().T
                           - 0.5 * (n @ rho.elements + rho.elements @ n))
    assert np.max(np.abs(quad - direct)) < 1e-10


def test_bare_measure_scales_detection():
    rho = random_density(2, seed=3)
    rates = RateConfig(gamma=0.5)
    normalized = liouvillian_rhs(rho, rates, boundary_tol=None).elements
    bare = liouvillian_rhs(rho, rates, detection_measure="bare",
                           boundary_tol=None).elements
    assert np.allclose(bare, 2 * math.pi * normalized)


def test_integrate_exponential_decay():
    rho0 = number_state_density(1, 0, 3)
    grid = np.linspace(0.0, 2.0, 9)
    rhos = integrate(rho0, RateConfig(gamma=1.0), grid)
    for t, rho in zip(grid, rhos):
        n1 = expectation(rho, "n1").real
        assert abs(n1 - math.exp(-t)) < 1e-6


def test_integrate_kerr_preserves_coherence_magnitude():
    # pure (|1,0> + |0,1>)/sqrt(2): both components have equal collision
    # energy, so the coherence magnitude is constant
    n_max = 2
    d = (n_max + 1) ** 2
    vec = np.zeros(d, dtype=complex)
    vec[1 * (n_max + 1) + 0] = 1 / math.sqrt(2)
    vec[0 * (n_max + 1) + 1] = 1 / math.sqrt(2)
    rho0 = DensityMatrix(n_max, np.outer(vec, vec.conj()))
    grid = np.linspace(0.0, 3.0, 7)
    rhos = integrate(rho0, RateConfig(gamma=0.0, kappa=0.6), grid)
    for rho in rhos:
        assert abs(expectation(rho, "cross_coherence")) == pytest.approx(
            0.5, abs=1e-8)


def test_integrate_step_halving_self_consistency():
    rates = RateConfig(gamma=1.0, kappa=0.3, chi1_in=0.1, chi2_in=0.1,
                       n_bath1=1.0, n_bath2=1.0)
    rho0 = number_state_density(1, 1, 4)
    grid = np.array([0.0, 0.5, 1.0])
    coarse = integrate(rho0, rates, grid, max_step=1e-3,
                       boundary_tol=1e-3)
    fine = integrate(rho0, rates, grid, max_step=5e-4,
                     boundary_tol=1e-3)
    for name in ("n1", "n2", "n1_sq", "n2_sq"):
        for a, b in zip(coarse, fine):
            assert abs(expectation(a, name) - expectation(b, name)) < 1e-8


def test_integrate_trace_and_hermiticity():
    rates = RateConfig(gamma=1.0, kappa=0.3, chi1_in=0.2, chi2_in=0.2,
                       n_bath1=1.0, n_bath2=1.0)
    rho0 = number_state_density(2, 2, 6)
    grid = np.linspace(0.0, 2.0, 5)
    rhos = integrate(rho0, rates, grid, boundary_tol=1e-3)
    for rho in rhos:
        assert rho.trace() == pytest.approx(1.0, abs=1e-7)
        assert np.max(np.abs(rho.elements - rho.elements.conj().T)) < 1e-10
        evals = np.linalg.eigvalsh(rho.elements)
        assert evals.min() > -1e-8


def test_phase_symmetry_never_develops_mean_coherence():
    rates = RateConfig(gamma=1.0, chi1_in=0.2, chi2_in=0.2,
                       n_bath1=1.0, n_bath2=1.0)
    rho0 = number_state_density(2, 1, 6)
    rhos = integrate(rho0, rates, np.linspace(0.0, 2.0, 5),
                     boundary_tol=1e-3)
    for rho in rhos:
        assert abs(expectation(rho, "cross_coherence")) < 1e-10


def test_cutoff_overflow_detection():
    # strong pumping against a tiny cutoff trips the boundary check
    rates = RateConfig(gamma=0.1, chi1_in=1.0, chi2_in=1.0,
                       n_bath1=5.0, n_bath2=5.0)
    rho0 = number_state_density(1, 1, 2)
    with pytest.raises(CutoffOverflowError):
        integrate(rho0, rates, np.linspace(0.0, 3.0, 7))


def test_expectation_examples():
    vac = number_state_density(0, 0, 2)
    for name in ("n1", "n2", "n1_sq", "n2_sq", "cross_coherence"):
        assert expectation(vac, name) == 0

    rho = number_state_density(2, 1, 3)
    assert expectation(rho, "n1") == pytest.approx(2.0)
    assert expectation(rho, "n1_sq") == pytest.approx(4.0)

    d = 4
    mixed = DensityMatrix(1, np.eye(d, dtype=complex) / d)
    assert expectation(mixed, "n1").real == pytest.approx(0.5)


def test_expectation_unknown_observable():
    with pytest.raises(ValueError):
        expectation(number_state_density(0, 0, 1), "momentum")


def test_integrate_grid_validation():
    rho0 = number_state_density(0, 0, 1)
    with pytest.raises(ValueError):
        integrate(rho0, RateConfig(), np.array([0.5, 1.0]))
    with pytest.raises(ValueError):
        integrate(rho0, RateConfig(), np.array([0.0, 0.0]))


def test_number_state_density_bounds():
    with pytest.raises(ValueError):
        number_state_density(4, 0, 3)
