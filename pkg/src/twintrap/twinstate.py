"""Entangled number-difference states of two atom traps.

A state is a superposition over Fock pairs that share one total atom
number,

    |t> = sum_k c_k |n1 - k, n2 + k>,

stored as a contiguous run of complex amplitudes together with the base
occupancies (n1, n2) that the index k = 0 refers to.  Every operator in
this module couples only adjacent k, so the support stays a contiguous
interval and neighbour access is O(1).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_TRUNCATION = 1e-12


@dataclass
class TwinTrapState:
    """Two-trap state with sharp total atom number.

    Attributes
    ----------
    base_n1, base_n2 : int
        Occupancies of traps 1 and 2 for the k = 0 component.
    k_min : int
        Smallest retained index k.
    coeffs : np.ndarray
        Complex amplitudes c_k for k = k_min ... k_min + len - 1.
    """

    base_n1: int
    base_n2: int
    k_min: int
    coeffs: np.ndarray

    @property
    def total_number(self) -> int:
        return self.base_n1 + self.base_n2

    @property
    def k_values(self) -> np.ndarray:
        return self.k_min + np.arange(len(self.coeffs))

    def occupancies(self) -> tuple[np.ndarray, np.ndarray]:
        """Per-component occupancies (n1 - k, n2 + k) as integer arrays."""
        k = self.k_values
        return self.base_n1 - k, self.base_n2 + k

    def norm_squared(self) -> float:
        return float(np.sum(np.abs(self.coeffs) ** 2))

    def copy(self) -> "TwinTrapState":
        return TwinTrapState(self.base_n1, self.base_n2, self.k_min,
                             self.coeffs.copy())


def new_number_state(n1: int, n2: int) -> TwinTrapState:
    """Product number state |n1, n2> as a single-component state."""
    if n1 < 0 or n2 < 0:
        raise ValueError("occupancies must be nonnegative")
    return TwinTrapState(n1, n2, 0, np.ones(1, dtype=complex))


def normalize(state: TwinTrapState) -> TwinTrapState:
    """Return the unit-norm state with a canonical global phase.

    The amplitude of largest magnitude is rotated to the positive real
    axis, so equal states produced along different code paths compare
    bit-for-bit.
    """
    norm = np.sqrt(state.norm_squared())
    if norm == 0.0:
        raise ValueError("cannot normalize a zero state")
    c = state.coeffs / norm
    j = int(np.argmax(np.abs(c)))
    mag = abs(c[j])
    if mag > 0.0:
        c = c * (c[j].conjugate() / mag)
    return TwinTrapState(state.base_n1, state.base_n2, state.k_min, c)


def _trim_support(base_n1: int, base_n2: int, k_min: int,
                  coeffs: np.ndarray) -> TwinTrapState:
    """Drop exact zeros at the ends so occupancy bounds stay valid."""
    nz = np.nonzero(coeffs)[0]
    if len(nz) == 0:
        return TwinTrapState(base_n1, base_n2, k_min, coeffs[:0])
    lo, hi = int(nz[0]), int(nz[-1]) + 1
    return TwinTrapState(base_n1, base_n2, k_min + lo, coeffs[lo:hi])


def apply_annihilation(state: TwinTrapState,
                       trap: int) -> tuple[TwinTrapState, float]:
    """Remove one atom from the given trap.

    Returns the renormalized state a_i|t> together with the squared
    pre-normalization weight <t|a_i^dag a_i|t> = <n_i>.  An empty trap
    gives weight 0 with the input state returned unchanged (recoverable
    "annihilated vacuum" signal; the jump selector must never land here).
    """
    occ1, occ2 = state.occupancies()
    occ = occ1 if trap == 1 else occ2
    weight = float(np.sum(np.abs(state.coeffs) ** 2 * occ))
    if weight == 0.0:
        return state, 0.0
    scaled = state.coeffs * np.sqrt(occ)
    if trap == 1:
        out = _trim_support(state.base_n1 - 1, state.base_n2,
                            state.k_min, scaled)
    else:
        out = _trim_support(state.base_n1, state.base_n2 - 1,
                            state.k_min, scaled)
    return normalize(out), weight


def apply_creation(state: TwinTrapState,
                   trap: int) -> tuple[TwinTrapState, float]:
    """Add one atom to the given trap; weight is <n_i> + 1."""
    occ1, occ2 = state.occupancies()
    occ = occ1 if trap == 1 else occ2
    weight = float(np.sum(np.abs(state.coeffs) ** 2 * (occ + 1)))
    scaled = state.coeffs * np.sqrt(occ + 1)
    if trap == 1:
        out = TwinTrapState(state.base_n1 + 1, state.base_n2,
                            state.k_min, scaled)
    else:
        out = TwinTrapState(state.base_n1, state.base_n2 + 1,
                            state.k_min, scaled)
    return normalize(out), weight


def apply_detection_operator(state: TwinTrapState,
                             phi: float) -> tuple[TwinTrapState, float]:
    """Detect one atom of unknown origin at interference phase phi.

    Applies a_1 + a_2 exp(-i phi).  Re-indexed against the new base
    (n1 - 1, n2), the amplitudes satisfy

        c'_k = sqrt(n1 - k) c_k + exp(-i phi) sqrt(n2 + k + 1) c_{k+1},

    which grows the support by at most one component and lowers the
    total atom number by one.  Weight is <t|psi^dag(phi) psi(phi)|t>.
    Returns weight 0 and the input unchanged if the system is empty.
    """
    if state.total_number == 0:
        return state, 0.0
    occ1, occ2 = state.occupancies()
    n = len(state.coeffs)
    # index k runs from k_min - 1 to k_min + n - 1 in the new base
    new = np.zeros(n + 1, dtype=complex)
    new[1:] += np.sqrt(occ1) * state.coeffs
    new[:-1] += np.exp(-1j * phi) * np.sqrt(occ2) * state.coeffs
    weight = float(np.sum(np.abs(new) ** 2))
    if weight == 0.0:
        return state, 0.0
    out = _trim_support(state.base_n1 - 1, state.base_n2,
                        state.k_min - 1, new)
    return normalize(out), weight


def truncate(state: TwinTrapState,
             threshold: float = DEFAULT_TRUNCATION) -> TwinTrapState:
    """Trim negligible amplitudes from the ends of the k-interval.

    Only contiguous end-trimming is performed: an interior amplitude
    below threshold is kept so the support stays a single interval
    (interior zeros are transient).  The result is renormalized; the
    squared-norm loss is bounded by (dropped count) * threshold**2.
    """
    if threshold == 0.0:
        return state
    mags = np.abs(state.coeffs)
    n = len(mags)
    lo = 0
    while lo < n and mags[lo] < threshold:
        lo += 1
    if lo == n:
        raise ValueError("truncation emptied the state")
    hi = n
    while hi > lo and mags[hi - 1] < threshold:
        hi -= 1
    if lo == 0 and hi == n:
        return state
    return normalize(TwinTrapState(state.base_n1, state.base_n2,
                                   state.k_min + lo, state.coeffs[lo:hi]))
