"""Monte-Carlo wave-function engine for the twin-trap system.

Between jumps the state evolves under an effective Hamiltonian that is
diagonal in the number-difference basis: collisions rotate each
component's phase at (kappa/2)[(n1-k)^2 + (n2+k)^2] while the norm of
component k decays at the total outflow rate Gamma_k.  Because the
Gamma_k are constant between jumps, the waiting time until the next
jump is sampled exactly by root-finding on the norm, with no time-step
discretization anywhere.

Jump channels:

  detect    rate gamma * N          apply a_1 + a_2 exp(-i phi)
  loss(i)   rate (nu_i + chi_i_out (N_i + 1)) <n_i>      apply a_i
  gain(i)   rate chi_i_in N_i (<n_i> + 1)                apply a_i^dag

The gain rate uses the bosonic stimulation factor <n_i> + 1 by default;
``gain_model="constant"`` switches to an occupancy-independent reading
for comparison runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .observables import StateObservables, conditional_fringe, measure_state
from .twinstate import (DEFAULT_TRUNCATION, TwinTrapState, apply_annihilation,
                        apply_creation, apply_detection_operator, normalize,
                        truncate)

TWO_PI = 2.0 * math.pi

_GAIN_MODELS = ("stimulated", "constant")


@dataclass
class RateConfig:
    """All physical rates, in units of the detection rate gamma.

    n_bath1 and n_bath2 are the (non-depleting) thermal bath atom
    numbers; chi*_in/out are the pump rate coefficients they multiply.
    """

    gamma: float = 1.0
    kappa: float = 0.0
    nu1: float = 0.0
    nu2: float = 0.0
    chi1_in: float = 0.0
    chi1_out: float = 0.0
    chi2_in: float = 0.0
    chi2_out: float = 0.0
    n_bath1: float = 0.0
    n_bath2: float = 0.0
    gain_model: str = "stimulated"

    def __post_init__(self) -> None:
        for name in ("gamma", "kappa", "nu1", "nu2", "chi1_in", "chi1_out",
                     "chi2_in", "chi2_out", "n_bath1", "n_bath2"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.gain_model not in _GAIN_MODELS:
            raise ValueError(f"gain_model must be one of {_GAIN_MODELS}")

    def loss_coefficient(self, trap: int) -> float:
        """Combined a_i loss rate: output coupler plus pump-out."""
        if trap == 1:
            return self.nu1 + self.chi1_out * (self.n_bath1 + 1.0)
        return self.nu2 + self.chi2_out * (self.n_bath2 + 1.0)

    def gain_coefficient(self, trap: int) -> float:
        """a_i^dag pump-in rate coefficient chi_in * N_bath."""
        if trap == 1:
            return self.chi1_in * self.n_bath1
        return self.chi2_in * self.n_bath2


@dataclass(frozen=True)
class JumpChannel:
    """One realized jump: kind is 'detect', 'loss' or 'gain'.

    Detections carry the sampled interference phase phi; loss and gain
    carry the trap index.
    """

    kind: str
    trap: int | None = None
    phi: float | None = None


@dataclass
class JumpEvent:
    t: float
    channel: JumpChannel
    observables: StateObservables | None = None


def decay_rate_vector(state: TwinTrapState, rates: RateConfig) -> np.ndarray:
    """Total outflow rate Gamma_k for every retained component."""
    occ1, occ2 = state.occupancies()
    gam = rates.gamma * float(state.total_number) + np.zeros(len(occ1))
    l1, l2 = rates.loss_coefficient(1), rates.loss_coefficient(2)
    g1, g2 = rates.gain_coefficient(1), rates.gain_coefficient(2)
    if l1 != 0.0:
        gam += l1 * occ1
    if l2 != 0.0:
        gam += l2 * occ2
    if rates.gain_model == "stimulated":
        if g1 != 0.0:
            gam += g1 * (occ1 + 1)
        if g2 != 0.0:
            gam += g2 * (occ2 + 1)
    else:
        gam += g1 + g2
    return gam


def per_component_decay_rate(state: TwinTrapState, rates: RateConfig,
                             k: int) -> float:
    """Gamma_k for a single retained index k."""
    idx = k - state.k_min
    if idx < 0 or idx >= len(state.coeffs):
        raise IndexError(f"k={k} not retained")
    return float(decay_rate_vector(state, rates)[idx])


def propagate(state: TwinTrapState, rates: RateConfig,
              dt: float) -> TwinTrapState:
    """Evolve for dt with no jump; the result is left unnormalized.

    Each amplitude picks up the collisional phase
    (kappa/2)[(n1-k)^2 + (n2+k)^2] dt (reduced mod 2 pi before use) and
    decays by exp(-Gamma_k dt / 2).
    """
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    c = state.coeffs
    gam = decay_rate_vector(state, rates)
    factor = np.exp(-0.5 * dt * gam)
    if rates.kappa != 0.0:
        occ1, occ2 = state.occupancies()
        phase = 0.5 * rates.kappa * (occ1.astype(float) ** 2
                                     + occ2.astype(float) ** 2) * dt
        factor = factor * np.exp(-1j * np.mod(phase, TWO_PI))
    return TwinTrapState(state.base_n1, state.base_n2, state.k_min,
                         c * factor)


def _solve_norm_decay(weights: np.ndarray, gam: np.ndarray,
                      r: float) -> float:
    """Return t* with sum_k w_k exp(-Gamma_k t*) = r.

    weights must sum to 1 and r lie in (0, 1].  The left side is
    strictly decreasing, so t* is bracketed and then refined by secant
    steps that fall back to bisection, to relative tolerance 1e-12.
    Returns +inf when the equation has no finite solution (all rates
    zero, or r below the weight stuck in zero-rate components).
    """
    gmax = float(gam.max())
    if gmax <= 0.0:
        return math.inf
    if r >= 1.0:
        return 0.0
    gmin = float(gam.min())
    if gmin == gmax:
        return -math.log(r) / gmax
    dark = float(weights[gam == 0.0].sum()) if gmin == 0.0 else 0.0
    if r <= dark:
        return math.inf
    lo = -math.log(r) / gmax
    if gmin > 0.0:
        hi = -math.log(r) / gmin
    else:
        gpos = float(gam[gam > 0.0].min())
        hi = -math.log((r - dark) / (1.0 - dark)) / gpos

    def f(t: float) -> float:
        return float(np.dot(weights, np.exp(-gam * t))) - r

    flo = f(lo)
    if flo <= 0.0:
        return lo
    fhi = f(hi)
    if fhi >= 0.0:
        return hi
    side = 0
    for _ in range(200):
        if hi - lo <= 1e-12 * hi:
            break
        t = (lo * fhi - hi * flo) / (fhi - flo)
        # keep the secant step strictly inside the bracket
        if not (lo < t < hi):
            t = 0.5 * (lo + hi)
        ft = f(t)
        if ft > 0.0:
            lo, flo = t, ft
            if side == 1:
                fhi *= 0.5  # Illinois damping against one-sided stalls
            side = 1
        elif ft < 0.0:
            hi, fhi = t, ft
            if side == -1:
                flo *= 0.5
            side = -1
        else:
            return t
    return 0.5 * (lo + hi)


def sample_waiting_time(state: TwinTrapState, rates: RateConfig,
                        r: float) -> float:
    """Exact inter-jump waiting time for survival draw r in (0, 1].

    Solves ||propagate(state, t*)||^2 = r for a normalized input state.
    """
    if not (0.0 < r <= 1.0):
        raise ValueError("r must lie in (0, 1]")
    weights = np.abs(state.coeffs) ** 2
    gam = decay_rate_vector(state, rates)
    return _solve_norm_decay(weights, gam, r)


def channel_rates(state: TwinTrapState,
                  rates: RateConfig) -> tuple[list[JumpChannel], np.ndarray]:
    """Unnormalized instantaneous rates of every jump channel.

    Works on the decayed (unnormalized) state at the jump instant; the
    returned rates sum to sum_k |c_k|^2 Gamma_k.
    """
    w = np.abs(state.coeffs) ** 2
    occ1, occ2 = state.occupancies()
    s = float(w.sum())
    s1 = float(np.dot(w, occ1))
    s2 = float(np.dot(w, occ2))
    if rates.gain_model == "stimulated":
        gain1 = rates.gain_coefficient(1) * (s1 + s)
        gain2 = rates.gain_coefficient(2) * (s2 + s)
    else:
        gain1 = rates.gain_coefficient(1) * s
        gain2 = rates.gain_coefficient(2) * s
    channels = [JumpChannel("detect"),
                JumpChannel("loss", trap=1), JumpChannel("loss", trap=2),
                JumpChannel("gain", trap=1), JumpChannel("gain", trap=2)]
    vals = np.array([rates.gamma * (s1 + s2),
                     rates.loss_coefficient(1) * s1,
                     rates.loss_coefficient(2) * s2,
                     gain1, gain2])
    return channels, vals


def select_channel(state_at_jump: TwinTrapState, rates: RateConfig,
                   u: float) -> JumpChannel:
    """Draw the jump channel at the (decayed) jump-instant state.

    u is uniform on [0, 1); detection channels are returned without a
    phase, which is sampled separately.
    """
    channels, vals = channel_rates(state_at_jump, rates)
    total = float(vals.sum())
    if total <= 0.0:
        raise RuntimeError("channel selection with zero total rate")
    x = u * total
    acc = 0.0
    last = None
    for ch, v in zip(channels, vals):
        if v <= 0.0:
            continue
        last = ch
        acc += v
        if x < acc:
            return ch
    return last  # floating-point slack on the final cumulative edge


def _inverse_fringe_cdf(beta: float, theta: float, u: float) -> float:
    """Invert phi + beta (sin(phi+theta) - sin(theta)) = 2 pi u on [0, 2 pi)."""
    if beta == 0.0:
        return TWO_PI * u
    target = TWO_PI * u
    sin0 = math.sin(theta)
    lo, hi = 0.0, TWO_PI
    while hi - lo > 1e-10:
        mid = 0.5 * (lo + hi)
        if mid + beta * (math.sin(mid + theta) - sin0) < target:
            lo = mid
        else:
            hi = mid
    phi = 0.5 * (lo + hi)
    return phi if phi < TWO_PI else 0.0


def sample_detection_phase(state: TwinTrapState, u: float) -> float:
    """Sample the detection phase from P(phi) ~ 1 + beta cos(phi + theta).

    Inverse-CDF bisection on the monotone rescaled CDF, so a fixed
    number of uniforms is consumed per detection and replay under a
    fixed seed is exact.
    """
    beta, theta = conditional_fringe(state)
    return _inverse_fringe_cdf(beta, theta, u)


def apply_channel(state: TwinTrapState,
                  channel: JumpChannel) -> tuple[TwinTrapState, float]:
    """Apply the jump operator for an already-sampled channel."""
    if channel.kind == "detect":
        return apply_detection_operator(state, channel.phi)
    if channel.kind == "loss":
        return apply_annihilation(state, channel.trap)
    if channel.kind == "gain":
        return apply_creation(state, channel.trap)
    raise ValueError(f"unknown channel kind {channel.kind!r}")


def step_trajectory(state: TwinTrapState, rates: RateConfig,
                    rng: np.random.Generator, *, t0: float = 0.0,
                    truncation: float = DEFAULT_TRUNCATION,
                    snapshot: bool = True
                    ) -> tuple[TwinTrapState, JumpEvent]:
    """Advance one jump: wait, decay, pick a channel, apply it.

    The input must be normalized with at least one open channel.
    Returns the post-jump normalized state and the event, whose
    observables snapshot (optional) describes the state immediately
    before the jump operator acts.
    """
    r = 1.0 - rng.random()
    wait = sample_waiting_time(state, rates, r)
    if not math.isfinite(wait):
        raise RuntimeError("no jump channel has positive rate")
    decayed = normalize(propagate(state, rates, wait))
    channel = select_channel(decayed, rates, rng.random())
    if channel.kind == "detect":
        phi = sample_detection_phase(decayed, rng.random())
        channel = JumpChannel("detect", phi=phi)
    new_state, weight = apply_channel(decayed, channel)
    if weight <= 0.0:
        raise AssertionError("jump channel annihilated the state; "
                             "channel rates are inconsistent")
    new_state = truncate(new_state, truncation)
    event = JumpEvent(t0 + wait, channel,
                      measure_state(decayed) if snapshot else None)
    return new_state, event
