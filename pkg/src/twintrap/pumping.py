"""Pump-rate balance and pumping-mode configuration.

The thermal baths are non-depleting: their atom numbers enter the rates
as constants and the balance equations below fix the single pump
coefficient chi so that the mean trap populations stay at the requested
targets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

from .dynamics import RateConfig

PUMP_MODES = ("none", "one_way", "two_way", "regular")


@dataclass
class PumpPlan:
    """Chosen pumping mode plus the rate it implies.

    chi is the computed pump coefficient (two-way and one-way modes);
    regular mode instead drips atoms in deterministically with the
    given per-trap injection periods.
    """

    mode: str = "none"
    chi: float = 0.0
    injection_period1: float = math.inf
    injection_period2: float = math.inf

    def __post_init__(self) -> None:
        if self.mode not in PUMP_MODES:
            raise ValueError(f"mode must be one of {PUMP_MODES}")
        if self.chi < 0:
            raise ValueError("chi must be nonnegative")

    def configure_rates(self, rates: RateConfig) -> RateConfig:
        """Return a copy of rates with the pump coefficients filled in."""
        if self.mode == "two_way":
            return replace(rates, chi1_in=self.chi, chi1_out=self.chi,
                           chi2_in=self.chi, chi2_out=self.chi)
        if self.mode == "one_way":
            return replace(rates, chi1_in=self.chi, chi1_out=0.0,
                           chi2_in=self.chi, chi2_out=0.0)
        # regular and none: no stochastic pump channels
        return replace(rates, chi1_in=0.0, chi1_out=0.0,
                       chi2_in=0.0, chi2_out=0.0)


def two_way_rate(n1_target: float, n2_target: float, gamma: float,
                 nu1: float, nu2: float, n_bath1: float,
                 n_bath2: float) -> float:
    """Exchange rate chi balancing detection and output losses when
    atoms move both ways between traps and baths."""
    denom = n_bath1 + n_bath2 - (n1_target + n2_target)
    if denom <= 0:
        raise ValueError("bath too small to balance the target occupancy")
    num = gamma * (n1_target + n2_target) + nu1 * n1_target + nu2 * n2_target
    return num / denom


def one_way_rate(n1_target: float, n2_target: float, gamma: float,
                 nu1: float, nu2: float, n_bath1: float,
                 n_bath2: float) -> float:
    """Pump-in rate chi balancing the losses when the reverse flow is
    blocked (irreversible pumping)."""
    if n_bath1 <= 0 and n_bath2 <= 0:
        raise ValueError("at least one bath must be nonempty")
    num = gamma * (n1_target + n2_target) + nu1 * n1_target + nu2 * n2_target
    denom = n_bath1 * (n1_target + 1.0) + n_bath2 * (n2_target + 1.0)
    return num / denom


def one_way_trap_rates(n1_target: float, n2_target: float, gamma: float,
                       nu1: float, nu2: float, n_bath1: float,
                       n_bath2: float) -> tuple[float, float]:
    """Per-trap pump-in coefficients holding unequal mean occupancies.

    A single shared chi balances only the total flux, so with equal
    baths both traps drift to a common mean; holding distinct targets
    requires each trap to balance separately,

        chi_i N_i (n_i + 1) = (gamma + nu_i) n_i.

    For equal targets this reduces to one_way_rate.
    """
    if n_bath1 <= 0 or n_bath2 <= 0:
        raise ValueError("bath sizes must be positive")
    chi1 = (gamma + nu1) * n1_target / (n_bath1 * (n1_target + 1.0))
    chi2 = (gamma + nu2) * n2_target / (n_bath2 * (n2_target + 1.0))
    return chi1, chi2


def regular_injection_times(rate_per_trap: float,
                            horizon: float) -> list[tuple[float, int]]:
    """Deterministic, evenly spaced injection schedule for both traps.

    Each trap receives an atom every 1/rate starting at t = 1/rate,
    giving floor(rate * horizon) events per trap inside [0, horizon);
    an event landing exactly on the horizon is nudged just below it.
    The per-trap sequences are merged in time order.
    """
    if rate_per_trap < 0:
        raise ValueError("rate must be nonnegative")
    if rate_per_trap == 0 or horizon <= 0:
        return []
    period = 1.0 / rate_per_trap
    count = math.floor(rate_per_trap * horizon * (1.0 + 1e-15))
    events = []
    for j in range(1, count + 1):
        t = min(j * period, math.nextafter(horizon, 0.0))
        events.append((t, 1))
        events.append((t, 2))
    return events


def merge_schedules(per_trap: dict[int, float],
                    horizon: float) -> list[tuple[float, int]]:
    """Injection schedule for independent per-trap rates, time-ordered."""
    events: list[tuple[float, int]] = []
    for trap, rate in per_trap.items():
        if rate <= 0 or horizon <= 0:
            continue
        period = 1.0 / rate
        count = math.floor(rate * horizon * (1.0 + 1e-15))
        for j in range(1, count + 1):
            t = min(j * period, math.nextafter(horizon, 0.0))
            events.append((t, trap))
    events.sort()
    return events
