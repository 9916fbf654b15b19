"""Closed-form reference results and collapse/revival fitting."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import find_peaks

from .twinstate import TwinTrapState


def visibility_from_occupancy(f: float) -> float:
    """Maximum fringe visibility sqrt(1 - f^2) at relative occupancy f."""
    if not -1.0 <= f <= 1.0:
        raise ValueError("relative occupancy must lie in [-1, 1]")
    return math.sqrt(1.0 - f * f)


def mean_visibility_exact(nbar1: float, nbar2: float) -> float:
    """Mean visibility for thermally distributed occupancies.

    Average of sqrt(1 - f^2) over two independent continuous-limit
    thermal number distributions with means nbar1 and nbar2.  Written
    in terms of a_i = log(nbar_i / (nbar_i + 1)); the closed form has a
    removable singularity at equal means (value pi/4) which is handled
    by a series expansion.
    """
    if nbar1 <= 0 or nbar2 <= 0:
        raise ValueError("thermal means must be positive")
    a = math.log(nbar1 / (nbar1 + 1.0))
    b = math.log(nbar2 / (nbar2 + 1.0))
    d = a - b
    s = a + b
    x = d / s
    if abs(x) < 1e-6:
        # (1/sqrt(1-x^2) - 1)/x^2 = 1/2 + 3 x^2/8 + 5 x^4/16 + ...
        series = 0.5 + 0.375 * x * x + 0.3125 * x ** 4
        return 2.0 * math.pi * a * b / (s * s) * series
    return (2.0 * math.pi * a * b / (d * d)
            * (1.0 / math.sqrt(1.0 - x * x) - 1.0))


def mean_visibility_asymptotic(p: float) -> float:
    """Large-occupancy limit of the thermal mean visibility at mean
    number ratio p."""
    if p <= 0:
        raise ValueError("mean number ratio must be positive")
    sp = math.sqrt(p)
    return math.pi * sp / (1.0 + sp) ** 2


def thermal_visibility_mc(nbar1: float, nbar2: float, n_samples: int,
                          seed: int = 0) -> tuple[float, float]:
    """Monte-Carlo thermal mean visibility and its standard error.

    Independent check of mean_visibility_exact: draws occupancy pairs
    from the continuous-limit thermal density p(n) ~ g^n with
    g = nbar/(nbar + 1) (exponential with mean -1/log g) and averages
    sqrt(1 - f^2) directly.
    """
    if nbar1 <= 0 or nbar2 <= 0:
        raise ValueError("thermal means must be positive")
    rng = np.random.default_rng(seed)
    m1 = -1.0 / math.log(nbar1 / (nbar1 + 1.0))
    m2 = -1.0 / math.log(nbar2 / (nbar2 + 1.0))
    x1 = rng.exponential(m1, n_samples)
    x2 = rng.exponential(m2, n_samples)
    f = (x1 - x2) / (x1 + x2)
    v = np.sqrt(1.0 - f * f)
    return float(v.mean()), float(v.std(ddof=1) / math.sqrt(n_samples))


def collapse_envelope(sigma_a: float, kappa: float, t: float) -> float:
    """Visibility collapse envelope exp(-2 sigma_a^2 kappa^2 t^2)."""
    if sigma_a < 0 or kappa < 0:
        raise ValueError("sigma_a and kappa must be nonnegative")
    return math.exp(-2.0 * (sigma_a * kappa * t) ** 2)


def timescales(n: float, gamma: float) -> tuple[float, float]:
    """Entanglement build-up time 1/(sqrt(n) gamma) and atom replacement
    time 1/(n gamma) at mean occupancy n."""
    if n <= 0:
        raise ValueError("mean occupancy must be positive")
    return 1.0 / (math.sqrt(n) * gamma), 1.0 / (n * gamma)


def a_coefficients(state: TwinTrapState, m_detections: int,
                   n_initial: int) -> tuple[np.ndarray, float]:
    """Adjacent-pair coherence weights A(k) and their width sigma_A.

    For a state reached from |n, n> by m detections the weights are
    A(k) = |c_k c_{k-1}| sqrt((n - k + 1)(n - m + k)) in the indexing
    anchored to trap 2; general states are accepted, with occupancy
    factors clamped at zero.  sigma_A is the standard deviation of the
    index under the normalized A(k) weights (0 when fewer than two
    weights are nonzero); for broad smooth states sigma_A is close to
    half the number width sigma_n.
    """
    c = np.abs(state.coeffs)
    if len(c) < 2:
        return np.zeros(0), 0.0
    n, m = n_initial, m_detections
    k_pairs = state.k_values[:-1]
    occ2 = state.base_n2 + k_pairs
    kp = n - occ2
    fac1 = np.maximum(n - kp + 1.0, 0.0)
    fac2 = np.maximum(n - m + kp.astype(float), 0.0)
    a = c[:-1] * c[1:] * np.sqrt(fac1 * fac2)
    total = a.sum()
    if total <= 0.0 or np.count_nonzero(a) < 2:
        return a, 0.0
    w = a / total
    mean = float(np.dot(w, k_pairs))
    var = float(np.dot(w, (k_pairs - mean) ** 2))
    return a, math.sqrt(max(var, 0.0))


@dataclass
class CollapseFit:
    """Peak locations and collapse widths extracted from a visibility
    trace; widths are the Gaussian sigma_t of each collapse flank."""

    peak_times: np.ndarray
    peak_heights: np.ndarray
    widths: np.ndarray
    sigma_a_estimates: np.ndarray

    @property
    def revival_period(self) -> float:
        if len(self.peak_times) < 2:
            return math.nan
        return float(np.mean(np.diff(self.peak_times)))


def fit_collapse_revival(times: np.ndarray, values: np.ndarray,
                         kappa: float, *,
                         prominence: float = 0.05) -> CollapseFit:
    """Locate revival peaks and fit the Gaussian collapse after each.

    Peaks are local maxima with at least the given prominence (a start
    at t = 0 counts when the trace opens on a descent).  On each peak's
    trailing flank, log V is regressed against (t - t_peak)^2; the slope
    gives the collapse width and, through the collapse envelope, an
    estimate of sigma_A.
    """
    if kappa <= 0:
        raise ValueError("kappa must be positive to define revivals")
    t = np.asarray(times, dtype=float)
    v = np.asarray(values, dtype=float)
    if len(t) != len(v) or len(t) < 5:
        raise ValueError("need matching time/value series")
    idx, _ = find_peaks(v, prominence=prominence)
    peaks = list(idx)
    if len(v) >= 2 and v[0] > v[1] and v[0] >= prominence:
        if not peaks or peaks[0] != 0:
            peaks.insert(0, 0)
    if not peaks:
        raise ValueError("no revival peaks found in the series")

    peak_times, peak_heights, widths, sig_estimates = [], [], [], []
    for j, p in enumerate(peaks):
        stop = peaks[j + 1] if j + 1 < len(peaks) else len(v)
        stop = p + int(np.argmin(v[p:stop])) + 1 if stop > p else p + 1
        flank = slice(p, stop)
        tau2 = (t[flank] - t[p]) ** 2
        vv = v[flank]
        keep = vv > max(1e-3, v[p] * math.exp(-4.5))
        if np.count_nonzero(keep) < 4:
            continue
        slope = np.polyfit(tau2[keep], np.log(vv[keep]), 1)[0]
        if slope >= 0.0:
            continue
        peak_times.append(t[p])
        peak_heights.append(v[p])
        widths.append(math.sqrt(-0.5 / slope))
        sig_estimates.append(math.sqrt(-0.5 * slope) / kappa)

    if not peak_times:
        raise ValueError("no collapse flank could be fitted")
    return CollapseFit(np.array(peak_times), np.array(peak_heights),
                       np.array(widths), np.array(sig_estimates))
