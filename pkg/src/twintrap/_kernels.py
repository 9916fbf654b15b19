"""Compiled trajectory event loop.

The effective evolution is diagonal in the number-difference basis with
per-component decay rates that are affine in the index k,

    Gamma_k = Gamma_0 + slope * k,

where the slope collects the loss/gain asymmetry between the traps.
The kernel advances jumps exactly: waiting times come from a scalar
logarithm when the slope vanishes and otherwise from a bracketed
secant/bisection solve of the norm decay; collisional phases are
applied mod 2 pi.  When additionally kappa = 0 and the slope is zero,
the state ray never changes between jumps and per-interval observables
are cached.

Uniform random numbers are consumed from a pre-drawn block in the same
order as the pure-Python loop in ensemble.py (waiting draw, channel
draw, detection-phase draw), so both backends walk identical random
streams; floating-point summation order differs slightly, so
trajectories agree closely but not bitwise.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

TWO_PI = 2.0 * math.pi


@njit(cache=True)
def _decayed(c, k_min, b1, b2, gam0, slope, kappa, dt):
    """Amplitudes after no-jump evolution for dt (unnormalized)."""
    nc = len(c)
    out = np.empty(nc, dtype=np.complex128)
    for i in range(nc):
        kk = float(k_min + i)
        factor = math.exp(-0.5 * dt * (gam0 + slope * kk))
        if kappa != 0.0:
            occ1 = b1 - kk
            occ2 = b2 + kk
            phase = (0.5 * kappa * (occ1 * occ1 + occ2 * occ2) * dt) \
                % TWO_PI
            out[i] = c[i] * complex(factor * math.cos(phase),
                                    -factor * math.sin(phase))
        else:
            out[i] = c[i] * factor
    return out


@njit(cache=True)
def _waiting_time(c, k_min, gam0, slope, r):
    """Solve sum_k w_k exp(-Gamma_k t) = r for the normalized weights."""
    nc = len(c)
    if slope == 0.0:
        if gam0 <= 0.0:
            return math.inf
        return -math.log(r) / gam0
    g_lo = gam0 + slope * k_min
    g_hi = gam0 + slope * (k_min + nc - 1)
    gmin = g_lo if g_lo < g_hi else g_hi
    gmax = g_hi if g_hi > g_lo else g_lo
    if gmax <= 0.0:
        return math.inf
    if r >= 1.0:
        return 0.0
    s = 0.0
    for i in range(nc):
        s += c[i].real * c[i].real + c[i].imag * c[i].imag
    if gmin == gmax:
        return -math.log(r) / gmax
    dark = 0.0
    gpos = gmax
    for i in range(nc):
        g = gam0 + slope * (k_min + i)
        if g <= 0.0:
            dark += (c[i].real * c[i].real + c[i].imag * c[i].imag) / s
        elif g < gpos:
            gpos = g
    if r <= dark:
        return math.inf
    lo = -math.log(r) / gmax
    if gmin > 0.0:
        hi = -math.log(r) / gmin
    else:
        hi = -math.log((r - dark) / (1.0 - dark)) / gpos

    def f(t):
        acc = 0.0
        for i in range(nc):
            w = (c[i].real * c[i].real + c[i].imag * c[i].imag) / s
            acc += w * math.exp(-(gam0 + slope * (k_min + i)) * t)
        return acc - r

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
        if not (lo < t < hi):
            t = 0.5 * (lo + hi)
        ft = f(t)
        if ft > 0.0:
            lo, flo = t, ft
            if side == 1:
                fhi *= 0.5
            side = 1
        elif ft < 0.0:
            hi, fhi = t, ft
            if side == -1:
                flo *= 0.5
            side = -1
        else:
            return t
    return 0.5 * (lo + hi)


@njit(cache=True)
def _row(c, k_min, b1, b2):
    """Observables of an (unnormalized) amplitude vector."""
    nc = len(c)
    ntot = b1 + b2
    s = 0.0
    sk = 0.0
    sk2 = 0.0
    for i in range(nc):
        w = c[i].real * c[i].real + c[i].imag * c[i].imag
        kk = float(k_min + i)
        s += w
        sk += w * kk
        sk2 += w * kk * kk
    kmean = sk / s
    k2m = sk2 / s
    n1m = b1 - kmean
    n2m = b2 + kmean
    n1sq = b1 * b1 - 2.0 * b1 * kmean + k2m
    n2sq = b2 * b2 + 2.0 * b2 * kmean + k2m
    vard = 4.0 * (k2m - kmean * kmean)
    sigma_n = math.sqrt(vard) if vard > 0.0 else 0.0
    f = (n1m - n2m) / ntot if ntot > 0 else 0.0
    coh = 0.0 + 0.0j
    ov = 0.0 + 0.0j
    for i in range(nc - 1):
        kk = float(k_min + i)
        pair = c[i].conjugate() * c[i + 1]
        ov += pair
        coh += pair * math.sqrt((b1 - kk) * (b2 + kk + 1.0))
    coh /= s
    ovm = abs(ov) / s
    beta = 2.0 * abs(coh) / ntot if ntot > 0 else 0.0
    theta = -math.atan2(coh.imag, coh.real) if beta > 0.0 else 0.0
    arg = 1.0 - ovm * ovm
    sigma_phi = math.sqrt(arg) if arg > 0.0 else 0.0
    return n1m, n2m, n1sq, n2sq, f, beta, theta, sigma_n, sigma_phi, coh


@njit(cache=True)
def event_loop(c, b1, b2, k_min, gamma, kappa, l1, l2, g1, g2, stim,
               uniforms, u_pos, t_cur, t_stop, fill_limit, times, g_idx,
               rows, coh_row, truncation):
    """Advance jumps while t <= t_stop, writing grid samples on the way.

    rows holds the per-grid-point observables (n1, n2, n1_sq, n2_sq, f,
    beta, theta, sigma_n, sigma_phi) and coh_row the complex coherence;
    grid points strictly below fill_limit are written.  Returns the
    state and cursors plus flags: done (reached t_stop rather than
    running low on uniforms) and halted (no channel has positive rate).
    """
    n_grid = len(times)
    n_u = len(uniforms)
    if stim:
        slope = (l2 + g2) - (l1 + g1)
    else:
        slope = l2 - l1
    static = slope == 0.0 and kappa == 0.0
    row_valid = False
    r_n1 = r_n2 = r_n1sq = r_n2sq = r_f = 0.0
    r_beta = r_theta = r_sn = r_sphi = 0.0
    r_coh = 0.0 + 0.0j
    halted = False
    while True:
        if u_pos + 3 > n_u:
            return c, b1, b2, k_min, t_cur, g_idx, u_pos, False, halted
        ntot = b1 + b2
        if stim:
            gam0 = (gamma * ntot + l1 * b1 + l2 * b2
                    + g1 * (b1 + 1.0) + g2 * (b2 + 1.0))
        else:
            gam0 = gamma * ntot + l1 * b1 + l2 * b2 + g1 + g2
        r = 1.0 - uniforms[u_pos]
        u_pos += 1
        wait = _waiting_time(c, k_min, gam0, slope, r)
        t_event = t_cur + wait if math.isfinite(wait) else math.inf

        if g_idx < n_grid and times[g_idx] < t_event \
                and times[g_idx] < fill_limit:
            if static:
                if not row_valid:
                    (r_n1, r_n2, r_n1sq, r_n2sq, r_f, r_beta, r_theta,
                     r_sn, r_sphi, r_coh) = _row(c, k_min, b1, b2)
                    row_valid = True
                while g_idx < n_grid and times[g_idx] < t_event \
                        and times[g_idx] < fill_limit:
                    rows[0, g_idx] = r_n1
                    rows[1, g_idx] = r_n2
                    rows[2, g_idx] = r_n1sq
                    rows[3, g_idx] = r_n2sq
                    rows[4, g_idx] = r_f
                    rows[5, g_idx] = r_beta
                    rows[6, g_idx] = r_theta
                    rows[7, g_idx] = r_sn
                    rows[8, g_idx] = r_sphi
                    coh_row[g_idx] = r_coh
                    g_idx += 1
            else:
                while g_idx < n_grid and times[g_idx] < t_event \
                        and times[g_idx] < fill_limit:
                    cg = _decayed(c, k_min, b1, b2, gam0, slope, kappa,
                                  times[g_idx] - t_cur)
                    (rows[0, g_idx], rows[1, g_idx], rows[2, g_idx],
                     rows[3, g_idx], rows[4, g_idx], rows[5, g_idx],
                     rows[6, g_idx], rows[7, g_idx], rows[8, g_idx],
                     coh_row[g_idx]) = _row(cg, k_min, b1, b2)
                    g_idx += 1

        if t_event > t_stop:
            halted = not math.isfinite(t_event)
            return c, b1, b2, k_min, t_cur, g_idx, u_pos, True, halted

        # state at the jump instant
        if static:
            cw = c
        else:
            cw = _decayed(c, k_min, b1, b2, gam0, slope, kappa, wait)
        nc = len(cw)
        s = 0.0
        sk = 0.0
        for i in range(nc):
            w = cw[i].real * cw[i].real + cw[i].imag * cw[i].imag
            s += w
            sk += w * (k_min + i)
        s1 = b1 * s - sk
        s2 = b2 * s + sk
        rate_det = gamma * ntot * s
        rl1 = l1 * s1
        rl2 = l2 * s2
        if stim:
            rg1 = g1 * (s1 + s)
            rg2 = g2 * (s2 + s)
        else:
            rg1 = g1 * s
            rg2 = g2 * s
        x = uniforms[u_pos] * (rate_det + rl1 + rl2 + rg1 + rg2)
        u_pos += 1
        if x < rate_det:
            coh = 0.0 + 0.0j
            for i in range(nc - 1):
                kk = float(k_min + i)
                coh += cw[i].conjugate() * cw[i + 1] * math.sqrt(
                    (b1 - kk) * (b2 + kk + 1.0))
            beta = 2.0 * abs(coh) / (ntot * s)
            theta = -math.atan2(coh.imag, coh.real) if beta > 0.0 else 0.0
            u = uniforms[u_pos]
            u_pos += 1
            if beta == 0.0:
                phi = TWO_PI * u
            else:
                target = TWO_PI * u
                sin0 = math.sin(theta)
                lo = 0.0
                hi = TWO_PI
                while hi - lo > 1e-10:
                    mid = 0.5 * (lo + hi)
                    if mid + beta * (math.sin(mid + theta) - sin0) < target:
                        lo = mid
                    else:
                        hi = mid
                phi = 0.5 * (lo + hi)
                if phi >= TWO_PI:
                    phi = 0.0
            new = np.empty(nc + 1, dtype=np.complex128)
            ephi = complex(math.cos(phi), -math.sin(phi))
            new[0] = 0.0
            for i in range(nc):
                kk = float(k_min + i)
                new[i + 1] = math.sqrt(b1 - kk) * cw[i]
            for i in range(nc):
                kk = float(k_min + i)
                new[i] += ephi * math.sqrt(b2 + kk) * cw[i]
            c = new
            b1 -= 1
            k_min -= 1
        elif x < rate_det + rl1:
            out = np.empty(nc, dtype=np.complex128)
            for i in range(nc):
                out[i] = cw[i] * math.sqrt(b1 - (k_min + i))
            c = out
            b1 -= 1
        elif x < rate_det + rl1 + rl2:
            out = np.empty(nc, dtype=np.complex128)
            for i in range(nc):
                out[i] = cw[i] * math.sqrt(b2 + (k_min + i))
            c = out
            b2 -= 1
        elif x < rate_det + rl1 + rl2 + rg1:
            out = np.empty(nc, dtype=np.complex128)
            for i in range(nc):
                out[i] = cw[i] * math.sqrt(b1 - (k_min + i) + 1.0)
            c = out
            b1 += 1
        else:
            out = np.empty(nc, dtype=np.complex128)
            for i in range(nc):
                out[i] = cw[i] * math.sqrt(b2 + (k_min + i) + 1.0)
            c = out
            b2 += 1

        # trim ends, renormalize, canonical global phase
        nc = len(c)
        norm2 = 0.0
        for i in range(nc):
            norm2 += c[i].real * c[i].real + c[i].imag * c[i].imag
        if norm2 <= 0.0:
            raise ValueError("jump channel annihilated the state")
        cut2 = max(truncation * truncation * norm2, 5e-324)
        lo_i = 0
        while lo_i < nc:
            m2 = (c[lo_i].real * c[lo_i].real
                  + c[lo_i].imag * c[lo_i].imag)
            if m2 >= cut2:
                break
            lo_i += 1
        hi_i = nc
        while hi_i > lo_i:
            m2 = (c[hi_i - 1].real * c[hi_i - 1].real
                  + c[hi_i - 1].imag * c[hi_i - 1].imag)
            if m2 >= cut2:
                break
            hi_i -= 1
        nkeep = hi_i - lo_i
        kept = np.empty(nkeep, dtype=np.complex128)
        norm2k = 0.0
        best = 0
        bestm = -1.0
        for i in range(nkeep):
            v = c[lo_i + i]
            kept[i] = v
            m2 = v.real * v.real + v.imag * v.imag
            norm2k += m2
            if m2 > bestm:
                bestm = m2
                best = i
        inv = 1.0 / math.sqrt(norm2k)
        for i in range(nkeep):
            kept[i] = kept[i] * inv
        pj = kept[best]
        mag = abs(pj)
        if mag > 0.0:
            rot = pj.conjugate() / mag
            for i in range(nkeep):
                kept[i] = kept[i] * rot
        c = kept
        k_min += lo_i
        row_valid = False
        t_cur = t_event
