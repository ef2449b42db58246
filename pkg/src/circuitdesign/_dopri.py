"""Compiled Dormand-Prince 5(4) integrator for the augmented circuit system.

The integrated vector has 16 entries: the six species, the four running
production integrals (one per transcript column) and six running loss
integrals (degradation plus net binding, one per species).  Quadrature
entries share the error control of the species, so integrals carry the same
order of accuracy as the trajectory.
"""

import numpy as np
from numba import njit

from .model import _rhs

NS = 6
NV = 4
NW = NS + NV + NS

STATUS_OK = 0
STATUS_UNDERFLOW = 1
STATUS_NONFINITE = 2

# DOPRI5's real stability interval is about [-3.3, 0]
STIFF_LIMIT = 2.0

C2, C3, C4, C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
A21 = 1.0 / 5.0
A31, A32 = 3.0 / 40.0, 9.0 / 40.0
A41, A42, A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
A51, A52, A53, A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
A61, A62, A63, A64, A65 = (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0,
                           49.0 / 176.0, -5103.0 / 18656.0)
B1, B3, B4, B5, B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
E1, E3, E4, E5, E6, E7 = (71.0 / 57600.0, -71.0 / 16695.0, 71.0 / 1920.0,
                          -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0)


@njit(cache=True, nogil=True)
def _aug_rhs(w, Y, k, u, act, V, loss, dz, out):
    _rhs(w[:NS], Y, k, u, act, V, loss, dz)
    for i in range(NS):
        out[i] = dz[i]
        out[NS + NV + i] = loss[i]
    for j in range(NV):
        out[NS + j] = V[j]


@njit(cache=True, nogil=True)
def _stage_step(w, h, k1, Y, k, u, act, V, loss, dz, k2, k3, k4, k5, k6, k7, tmp, wnew):
    """One DOPRI step of size ``h``.

    Leaves the unscaled error vector in ``tmp`` and returns a stiffness
    estimate (spectral radius along the last stage).
    """
    n = w.shape[0]
    for i in range(n):
        tmp[i] = w[i] + h * A21 * k1[i]
    _aug_rhs(tmp, Y, k, u, act, V, loss, dz, k2)
    for i in range(n):
        tmp[i] = w[i] + h * (A31 * k1[i] + A32 * k2[i])
    _aug_rhs(tmp, Y, k, u, act, V, loss, dz, k3)
    for i in range(n):
        tmp[i] = w[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i])
    _aug_rhs(tmp, Y, k, u, act, V, loss, dz, k4)
    for i in range(n):
        tmp[i] = w[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
    _aug_rhs(tmp, Y, k, u, act, V, loss, dz, k5)
    for i in range(n):
        tmp[i] = w[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i]
                             + A65 * k5[i])
    _aug_rhs(tmp, Y, k, u, act, V, loss, dz, k6)
    # stiffness estimate |lambda| ~ |k7 - k6| / |wnew - w6| (Hairer & Wanner, IV.2)
    num = 0.0
    den = 0.0
    for i in range(n):
        wnew[i] = w[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i])
        den += (wnew[i] - tmp[i]) ** 2
    _aug_rhs(wnew, Y, k, u, act, V, loss, dz, k7)
    for i in range(n):
        num += (k7[i] - k6[i]) ** 2
    for i in range(n):
        tmp[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i]
                      + E7 * k7[i])
    if den > 0.0:
        return np.sqrt(num / den)
    return 0.0


@njit(cache=True, nogil=True)
def _err_norm(err, w, wnew, rtol, atol):
    n = w.shape[0]
    acc = 0.0
    for i in range(n):
        sc = atol + rtol * max(abs(w[i]), abs(wnew[i]))
        r = err[i] / sc
        acc += r * r
    return np.sqrt(acc / n)


@njit(cache=True, nogil=True)
def _residual(f, w):
    """Steady-state residual: max |dz| scaled by (1 + max |z|)."""
    fm = 0.0
    zm = 0.0
    for i in range(NS):
        fm = max(fm, abs(f[i]))
        zm = max(zm, abs(w[i]))
    return fm / (1.0 + zm)


@njit(cache=True, nogil=True)
def integrate_kernel(z0, Y, k, u, t_end, t_mark, rtol, atol, h_max, ss_tol,
                     stop_at_ss, record, out_idx):
    """Integrate from ``z0`` at t=0.

    Stops at ``t_end``, or earlier when ``stop_at_ss`` is set, a steady state
    has been seen and ``t >= t_mark``.  Returns a tuple

    (status, t, w, t_ss, w_ss, w_mark, n_clip, clip_mass,
     peak, t_peak, rows, n_rows, min_resid)

    ``w_mark`` is the augmented vector at ``t_mark`` (when reached),
    ``peak``/``t_peak`` the refined maximum of species ``out_idx``.
    """
    w = np.zeros(NW)
    for i in range(NS):
        w[i] = z0[i]
    act = np.empty(8)
    V = np.empty(NV)
    loss = np.empty(NS)
    dz = np.empty(NS)
    k1 = np.empty(NW)
    k2 = np.empty(NW)
    k3 = np.empty(NW)
    k4 = np.empty(NW)
    k5 = np.empty(NW)
    k6 = np.empty(NW)
    k7 = np.empty(NW)
    tmp = np.empty(NW)
    wnew = np.empty(NW)
    # scratch for peak bisection
    b2 = np.empty(NW)
    b3 = np.empty(NW)
    b4 = np.empty(NW)
    b5 = np.empty(NW)
    b6 = np.empty(NW)
    b7 = np.empty(NW)
    btmp = np.empty(NW)
    bw = np.empty(NW)

    cap = 1024 if record else 1
    rows = np.empty((cap, NW + 1))
    n_rows = 0

    t = 0.0
    status = STATUS_OK
    n_clip = 0
    clip_mass = 0.0
    t_ss = -1.0
    w_ss = np.zeros(NW)
    w_mark = np.full(NW, np.nan)
    mark_done = t_mark <= 0.0
    if mark_done:
        w_mark[:] = w

    _aug_rhs(w, Y, k, u, act, V, loss, dz, k1)
    for i in range(NW):
        if not np.isfinite(k1[i]):
            status = STATUS_NONFINITE
    min_resid = _residual(k1, w)
    if min_resid < ss_tol:
        t_ss = 0.0
        w_ss[:] = w

    peak = -np.inf
    t_peak = 0.0
    if out_idx >= 0:
        peak = w[out_idx]

    if record:
        rows[0, 0] = t
        rows[0, 1:] = w
        n_rows = 1

    # initial step size (Hairer, Norsett & Wanner, II.4)
    d0 = 0.0
    d1 = 0.0
    for i in range(NW):
        sc = atol + rtol * abs(w[i])
        d0 += (w[i] / sc) ** 2
        d1 += (k1[i] / sc) ** 2
    d0 = np.sqrt(d0 / NW)
    d1 = np.sqrt(d1 / NW)
    if d0 < 1e-5 or d1 < 1e-5:
        h = 1e-6
    else:
        h = 0.01 * d0 / d1
    h = min(h, h_max, t_end)

    stop = status != STATUS_OK
    if stop_at_ss and t_ss >= 0.0 and mark_done:
        stop = True
    last_rejected = False
    while not stop and t < t_end:
        if h < 1e-12 * max(1.0, t):
            status = STATUS_UNDERFLOW
            break
        target = t_end
        if not mark_done and t_mark < target:
            target = t_mark
        hit = False
        if t + h >= target * (1.0 - 1e-14):
            h = target - t
            hit = True
        rho = _stage_step(w, h, k1, Y, k, u, act, V, loss, dz, k2, k3, k4, k5, k6, k7, tmp, wnew)
        err = _err_norm(tmp, w, wnew, rtol, atol)
        if not np.isfinite(err):
            # try a much smaller step before declaring failure
            h *= 0.1
            last_rejected = True
            continue
        if err > 1.0:
            fac = max(0.2, 0.9 * err ** -0.2)
            h *= fac
            last_rejected = True
            continue

        # accepted
        t_new = target if hit else t + h
        if out_idx >= 0 and k1[out_idx] > 0.0 and k7[out_idx] < 0.0:
            # bracket the output maximum by bisection on the sign of its derivative
            lo = 0.0
            hi = 1.0
            for _ in range(40):
                mid = 0.5 * (lo + hi)
                _stage_step(w, mid * h, k1, Y, k, u, act, V, loss, dz,
                            b2, b3, b4, b5, b6, b7, btmp, bw)
                if b7[out_idx] > 0.0:
                    lo = mid
                else:
                    hi = mid
                if hi - lo < 1e-12:
                    break
            _stage_step(w, 0.5 * (lo + hi) * h, k1, Y, k, u, act, V, loss, dz,
                        b2, b3, b4, b5, b6, b7, btmp, bw)
            if bw[out_idx] > peak:
                peak = bw[out_idx]
                t_peak = t + 0.5 * (lo + hi) * h

        clipped = False
        for i in range(NS):
            if wnew[i] < 0.0:
                clip_mass += -wnew[i]
                wnew[i] = 0.0
                clipped = True
        if clipped:
            n_clip += 1
            _aug_rhs(wnew, Y, k, u, act, V, loss, dz, k7)

        finite = True
        for i in range(NW):
            if not (np.isfinite(wnew[i]) and np.isfinite(k7[i])):
                finite = False
        if not finite:
            status = STATUS_NONFINITE
            t = t_new
            break

        t = t_new
        w[:] = wnew
        k1[:] = k7

        if out_idx >= 0 and w[out_idx] > peak:
            peak = w[out_idx]
            t_peak = t
        if record:
            if n_rows >= cap:
                grown = np.empty((cap * 2, NW + 1))
                grown[:cap] = rows
                rows = grown
                cap *= 2
            rows[n_rows, 0] = t
            rows[n_rows, 1:] = w
            n_rows += 1
        if not mark_done and hit and target == t_mark:
            mark_done = True
            w_mark[:] = w

        res = _residual(k1, w)
        if res < min_resid:
            min_resid = res
        if t_ss < 0.0 and res < ss_tol:
            t_ss = t
            w_ss[:] = w
        if stop_at_ss and t_ss >= 0.0 and mark_done:
            stop = True

        fac = 0.9 * err ** -0.2 if err > 0.0 else 10.0
        fac = min(10.0, max(0.2, fac))
        if last_rejected:
            fac = min(1.0, fac)
        last_rejected = False
        h = min(h * fac, h_max)
        if rho > 0.0:
            # keep h*|lambda| well inside the stability region so stiff modes decay
            h = min(h, STIFF_LIMIT / rho)

    return (status, t, w, t_ss, w_ss, w_mark, n_clip, clip_mass,
            peak, t_peak, rows[:n_rows].copy(), n_rows, min_resid)
