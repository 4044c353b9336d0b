"""Compiled inner loop: fixed-step RK4 over the centre-of-inertia model.

Everything here works on flat arrays so numba can compile it. The public,
object-level API lives in :mod:`gridfreq.grid` and :mod:`gridfreq.controllers`;
those call the scalar helpers below so there is one implementation of each
control law.
"""
import numpy as np
from numba import njit

PFC_OFF = 0
PFC_DROOP = 1
PFC_CURVE = 2


@njit(cache=True)
def pfc_command(dfv, mode, db, gain, up, dn, down_only, cx, cy, cn, contracted):
    """Primary response (MW) of one resource to a deviation ``dfv`` in Hz."""
    if mode == PFC_OFF:
        return 0.0
    excess = abs(dfv) - db
    if excess <= 0.0:
        return 0.0
    if mode == PFC_DROOP:
        if dfv > 0.0:
            dp = -gain * excess
        else:
            dp = gain * excess
    else:
        dp = np.interp(dfv * 1000.0, cx[:cn], cy[:cn]) * contracted
    if dp > up:
        dp = up
    elif dp < -dn:
        dp = -dn
    if down_only and dp > 0.0:
        dp = 0.0
    return dp


@njit(cache=True)
def ramped_setpoint(sp0, sp1, trel, ramp_in, rate):
    """Linear ramp from ``sp0`` to ``sp1`` over ``ramp_in`` s, capped at ``rate`` MW/s."""
    if trel <= 0.0:
        return sp0
    delta = sp1 - sp0
    if ramp_in > 0.0 and trel < ramp_in:
        move = delta * (trel / ramp_in)
    else:
        move = delta
    lim = rate * trel
    if move > lim:
        move = lim
    elif move < -lim:
        move = -lim
    return sp0 + move


@njit(cache=True)
def _derivatives(df, p, sp, agc, online, pmin, pmax, tau, rate, pref,
                 mode, db, gain, up, dn, down_only, cx, cy, cn, contracted,
                 dist, offset, m, dmw, dp_out):
    mech = 0.0
    for i in range(p.shape[0]):
        mech += p[i] - pref[i]
        if online[i]:
            cmd = sp[i] + agc[i] + pfc_command(df, mode[i], db[i], gain[i], up[i], dn[i],
                                               down_only[i], cx[i], cy[i], cn[i], contracted[i])
            if cmd > pmax[i]:
                cmd = pmax[i]
            elif cmd < pmin[i]:
                cmd = pmin[i]
            r = (cmd - p[i]) / tau[i]
            if r > rate[i]:
                r = rate[i]
            elif r < -rate[i]:
                r = -rate[i]
            dp_out[i] = r
        else:
            dp_out[i] = 0.0
    return (mech + offset - dist - dmw * df) / m


@njit(cache=True)
def integrate(n, k0, dt, f0, m, dmw, offset, dist,
              state, p, pref, online, pmin, pmax, tau, rate,
              mode, db, gain, up, dn, down_only, cx, cy, cn, contracted,
              sp0, sp1, t_ramp0, ramp_in, agc,
              out_df, out_te, out_pfc, out_agc, out_sp):
    """Advance ``n`` RK4 steps in place.

    ``k0`` is the global index of the first step, so time is ``(k0 + k) * dt``
    however a run is split into calls. ``state`` holds ``[delta_f (Hz), time_error (s)]``; ``p`` the resource
    outputs (MW). ``dist[k]`` is the net load disturbance held over step k.
    Samples are recorded *before* each step. Returns ``(k, who)`` for the
    first non-finite step (``who == -1`` means delta_f), or ``(-1, -1)``.
    """
    nres = p.shape[0]
    sp = np.empty(nres)
    k1 = np.empty(nres)
    k2 = np.empty(nres)
    k3 = np.empty(nres)
    k4 = np.empty(nres)
    ptmp = np.empty(nres)
    df = state[0]
    te = state[1]
    for k in range(n):
        t = (k0 + k) * dt
        pfc_sum = 0.0
        agc_sum = 0.0
        sp_sum = 0.0
        for i in range(nres):
            sp[i] = ramped_setpoint(sp0[i], sp1[i], t - t_ramp0, ramp_in, rate[i])
            if online[i]:
                pfc_sum += pfc_command(df, mode[i], db[i], gain[i], up[i], dn[i],
                                       down_only[i], cx[i], cy[i], cn[i], contracted[i])
                agc_sum += agc[i]
                sp_sum += sp[i]
        out_df[k] = df
        out_te[k] = te
        out_pfc[k] = pfc_sum
        out_agc[k] = agc_sum
        out_sp[k] = sp_sum

        d = dist[k]
        a1 = _derivatives(df, p, sp, agc, online, pmin, pmax, tau, rate, pref, mode, db, gain,
                          up, dn, down_only, cx, cy, cn, contracted, d, offset, m, dmw, k1)
        for i in range(nres):
            ptmp[i] = p[i] + 0.5 * dt * k1[i]
        f2 = df + 0.5 * dt * a1
        a2 = _derivatives(f2, ptmp, sp, agc, online, pmin, pmax, tau, rate, pref, mode, db, gain,
                          up, dn, down_only, cx, cy, cn, contracted, d, offset, m, dmw, k2)
        for i in range(nres):
            ptmp[i] = p[i] + 0.5 * dt * k2[i]
        f3 = df + 0.5 * dt * a2
        a3 = _derivatives(f3, ptmp, sp, agc, online, pmin, pmax, tau, rate, pref, mode, db, gain,
                          up, dn, down_only, cx, cy, cn, contracted, d, offset, m, dmw, k3)
        for i in range(nres):
            ptmp[i] = p[i] + dt * k3[i]
        f4 = df + dt * a3
        a4 = _derivatives(f4, ptmp, sp, agc, online, pmin, pmax, tau, rate, pref, mode, db, gain,
                          up, dn, down_only, cx, cy, cn, contracted, d, offset, m, dmw, k4)

        te += dt / 6.0 * (df + 2.0 * f2 + 2.0 * f3 + f4) / f0
        df += dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4)
        for i in range(nres):
            p[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            if not np.isfinite(p[i]):
                state[0] = df
                state[1] = te
                return k, i
        if not np.isfinite(df):
            state[0] = df
            state[1] = te
            return k, -1
    state[0] = df
    state[1] = te
    return -1, -1
