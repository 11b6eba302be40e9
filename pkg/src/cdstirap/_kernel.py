"""Compiled inner loops: field evaluation and fixed-step RK4.

Pulse table columns: amplitude, center, tau, omega, phase, is_sine.
CDF table columns: scale, pump_strength, stokes_strength, pump_center,
stokes_center, pump_tau, stokes_tau, omega, phase. ``scale`` already holds
lambda * sign * 2 / mu_bridge. Everything is in atomic units.
"""
import math

import numpy as np
from numba import njit

PULSE_COLS = 6
# exact phase recomputation interval; rotations accumulate rounding in between
RESYNC = 64
CDF_COLS = 9


@njit(cache=True, nogil=True)
def theta_rate(t, ep, es, tp, ts, taup, taus):
    if ep == 0.0 or es == 0.0:
        return 0.0
    xp = (t - tp) / taup
    xs = (t - ts) / taus
    m = min(xp * xp, xs * xs)
    gp = math.exp(m - xp * xp)
    gs = math.exp(m - xs * xs)
    slope = 2.0 * (xs / taus - xp / taup)
    return ep * es * gp * gs * slope / (ep * ep * gp * gp + es * es * gs * gs)


@njit(cache=True, nogil=True)
def field_at(t, pulses, cdfs):
    e = 0.0
    for k in range(pulses.shape[0]):
        amp = pulses[k, 0]
        if amp == 0.0:
            continue
        x = (t - pulses[k, 1]) / pulses[k, 2]
        ph = pulses[k, 3] * t + pulses[k, 4]
        if pulses[k, 5] != 0.0:
            e += amp * math.exp(-x * x) * math.sin(ph)
        else:
            e += amp * math.exp(-x * x) * math.cos(ph)
    for k in range(cdfs.shape[0]):
        scale = cdfs[k, 0]
        if scale == 0.0:
            continue
        rate = theta_rate(t, cdfs[k, 1], cdfs[k, 2], cdfs[k, 3], cdfs[k, 4], cdfs[k, 5], cdfs[k, 6])
        e += scale * rate * math.sin(cdfs[k, 7] * t + cdfs[k, 8])
    return e


@njit(cache=True, nogil=True)
def field_series(ts, pulses, cdfs):
    out = np.empty(ts.shape[0])
    for i in range(ts.shape[0]):
        out[i] = field_at(ts[i], pulses, cdfs)
    return out


@njit(cache=True, nogil=True, fastmath=True)
def _deriv(cre, cim, mu, eps, e, pre, pim, interaction, ore, oim, ure, uim):
    # interaction: dc_i = i E phi_i sum_j mu_ij conj(phi_j) c_j
    # schrodinger: dpsi_i = -i eps_i psi_i + i E sum_j mu_ij psi_j
    n = cre.shape[0]
    if interaction:
        for j in range(n):
            ure[j] = pre[j] * cre[j] + pim[j] * cim[j]
            uim[j] = pre[j] * cim[j] - pim[j] * cre[j]
        for i in range(n):
            vr = 0.0
            vi = 0.0
            for j in range(n):
                vr += mu[i, j] * ure[j]
                vi += mu[i, j] * uim[j]
            ore[i] = -e * (pre[i] * vi + pim[i] * vr)
            oim[i] = e * (pre[i] * vr - pim[i] * vi)
    else:
        for i in range(n):
            vr = 0.0
            vi = 0.0
            for j in range(n):
                vr += mu[i, j] * cre[j]
                vi += mu[i, j] * cim[j]
            ore[i] = -e * vi + eps[i] * cim[i]
            oim[i] = e * vr - eps[i] * cre[i]


@njit(cache=True, nogil=True)
def _phases(t, eps, pre, pim):
    for i in range(eps.shape[0]):
        a = eps[i] * t
        pre[i] = math.cos(a)
        pim[i] = math.sin(a)


@njit(cache=True, nogil=True)
def rk4_dipole(psi0, mu, eps, pulses, cdfs, t0, dt, nsteps, stride, interaction):
    """Propagate psi0 over nsteps RK4 steps of size dt from t0.

    Returns (psi_final, sample_times, sample_populations, sample_norms,
    max_norm_drift). Samples are taken at step 0, every ``stride`` steps and
    at the final step. ``eps`` are energies in Hartree.
    """
    n = psi0.shape[0]
    nsamp = nsteps // stride + 1
    if nsteps % stride != 0:
        nsamp += 1
    times = np.empty(nsamp)
    pops = np.empty((nsamp, n))
    norms = np.empty(nsamp)

    cre = psi0.real.copy()
    cim = psi0.imag.copy()
    tre = np.empty(n)
    tim = np.empty(n)
    k1r = np.empty(n)
    k1i = np.empty(n)
    k2r = np.empty(n)
    k2i = np.empty(n)
    k3r = np.empty(n)
    k3i = np.empty(n)
    k4r = np.empty(n)
    k4i = np.empty(n)
    ure = np.empty(n)
    uim = np.empty(n)
    p0r = np.empty(n)
    p0i = np.empty(n)
    phr = np.empty(n)
    phi = np.empty(n)
    p1r = np.empty(n)
    p1i = np.empty(n)
    hr = np.empty(n)
    hi = np.empty(n)
    for i in range(n):
        hr[i] = math.cos(0.5 * dt * eps[i])
        hi[i] = math.sin(0.5 * dt * eps[i])

    norm0 = 0.0
    for i in range(n):
        norm0 += cre[i] * cre[i] + cim[i] * cim[i]
    times[0] = t0
    for i in range(n):
        pops[0, i] = cre[i] * cre[i] + cim[i] * cim[i]
    norms[0] = norm0
    isamp = 1
    drift = 0.0

    _phases(t0, eps, p0r, p0i)
    e0 = field_at(t0, pulses, cdfs)
    half = 0.5 * dt
    for s in range(nsteps):
        t = t0 + s * dt
        tn = t0 + (s + 1) * dt
        eh = field_at(t + half, pulses, cdfs)
        e1 = field_at(tn, pulses, cdfs)
        for i in range(n):
            phr[i] = p0r[i] * hr[i] - p0i[i] * hi[i]
            phi[i] = p0r[i] * hi[i] + p0i[i] * hr[i]
        if (s + 1) % RESYNC == 0:
            _phases(tn, eps, p1r, p1i)
        else:
            for i in range(n):
                p1r[i] = phr[i] * hr[i] - phi[i] * hi[i]
                p1i[i] = phr[i] * hi[i] + phi[i] * hr[i]

        _deriv(cre, cim, mu, eps, e0, p0r, p0i, interaction, k1r, k1i, ure, uim)
        for i in range(n):
            tre[i] = cre[i] + half * k1r[i]
            tim[i] = cim[i] + half * k1i[i]
        _deriv(tre, tim, mu, eps, eh, phr, phi, interaction, k2r, k2i, ure, uim)
        for i in range(n):
            tre[i] = cre[i] + half * k2r[i]
            tim[i] = cim[i] + half * k2i[i]
        _deriv(tre, tim, mu, eps, eh, phr, phi, interaction, k3r, k3i, ure, uim)
        for i in range(n):
            tre[i] = cre[i] + dt * k3r[i]
            tim[i] = cim[i] + dt * k3i[i]
        _deriv(tre, tim, mu, eps, e1, p1r, p1i, interaction, k4r, k4i, ure, uim)

        nrm = 0.0
        for i in range(n):
            cre[i] += dt / 6.0 * (k1r[i] + 2.0 * k2r[i] + 2.0 * k3r[i] + k4r[i])
            cim[i] += dt / 6.0 * (k1i[i] + 2.0 * k2i[i] + 2.0 * k3i[i] + k4i[i])
            nrm += cre[i] * cre[i] + cim[i] * cim[i]
        d = abs(nrm - norm0)
        if d > drift:
            drift = d

        for i in range(n):
            p0r[i] = p1r[i]
            p0i[i] = p1i[i]
        e0 = e1

        if (s + 1) % stride == 0 or s + 1 == nsteps:
            times[isamp] = tn
            for i in range(n):
                pops[isamp, i] = cre[i] * cre[i] + cim[i] * cim[i]
            norms[isamp] = nrm
            isamp += 1

    psi = np.empty(n, dtype=np.complex128)
    for i in range(n):
        psi[i] = complex(cre[i], cim[i])
    return psi, times, pops, norms, drift


@njit(cache=True, nogil=True)
def rk4_tabulated(h_samples, psi0, dt, stride):
    """RK4 for i dpsi/dt = H(t) psi with H tabulated on a half-step grid.

    ``h_samples[2*s]`` is H at step s and ``h_samples[2*s+1]`` at the midpoint.
    """
    nsteps = (h_samples.shape[0] - 1) // 2
    n = psi0.shape[0]
    nsamp = nsteps // stride + 1
    if nsteps % stride != 0:
        nsamp += 1
    pops = np.empty((nsamp, n))
    idx = np.empty(nsamp, dtype=np.int64)
    psi = psi0.copy()
    for i in range(n):
        pops[0, i] = abs(psi[i]) ** 2
    idx[0] = 0
    isamp = 1
    norm0 = np.sum(np.abs(psi0) ** 2)
    drift = 0.0
    for s in range(nsteps):
        h0 = h_samples[2 * s]
        hm = h_samples[2 * s + 1]
        h1 = h_samples[2 * s + 2]
        k1 = -1j * (h0 @ psi)
        k2 = -1j * (hm @ (psi + 0.5 * dt * k1))
        k3 = -1j * (hm @ (psi + 0.5 * dt * k2))
        k4 = -1j * (h1 @ (psi + dt * k3))
        psi = psi + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        nrm = np.sum(np.abs(psi) ** 2)
        if abs(nrm - norm0) > drift:
            drift = abs(nrm - norm0)
        if (s + 1) % stride == 0 or s + 1 == nsteps:
            for i in range(n):
                pops[isamp, i] = abs(psi[i]) ** 2
            idx[isamp] = s + 1
            isamp += 1
    return psi, idx, pops, drift
