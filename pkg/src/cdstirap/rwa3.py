"""Three-level rotating-frame model: dark state and exact counter-diabatic term.

This is the reference the full-manifold propagator is checked against in the
decoupled-subset limit. It never sees carriers, so its step can be ~1000x
larger than the full propagator's.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import _kernel
from .dynamics import MAX_NORM_DRIFT, IntegrationDiverged, PropagationResult, default_window
from .pulse import StirapDrive, mixing_angle, mixing_angle_rate, rabi
from .spectro import UNITS, au_to_ps, ps_to_au

LABELS = ["initial", "intermediate", "target"]


@dataclass(frozen=True)
class Rwa3System:
    omega_p: Callable
    omega_s: Callable
    include_cd: bool = False
    cd_rate: Optional[Callable] = None
    peak_p: Optional[float] = None
    peak_s: Optional[float] = None

    def __post_init__(self):
        if self.include_cd and self.cd_rate is None:
            raise ValueError("include_cd needs a cd_rate function")

    @classmethod
    def from_drive(cls, drive: StirapDrive, include_cd: bool = False) -> "Rwa3System":
        def rate(t):
            return mixing_angle_rate(drive, t)
        return cls(rabi(drive.pump, drive.mu_pump), rabi(drive.stokes, drive.mu_stokes),
                   include_cd, rate if include_cd else None,
                   abs(drive.peak_rabi_pump), abs(drive.peak_rabi_stokes))


def h_rwa(s: Rwa3System, t) -> np.ndarray:
    """-hbar [[0,Wp,0],[Wp,0,Ws],[0,Ws,0]] plus, optionally, hbar*dTheta/dt on (1,3)."""
    t = np.asarray(t, dtype=float)
    wp = np.broadcast_to(s.omega_p(t), t.shape)
    ws = np.broadcast_to(s.omega_s(t), t.shape)
    h = np.zeros(t.shape + (3, 3), dtype=complex)
    h[..., 0, 1] = h[..., 1, 0] = -UNITS.hbar * wp
    h[..., 1, 2] = h[..., 2, 1] = -UNITS.hbar * ws
    if s.include_cd:
        rate = np.broadcast_to(s.cd_rate(t), t.shape)
        h[..., 0, 2] = 1j * UNITS.hbar * rate
        h[..., 2, 0] = -1j * UNITS.hbar * rate
    return h


def dark_state(s: Rwa3System, t) -> np.ndarray:
    """(cos Theta, 0, -sin Theta) with tan Theta = Omega_p/Omega_S."""
    wp = float(s.omega_p(t))
    ws = float(s.omega_s(t))
    if wp == 0 and ws == 0:
        raise ValueError("dark state undefined: both Rabi frequencies vanish")
    theta = math.atan2(wp, ws)
    return np.array([math.cos(theta), 0.0, -math.sin(theta)])


def dark_state_of_drive(drive: StirapDrive, t) -> np.ndarray:
    """Dark state from the underflow-safe mixing angle; t may be an array."""
    theta = np.asarray(mixing_angle(drive, t))
    return np.stack([np.cos(theta), np.zeros_like(theta), -np.sin(theta)], axis=-1)


def adiabaticity_metric(s: Rwa3System, delta_t: float, window=None) -> float:
    """Delta T * sqrt(Omega_S,peak^2 + Omega_p,peak^2), all in atomic units.

    Uses the stored peaks when present, otherwise samples ``window`` (ps).
    """
    wp, ws = s.peak_p, s.peak_s
    if wp is None or ws is None:
        if window is None:
            raise ValueError("peak Rabi frequencies unknown; pass a window to sample")
        grid = np.linspace(ps_to_au(window[0]), ps_to_au(window[1]), 20001)
        wp = float(np.max(np.abs(s.omega_p(grid))))
        ws = float(np.max(np.abs(s.omega_s(grid))))
    return abs(delta_t) * math.hypot(wp, ws)


def drive_adiabaticity(drive: StirapDrive) -> float:
    return adiabaticity_metric(Rwa3System.from_drive(drive), ps_to_au(drive.delay))


def propagate_rwa3(s: Rwa3System, window, dt: float, sample_interval: float = 0.25,
                   psi0=None) -> PropagationResult:
    """RK4 in the rotating frame over ``window`` (ps, ps) with step ``dt`` (a.u.)."""
    t0, t1 = ps_to_au(window[0]), ps_to_au(window[1])
    if not t1 > t0 or not dt > 0:
        raise ValueError("need t1 > t0 and dt > 0")
    nsteps = max(1, math.ceil((t1 - t0) / dt - 1e-9))
    dt = (t1 - t0) / nsteps
    ts = t0 + 0.5 * dt * np.arange(2 * nsteps + 1)
    hs = np.ascontiguousarray(h_rwa(s, ts))
    psi = np.array([1, 0, 0], dtype=complex) if psi0 is None else np.asarray(psi0, dtype=complex)
    stride = max(1, int(round(ps_to_au(sample_interval) / dt)))
    final, idx, pops, drift = _kernel.rk4_tabulated(hs, psi, dt, stride)
    if drift > MAX_NORM_DRIFT:
        raise IntegrationDiverged(drift, dt)
    return PropagationResult(list(LABELS), au_to_ps(t0 + dt * idx), pops, final, float(drift), dt)


def propagate_drive_rwa3(drive: StirapDrive, include_cd: bool = False, window=None,
                         dt: Optional[float] = None) -> PropagationResult:
    """Convenience wrapper: default window as the full propagator, dt = tau/1000."""
    window = window or default_window(drive)
    dt = dt or min(drive.pump.tau_au, drive.stokes.tau_au) / 1000.0
    return propagate_rwa3(Rwa3System.from_drive(drive, include_cd), window, dt)


def fidelity_rwa3(result: PropagationResult) -> float:
    return float(result.populations[-1, 2])
