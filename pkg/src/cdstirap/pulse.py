"""Gaussian pump/Stokes pulses, mixing angle and the counter-diabatic field.

Pulse records carry lab-friendly units (ps, cm^-1). Every function that
takes a time expects atomic units and works on scalars or numpy arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import integrate

from .spectro import UNITS, cm1_to_hartree, ps_to_au

SQRT_LN2 = math.sqrt(math.log(2.0))

COSINE = "cosine"
SINE = "sine"


def fwhm_to_tau(fwhm):
    """Gaussian width parameter for exp(-(t-T)^2/tau^2) from its FWHM."""
    return fwhm / (2.0 * SQRT_LN2)


def pulse_interval(fwhm, eta=1.0):
    """Pump-minus-Stokes delay FWHM/(2 eta sqrt(ln 2))."""
    return fwhm / (2.0 * eta * SQRT_LN2)


@dataclass(frozen=True)
class GaussianPulse:
    amplitude: float  # a.u.
    center: float  # ps
    fwhm: float  # ps
    carrier_freq: float = 0.0  # cm^-1
    carrier_phase: float = 0.0
    waveform: str = COSINE

    def __post_init__(self):
        if not self.fwhm > 0:
            raise ValueError(f"fwhm must be positive, got {self.fwhm}")
        if not self.amplitude >= 0:
            raise ValueError(f"amplitude must be >= 0, got {self.amplitude}")
        if self.waveform not in (COSINE, SINE):
            raise ValueError(f"waveform must be {COSINE!r} or {SINE!r}")

    @property
    def tau(self) -> float:
        """Width parameter in ps."""
        return fwhm_to_tau(self.fwhm)

    @property
    def center_au(self) -> float:
        return ps_to_au(self.center)

    @property
    def tau_au(self) -> float:
        return ps_to_au(self.tau)

    @property
    def omega_au(self) -> float:
        return cm1_to_hartree(self.carrier_freq)

    def scaled(self, factor: float) -> "GaussianPulse":
        return replace(self, amplitude=self.amplitude * factor)


def envelope(p: GaussianPulse, t):
    x = (np.asarray(t, dtype=float) - p.center_au) / p.tau_au
    return p.amplitude * np.exp(-x * x)


def carrier(p: GaussianPulse, t):
    phase = p.omega_au * np.asarray(t, dtype=float) + p.carrier_phase
    return np.cos(phase) if p.waveform == COSINE else np.sin(phase)


def pulse_field(p: GaussianPulse, t):
    return envelope(p, t) * carrier(p, t)


def rabi(p: GaussianPulse, mu: float):
    """Rabi frequency mu*E(t)/(2 hbar) as a function of time (a.u.)."""
    def omega(t):
        return mu * envelope(p, t) / (2.0 * UNITS.hbar)
    return omega


@dataclass(frozen=True)
class StirapDrive:
    pump: GaussianPulse
    stokes: GaussianPulse
    mu_pump: float
    mu_stokes: float
    mu_bridge: float = 0.0
    cdf_carrier: float = 0.0  # cm^-1
    cdf_sign: int = 1
    lam: float = 0.0
    eta: float = 1.0
    cdf_phase: float = 0.0
    # False keeps pump/Stokes only as the shape behind the CDF (CDF-alone control)
    stirap_on: bool = True

    def __post_init__(self):
        if self.cdf_sign not in (1, -1):
            raise ValueError("cdf_sign must be +1 or -1")
        if not self.lam >= 0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")
        if not self.eta > 0:
            raise ValueError(f"eta must be positive, got {self.eta}")
        if self.lam > 0 and self.mu_bridge == 0:
            raise ValueError("a counter-diabatic field needs a nonzero bridge TDM")
        if self.pump.fwhm == self.stokes.fwhm:
            want = pulse_interval(self.pump.fwhm, self.eta)
            got = self.pump.center - self.stokes.center
            if not math.isclose(got, want, rel_tol=1e-9, abs_tol=1e-12):
                raise ValueError(f"pump-Stokes delay {got} ps inconsistent with eta={self.eta} (want {want} ps)")

    @property
    def delay(self) -> float:
        """T_p - T_S in ps."""
        return self.pump.center - self.stokes.center

    @property
    def t_mid(self) -> float:
        return 0.5 * (self.pump.center + self.stokes.center)

    @property
    def pump_strength(self) -> float:
        """Peak mu*E for the pump (twice the peak Rabi frequency)."""
        return self.pump.amplitude * self.mu_pump

    @property
    def stokes_strength(self) -> float:
        return self.stokes.amplitude * self.mu_stokes

    @property
    def peak_rabi_pump(self) -> float:
        return self.pump_strength / (2.0 * UNITS.hbar)

    @property
    def peak_rabi_stokes(self) -> float:
        return self.stokes_strength / (2.0 * UNITS.hbar)

    def with_lambda(self, lam: float) -> "StirapDrive":
        return replace(self, lam=lam)


def make_drive(pump_amp, stokes_amp, fwhm, mu_pump, mu_stokes, *, mu_bridge=0.0,
               pump_freq=0.0, stokes_freq=0.0, cdf_carrier=0.0, cdf_sign=1,
               lam=0.0, eta=1.0, stokes_center=0.0, pump_phase=0.0,
               stokes_phase=0.0, cdf_phase=0.0, waveform=COSINE, stirap_on=True) -> StirapDrive:
    """Counterintuitive pair with the pump delayed by FWHM/(2 eta sqrt(ln 2))."""
    stokes = GaussianPulse(stokes_amp, stokes_center, fwhm, stokes_freq, stokes_phase, waveform)
    pump = GaussianPulse(pump_amp, stokes_center + pulse_interval(fwhm, eta), fwhm,
                         pump_freq, pump_phase, waveform)
    return StirapDrive(pump, stokes, mu_pump, mu_stokes, mu_bridge, cdf_carrier,
                       cdf_sign, lam, eta, cdf_phase, stirap_on)


def _scaled_parts(d: StirapDrive, t):
    # Both Gaussians share the factor exp(-m); dividing it out keeps the
    # larger term O(1) far into the wings.
    t = np.asarray(t, dtype=float)
    xp = (t - d.pump.center_au) / d.pump.tau_au
    xs = (t - d.stokes.center_au) / d.stokes.tau_au
    m = np.minimum(xp * xp, xs * xs)
    gp = np.exp(m - xp * xp)
    gs = np.exp(m - xs * xs)
    return xp, xs, gp, gs


def _check_defined(d: StirapDrive):
    if d.pump_strength == 0 and d.stokes_strength == 0:
        raise ValueError("mixing angle undefined: pump and Stokes are both zero")


def mixing_angle(d: StirapDrive, t):
    """Theta(t) = arctan(Omega_p/Omega_S) in [0, pi/2]."""
    _check_defined(d)
    _, _, gp, gs = _scaled_parts(d, t)
    return np.arctan2(d.pump_strength * gp, d.stokes_strength * gs)


def mixing_angle_rate(d: StirapDrive, t):
    """dTheta/dt in rad per atomic time unit.

    (Omega_S dOmega_p - dOmega_S Omega_p) / (Omega_S^2 + Omega_p^2) with the
    common Gaussian factor cancelled, so the wings give 0 rather than 0/0.
    For equal widths this is the closed form with prefactor
    2 Ep Es (T_p - T_S) / tau^2.
    """
    _check_defined(d)
    ap, as_ = d.pump_strength, d.stokes_strength
    if ap == 0 or as_ == 0:
        return np.zeros_like(np.asarray(t, dtype=float))
    xp, xs, gp, gs = _scaled_parts(d, t)
    slope = 2.0 * (xs / d.stokes.tau_au - xp / d.pump.tau_au)
    return ap * as_ * gp * gs * slope / (ap * ap * gp * gp + as_ * as_ * gs * gs)


def cdf_amplitude(d: StirapDrive, t):
    """Signed envelope 2 hbar dTheta/dt / mu_bridge of the counter-diabatic field."""
    if d.mu_bridge == 0:
        raise ValueError("counter-diabatic field undefined for zero bridge TDM")
    return d.cdf_sign * 2.0 * UNITS.hbar * mixing_angle_rate(d, t) / d.mu_bridge


def cdf_field(d: StirapDrive, t):
    t = np.asarray(t, dtype=float)
    return cdf_amplitude(d, t) * np.sin(cm1_to_hartree(d.cdf_carrier) * t + d.cdf_phase)


def total_field(d: StirapDrive, t):
    """E_p + E_S + lambda E_CD; the CDF is not evaluated at all when lambda = 0."""
    if d.stirap_on:
        e = pulse_field(d.pump, t) + pulse_field(d.stokes, t)
    else:
        e = np.zeros_like(np.asarray(t, dtype=float))
    if d.lam != 0:
        e = e + d.lam * cdf_field(d, t)
    return e


def area_window(d: StirapDrive, tail: float = 40.0) -> tuple:
    """Times (a.u.) beyond which Theta is within exp(-tail) of 0 or pi/2."""
    _check_defined(d)
    tp, ts = d.pump.tau_au, d.stokes.tau_au
    dT = ps_to_au(d.delay)
    if tp == ts and dT > 0 and d.pump_strength > 0 and d.stokes_strength > 0:
        # log(tan Theta) = log(Ep/Es) + 2 dT (t - t_mid) / tau^2
        t_mid = ps_to_au(d.t_mid)
        offset = math.log(d.pump_strength / d.stokes_strength)
        rate = 2.0 * dT / tp**2
        return t_mid + (-tail - offset) / rate, t_mid + (tail - offset) / rate
    span = 12.0 * max(tp, ts)
    lo = min(d.pump.center_au, d.stokes.center_au)
    hi = max(d.pump.center_au, d.stokes.center_au)
    return lo - span, hi + span


def pulse_area_theta(d: StirapDrive, t0=None, t1=None) -> float:
    """Integral of dTheta/dt over [t0, t1] (a.u.); defaults to the whole sweep."""
    w0, w1 = area_window(d)
    t0 = w0 if t0 is None else t0
    t1 = w1 if t1 is None else t1
    if t1 == t0:
        return 0.0
    if t1 < t0:
        raise ValueError("pulse_area_theta needs t1 >= t0")
    breaks = [x for x in (ps_to_au(d.t_mid),) if t0 < x < t1]
    val, _ = integrate.quad(lambda s: float(mixing_angle_rate(d, s)), t0, t1,
                            points=breaks or None, epsabs=1e-13, epsrel=1e-12, limit=400)
    return val
