"""Dipole-coupled Hamiltonian over the full level manifold and its RK4 propagation."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence, Union

import numpy as np

from . import _kernel
from .pulse import StirapDrive
from .spectro import LevelSystem, au_to_ps, cm1_to_hartree, ps_to_au

INTERACTION = "interaction"
SCHRODINGER = "schrodinger"

MAX_NORM_DRIFT = 1e-6
CONVERGENCE_TOL = 1e-4
STEPS_PER_PERIOD = 64
WINDOW_TAUS = 4.0
SAMPLE_INTERVAL_PS = 0.25

Drives = Union[StirapDrive, Sequence[StirapDrive]]


class IntegrationDiverged(RuntimeError):
    def __init__(self, norm_drift, dt):
        self.norm_drift = norm_drift
        self.dt = dt
        super().__init__(
            f"norm drift {norm_drift:.3g} exceeds {MAX_NORM_DRIFT:g} at dt = {dt:.4g} a.u.; "
            f"try a smaller dt")


@dataclass(frozen=True)
class PropagationConfig:
    """dt in atomic units, window in ps; None means derive from the drive."""

    initial_state: str
    dt: Optional[float] = None
    window_start: Optional[float] = None
    window_end: Optional[float] = None
    picture: str = INTERACTION
    subset: Optional[frozenset] = None
    sample_interval: float = SAMPLE_INTERVAL_PS
    steps_per_period: float = STEPS_PER_PERIOD

    def __post_init__(self):
        if self.subset is not None:
            object.__setattr__(self, "subset", frozenset(str(s) for s in self.subset))
            if self.initial_state not in self.subset:
                raise ValueError(f"initial state {self.initial_state!r} not in subset")
        if self.dt is not None and not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if (self.window_start is not None and self.window_end is not None
                and not self.window_end > self.window_start):
            raise ValueError("window_end must be after window_start")
        if self.picture not in (INTERACTION, SCHRODINGER):
            raise ValueError(f"picture must be {INTERACTION!r} or {SCHRODINGER!r}")
        if not self.sample_interval > 0 or not self.steps_per_period > 0:
            raise ValueError("sample_interval and steps_per_period must be positive")


@dataclass
class PropagationResult:
    labels: list
    times: np.ndarray  # ps
    populations: np.ndarray  # [time, state]
    final_amplitudes: np.ndarray
    norm_drift: float
    dt: float = math.nan  # a.u.
    norms: Optional[np.ndarray] = None

    def population(self, label) -> np.ndarray:
        return self.populations[:, self.labels.index(str(label))]

    def final_population(self, label) -> float:
        return float(self.populations[-1, self.labels.index(str(label))])


def _as_list(drive: Drives) -> list:
    return [drive] if isinstance(drive, StirapDrive) else list(drive)


def pack_field(drive: Drives):
    """Tables consumed by the compiled field evaluator."""
    drives = _as_list(drive)
    pulses = []
    cdfs = []
    for d in drives:
        weight = 1.0 if d.stirap_on else 0.0
        for p in (d.pump, d.stokes):
            pulses.append((weight * p.amplitude, p.center_au, p.tau_au, p.omega_au, p.carrier_phase,
                           1.0 if p.waveform == "sine" else 0.0))
        if d.lam != 0:
            cdfs.append((d.lam * d.cdf_sign * 2.0 / d.mu_bridge, d.pump_strength, d.stokes_strength,
                         d.pump.center_au, d.stokes.center_au, d.pump.tau_au, d.stokes.tau_au,
                         cm1_to_hartree(d.cdf_carrier), d.cdf_phase))
    pulses = np.array(pulses, dtype=float).reshape(-1, _kernel.PULSE_COLS)
    cdfs = np.array(cdfs, dtype=float).reshape(-1, _kernel.CDF_COLS)
    return pulses, cdfs


def field_function(drive: Drives):
    """E(t) (t in a.u.) exactly as the propagator sees it."""
    pulses, cdfs = pack_field(drive)

    def field(t):
        t = np.asarray(t, dtype=float)
        if t.ndim == 0:
            return _kernel.field_at(float(t), pulses, cdfs)
        return _kernel.field_series(t.ravel(), pulses, cdfs).reshape(t.shape)
    return field


def _field_value(field, t):
    return float(field(t)) if callable(field) else float(field)


def hamiltonian_interaction(sys: LevelSystem, field, t: float) -> np.ndarray:
    """H_ij = -mu_ij E(t) exp(i w_ij t), w_ij = eps_i - eps_j; zero diagonal."""
    e = _field_value(field, t)
    eps = cm1_to_hartree(sys.energies_cm1)
    phase = np.exp(1j * np.subtract.outer(eps, eps) * t)
    return -sys.tdm * e * phase


def hamiltonian_schrodinger(sys: LevelSystem, field, t: float) -> np.ndarray:
    e = _field_value(field, t)
    return np.diag(cm1_to_hartree(sys.energies_cm1)).astype(complex) - sys.tdm * e


def active_carriers(drive: Drives) -> list:
    out = []
    for d in _as_list(drive):
        for p in (d.pump, d.stokes):
            if d.stirap_on and p.amplitude > 0:
                out.append(abs(p.omega_au))
        if d.lam != 0:
            out.append(abs(cm1_to_hartree(d.cdf_carrier)))
    return out


def default_dt(sys: LevelSystem, drive: Drives, steps_per_period: float = STEPS_PER_PERIOD) -> float:
    """1/steps_per_period of the shortest period among |w_ij +- w_carrier|."""
    eps = cm1_to_hartree(sys.energies_cm1)
    coupled = sys.tdm != 0
    w_ij = np.abs(np.subtract.outer(eps, eps))[coupled]
    carriers = active_carriers(drive)
    w_max = max([0.0] + [w + c for w in w_ij for c in carriers] + list(w_ij) + carriers)
    if w_max == 0:
        # nothing oscillates; resolve the envelopes instead
        tau = min(min(d.pump.tau_au, d.stokes.tau_au) for d in _as_list(drive))
        return tau / 1000.0
    return 2.0 * math.pi / w_max / steps_per_period


def default_window(drive: Drives, n_tau: float = WINDOW_TAUS) -> tuple:
    """(start, end) in ps covering every pulse center +- n_tau widths."""
    pulses = [p for d in _as_list(drive) for p in (d.pump, d.stokes)]
    start = min(p.center - n_tau * p.tau for p in pulses)
    end = max(p.center + n_tau * p.tau for p in pulses)
    return start, end


@dataclass(frozen=True)
class _Grid:
    t0: float  # a.u.
    dt: float
    nsteps: int
    stride: int


def _grid(sys, drive, cfg: PropagationConfig) -> _Grid:
    w0, w1 = default_window(drive)
    start = cfg.window_start if cfg.window_start is not None else w0
    end = cfg.window_end if cfg.window_end is not None else w1
    if not end > start:
        raise ValueError("empty propagation window")
    t0, t1 = ps_to_au(start), ps_to_au(end)
    dt_max = cfg.dt if cfg.dt is not None else default_dt(sys, drive, cfg.steps_per_period)
    nsteps = max(1, math.ceil((t1 - t0) / dt_max - 1e-9))
    dt = (t1 - t0) / nsteps
    stride = max(1, int(round(ps_to_au(cfg.sample_interval) / dt)))
    return _Grid(t0, dt, nsteps, stride)


def resolve_dt(sys: LevelSystem, drive: Drives, cfg: PropagationConfig) -> float:
    """Step actually used: the requested/default dt shrunk to tile the window."""
    system = sys.restricted(cfg.subset) if cfg.subset is not None else sys
    return _grid(system, drive, cfg).dt


def _run(sys, drive, cfg, grid: _Grid, check=True) -> PropagationResult:
    psi0 = np.zeros(len(sys), dtype=complex)
    psi0[sys.index(cfg.initial_state)] = 1.0
    eps = cm1_to_hartree(sys.energies_cm1)
    interaction = cfg.picture == INTERACTION
    if not interaction:
        # a constant shift only changes the global phase
        eps = eps - 0.5 * (eps.max() + eps.min())
    pulses, cdfs = pack_field(drive)
    mu = np.ascontiguousarray(sys.tdm, dtype=float)
    psi, times, pops, norms, drift = _kernel.rk4_dipole(
        psi0, mu, np.ascontiguousarray(eps), pulses, cdfs,
        grid.t0, grid.dt, grid.nsteps, grid.stride, interaction)
    if check and drift > MAX_NORM_DRIFT:
        raise IntegrationDiverged(drift, grid.dt)
    return PropagationResult(sys.labels, au_to_ps(times), pops, psi, float(drift), grid.dt, norms)


def propagate(sys: LevelSystem, drive: Drives, cfg: PropagationConfig) -> PropagationResult:
    """Integrate the Schroedinger equation from the bare initial state.

    The default picture absorbs bare-state phases into the couplings and keeps
    the full carrier-resolved field (no rotating-wave approximation). The state
    is never renormalized; a norm drift above 1e-6 raises IntegrationDiverged.
    ``final_amplitudes`` are in the picture that was propagated.
    """
    system = sys.restricted(cfg.subset) if cfg.subset is not None else sys
    system.index(cfg.initial_state)
    return _run(system, drive, cfg, _grid(system, drive, cfg))


@dataclass
class ConvergenceReport:
    dt: float
    max_deviation: float
    norm_drift: float
    passed: bool
    error: Optional[str] = None

    def __str__(self):
        status = "pass" if self.passed else "FAIL"
        msg = f"dt={self.dt:.4g} a.u.: max population change {self.max_deviation:.3g} on halving ({status})"
        return msg + (f"; {self.error}" if self.error else "")


def convergence_check(sys: LevelSystem, drive: Drives, cfg: PropagationConfig,
                      tol: float = CONVERGENCE_TOL,
                      reference: Optional[PropagationResult] = None) -> ConvergenceReport:
    """Compare populations at dt and dt/2 on a shared sample grid.

    ``reference`` may carry an earlier ``propagate`` result for the same inputs
    so that only the halved-step run is computed.
    """
    system = sys.restricted(cfg.subset) if cfg.subset is not None else sys
    grid = _grid(system, drive, cfg)
    fine = replace(grid, dt=grid.dt / 2.0, nsteps=grid.nsteps * 2, stride=grid.stride * 2)
    if reference is not None and (reference.labels != system.labels or reference.dt != grid.dt):
        raise ValueError("reference result does not match this system and step")
    try:
        coarse_r = reference if reference is not None else _run(system, drive, cfg, grid)
        fine_r = _run(system, drive, cfg, fine)
    except IntegrationDiverged as exc:
        return ConvergenceReport(grid.dt, math.inf, exc.norm_drift, False, str(exc))
    dev = float(np.max(np.abs(coarse_r.populations - fine_r.populations)))
    drift = max(coarse_r.norm_drift, fine_r.norm_drift)
    return ConvergenceReport(grid.dt, dev, drift, dev < tol)
