"""Population-transfer experiments, parameter scans and sequential STIRAP."""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .dynamics import (MAX_NORM_DRIFT, STEPS_PER_PERIOD, IntegrationDiverged, PropagationConfig,
                       PropagationResult, propagate)
from .pulse import SQRT_LN2, GaussianPulse, StirapDrive, make_drive
from .spectro import LevelSystem, intensity_of_field, load_dataset, transition_energy

logger = logging.getLogger(__name__)

STIRAP_PLUS_CDF = "stirap_plus_cdf"
CDF_ONLY = "cdf_only"

DEFAULT_LAMBDA_GRID = tuple(round(0.05 * k, 10) for k in range(41))
DEFAULT_ETA_GRID = (0.5, 1.0, 2.0, 3.0, 4.0, 5.0)


def default_fwhm_grid(lo: float, hi: float, n: int = 12) -> list:
    return [float(x) for x in np.geomspace(lo, hi, n)]


class ScanError(RuntimeError):
    def __init__(self, parameter, value, cause):
        self.parameter = parameter
        self.value = value
        super().__init__(f"propagation failed at {parameter} = {value}: {cause}")


@dataclass(frozen=True)
class Stage:
    """One pump/Stokes pair of a sequential transfer, centers in ps."""

    initial: str
    intermediate: str
    target: str
    pump_amp: float
    stokes_amp: float
    pump_center: float
    stokes_center: float
    fwhm: float
    lam: float = 0.0


@dataclass(frozen=True)
class Scenario:
    system: LevelSystem
    initial: str
    intermediate: str
    target: str
    pump_amp: float
    stokes_amp: float
    fwhm: float  # ps
    lam: float = 0.0
    eta: float = 1.0
    subset: Optional[frozenset] = None
    stage_list: tuple = ()
    stirap_on: bool = True
    stokes_center: float = 0.0
    pump_phase: float = 0.0
    stokes_phase: float = 0.0
    cdf_phase: float = 0.0
    name: str = ""
    # propagation overrides
    dt: Optional[float] = None
    window_start: Optional[float] = None
    window_end: Optional[float] = None
    picture: str = "interaction"
    steps_per_period: float = STEPS_PER_PERIOD

    def __post_init__(self):
        labels = (self.initial, self.intermediate, self.target)
        for lab in labels:
            self.system.index(lab)
        if len(set(labels)) != 3:
            raise ValueError(f"initial, intermediate and target must differ, got {labels}")
        if self.subset is not None:
            object.__setattr__(self, "subset", frozenset(str(s) for s in self.subset))
            for lab in self.subset:
                self.system.index(lab)
        for st in self.stage_list:
            for lab in (st.initial, st.intermediate, st.target):
                self.system.index(lab)
        if not self.fwhm > 0 or not self.eta > 0 or not self.lam >= 0:
            raise ValueError("fwhm and eta must be positive and lambda non-negative")

    @property
    def labels(self) -> tuple:
        if self.stage_list:
            out = []
            for st in self.stage_list:
                for lab in (st.initial, st.intermediate, st.target):
                    if lab not in out:
                        out.append(lab)
            return tuple(out)
        return (self.initial, self.intermediate, self.target)

    def config(self) -> PropagationConfig:
        return PropagationConfig(self.initial, self.dt, self.window_start, self.window_end,
                                 self.picture, self.subset, steps_per_period=self.steps_per_period)


def _drive(system: LevelSystem, initial, intermediate, target, pump_amp, stokes_amp, fwhm, *,
           lam=0.0, eta=1.0, stokes_center=0.0, pump_center=None, stirap_on=True,
           pump_phase=0.0, stokes_phase=0.0, cdf_phase=0.0) -> StirapDrive:
    # resonant carriers; the CDF sign follows the direction of the transfer
    d_target = transition_energy(system, initial, target)
    if pump_center is not None:
        delay = pump_center - stokes_center
        if not delay > 0:
            raise ValueError("pump must follow the Stokes pulse")
        eta = fwhm / (2.0 * SQRT_LN2 * delay)
    return make_drive(
        pump_amp, stokes_amp, fwhm,
        system.mu(initial, intermediate), system.mu(intermediate, target),
        mu_bridge=system.mu(initial, target),
        pump_freq=abs(transition_energy(system, initial, intermediate)),
        stokes_freq=abs(transition_energy(system, intermediate, target)),
        cdf_carrier=abs(d_target), cdf_sign=1 if d_target >= 0 else -1,
        lam=lam, eta=eta, stokes_center=stokes_center, pump_phase=pump_phase,
        stokes_phase=stokes_phase, cdf_phase=cdf_phase, stirap_on=stirap_on)


def drive_for(sc: Scenario) -> StirapDrive:
    return _drive(sc.system, sc.initial, sc.intermediate, sc.target, sc.pump_amp, sc.stokes_amp,
                  sc.fwhm, lam=sc.lam, eta=sc.eta, stokes_center=sc.stokes_center,
                  stirap_on=sc.stirap_on, pump_phase=sc.pump_phase,
                  stokes_phase=sc.stokes_phase, cdf_phase=sc.cdf_phase)


def stage_drives(sc: Scenario) -> list:
    centers = [c for st in sc.stage_list for c in (st.stokes_center, st.pump_center)]
    if any(b < a for a, b in zip(centers, centers[1:])):
        raise ValueError(f"stage pulse centers must be non-decreasing in time, got {centers}")
    return [_drive(sc.system, st.initial, st.intermediate, st.target, st.pump_amp, st.stokes_amp,
                   st.fwhm, lam=st.lam, stokes_center=st.stokes_center, pump_center=st.pump_center,
                   stirap_on=sc.stirap_on, pump_phase=sc.pump_phase, stokes_phase=sc.stokes_phase,
                   cdf_phase=sc.cdf_phase)
            for st in sc.stage_list]


def drives_for(sc: Scenario) -> list:
    return stage_drives(sc) if sc.stage_list else [drive_for(sc)]


def fidelity(r: PropagationResult, target: str) -> float:
    """Population of ``target`` at the final time."""
    if str(target) not in r.labels:
        raise KeyError(f"unknown state label {target!r}")
    return r.final_population(target)


def leakage(r: PropagationResult, keep: Sequence[str]) -> float:
    """Final population outside ``keep``."""
    idx = [r.labels.index(str(k)) for k in keep]
    return float(max(0.0, 1.0 - r.populations[-1, idx].sum()))


def run_sequential(sc: Scenario) -> PropagationResult:
    """One continuous propagation under all stage pulses together."""
    if not sc.stage_list:
        raise ValueError("scenario has no stage_list")
    return propagate(sc.system, stage_drives(sc), sc.config())


def run(sc: Scenario) -> PropagationResult:
    if sc.stage_list:
        return run_sequential(sc)
    return propagate(sc.system, drive_for(sc), sc.config())


@dataclass
class RunSummary:
    scenario: Scenario
    result: PropagationResult
    fidelity: float
    leakage: float
    adiabaticity: list
    peak_intensities: dict

    @property
    def norm_drift(self) -> float:
        return self.result.norm_drift


def summarize(sc: Scenario, result: Optional[PropagationResult] = None) -> RunSummary:
    from .rwa3 import drive_adiabaticity

    result = run(sc) if result is None else result
    drives = drives_for(sc)
    intens = {}
    for k, d in enumerate(drives, start=1):
        tag = f"{k}" if len(drives) > 1 else ""
        intens[f"pump{tag}"] = intensity_of_field(d.pump.amplitude)
        intens[f"stokes{tag}"] = intensity_of_field(d.stokes.amplitude)
    target = sc.stage_list[-1].target if sc.stage_list else sc.target
    return RunSummary(sc, result, fidelity(result, target), leakage(result, sc.labels),
                      [drive_adiabaticity(d) for d in drives], intens)


@dataclass
class ScanPoint:
    value: float
    fidelity: float
    leakage: float
    norm_drift: float

    @property
    def flagged(self) -> bool:
        return not self.norm_drift < MAX_NORM_DRIFT


@dataclass
class ScanResult:
    parameter_name: str
    points: list = field(default_factory=list)

    @property
    def values(self) -> list:
        return [p.value for p in self.points]

    @property
    def fidelities(self) -> list:
        return [p.fidelity for p in self.points]

    @property
    def flagged(self) -> list:
        return [p for p in self.points if p.flagged]

    def pairs(self) -> list:
        return [(p.value, p.fidelity) for p in self.points]

    def argmax(self) -> float:
        return self.points[int(np.argmax(self.fidelities))].value


def _scan(name: str, scenarios: list, values: list, threads: int = 1) -> ScanResult:
    if not values:
        raise ValueError(f"empty {name} grid")

    def one(k):
        sc = scenarios[k]
        try:
            r = run(sc)
        except IntegrationDiverged as exc:
            raise ScanError(name, values[k], exc) from exc
        target = sc.stage_list[-1].target if sc.stage_list else sc.target
        return ScanPoint(float(values[k]), fidelity(r, target), leakage(r, sc.labels), r.norm_drift)

    idx = range(len(values))
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            points = list(pool.map(one, idx))
    else:
        points = [one(k) for k in idx]
    return ScanResult(name, points)


def with_lambda(sc: Scenario, lam: float, mode: str = STIRAP_PLUS_CDF) -> Scenario:
    if mode not in (STIRAP_PLUS_CDF, CDF_ONLY):
        raise ValueError(f"unknown mode {mode!r}")
    stages = tuple(replace(st, lam=float(lam)) for st in sc.stage_list)
    return replace(sc, lam=float(lam), stirap_on=mode == STIRAP_PLUS_CDF, stage_list=stages)


def with_fwhm(sc: Scenario, fwhm: float) -> Scenario:
    """Same envelope areas: amplitudes scale as FWHM_ref/FWHM, delay follows eta."""
    if not fwhm > 0:
        raise ValueError(f"fwhm must be positive, got {fwhm}")
    factor = sc.fwhm / fwhm
    return replace(sc, fwhm=float(fwhm), pump_amp=sc.pump_amp * factor, stokes_amp=sc.stokes_amp * factor)


def with_eta(sc: Scenario, eta: float) -> Scenario:
    if not eta > 0:
        raise ValueError(f"eta must be positive, got {eta}")
    return replace(sc, eta=float(eta))


def scan_lambda(sc: Scenario, grid=DEFAULT_LAMBDA_GRID, mode: str = STIRAP_PLUS_CDF,
                threads: int = 1) -> ScanResult:
    grid = list(grid)
    return _scan("lambda", [with_lambda(sc, x, mode) for x in grid], grid, threads)


def scan_fwhm(sc: Scenario, grid, keep: str = "pulse_area", threads: int = 1) -> ScanResult:
    if keep != "pulse_area":
        raise ValueError("only keep='pulse_area' is supported")
    grid = list(grid)
    return _scan("fwhm", [with_fwhm(sc, x) for x in grid], grid, threads)


def scan_eta(sc: Scenario, grid=DEFAULT_ETA_GRID, threads: int = 1) -> ScanResult:
    grid = list(grid)
    return _scan("eta", [with_eta(sc, x) for x in grid], grid, threads)


# Bundled reference scenarios --------------------------------------------

SCCL2_PUMP_AMP = 3.11e-6
SCCL2_STOKES_AMP = 3.44e-6
SCCL2_FWHM = 215.0
HCN_PUMP2_AMP = 0.0009295
HCN_STOKES2_AMP = 0.002875
HCN_FWHM = 212.5

# (label triple, pump amp, stokes amp, pump center, stokes center, fwhm)
HCN_SEQUENTIAL_STAGES = (
    (("1", "2", "3"), 0.00728, 0.00692, 194.0, 133.0, 85.0),
    (("3", "4", "5"), 0.00220, 0.00575, 484.0, 423.0, 85.0),
)


def sccl2_1to6(system: Optional[LevelSystem] = None, lam: float = 1.0) -> Scenario:
    system = system or load_dataset("sccl2")
    return Scenario(system, "1", "5a", "6", SCCL2_PUMP_AMP, SCCL2_STOKES_AMP, SCCL2_FWHM,
                    lam=lam, name="sccl2_1to6")


def sccl2_1to3(system: Optional[LevelSystem] = None, lam: float = 1.0) -> Scenario:
    """|1> -> |3> via |2>, amplitudes matched to the |1> -> |6> peak Rabi frequencies."""
    system = system or load_dataset("sccl2")
    pump = SCCL2_PUMP_AMP * system.mu("1", "5a") / system.mu("1", "2")
    stokes = SCCL2_STOKES_AMP * system.mu("5a", "6") / system.mu("2", "3")
    return Scenario(system, "1", "2", "3", pump, stokes, SCCL2_FWHM, lam=lam, name="sccl2_1to3")


def hcn_stage2(system: Optional[LevelSystem] = None, lam: float = 1.0) -> Scenario:
    system = system or load_dataset("hcn")
    return Scenario(system, "3", "4", "5", HCN_PUMP2_AMP, HCN_STOKES2_AMP, HCN_FWHM,
                    lam=lam, name="hcn_stage2")


def hcn_sequential(system: Optional[LevelSystem] = None) -> Scenario:
    system = system or load_dataset("hcn")
    stages = tuple(Stage(*labels, pa, sa, pc, scn, fw) for labels, pa, sa, pc, scn, fw in HCN_SEQUENTIAL_STAGES)
    first = stages[0]
    return Scenario(system, first.initial, first.intermediate, first.target, first.pump_amp,
                    first.stokes_amp, first.fwhm, stage_list=stages, name="hcn_sequential")


BUNDLED = {
    "sccl2_1to6": sccl2_1to6,
    "sccl2_1to3": sccl2_1to3,
    "hcn_stage2": hcn_stage2,
    "hcn_sequential": hcn_sequential,
}
