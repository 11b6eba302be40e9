"""Line-oriented ``key = value`` run configuration.

Times are in ps, amplitudes and Rabi frequencies in a.u., dt in a.u.
Sequential runs list their stages as ``stageN = initial,intermediate,target``
plus ``stageN_*`` keys.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from pathlib import Path
from typing import Optional

from .dynamics import INTERACTION, SCHRODINGER, STEPS_PER_PERIOD
from .scenarios import CDF_ONLY, STIRAP_PLUS_CDF, Scenario, Stage
from .spectro import DATASETS, LevelSystem, load_dataset, load_level_system


class ConfigError(ValueError):
    pass


STAGE_KEYS = {"pump_amp", "stokes_amp", "pump_center_ps", "stokes_center_ps", "fwhm_ps", "lambda"}
_STAGE_RE = re.compile(r"^stage(\d+)(?:_(\w+))?$")


@dataclass
class StageConfig:
    labels: tuple = ()
    pump_amp: Optional[float] = None
    stokes_amp: Optional[float] = None
    pump_center_ps: Optional[float] = None
    stokes_center_ps: Optional[float] = None
    fwhm_ps: Optional[float] = None
    lam: float = 0.0


@dataclass
class RunConfig:
    name: str = ""
    dataset: str = "sccl2"
    levels_file: Optional[str] = None
    tdm_file: Optional[str] = None
    initial: Optional[str] = None
    intermediate: Optional[str] = None
    target: Optional[str] = None
    pump_amp: Optional[float] = None
    stokes_amp: Optional[float] = None
    pump_rabi: Optional[float] = None
    stokes_rabi: Optional[float] = None
    fwhm_ps: Optional[float] = None
    lam: float = 0.0
    eta: float = 1.0
    mode: str = STIRAP_PLUS_CDF
    subset: Optional[tuple] = None
    stokes_center_ps: float = 0.0
    pump_phase: float = 0.0
    stokes_phase: float = 0.0
    cdf_phase: float = 0.0
    dt_au: Optional[float] = None
    steps_per_period: float = STEPS_PER_PERIOD
    window_start_ps: Optional[float] = None
    window_end_ps: Optional[float] = None
    picture: str = INTERACTION
    out: str = "."
    threads: int = 1
    stages: dict = field(default_factory=dict)

    def validate(self) -> "RunConfig":
        if self.dataset not in DATASETS + ("custom",):
            raise ConfigError(f"dataset must be one of {', '.join(DATASETS + ('custom',))}")
        if self.dataset == "custom" and not (self.levels_file and self.tdm_file):
            raise ConfigError("custom dataset needs levels_file and tdm_file")
        if self.picture not in (INTERACTION, SCHRODINGER):
            raise ConfigError(f"picture must be {INTERACTION} or {SCHRODINGER}")
        if self.mode not in (STIRAP_PLUS_CDF, CDF_ONLY):
            raise ConfigError(f"mode must be {STIRAP_PLUS_CDF} or {CDF_ONLY}")
        for key in ("fwhm_ps", "eta", "dt_au", "steps_per_period", "pump_rabi", "stokes_rabi"):
            val = getattr(self, key)
            if val is not None and not val > 0:
                raise ConfigError(f"{key} must be positive, got {val}")
        for key in ("pump_amp", "stokes_amp", "lam"):
            val = getattr(self, key)
            if val is not None and not val >= 0:
                raise ConfigError(f"{key} must be non-negative, got {val}")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")
        if (self.window_start_ps is not None and self.window_end_ps is not None
                and not self.window_end_ps > self.window_start_ps):
            raise ConfigError("window_end_ps must be after window_start_ps")
        for n, st in sorted(self.stages.items()):
            if len(st.labels) != 3:
                raise ConfigError(f"stage{n} needs initial,intermediate,target")
            for key in ("pump_amp", "stokes_amp", "pump_center_ps", "stokes_center_ps", "fwhm_ps"):
                if getattr(st, key) is None:
                    raise ConfigError(f"stage{n}_{key} missing")
            if not st.fwhm_ps > 0 or st.pump_amp < 0 or st.stokes_amp < 0 or st.lam < 0:
                raise ConfigError(f"stage{n}: fwhm must be positive and amplitudes non-negative")
        if not self.stages:
            for key in ("initial", "intermediate", "target", "fwhm_ps"):
                if getattr(self, key) is None:
                    raise ConfigError(f"missing required key {key!r}")
            if self.pump_amp is None and self.pump_rabi is None:
                raise ConfigError("give pump_amp or pump_rabi")
            if self.stokes_amp is None and self.stokes_rabi is None:
                raise ConfigError("give stokes_amp or stokes_rabi")
        return self

    def system(self) -> LevelSystem:
        if self.dataset == "custom":
            return load_level_system(self.levels_file, self.tdm_file)
        return load_dataset(self.dataset)

    def to_scenario(self, system: Optional[LevelSystem] = None) -> Scenario:
        self.validate()
        system = system or self.system()
        subset = frozenset(self.subset) if self.subset else None
        common = dict(
            lam=self.lam, eta=self.eta, subset=subset, stirap_on=self.mode == STIRAP_PLUS_CDF,
            pump_phase=self.pump_phase, stokes_phase=self.stokes_phase, cdf_phase=self.cdf_phase,
            name=self.name, dt=self.dt_au, window_start=self.window_start_ps,
            window_end=self.window_end_ps, picture=self.picture, steps_per_period=self.steps_per_period)
        try:
            if self.stages:
                stages = tuple(
                    Stage(*st.labels, st.pump_amp, st.stokes_amp, st.pump_center_ps,
                          st.stokes_center_ps, st.fwhm_ps, st.lam)
                    for _, st in sorted(self.stages.items()))
                first = stages[0]
                return Scenario(system, first.initial, first.intermediate, first.target,
                                first.pump_amp, first.stokes_amp, first.fwhm,
                                stage_list=stages, stokes_center=first.stokes_center, **common)
            pump = self.pump_amp
            if pump is None:
                pump = 2.0 * self.pump_rabi / system.mu(self.initial, self.intermediate)
            stokes = self.stokes_amp
            if stokes is None:
                stokes = 2.0 * self.stokes_rabi / system.mu(self.intermediate, self.target)
            return Scenario(system, self.initial, self.intermediate, self.target, pump, stokes,
                            self.fwhm_ps, stokes_center=self.stokes_center_ps, **common)
        except (KeyError, ValueError, ZeroDivisionError) as exc:
            raise ConfigError(str(exc)) from exc


_FLOAT = {"pump_amp", "stokes_amp", "pump_rabi", "stokes_rabi", "fwhm_ps", "lam", "eta",
          "stokes_center_ps", "pump_phase", "stokes_phase", "cdf_phase", "dt_au",
          "steps_per_period", "window_start_ps", "window_end_ps"}
_ALIASES = {"lambda": "lam"}
_KNOWN = {f.name for f in fields(RunConfig)} - {"stages"}


def _float(key, text):
    try:
        return float(text)
    except ValueError:
        raise ConfigError(f"{key}: not a number: {text!r}") from None


def labels_list(text: str) -> tuple:
    out = tuple(x.strip() for x in text.split(",") if x.strip())
    if not out:
        raise ConfigError(f"empty label list {text!r}")
    return out


def set_value(cfg: RunConfig, key: str, text: str) -> None:
    key = key.strip()
    text = text.strip()
    m = _STAGE_RE.match(key)
    if m:
        n, sub = int(m.group(1)), m.group(2)
        st = cfg.stages.setdefault(n, StageConfig())
        if sub is None:
            st.labels = labels_list(text)
        elif sub in STAGE_KEYS:
            setattr(st, "lam" if sub == "lambda" else sub, _float(key, text))
        else:
            raise ConfigError(f"unknown key {key!r}")
        return
    attr = _ALIASES.get(key, key)
    if attr not in _KNOWN:
        raise ConfigError(f"unknown key {key!r}")
    if attr in _FLOAT:
        setattr(cfg, attr, _float(key, text))
    elif attr == "threads":
        try:
            cfg.threads = int(text)
        except ValueError:
            raise ConfigError(f"threads: not an integer: {text!r}") from None
    elif attr == "subset":
        cfg.subset = labels_list(text)
    elif attr in ("initial", "intermediate", "target"):
        setattr(cfg, attr, text)
    else:
        setattr(cfg, attr, text)


def parse_config(text: str, base: Optional[RunConfig] = None, source: str = "<config>") -> RunConfig:
    cfg = replace(base) if base is not None else RunConfig()
    cfg.stages = dict(cfg.stages)
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = line.split("=", 1)
        try:
            set_value(cfg, key, value)
        except ConfigError as exc:
            raise ConfigError(f"{source}:{lineno}: {exc}") from None
    return cfg


def bundled_config_path(name: str) -> Path:
    return Path(str(resources.files("cdstirap") / "configs" / f"{name}.cfg"))


def bundled_configs() -> list:
    root = resources.files("cdstirap") / "configs"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".cfg"))


def load_config(path_or_name: str) -> RunConfig:
    """Read a config file; a bare bundled name like ``sccl2_1to6`` also works."""
    path = Path(path_or_name)
    if not path.exists():
        bundled = bundled_config_path(path_or_name.removesuffix(".cfg"))
        if not bundled.exists():
            raise ConfigError(f"no such config file or bundled config: {path_or_name}")
        path = bundled
    cfg = parse_config(path.read_text(encoding="utf-8"), source=str(path))
    if cfg.dataset == "custom":
        # relative data paths resolve against the config file
        for key in ("levels_file", "tdm_file"):
            val = getattr(cfg, key)
            if val and not Path(val).is_absolute():
                setattr(cfg, key, str(path.parent / val))
    return cfg
