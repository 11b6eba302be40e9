"""Units, level tables and transition dipole matrices.

Energies are kept in cm^-1 and dipoles in atomic units; conversion to
Hartree happens only where the Hamiltonian is built.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]

# A dipole this large is implausible for a vibrational transition.
TDM_WARN_THRESHOLD = 0.5

DATASETS = ("sccl2", "hcn")


class LevelDataError(ValueError):
    """Malformed or inconsistent level/TDM data."""


@dataclass(frozen=True)
class UnitConstants:
    cm1_to_hartree: float = 4.556335252912e-6
    ps_to_atu: float = 41341.3733366
    # W/cm^2 per (a.u. field)^2, i.e. c*eps0/2 in these units
    intensity_factor: float = 3.50944758e16
    hbar: float = 1.0


UNITS = UnitConstants()


def cm1_to_hartree(x):
    return x * UNITS.cm1_to_hartree


def hartree_to_cm1(x):
    return x / UNITS.cm1_to_hartree


def ps_to_au(t):
    return t * UNITS.ps_to_atu


def au_to_ps(t):
    return t / UNITS.ps_to_atu


def intensity_of_field(amplitude: float) -> float:
    """Peak intensity in W/cm^2 of a field with envelope amplitude in a.u."""
    return UNITS.intensity_factor * amplitude * amplitude


@dataclass(frozen=True)
class SpectroState:
    label: str
    energy: float  # cm^-1
    mode_tag: Optional[str] = None

    def __post_init__(self):
        if not self.label:
            raise LevelDataError("empty state label")
        if not math.isfinite(self.energy) or self.energy < 0:
            raise LevelDataError(f"state {self.label!r}: energy must be finite and >= 0, got {self.energy}")


@dataclass(frozen=True)
class LevelSystem:
    states: tuple
    tdm: np.ndarray = field(repr=False)

    def __post_init__(self):
        states = tuple(self.states)
        object.__setattr__(self, "states", states)
        labels = [s.label for s in states]
        if len(set(labels)) != len(labels):
            dup = sorted({x for x in labels if labels.count(x) > 1})
            raise LevelDataError(f"duplicate state label(s): {', '.join(dup)}")
        tdm = np.array(self.tdm, dtype=float)
        n = len(states)
        if tdm.shape != (n, n):
            raise LevelDataError(f"tdm shape {tdm.shape} does not match {n} states")
        if not np.array_equal(tdm, tdm.T):
            raise LevelDataError("tdm matrix is not symmetric")
        if np.any(np.diag(tdm) != 0.0):
            raise LevelDataError("tdm matrix has nonzero diagonal")
        tdm.setflags(write=False)
        object.__setattr__(self, "tdm", tdm)
        object.__setattr__(self, "_index", {lab: i for i, lab in enumerate(labels)})

    def __len__(self):
        return len(self.states)

    @property
    def labels(self) -> list:
        return [s.label for s in self.states]

    @property
    def energies_cm1(self) -> np.ndarray:
        return np.array([s.energy for s in self.states])

    def index(self, label: str) -> int:
        try:
            return self._index[str(label)]
        except KeyError:
            raise KeyError(f"unknown state label {label!r}") from None

    def energy(self, label: str) -> float:
        return self.states[self.index(label)].energy

    def mu(self, a: str, b: str) -> float:
        return float(self.tdm[self.index(a), self.index(b)])

    def restricted(self, subset: Iterable[str]) -> "LevelSystem":
        """The states in `subset` (original order kept) and the couplings among them."""
        wanted = {str(lab) for lab in subset}
        idx = [i for i, s in enumerate(self.states) if s.label in wanted]
        for lab in wanted:
            self.index(lab)
        return LevelSystem(tuple(self.states[i] for i in idx), self.tdm[np.ix_(idx, idx)])

    def outliers(self, threshold: float = TDM_WARN_THRESHOLD) -> list:
        """(a, b, mu) for every pair with |mu| above `threshold`."""
        out = []
        n = len(self)
        for i in range(n):
            for j in range(i + 1, n):
                if abs(self.tdm[i, j]) > threshold:
                    out.append((self.states[i].label, self.states[j].label, float(self.tdm[i, j])))
        return out


def transition_energy(sys: LevelSystem, a: str, b: str) -> float:
    """Signed energy eps_b - eps_a in cm^-1."""
    return sys.energy(b) - sys.energy(a)


def _data_rows(path: PathLike, header: Sequence[str]):
    with open(path, newline="", encoding="utf-8") as fh:
        lines = [ln for ln in fh if ln.strip() and not ln.lstrip().startswith("#")]
    reader = csv.reader(lines)
    try:
        got = [h.strip() for h in next(reader)]
    except StopIteration:
        return
    if got != list(header):
        raise LevelDataError(f"{path}: expected header {','.join(header)}, got {','.join(got)}")
    for lineno, row in enumerate(reader, start=2):
        row = [c.strip() for c in row]
        if len(row) < len(header):
            row += [""] * (len(header) - len(row))
        if len(row) > len(header):
            raise LevelDataError(f"{path}: row {lineno} has {len(row)} fields")
        yield lineno, row


def _number(path, lineno, text, what):
    try:
        val = float(text)
    except ValueError:
        raise LevelDataError(f"{path}: row {lineno}: non-numeric {what} {text!r}") from None
    if not math.isfinite(val):
        raise LevelDataError(f"{path}: row {lineno}: non-finite {what} {text!r}")
    return val


def load_level_system(levels_file: PathLike, tdm_file: PathLike) -> LevelSystem:
    """Read a levels CSV and an undirected TDM CSV into a LevelSystem.

    Pairs not listed in the TDM file are uncoupled. Listing a pair twice is
    allowed only if both rows agree.
    """
    states = []
    for lineno, (label, energy, tag) in _data_rows(levels_file, ("label", "energy_cm1", "mode_tag")):
        states.append(SpectroState(label, _number(levels_file, lineno, energy, "energy"), tag or None))
    labels = [s.label for s in states]
    if len(set(labels)) != len(labels):
        dup = sorted({x for x in labels if labels.count(x) > 1})
        raise LevelDataError(f"{levels_file}: duplicate state label(s): {', '.join(dup)}")
    index = {lab: i for i, lab in enumerate(labels)}

    tdm = np.zeros((len(states), len(states)))
    seen = {}
    for lineno, (a, b, val) in _data_rows(tdm_file, ("from", "to", "tdm_au")):
        for lab in (a, b):
            if lab not in index:
                raise LevelDataError(f"{tdm_file}: row {lineno}: unknown state label {lab!r}")
        if a == b:
            raise LevelDataError(f"{tdm_file}: row {lineno}: self-transition {a}->{b}")
        mu = _number(tdm_file, lineno, val, "tdm")
        key = frozenset((a, b))
        if key in seen and seen[key] != mu:
            raise LevelDataError(
                f"{tdm_file}: row {lineno}: pair {a},{b} listed again with {mu} (was {seen[key]})")
        seen[key] = mu
        i, j = index[a], index[b]
        tdm[i, j] = tdm[j, i] = mu

    system = LevelSystem(tuple(states), tdm)
    for a, b, mu in system.outliers():
        logger.warning("TDM %s-%s = %g a.u. exceeds %g; check the source table", a, b, mu, TDM_WARN_THRESHOLD)
    return system


def dataset_paths(name: str) -> tuple:
    if name not in DATASETS:
        raise KeyError(f"unknown dataset {name!r}; bundled: {', '.join(DATASETS)}")
    root = resources.files("cdstirap") / "data"
    return Path(str(root / f"{name}_levels.csv")), Path(str(root / f"{name}_tdm.csv"))


def load_dataset(name: str) -> LevelSystem:
    """Load one of the bundled datasets ("sccl2" or "hcn")."""
    return load_level_system(*dataset_paths(name))
