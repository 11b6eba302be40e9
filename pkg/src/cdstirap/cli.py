"""``cdstirap`` command line: propagate, scan and validate.

Exit codes: 0 success, 1 configuration or data error, 2 integration failure.
"""
from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import scenarios as sc_mod
from .config import ConfigError, RunConfig, labels_list, load_config
from .dynamics import INTERACTION, SCHRODINGER, IntegrationDiverged
from .rwa3 import drive_adiabaticity
from .scenarios import CDF_ONLY, STIRAP_PLUS_CDF, ScanError
from .spectro import DATASETS, LevelDataError, intensity_of_field, load_dataset, transition_energy

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_INTEGRATION = 2

DEFAULT_CONFIG = {"sccl2": "sccl2_1to6", "hcn": "hcn_stage2"}
REFERENCE_SCENARIOS = {"sccl2": ("sccl2_1to6", "sccl2_1to3"), "hcn": ("hcn_stage2", "hcn_sequential")}

log = logging.getLogger("cdstirap")


def fmt(x: float) -> str:
    # repr-based formatting never consults the locale
    return repr(float(x))


def _common(p: argparse.ArgumentParser):
    p.add_argument("--dataset", choices=DATASETS + ("custom",))
    p.add_argument("--config", help="config file, or the name of a bundled config")
    p.add_argument("--out", help="output directory")
    p.add_argument("--dt-au", type=float, dest="dt_au")
    p.add_argument("--lambda", type=float, dest="lam")
    p.add_argument("--eta", type=float)
    p.add_argument("--fwhm-ps", type=float, dest="fwhm_ps")
    p.add_argument("--subset", help="comma-separated state labels to keep")
    p.add_argument("--picture", choices=(INTERACTION, SCHRODINGER))
    p.add_argument("--mode", choices=(STIRAP_PLUS_CDF, CDF_ONLY))
    p.add_argument("--threads", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cdstirap", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("propagate", help="propagate one scenario, write trajectory.csv and summary.txt")
    _common(p)
    p = sub.add_parser("scan", help="scan lambda, FWHM or eta, write scan_<axis>.csv")
    _common(p)
    p.add_argument("--axis", required=True, choices=("lambda", "fwhm", "eta"))
    p.add_argument("--from", type=float, dest="start")
    p.add_argument("--to", type=float, dest="stop")
    p.add_argument("--step", type=float)
    p.add_argument("--grid", help="explicit comma-separated values (overrides --from/--to/--step)")
    p = sub.add_parser("validate", help="re-derive reference quantities and check the level data")
    p.add_argument("--dataset", choices=DATASETS + ("custom",), default=None)
    p.add_argument("--levels", help="levels CSV for a custom dataset")
    p.add_argument("--tdm", help="TDM CSV for a custom dataset")
    return parser


def resolve_config(args) -> RunConfig:
    if args.config:
        cfg = load_config(args.config)
        if args.dataset and args.dataset != cfg.dataset:
            raise ConfigError(f"--dataset {args.dataset} conflicts with config dataset {cfg.dataset}")
    else:
        name = DEFAULT_CONFIG.get(args.dataset or "sccl2")
        if name is None:
            raise ConfigError("a custom dataset needs --config")
        cfg = load_config(name)
    overrides = {"dt_au": args.dt_au, "lam": args.lam, "eta": args.eta, "fwhm_ps": args.fwhm_ps,
                 "picture": args.picture, "mode": args.mode, "threads": args.threads, "out": args.out}
    for key, val in overrides.items():
        if val is not None:
            setattr(cfg, key, val)
    if args.subset:
        cfg.subset = labels_list(args.subset)
    if cfg.stages and (args.fwhm_ps is not None or args.eta is not None):
        raise ConfigError("--fwhm-ps and --eta apply to single-stage configs only")
    if cfg.stages and args.lam is not None:
        for st in cfg.stages.values():
            st.lam = args.lam
    return cfg.validate()


def write_trajectory(path: Path, result) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t_ps"] + [f"P_{lab}" for lab in result.labels] + ["norm"])
        norms = result.norms if result.norms is not None else result.populations.sum(axis=1)
        for t, row, nrm in zip(result.times, result.populations, norms):
            w.writerow([fmt(t)] + [fmt(x) for x in row] + [fmt(nrm)])


def summary_text(summary, dt: float) -> str:
    sc = summary.scenario
    res = summary.result
    lines = [
        f"scenario: {sc.name or 'custom'}",
        f"transfer: {' -> '.join(sc.labels)}",
        f"lambda: {fmt(sc.lam)}",
        f"mode: {STIRAP_PLUS_CDF if sc.stirap_on else CDF_ONLY}",
        f"picture: {sc.picture}",
        f"dt_au: {fmt(dt)}",
        f"fidelity: {summary.fidelity:.6f}",
        f"leakage: {summary.leakage:.6f}",
        f"norm_drift: {summary.norm_drift:.3e}",
    ]
    for k, a in enumerate(summary.adiabaticity, start=1):
        tag = f"_{k}" if len(summary.adiabaticity) > 1 else ""
        lines.append(f"adiabaticity{tag}: {a:.4f}")
    for name, val in summary.peak_intensities.items():
        lines.append(f"peak_intensity_{name}_W_cm2: {val:.4e}")
    lines.append("final_populations:")
    for lab, p in zip(res.labels, res.populations[-1]):
        lines.append(f"  {lab}: {p:.6f}")
    return "\n".join(lines) + "\n"


def cmd_propagate(cfg: RunConfig) -> int:
    scenario = cfg.to_scenario()
    result = sc_mod.run(scenario)
    summary = sc_mod.summarize(scenario, result)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    write_trajectory(out / "trajectory.csv", result)
    text = summary_text(summary, result.dt)
    (out / "summary.txt").write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return EXIT_OK


def scan_grid(axis: str, start, stop, step, grid, cfg: RunConfig) -> list:
    if grid:
        try:
            return [float(x) for x in grid.split(",") if x.strip()]
        except ValueError:
            raise ConfigError(f"bad --grid {grid!r}") from None
    if start is None and stop is None and step is None:
        if axis == "lambda":
            return list(sc_mod.DEFAULT_LAMBDA_GRID)
        if axis == "eta":
            return list(sc_mod.DEFAULT_ETA_GRID)
        return sc_mod.default_fwhm_grid(0.1 * cfg.fwhm_ps, 2.0 * cfg.fwhm_ps)
    if start is None or stop is None or step is None:
        raise ConfigError("--from, --to and --step go together")
    if not step > 0 or stop < start:
        raise ConfigError("need --step > 0 and --to >= --from")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    # rounding keeps 0.05-style steps free of accumulated float noise
    return [round(start + k * step, 12) for k in range(n)]


def cmd_scan(cfg: RunConfig, axis: str, values: list) -> int:
    if cfg.stages and axis != "lambda":
        raise ConfigError("fwhm and eta scans need a single-stage config")
    if not values:
        raise ConfigError("empty scan grid")
    scenario = cfg.to_scenario()
    if axis == "lambda":
        res = sc_mod.scan_lambda(scenario, values, cfg.mode, threads=cfg.threads)
    elif axis == "fwhm":
        res = sc_mod.scan_fwhm(scenario, values, threads=cfg.threads)
    else:
        res = sc_mod.scan_eta(scenario, values, threads=cfg.threads)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"scan_{axis}.csv"
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([axis, "fidelity", "leakage", "norm_drift"])
        for p in res.points:
            w.writerow([fmt(p.value), fmt(p.fidelity), fmt(p.leakage), fmt(p.norm_drift)])
    best = res.points[int(np.argmax(res.fidelities))]
    print(f"wrote {path} ({len(res.points)} rows); best {axis} = {best.value:g} "
          f"with fidelity {best.fidelity:.6f}")
    return EXIT_OK


def _report_scenario(scenario) -> list:
    from .scenarios import drives_for

    lines = [f"[{scenario.name}] {' -> '.join(scenario.labels)}"]
    system = scenario.system
    stages = scenario.stage_list or (scenario,)
    for k, (st, d) in enumerate(zip(stages, drives_for(scenario)), start=1):
        tag = f"stage {k}: " if scenario.stage_list else ""
        e_p = transition_energy(system, st.initial, st.intermediate)
        e_s = transition_energy(system, st.intermediate, st.target)
        lines.append(f"  {tag}pump {st.initial}->{st.intermediate} {e_p:.2f} cm-1, "
                     f"Stokes {st.intermediate}->{st.target} {e_s:.2f} cm-1")
        lines.append(f"  {tag}peak Rabi pump {d.peak_rabi_pump:.4e} a.u., Stokes {d.peak_rabi_stokes:.4e} a.u.")
        lines.append(f"  {tag}adiabaticity dT*Omega_rms {drive_adiabaticity(d):.3f}")
        lines.append(f"  {tag}peak intensity pump {intensity_of_field(d.pump.amplitude):.2e} W/cm^2, "
                     f"Stokes {intensity_of_field(d.stokes.amplitude):.2e} W/cm^2")
    return lines


def cmd_validate(dataset, levels=None, tdm=None) -> int:
    from .spectro import load_level_system

    names = [dataset] if dataset else list(DATASETS)
    if levels or tdm:
        if not (levels and tdm):
            raise ConfigError("--levels and --tdm go together")
        names = ["custom"]
    for name in names:
        system = load_level_system(levels, tdm) if name == "custom" else load_dataset(name)
        print(f"dataset {name}: {len(system)} states")
        for lab, e in zip(system.labels, system.energies_cm1):
            print(f"  state {lab}: {e:.2f} cm-1")
        for a, b, mu in system.outliers():
            print(f"  WARNING: TDM {a}-{b} = {mu:.4f} a.u. exceeds 0.5 a.u.")
        for sc_name in REFERENCE_SCENARIOS.get(name, ()):
            for line in _report_scenario(sc_mod.BUNDLED[sc_name](system)):
                print(line)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "validate":
            return cmd_validate(args.dataset, args.levels, args.tdm)
        cfg = resolve_config(args)
        if args.command == "propagate":
            return cmd_propagate(cfg)
        values = scan_grid(args.axis, args.start, args.stop, args.step, args.grid, cfg)
        return cmd_scan(cfg, args.axis, values)
    except (ConfigError, LevelDataError, FileNotFoundError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IntegrationDiverged, ScanError) as exc:
        print(f"integration failure: {exc}", file=sys.stderr)
        return EXIT_INTEGRATION


if __name__ == "__main__":
    sys.exit(main())
