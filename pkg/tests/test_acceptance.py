"""Acceptance criteria 1-8. Each test prints one PASS/FAIL line (see the summary section).

Full-manifold trajectories are expensive, so every run is cached per session and
shared between criteria (the lambda=1 SCCl2 run serves criteria 1, 6, 7 and 8).
"""
import math
import time

import numpy as np

from cdstirap import scenarios as S
from cdstirap.dynamics import convergence_check
from cdstirap.pulse import make_drive, mixing_angle_rate, pulse_area_theta
from cdstirap.rwa3 import fidelity_rwa3, propagate_drive_rwa3
from cdstirap.spectro import intensity_of_field

from oracles import PS, tau_from_fwhm, theta_rate_sech
from runs import bundled, fid, run_case, scenario

SCCL2_LAMBDA_GRID = (0.0, 0.5, 0.7, 0.8, 0.85, 0.9, 0.95, 1.0, 1.1, 1.2, 1.5, 2.0)
SCCL2_FWHM_GRID = (20.0, 30.0, 40.0, 50.0, 60.0, 75.0, 100.0, 150.0, 215.0, 300.0)
HCN_FWHM_GRID = (50.0, 75.0, 100.0, 125.0, 150.0, 212.5)
SCCL2_THRESHOLD = 50.0
HCN_THRESHOLD = 125.0


def verdict(ok, fallback=False):
    return "PASS" if ok and not fallback else ("PASS (fallback)" if ok else "FAIL")


def test_criterion_1_sccl2_full_manifold(report):
    f0, f1 = fid("sccl2_1to6", lam=0.0), fid("sccl2_1to6", lam=1.0)
    secs = max(run_case("sccl2_1to6", lam=0.0)[2], run_case("sccl2_1to6", lam=1.0)[2])
    primary = abs(f0 - 0.688) <= 0.05 and abs(f1 - 0.974) <= 0.03
    ok, used_fallback = primary, False
    if not primary:
        sc, r, _ = run_case("sccl2_1to6", lam=1.0)
        conv = convergence_check(sc.system, S.drive_for(sc), sc.config(), reference=r)
        ok = conv.passed and f1 - f0 > 0.2 and f1 > 0.9
        used_fallback = True
    ok = ok and secs < 300
    report(f"criterion 1 {verdict(ok, used_fallback)}: SCCl2 1->6 fidelity lambda=0 {f0:.4f} "
           f"(0.688+-0.05), lambda=1 {f1:.4f} (0.974+-0.03); slowest trajectory {secs:.0f} s (< 300 s)")
    assert ok


def test_criterion_2_hcn_stage2(report):
    dec = fid("hcn_stage2", lam=0.0, subset=("3", "4", "5"))
    f0, f1 = fid("hcn_stage2", lam=0.0), fid("hcn_stage2", lam=1.0)
    primary = abs(dec - 0.995) <= 0.005 and abs(f0 - 0.57) <= 0.07 and abs(f1 - 0.88) <= 0.05
    ok, used_fallback = primary, False
    if not primary:
        ok = dec - f1 > 0.05 and f1 - f0 > 0.05
        used_fallback = True
    report(f"criterion 2 {verdict(ok, used_fallback)}: HCN stage 2 decoupled {dec:.4f} (0.995+-0.005), "
           f"full STIRAP {f0:.4f} (0.57+-0.07), full STIRAP+CDF {f1:.4f} (0.88+-0.05)")
    assert ok


def test_criterion_3_exact_cd_oracle(report):
    propagate_drive_rwa3(make_drive(1e-5, 1e-5, 1.0, 0.1, 0.1), include_cd=True)  # JIT warm-up
    worst_f, worst_mid, worst_t, n = 1.0, 0.0, 0.0, 0
    for name in S.BUNDLED:
        for d in S.drives_for(bundled(name)):
            t0 = time.perf_counter()
            r = propagate_drive_rwa3(d, include_cd=True)
            worst_t = max(worst_t, time.perf_counter() - t0)
            worst_f = min(worst_f, fidelity_rwa3(r))
            worst_mid = max(worst_mid, float(r.populations[:, 1].max()))
            n += 1
    ok = worst_f > 1 - 1e-6 and worst_mid < 1e-6 and worst_t < 1.0
    report(f"criterion 3 {verdict(ok)}: exact-CD RWA over {n} pulse pairs: min fidelity 1-{1 - worst_f:.2e}, "
           f"max intermediate {worst_mid:.2e}, slowest {worst_t:.3f} s")
    assert ok


def test_criterion_4_intensity(report):
    i1, i2 = intensity_of_field(0.0009295), intensity_of_field(0.002875)
    e1, e2 = abs(i1 / 3.03e10 - 1), abs(i2 / 2.90e11 - 1)
    ok = e1 < 5e-3 and e2 < 5e-3
    report(f"criterion 4 {verdict(ok)}: 0.0009295 a.u. -> {i1:.4e} W/cm^2 ({e1:.2%} off), "
           f"0.002875 a.u. -> {i2:.4e} W/cm^2 ({e2:.2%} off)")
    assert ok


def test_criterion_5_theta_identities(report):
    worst_rel = 0.0
    for fwhm, eta, mu_p, mu_s in [(215.0, 1.0, 0.2062, 0.2090), (212.5, 1.0, 0.003054, 0.0009863),
                                  (85.0, 2.5, 0.1, 0.3), (40.0, 0.4, 0.05, 0.05)]:
        d = make_drive(3e-6, 3e-6 * mu_p / mu_s, fwhm, mu_p, mu_s, eta=eta)
        tau = tau_from_fwhm(fwhm) * PS
        t = d.t_mid * PS + np.linspace(-10, 10, 4001) * tau
        want = theta_rate_sech(d.delay * PS, tau, d.t_mid * PS, t)
        worst_rel = max(worst_rel, float(np.max(np.abs(mixing_angle_rate(d, t) / want - 1))))
    rng = np.random.default_rng(20240611)
    worst_area = 0.0
    for _ in range(20):
        amp_p, amp_s = 10 ** rng.uniform(-7, -3, size=2)
        fwhm = rng.uniform(10.0, 500.0)
        eta = rng.uniform(0.25, 6.0)
        d = make_drive(amp_p, amp_s, fwhm, 0.1, 0.1, eta=eta)
        worst_area = max(worst_area, abs(pulse_area_theta(d) - math.pi / 2))
    ok = worst_rel < 1e-10 and worst_area < 1e-6
    report(f"criterion 5 {verdict(ok)}: sech form max rel. error {worst_rel:.1e} (< 1e-10); "
           f"20 random areas max |area - pi/2| {worst_area:.1e} (< 1e-6)")
    assert ok


def test_criterion_6_complementarity(report):
    parts = []
    ok = True
    for name in ("sccl2_1to6", "hcn_stage2"):
        both = fid(name, lam=1.0)
        stirap = fid(name, lam=0.0)
        cdf = fid(name, lam=1.0, mode=S.CDF_ONLY)
        ok = ok and both > stirap and both > cdf
        parts.append(f"{name} STIRAP+CDF {both:.4f} vs STIRAP {stirap:.4f}, CDF alone {cdf:.4f}")
    fids = [fid("sccl2_1to6", lam=lam) for lam in SCCL2_LAMBDA_GRID]
    best = SCCL2_LAMBDA_GRID[int(np.argmax(fids))]
    ok = ok and 0.7 < best < 1.0
    report(f"criterion 6 {verdict(ok)}: {'; '.join(parts)}; SCCl2 lambda-scan argmax {best:g} "
           f"(F={max(fids):.4f}) in (0.7, 1.0)")
    assert ok


def _fwhm_trend(name, grid, threshold):
    plain = [fid(name, lam=0.0, fwhm=f) for f in grid]
    cdf = [fid(name, lam=1.0, fwhm=f) for f in grid]
    above = all(c > p for f, c, p in zip(grid, cdf, plain) if f > threshold)
    below = [c for f, c in zip(grid, cdf) if f <= threshold]
    falls = len(below) >= 2 and all(b > a for a, b in zip(below, below[1:]))
    table = ", ".join(f"{f:g}:{c:.3f}/{p:.3f}" for f, c, p in zip(grid, cdf, plain))
    return above, falls, table


def test_criterion_7_fwhm_trends(report):
    s_above, s_falls, s_tab = _fwhm_trend("sccl2_1to6", SCCL2_FWHM_GRID, SCCL2_THRESHOLD)
    h_above, h_falls, h_tab = _fwhm_trend("hcn_stage2", HCN_FWHM_GRID, HCN_THRESHOLD)
    ok = s_above and s_falls and h_above and h_falls
    report(f"criterion 7 {verdict(ok)}: FWHM:STIRAP+CDF/STIRAP SCCl2 [{s_tab}] (CDF wins >50 ps: {s_above}, "
           f"falls below: {s_falls}); HCN [{h_tab}] (CDF wins >125 ps: {h_above}, falls below: {h_falls})")
    assert ok


def test_criterion_8_propagator_health(report):
    worst_drift, worst_dev, failures = 0.0, 0.0, []
    for name in S.BUNDLED:
        sc, r, _ = run_case(name)
        worst_drift = max(worst_drift, r.norm_drift)
        conv = convergence_check(sc.system, S.drives_for(sc), sc.config(), reference=r)
        worst_dev = max(worst_dev, conv.max_deviation)
        if not conv.passed or r.norm_drift >= 1e-8:
            failures.append(name)
    sc = scenario("sccl2_1to6", lam=1.0)
    grid = [20.0, 30.0]
    one = S.scan_fwhm(sc, grid, threads=1)
    many = S.scan_fwhm(sc, grid, threads=2)
    same = one.points == many.points
    ok = not failures and same
    report(f"criterion 8 {verdict(ok)}: bundled scenarios max norm drift {worst_drift:.1e} (< 1e-8), "
           f"max dt-halving deviation {worst_dev:.1e} (< 1e-4), 1 vs 2 threads identical: {same}"
           + (f"; failing: {', '.join(failures)}" if failures else ""))
    assert ok
