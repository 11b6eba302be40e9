import numpy as np
import pytest
from dataclasses import replace

from cdstirap.dynamics import PropagationConfig, propagate
from cdstirap.pulse import cdf_amplitude
from cdstirap.scenarios import (BUNDLED, CDF_ONLY, DEFAULT_LAMBDA_GRID, STIRAP_PLUS_CDF, Scenario, ScanError,
                                Stage, drive_for, drives_for, fidelity, hcn_sequential, hcn_stage2, leakage,
                                run, scan_eta, scan_fwhm, scan_lambda, sccl2_1to3, sccl2_1to6, stage_drives,
                                summarize, with_eta, with_fwhm)
from cdstirap.spectro import load_dataset, ps_to_au


@pytest.fixture(scope="module")
def sccl2():
    return load_dataset("sccl2")


@pytest.fixture(scope="module")
def hcn():
    return load_dataset("hcn")


@pytest.fixture(scope="module")
def small(sccl2):
    # decoupled three-state version: fast enough for unit tests
    return replace(sccl2_1to6(sccl2, lam=1.0), subset=frozenset({"1", "5a", "6"}))


def test_scenario_validation(sccl2):
    with pytest.raises(ValueError):
        Scenario(sccl2, "1", "1", "6", 1e-6, 1e-6, 215.0)
    with pytest.raises(KeyError):
        Scenario(sccl2, "1", "5a", "99", 1e-6, 1e-6, 215.0)
    with pytest.raises(ValueError):
        Scenario(sccl2, "1", "5a", "6", 1e-6, 1e-6, -1.0)
    with pytest.raises(KeyError):
        Scenario(sccl2, "1", "5a", "6", 1e-6, 1e-6, 215.0, subset={"1", "x"})


def test_resonant_carriers_and_cdf_sign(sccl2, hcn):
    d = drive_for(sccl2_1to6(sccl2))
    assert d.cdf_carrier == pytest.approx(1312.9592, abs=1e-9)
    assert d.cdf_sign == 1
    assert d.pump.carrier_freq == pytest.approx(5197.0874 - 4338.6025, abs=1e-9)
    assert d.stokes.carrier_freq == pytest.approx(abs(5651.5617 - 5197.0874), abs=1e-9)
    h = drive_for(hcn_stage2(hcn))
    assert h.cdf_carrier == pytest.approx(12551.20, abs=1e-9)
    assert h.cdf_sign == -1
    assert h.mu_bridge == pytest.approx(3.676e-5)


def test_sccl2_1to3_matches_rabi(sccl2):
    a, b = drive_for(sccl2_1to6(sccl2)), drive_for(sccl2_1to3(sccl2))
    assert b.peak_rabi_pump == pytest.approx(a.peak_rabi_pump, rel=1e-12)
    assert b.peak_rabi_stokes == pytest.approx(a.peak_rabi_stokes, rel=1e-12)


def test_sequential_stages(hcn):
    sc = hcn_sequential(hcn)
    d1, d2 = stage_drives(sc)
    assert (d1.stokes.center, d1.pump.center, d2.stokes.center, d2.pump.center) == (133.0, 194.0, 423.0, 484.0)
    assert d1.pump.fwhm == d2.pump.fwhm == 85.0
    assert sc.labels == ("1", "2", "3", "4", "5")
    bad = replace(sc, stage_list=(sc.stage_list[1], sc.stage_list[0]))
    with pytest.raises(ValueError, match="non-decreasing"):
        stage_drives(bad)


def test_reference_fwhm_and_eta_reproduce_scenario(sccl2):
    sc = sccl2_1to6(sccl2)
    assert drive_for(with_fwhm(sc, sc.fwhm)) == drive_for(sc)
    assert drive_for(with_eta(sc, 1.0)) == drive_for(sc)


def test_fwhm_rescale_keeps_pulse_area(sccl2):
    sc = sccl2_1to6(sccl2)
    a, b = drive_for(sc), drive_for(with_fwhm(sc, 100.0))
    assert b.pump.amplitude * b.pump.fwhm == pytest.approx(a.pump.amplitude * a.pump.fwhm, rel=1e-12)
    assert b.stokes.amplitude * b.stokes.fwhm == pytest.approx(a.stokes.amplitude * a.stokes.fwhm, rel=1e-12)


def test_cdf_peak_falls_with_eta(hcn):
    sc = hcn_stage2(hcn)
    peaks = []
    for eta in (0.5, 1, 2, 3, 4, 5):
        d = drive_for(with_eta(sc, eta))
        t = ps_to_au(np.linspace(d.stokes.center - 300, d.pump.center + 300, 4001))
        peaks.append(np.max(np.abs(cdf_amplitude(d, t))))
    assert all(b < a for a, b in zip(peaks, peaks[1:]))


def test_default_lambda_grid():
    assert len(DEFAULT_LAMBDA_GRID) == 41
    assert DEFAULT_LAMBDA_GRID[0] == 0.0 and DEFAULT_LAMBDA_GRID[-1] == 2.0


def test_fidelity_identity_and_errors(sccl2):
    sc = sccl2_1to6(sccl2, lam=0.0)
    zero = replace(sc, pump_amp=0.0, stokes_amp=0.0, subset=frozenset({"1", "5a", "6"}))
    r = run(zero)
    assert fidelity(r, "1") == 1.0
    assert leakage(r, ["1"]) == 0.0
    with pytest.raises(KeyError):
        fidelity(r, "7")


def test_cdf_only_at_zero_lambda_is_no_drive(small):
    res = scan_lambda(small, [0.0], mode=CDF_ONLY)
    assert res.points[0].fidelity < 1e-12


def test_lambda_scan_thread_identity(small):
    grid = [0.0, 0.5, 1.0]
    one = scan_lambda(small, grid, threads=1)
    many = scan_lambda(small, grid, threads=3)
    assert one.points == many.points
    assert one.values == grid
    assert all(0 <= f <= 1 for f in one.fidelities)
    assert one.argmax() == 1.0
    assert one.points[2].fidelity > 0.9999


def test_scan_aborts_with_offending_value(small):
    coarse = replace(small, dt=5000.0)
    with pytest.raises(ScanError) as info:
        scan_lambda(coarse, [0.3])
    assert info.value.value == 0.3 and info.value.parameter == "lambda"


def test_fwhm_scan_reference_point_matches_run(small):
    res = scan_fwhm(small, [small.fwhm])
    assert res.points[0].fidelity == fidelity(run(small), "6")
    with pytest.raises(ValueError):
        scan_fwhm(small, [100.0], keep="intensity")


def test_eta_scan_reference_point(small):
    res = scan_eta(small, [1.0])
    assert res.points[0].fidelity == fidelity(run(small), "6")


def test_summary(sccl2):
    sc = replace(sccl2_1to6(sccl2, lam=1.0), subset=frozenset({"1", "5a", "6"}))
    s = summarize(sc)
    assert s.fidelity > 0.9999
    assert s.adiabaticity[0] == pytest.approx(2.6, abs=0.05)
    assert set(s.peak_intensities) == {"pump", "stokes"}
    assert s.norm_drift < 1e-8


def test_zero_stage2_strands_population(hcn):
    sc = hcn_sequential(hcn)
    st2 = replace(sc.stage_list[1], pump_amp=0.0, stokes_amp=0.0)
    sub = replace(sc, stage_list=(sc.stage_list[0], st2), subset=frozenset({"1", "2", "3", "4", "5"}))
    r = run(sub)
    assert r.final_population("3") > 0.95
    assert r.final_population("5") < 1e-6


def test_bundled_registry():
    assert set(BUNDLED) == {"sccl2_1to6", "sccl2_1to3", "hcn_stage2", "hcn_sequential"}


def test_sequential_stage1_completes_before_stage2():
    from runs import run_case
    _, r, _ = run_case("hcn_sequential")
    k = int(np.argmin(np.abs(r.times - 310.0)))  # between the stage-1 pump and the stage-2 Stokes
    assert r.population("3")[k] > 0.95
    assert r.norm_drift < 1e-8


def test_hcn_shorter_delay_raises_fidelity():
    from runs import fid
    assert fid("hcn_stage2", lam=1.0, eta=5.0) > fid("hcn_stage2", lam=1.0)
