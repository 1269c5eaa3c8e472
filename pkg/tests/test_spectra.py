import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wgmcqed.errors import ParameterError
from wgmcqed.model import GHZ, DriveSpec, power_for_photon_number
from wgmcqed.oracle import weak_drive_response
from wgmcqed.spectra import (
    SweepPointError,
    bare_reference,
    cavity_qd_system,
    doublet_lineshape,
    extract_dips,
    extract_peaks,
    fit_doublet,
    ghz_to_pm,
    map_cavity_tuning,
    pm_to_ghz,
    pm_to_rad,
    power_sweep,
    rad_to_pm,
    resolve_threads,
    scan_laser,
    straddle_gap,
    transmission_reflection,
)

PM13_GHZ = 2.3060958307692307
PM31_GHZ = 5.499151596449705


def test_pm_conversion_values():
    assert pm_to_ghz(13.0, 1300e-9) == pytest.approx(PM13_GHZ, rel=1e-12)
    assert pm_to_ghz(31.0, 1300e-9) == pytest.approx(PM31_GHZ, rel=1e-12)
    assert pm_to_ghz(-13.0, 1300e-9) == pytest.approx(-PM13_GHZ, rel=1e-12)
    with pytest.raises(ParameterError):
        pm_to_ghz(1.0, 0.0)


@given(st.floats(-500, 500), st.floats(500e-9, 2000e-9))
def test_pm_round_trip(pm, lam):
    assert ghz_to_pm(pm_to_ghz(pm, lam), lam) == pytest.approx(pm, rel=1e-12, abs=1e-12)
    assert rad_to_pm(pm_to_rad(pm, lam), lam) == pytest.approx(pm, rel=1e-12, abs=1e-12)


def test_extract_peaks_two_lorentzians():
    x = np.linspace(-10, 10, 401)
    y = 1 / (1 + (x - 3) ** 2) + 0.6 / (1 + (x + 2) ** 2)
    rep = extract_peaks(x, y)
    assert rep.count == 2
    assert rep.positions[1] == pytest.approx(3.0, abs=0.02)
    assert rep.splitting == pytest.approx(5.0, abs=0.1)


def test_extract_peaks_edge_cases():
    x = np.linspace(0, 1, 11)
    assert extract_peaks(x, np.ones(11)).count == 0
    assert extract_peaks(x, np.ones(11)).splitting is None
    single = extract_peaks(x, -(x - 0.5) ** 2)
    assert single.count == 1 and single.splitting is None
    assert single.positions[0] == pytest.approx(0.5)
    with pytest.raises(ValueError):
        extract_peaks(x[:4], x[:4])
    with pytest.raises(ValueError):
        extract_peaks(x, x[:-1])


def test_prominence_filters_ripples():
    x = np.linspace(-5, 5, 501)
    y = np.exp(-x**2) + 0.01 * np.cos(20 * x)
    assert extract_peaks(x, y).count > 1
    assert extract_peaks(x, y, 0.5).count == 1


def test_dips_mirror_peaks():
    x = np.linspace(-5, 5, 201)
    y = 1 - np.exp(-(x - 1) ** 2)
    rep = extract_dips(x, y)
    assert rep.count == 1 and rep.positions[0] == pytest.approx(1.0, abs=1e-3)


def test_straddle_gap():
    assert straddle_gap([-2.0, -1.0, 0.5, 3.0]) == 1.5
    assert math.isnan(straddle_gap([1.0, 2.0]))


def test_fit_doublet_recovers_parameters():
    x = np.linspace(-6, 6, 241)
    T = doublet_lineshape(x, 1.081, 1.99, 0.171, 0.05)
    fit = fit_doublet(x * GHZ, T)
    assert fit.kappa_T / GHZ == pytest.approx(1.081, rel=1e-6)
    assert fit.gamma_beta / GHZ == pytest.approx(1.99, rel=1e-6)
    assert fit.kappa_e / GHZ == pytest.approx(0.171, rel=1e-6)
    assert fit.linewidth == pytest.approx(2 * fit.kappa_T)


def test_transmission_reflection_matches_point(nominal):
    sys = cavity_qd_system(nominal, 3)
    drive = DriveSpec(1e-11, 0.5 * GHZ, 0.3 * GHZ)
    rho = sys.solve(drive)
    T, R = transmission_reflection(rho, nominal, drive)
    pt = sys.point(drive)
    assert (T, R) == pytest.approx((pt.T, pt.R), rel=1e-12)
    with pytest.raises(ParameterError):
        transmission_reflection(rho, nominal, DriveSpec(0.0))


@pytest.mark.parametrize("dcl", [-2.0, 0.0, 1.5])
def test_power_balance(nominal, dcl):
    P = power_for_photon_number(nominal, 0.3)
    pt = cavity_qd_system(nominal, 5).point(DriveSpec(P, dcl * GHZ, 0.0))
    lost = (2 * nominal.kappa_i * pt.n_intracavity + nominal.gamma_par * pt.exciton_population) / pt.photon_flux
    assert 1 - pt.T_total - pt.R_total == pytest.approx(lost, abs=1e-12)
    assert pt.balance_error < 1e-12
    # coherent parts never exceed the totals
    assert pt.R <= pt.R_total + 1e-15


def test_empty_cavity_is_linear(nominal):
    p = nominal.replace(g_tw=0.0)
    sys = cavity_qd_system(p, 6)
    lo = sys.point(DriveSpec(1e-12, 0.7 * GHZ, 0.0))
    hi = sys.point(DriveSpec(1e-10, 0.7 * GHZ, 0.0))
    assert hi.T == pytest.approx(lo.T, abs=1e-9)
    assert hi.R == pytest.approx(lo.R, abs=1e-9)
    assert hi.n_intracavity / lo.n_intracavity == pytest.approx(100, rel=1e-6)


def test_scan_matches_oracle_weak_drive(nominal):
    P = power_for_photon_number(nominal, 1e-4)
    grid = np.linspace(-6, 6, 25) * GHZ
    res = scan_laser(nominal, DriveSpec(P, 0.0, 0.0), grid, n_fock=3)
    lr = weak_drive_response(nominal, grid, grid)
    np.testing.assert_allclose(res.T[0], lr.T, atol=2e-5)
    np.testing.assert_allclose(res.R[0], lr.R, atol=2e-5)
    assert res.shape == (1, 25)
    assert res.point(0, 3) is res.points[3]


def test_bases_agree_on_sweep(nominal):
    P = power_for_photon_number(nominal, 1e-3)
    grid = np.linspace(-4, 4, 7) * GHZ
    a = scan_laser(nominal, DriveSpec(P, 0.0, 0.5 * GHZ), grid, n_fock=4, basis="traveling")
    b = scan_laser(nominal, DriveSpec(P, 0.0, 0.5 * GHZ), grid, n_fock=4, basis="standing")
    np.testing.assert_allclose(a.T, b.T, atol=1e-7)
    np.testing.assert_allclose(a.R, b.R, atol=1e-7)


def test_threads_are_deterministic(nominal):
    P = power_for_photon_number(nominal, 0.05)
    grid = np.linspace(-4, 4, 9) * GHZ
    one = scan_laser(nominal, DriveSpec(P), grid, n_fock=3, threads=1)
    many = scan_laser(nominal, DriveSpec(P), grid, n_fock=3, threads=3)
    assert np.array_equal(one.T, many.T) and np.array_equal(one.R, many.R)


def test_resolve_threads(monkeypatch):
    monkeypatch.setenv("WGM_CQED_THREADS", "4")
    assert resolve_threads() == 4
    assert resolve_threads(0) == 1
    monkeypatch.delenv("WGM_CQED_THREADS")
    assert resolve_threads() == 1


@pytest.mark.parametrize("grid", [[], [0.0, 1.0], [0.0, 2.0, 1.0], [0.0, 1.0, np.inf]])
def test_grid_validation(nominal, grid):
    with pytest.raises(ValueError):
        scan_laser(nominal, DriveSpec(1e-12), np.array(grid, dtype=float), n_fock=2)


def test_power_validation(nominal):
    with pytest.raises(ValueError):
        power_sweep(nominal, [0.0, 1e-12], np.linspace(-1, 1, 5) * GHZ, n_fock=2)


def test_empty_cavity_map_has_no_exciton_dependence(nominal):
    p = nominal.replace(g_tw=0.0)
    P = power_for_photon_number(p, 1e-3)
    las = np.linspace(-4, 4, 9) * GHZ
    res = map_cavity_tuning(p, DriveSpec(P), np.array([-2.0, 0.0, 2.0]) * GHZ, las, n_fock=3)
    # same laser-cavity detuning gives the same transmission
    T02 = res.point(0, 2).T  # dcl = -2 - (-2) = 0
    T14 = res.point(1, 4).T  # dcl = 0 - 0
    T26 = res.point(2, 6).T
    assert T02 == pytest.approx(T14, abs=1e-12) and T14 == pytest.approx(T26, abs=1e-12)
    assert np.all(res.exciton_population < 1e-20)


def test_bare_reference_peaks(nominal):
    x = np.linspace(-6, 6, 481) * GHZ
    feat = bare_reference(nominal, x)
    assert feat.r_peaks.count == 2
    np.testing.assert_allclose(np.abs(feat.r_peaks.positions) / GHZ, 1.6707899329359153, atol=2e-3)


def test_power_sweep_low_power_and_flag(nominal):
    x = np.linspace(-6, 6, 41) * GHZ
    powers = [power_for_photon_number(nominal, n) for n in (1e-3, 1.0)]
    res = power_sweep(nominal, powers, x, nominal.gamma_beta, n_fock=3)
    low, high = res.lines
    assert low.n_cav_bare == pytest.approx(1e-3, rel=1e-9)
    assert low.splitting is not None and low.splitting > 2 * nominal.gamma_beta
    assert not low.truncation_flag
    assert high.truncation_flag  # three Fock levels cannot hold one photon


def test_sweep_point_error_carries_index(nominal, monkeypatch):
    sys = cavity_qd_system(nominal, 2, "traveling")  # same cache key as scan_laser
    original = sys.point

    def flaky(drive):
        if drive.laser_detuning > 0:
            raise ParameterError("boom")
        return original(drive)

    monkeypatch.setattr(sys, "point", flaky)
    try:
        with pytest.raises(SweepPointError) as info:
            scan_laser(nominal, DriveSpec(1e-12), np.linspace(-1, 1, 5) * GHZ, n_fock=2)
        assert info.value.index == 3
    finally:
        monkeypatch.undo()
