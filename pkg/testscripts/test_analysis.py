"""
Test Analysis Pipeline
Binning, readout errors, Luttinger fits, Friedel fits, light cones and hole decay
"""

import math
import os
import sys

import numpy as np
import pytest

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from analyzers.binning import bin_correlations
from analyzers.detection import apply_detection, detection_factor, invert_detection
from analyzers.friedel_fit import (
    chain_coordinates, fit_friedel, friedel_fft, friedel_model, friedel_wavevector, wavevector_slope,
)
from analyzers.holes import hole_decay_length
from analyzers.lightcone_fit import fit_lightcone, front_arrival
from analyzers.luttinger_fit import LuttingerFitter, cx_model, cz_model, fit_power_law_tail
from lattice.geometry import chord_of_separation
from models.lattice_models import ChainGeometry
from models.protocol_models import QuenchGrid
from utils.exceptions import FitError

N = 24


def _profile_from_law(law):
    """Binned profile of a translation-invariant matrix C_ij = law(r, d)"""
    idx = np.arange(N)
    sep = np.abs(idx[:, None] - idx[None, :])
    sep = np.minimum(sep, N - sep)
    matrix = np.ones((N, N))
    off = sep > 0
    matrix[off] = law(chord_of_separation(sep[off], N), sep[off])
    return bin_correlations(matrix, ChainGeometry(n_sites=N))


def test_binning_by_chord_distance():
    print("\n=== Testing correlation binning ===")
    profile = _profile_from_law(lambda r, d: 1.0 / r)
    assert list(profile.d) == list(range(1, 13))
    assert np.allclose(profile.r, chord_of_separation(np.arange(1, 13), N))
    assert np.allclose(profile.mean, 1.0 / profile.r)
    assert list(profile.n_pairs) == [24] * 11 + [12]
    assert np.allclose(profile.stderr, 0.0)
    print("[OK] 12 bins, 24 pairs each except the diameter")


def test_binning_skips_holes():
    matrix = np.full((6, 6), 0.5)
    matrix[2, :] = np.nan
    matrix[:, 2] = np.nan
    profile = bin_correlations(matrix, ChainGeometry(n_sites=6, holes=frozenset({2})))
    assert list(profile.n_pairs) == [4, 4, 2]
    assert np.allclose(profile.mean, 0.5)


def test_detection_factor():
    print("\n=== Testing readout-error maps ===")
    assert detection_factor(0.025, 0.03) == pytest.approx(0.89)
    values = np.array([-1.0, -0.2, 0.4, 1.0])
    assert np.allclose(invert_detection(apply_detection(values, 0.025, 0.03), 0.025, 0.03), values)
    profile = _profile_from_law(lambda r, d: 1.0 / r)
    assert np.allclose(apply_detection(profile, 0.025, 0.03).mean, 0.89 * profile.mean)
    with pytest.raises(ValueError):
        detection_factor(0.3, 0.0)
    print("[OK] correlation factor 0.89 for eps = 0.025, 0.03")


def test_hole_decay_chord():
    print("\n=== Testing hole decay length ===")
    xi, chord = hole_decay_length(0.06, 24)
    assert xi == pytest.approx(1.0 / abs(math.log(0.88)))
    assert chord == pytest.approx(6.525, abs=0.01)
    assert hole_decay_length(0.0, 24)[0] == math.inf
    with pytest.raises(ValueError):
        hole_decay_length(0.5)
    print(f"[OK] xi = {xi:.3f} sites, chord {chord:.3f}")


def test_fit_cx_recovers_parameters():
    print("\n=== Testing the C^x fit ===")
    profile = _profile_from_law(lambda r, d: cx_model(r, d, 0.85, 0.6, 0.1))
    fit = LuttingerFitter(envelope=False).fit_cx(profile, N, r_c=1.0)
    assert fit["K"] == pytest.approx(0.85, abs=1e-4)
    assert fit["A"] == pytest.approx(0.6, abs=1e-4)
    assert fit["B"] == pytest.approx(0.1, abs=1e-3)
    print(f"[OK] K = {fit['K']:.5f}")


def test_fit_cx_staggered():
    staggered = lambda r, d: np.where(d % 2 == 0, 1.0, -1.0) * cx_model(r, d, 0.85, 0.6, 0.0)
    profile = _profile_from_law(staggered)
    fit = LuttingerFitter(envelope=False).fit_cx(profile, N, r_c=1.0, stagger=True)
    assert fit["K"] == pytest.approx(0.85, abs=1e-4)


def test_fit_cz_with_rescale():
    print("\n=== Testing the C^z fit ===")
    profile = _profile_from_law(lambda r, d: cz_model(r, d, 1.85, 0.05, rescale=0.89))
    fit = LuttingerFitter().fit_cz(profile, N, r_c=1.0, rescale=0.89)
    assert fit["K"] == pytest.approx(1.85, abs=1e-3)
    print(f"[OK] K = {fit['K']:.4f} with the 0.89 readout rescale")


def test_fit_needs_enough_points():
    profile = _profile_from_law(lambda r, d: cx_model(r, d, 1.0, 0.5, 0.0))
    with pytest.raises(FitError):
        LuttingerFitter().fit_cx(profile, N, r_c=10.0)


def test_cutoff_scan_selects_plateau():
    print("\n=== Testing the cutoff scan ===")
    profile = _profile_from_law(lambda r, d: cx_model(r, d, 0.85, 0.6, 0.1))
    scan = LuttingerFitter(envelope=False).cutoff_scan(profile, N, "cx", cutoffs=[0, 1, 2, 3])
    assert scan.selected_rc == 0
    assert len(scan.rows) == 4
    assert all(abs(k - 0.85) < 1e-3 for k in scan.k_values().values())
    print("[OK] smallest cutoff with a stable K selected")


def test_power_law_tail():
    r = np.logspace(0, 2, 15)
    fit = fit_power_law_tail(r, 3.0 * r ** -2.0)
    assert fit["slope"] == pytest.approx(-2.0, abs=1e-9)
    assert fit["global_slope"] == pytest.approx(-2.0, abs=1e-9)
    with pytest.raises(FitError):
        fit_power_law_tail(r[:2], r[:2])


def test_friedel_wavevector():
    assert friedel_wavevector(11, 23) == pytest.approx(12 * math.pi / 23)
    assert friedel_wavevector(1, 23) == pytest.approx(math.pi * 22 / 23)
    assert chain_coordinates(5).tolist() == [-2.0, -1.0, 0.0, 1.0, 2.0]


def test_friedel_fit_and_fft():
    print("\n=== Testing the Friedel fit ===")
    n, mz = 23, 1
    kf2 = friedel_wavevector(mz, n)
    profile = friedel_model(chain_coordinates(n), n, 0.0, 0.2, 0.85, kf2)
    fit = fit_friedel(profile, n, mz, background=0.0)
    assert fit["A"] == pytest.approx(0.2, rel=1e-4)
    assert fit["K"] == pytest.approx(0.85, abs=1e-4)
    free = fit_friedel(profile, n, mz, background=0.0, pin_wavevector=False)
    assert free["kF2"] == pytest.approx(kf2, abs=2 * math.pi / n)
    fft = friedel_fft(profile)
    assert abs(fft.peak_n - (n - mz) // 2) <= 1
    assert not fft.flat
    with pytest.raises(FitError):
        fit_friedel(profile[:-1], n - 1, mz)
    print(f"[OK] A, K recovered; FFT peak at n = {fft.peak_n}")


def test_wavevector_slope():
    n = 23
    peaks = {mz: friedel_wavevector(mz, n) for mz in (1, 3, 5, 7)}
    fit = wavevector_slope(peaks, n)
    assert fit["slope"] == pytest.approx(-math.pi / n)
    assert fit.metadata["relative_deviation"] < 1e-9


def test_front_arrival_uses_rising_edge():
    times = np.linspace(0.0, 1.0, 11)
    # rises linearly from t=0.2 to the first maximum at t=0.6, then a larger wake
    values = np.array([0.0, 0.0, 0.0, 0.25, 0.5, 0.75, 1.0, 0.4, 0.2, 1.5, 0.3])
    assert front_arrival(times, values, relative_threshold=0.2) == pytest.approx(0.4)
    assert front_arrival(times, values, relative_threshold=0.2,
                         front_fraction=0.25) == pytest.approx(0.3)
    assert front_arrival(times, values, relative_threshold=0.2,
                         front_fraction=1.0) == pytest.approx(0.6)
    assert front_arrival(times, -values) is None
    with pytest.raises(ValueError):
        front_arrival(times, values, front_fraction=0.0)


def test_lightcone_velocity():
    print("\n=== Testing the light-cone fit ===")
    v, d0, width = 1.3, 0.5, 0.05
    times = np.linspace(0.0, 3.0, 301)
    d = np.arange(1, 8, dtype=float)
    arrival = (d - d0) / (2.0 * v)
    values = np.exp(-((times[:, None] - arrival[None, :]) / width) ** 2)
    grid = QuenchGrid(times=times, d=d, values=values, stderr=np.zeros_like(values),
                      variance_mz=np.zeros(len(times)))
    fit = fit_lightcone(grid, d_min=2, j_xy=v)
    assert fit["vg"] == pytest.approx(v, rel=0.01)
    assert fit["vg_over_aJ"] == pytest.approx(1.0, rel=0.01)
    flat = QuenchGrid(times=times, d=d, values=np.zeros_like(values),
                      stderr=np.zeros_like(values), variance_mz=np.zeros(len(times)))
    with pytest.raises(FitError):
        fit_lightcone(flat)
    print(f"[OK] v_g = {fit['vg']:.4f}")


if __name__ == "__main__":
    test_binning_by_chord_distance()
    test_binning_skips_holes()
    test_detection_factor()
    test_hole_decay_chord()
    test_fit_cx_recovers_parameters()
    test_fit_cx_staggered()
    test_fit_cz_with_rescale()
    test_fit_needs_enough_points()
    test_cutoff_scan_selects_plateau()
    test_power_law_tail()
    test_friedel_wavevector()
    test_friedel_fit_and_fft()
    test_wavevector_slope()
    test_front_arrival_uses_rising_edge()
    test_lightcone_velocity()
    print("\n[SUCCESS] All analysis tests passed")
