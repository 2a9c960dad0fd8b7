"""
Test Experimental Protocols
Ramps, decay trajectories, snapshots, quenches, Friedel chains and angular scans
"""

import math
import os
import sys

import numpy as np
import pytest

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from analyzers.binning import bin_correlations
from analyzers.lightcone_fit import fit_lightcone
from exact.lanczos import lanczos_extremal
from hilbert.basis import enumerate_sector
from hilbert.observables import observable_cxx
from hilbert.states import css_state, product_state
from lattice.couplings import build_couplings
from models.lattice_models import ChainGeometry, CouplingModel
from models.protocol_models import FriedelMode, NoiseModel, QuenchInitial, RampSchedule
from protocol.angular import angular_scan
from protocol.friedel import addressing_pattern, check_friedel_sector, run_friedel
from protocol.quench import run_quench
from protocol.ramp import (
    back_and_forth_contrast, lila_delta, rate_equation_population, run_ramp, schedule_delta,
)
from protocol.snapshots import apply_readout_errors, sample_snapshots
from utils.exceptions import CapacityError

J = 1.0


def _neel(n_sites: int):
    """Even sites up, odd sites down"""
    return product_state(n_sites, range(0, n_sites, 2))


def test_lila_schedule_endpoints():
    print("\n=== Testing ramp schedule ===")
    schedule = RampSchedule(delta0=20.0, T=2.0, alpha=20.0)
    assert lila_delta(0.0, schedule) == pytest.approx(20.0)
    assert lila_delta(2.0, schedule) == pytest.approx(0.0, abs=1e-12)
    # delta(T/2) = delta0 (T/2) / (T/2 (1 + alpha))
    assert lila_delta(1.0, schedule) == pytest.approx(20.0 / 21.0)
    with pytest.raises(ValueError):
        lila_delta(2.5, schedule)
    print("[OK] delta(0) = delta0, delta(T) = 0")


def test_reverse_schedule_mirrors_ramp():
    schedule = RampSchedule(delta0=10.0, T=1.0, alpha=5.0, reverse=True, hold_us=0.5)
    assert schedule.end_time == pytest.approx(2.5)
    assert schedule_delta(1.2, schedule) == 0.0
    assert schedule_delta(1.5 + 0.25, schedule) == pytest.approx(lila_delta(0.75, schedule))
    assert schedule_delta(2.5, schedule) == pytest.approx(10.0)


def test_schedule_validation():
    with pytest.raises(ValueError):
        RampSchedule(delta0=1.0, T=0.0, alpha=2.0)
    with pytest.raises(ValueError):
        RampSchedule(delta0=1.0, T=1.0, alpha=0.5)
    with pytest.raises(ValueError):
        RampSchedule(delta0=1.0, T=1.0, alpha=2.0, sign=0)
    with pytest.raises(ValueError):
        RampSchedule(delta0=1.0, T=1.0, alpha=2.0, checkpoints=(1.5,))
    with pytest.raises(ValueError):
        NoiseModel(eps_up=1.5)


def test_rate_equation_population():
    assert rate_equation_population(0.0, 3.0) == 1.0
    assert rate_equation_population(0.0037, 1.0) == pytest.approx(math.exp(-0.0074))


def test_noise_free_ramp_single_trajectory():
    print("\n=== Testing noise-free ramp ===")
    geom = ChainGeometry(n_sites=6)
    schedule = RampSchedule(delta0=10.0, T=0.5, alpha=5.0, checkpoints=(0.25,), dt_us=0.01)
    result = run_ramp(geom, CouplingModel(j_xy=J), schedule, n_trajectories=5)
    assert result.n_trajectories == 1
    assert len(result.trajectories) == 1
    assert [c.t_us for c in result.checkpoints] == pytest.approx([0.0, 0.25, 0.5])

    start = result.checkpoints[0]
    assert start.sublattice_a == pytest.approx(-1.0)
    assert start.sublattice_b == pytest.approx(1.0)
    for checkpoint in result.checkpoints:
        # M_z = 0 sector with equal sublattices
        assert checkpoint.sublattice_a + checkpoint.sublattice_b == pytest.approx(0.0, abs=1e-10)
        assert checkpoint.active_fraction == 1.0
        assert checkpoint.up_population == pytest.approx(0.5)
    print("[OK] one exact trajectory, M_z conserved")


def test_adiabatic_ramp_reaches_ground_state():
    print("\n=== Testing adiabatic limit ===")
    geom = ChainGeometry(n_sites=8)
    model = CouplingModel(j_xy=J)
    schedule = RampSchedule(delta0=20.0 * J, T=50.0 / J, alpha=20.0, dt_us=0.05)
    final = run_ramp(geom, model, schedule).final()

    basis = enumerate_sector(8, 4)
    ground = lanczos_extremal(build_couplings(geom, model), basis)
    target = bin_correlations(observable_cxx(ground.state), geom, basis="x")
    assert np.allclose(final.cx.mean, target.mean, atol=0.03)
    assert np.all(final.cx.mean > 0)
    print(f"[OK] final C^x matches the ground state: {np.round(final.cx.mean, 3)}")


def test_back_and_forth_contrast():
    geom = ChainGeometry(n_sites=6)
    schedule = RampSchedule(delta0=10.0, T=0.3, alpha=5.0, reverse=True, dt_us=0.01)
    result = run_ramp(geom, CouplingModel(j_xy=J), schedule)
    start, end = back_and_forth_contrast(result)
    assert start == pytest.approx(1.0)
    assert -1.0 <= end <= 1.0


def test_decay_trajectories_are_seeded():
    print("\n=== Testing decay trajectories ===")
    geom = ChainGeometry(n_sites=6)
    schedule = RampSchedule(delta0=10.0, T=0.5, alpha=5.0, dt_us=0.01)
    noise = NoiseModel(p_init=0.1, gamma=0.2)
    one = run_ramp(geom, CouplingModel(j_xy=J), schedule, noise, n_trajectories=4, seed=11)
    two = run_ramp(geom, CouplingModel(j_xy=J), schedule, noise, n_trajectories=4, seed=11,
                   workers=2)
    assert one.n_trajectories == 4
    assert len(one.jumps) == len(two.jumps)
    np.testing.assert_allclose(one.final().sublattice_a, two.final().sublattice_a, atol=1e-12)
    np.testing.assert_allclose(one.final().cz.mean, two.final().cz.mean, atol=1e-12)
    assert 0.0 < one.final().active_fraction <= 1.0
    for jump in one.jumps:
        assert 0.0 <= jump.time <= schedule.end_time
    print(f"[OK] {len(one.jumps)} jumps, identical for 1 and 2 workers")


def test_z_snapshots_of_basis_state():
    print("\n=== Testing snapshots ===")
    snapshots = sample_snapshots(_neel(6), "z", n_shots=50, seed=3)
    assert snapshots.shots.shape == (50, 6)
    assert np.all(snapshots.shots == np.array([1, -1, 1, -1, 1, -1]))


def test_readout_errors_bias_means():
    state = product_state(4, [0, 1])
    noise = NoiseModel(eps_up=0.025, eps_dn=0.03)
    shots = sample_snapshots(state, "z", n_shots=20000, noise=noise, seed=5).shots
    assert shots[:, :2].mean() == pytest.approx(1 - 2 * 0.025, abs=0.01)
    assert shots[:, 2:].mean() == pytest.approx(-(1 - 2 * 0.03), abs=0.01)


def test_readout_errors_keep_holes():
    rng = np.random.default_rng(0)
    shots = np.tile(np.array([1, -1, 0], dtype=np.int8), (20000, 1))
    flipped = apply_readout_errors(shots, 0.5, 0.5, rng)
    assert np.all(flipped[:, 2] == 0)
    assert abs(flipped[:, 0].mean()) < 0.03
    assert abs(flipped[:, 1].mean()) < 0.03


def test_y_snapshots_of_css():
    # CSS_y measured along y is fully polarized
    state = css_state(4)
    shots = sample_snapshots(state, "y", n_shots=200, seed=1).shots
    assert np.all(shots == 1)
    with pytest.raises(ValueError):
        sample_snapshots(state, "theta", n_shots=10)


def test_quench_conserves_total_variance():
    print("\n=== Testing quench ===")
    geom = ChainGeometry(n_sites=8)
    grid = run_quench(geom, CouplingModel(j_xy=J), QuenchInitial.CSS_Y, [0.0, 0.5, 1.0],
                      dt=0.01, include_vdw=False)
    assert grid.values.shape == (3, 4)
    assert np.allclose(grid.values[0], 0.0, atol=1e-12)
    assert np.allclose(grid.variance_mz, 8.0, atol=1e-8)
    # Off-diagonal correlations build up while their sum stays zero
    assert np.max(np.abs(grid.values[2])) > 1e-3
    print(f"[OK] Var(M_z) = {grid.variance_mz}")


def test_nn_quench_front_moves_at_twice_the_sound_velocity():
    print("\n=== Testing the light cone of a real quench ===")
    geom = ChainGeometry(n_sites=12)
    model = CouplingModel(j_xy=J, exponent=math.inf)
    times = np.linspace(0.0, 2.5, 126)
    grid = run_quench(geom, model, QuenchInitial.STAGGERED_CSS_Y, times, dt=0.02,
                      include_vdw=False)
    # d = 6 is the antipode of the ring
    fit = fit_lightcone(grid, d_min=2, d_max=5, j_xy=J)
    assert fit.n_points == 4
    assert np.all(np.diff(fit.metadata["front_t"]) > 0)
    # u = 2aJ for nearest neighbors
    assert fit["vg_over_aJ"] == pytest.approx(2.0, rel=0.15)
    print(f"[OK] v_g = {fit['vg_over_aJ']:.3f} aJ")


def test_quench_capacity():
    with pytest.raises(CapacityError):
        run_quench(ChainGeometry(n_sites=18), CouplingModel(j_xy=J), QuenchInitial.CSS_Y, [0.0])


def test_friedel_sector_checks():
    with pytest.raises(ValueError):
        check_friedel_sector(10, 0)
    with pytest.raises(ValueError):
        check_friedel_sector(11, 2)
    pattern = addressing_pattern(11, 1)
    assert len(pattern) == 5
    assert len(set(pattern)) == 5


def test_friedel_direct_ground_state():
    print("\n=== Testing Friedel oscillations ===")
    result = run_friedel(9, CouplingModel(j_xy=J), mz=1, mode=FriedelMode.DIRECT_GROUND_STATE)
    assert result.obc.shape == (9,)
    assert np.nansum(result.obc) == pytest.approx(1.0, abs=1e-8)
    # Uniform background on the ring
    assert np.allclose(result.pbc, 1.0 / 9.0, atol=1e-8)
    # Mirror-symmetric open chain
    assert np.allclose(result.obc, result.obc[::-1], atol=1e-6)
    assert np.allclose(result.signal, result.obc - result.pbc)
    assert np.max(np.abs(result.signal)) > 0.01
    print(f"[OK] signal {np.round(result.signal, 3)}")


def test_friedel_ramp_needs_schedule():
    with pytest.raises(ValueError):
        run_friedel(9, CouplingModel(j_xy=J), mz=1, mode=FriedelMode.ADIABATIC_RAMP)


def test_angular_scan_of_css():
    print("\n=== Testing angular scan ===")
    geom = ChainGeometry(n_sites=6)
    thetas = [0.0, math.pi / 2, math.pi]
    result = angular_scan(css_state(6), thetas, geom)
    assert result.magnetization.shape == (3, 6)
    assert np.allclose(result.magnetization[0], 0.0, atol=1e-12)
    assert np.allclose(result.magnetization[1], 1.0, atol=1e-12)
    assert result.sublattice_a[1] == pytest.approx(1.0)
    assert result.sublattice_b[2] == pytest.approx(0.0, abs=1e-12)
    # A product state has no connected correlations in any direction
    for profile in result.profiles:
        assert np.allclose(profile.mean, 0.0, atol=1e-10)
    print("[OK] CSS_y polarized along theta = pi/2")


if __name__ == "__main__":
    print("Testing protocols")
    print("=" * 60)
    test_lila_schedule_endpoints()
    test_noise_free_ramp_single_trajectory()
    test_z_snapshots_of_basis_state()
    test_quench_conserves_total_variance()
    test_nn_quench_front_moves_at_twice_the_sound_velocity()
    test_friedel_direct_ground_state()
    test_angular_scan_of_css()
    print("\n" + "=" * 60)
    print("All protocol checks passed")
