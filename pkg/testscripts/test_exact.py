"""
Test Exact Solvers
Lanczos eigenpairs, Krylov propagation, dense spectra, thermal states,
susceptibility and the dynamical structure factor
"""

import math
import os
import sys
import warnings

import numpy as np
import pytest

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from exact.krylov import krylov_propagate
from exact.lanczos import lanczos_extremal
from exact.spectrum import full_spectrum
from exact.structure_factor import dynamical_structure_factor, static_structure_factor
from exact.susceptibility import susceptibility_and_velocity
from exact.thermal import thermal_observables, varmz_offset_correction
from freefermion.jordan_wigner import cx_matrix, cz_from_G, jw_solve
from hilbert.basis import enumerate_sector
from hilbert.observables import observable_cxx, observable_czz
from hilbert.states import product_state
from lattice.couplings import build_couplings
from models.lattice_models import ChainGeometry, CouplingModel, VdwTensor
from models.state_models import Which
from utils.exceptions import CapacityError, PhysicsWarning

J = 1.3


def _nn_ring(n_sites):
    geom = ChainGeometry(n_sites=n_sites)
    return geom, build_couplings(geom, CouplingModel(j_xy=J, exponent=math.inf))


def test_two_site_extremal_states():
    print("\n=== Testing two-site Lanczos ===")
    matrices = build_couplings(ChainGeometry(n_sites=2), CouplingModel(j_xy=J))
    basis = enumerate_sector(2, 1)
    lowest = lanczos_extremal(matrices, basis)
    highest = lanczos_extremal(matrices, basis, which=Which.HIGHEST)
    assert lowest.energy == pytest.approx(-J, abs=1e-12)
    assert highest.energy == pytest.approx(J, abs=1e-12)
    assert np.allclose(np.abs(lowest.state.amplitudes), 1.0 / math.sqrt(2.0))
    assert lowest.gap == pytest.approx(2 * J)
    print("[OK] E = -J (triplet) and +J (singlet-like)")


def test_two_site_spectrum():
    matrices = build_couplings(ChainGeometry(n_sites=2), CouplingModel(j_xy=J))
    spectrum = full_spectrum(matrices, enumerate_sector(2, 1))
    assert np.allclose(spectrum.energies, [-J, J])
    with pytest.raises(CapacityError):
        full_spectrum(matrices, enumerate_sector(2, 1), cap=1)


def test_nn_ring_matches_filled_fermi_sea():
    print("\n=== Testing ED against free fermions (ring) ===")
    geom, matrices = _nn_ring(12)
    result = lanczos_extremal(matrices, enumerate_sector(12, 6))
    sea = jw_solve(np.full(12, J), 6, periodic=True)
    assert result.energy == pytest.approx(sea.energy, abs=1e-9)
    print(f"[OK] E0 = {result.energy:.10f} on both sides")


def test_open_chain_correlations_match_free_fermions():
    print("\n=== Testing ED correlations against free fermions (open chain) ===")
    geom = ChainGeometry(n_sites=10)
    matrices = build_couplings(geom, CouplingModel(j_xy=J, exponent=math.inf,
                                                   bond_overrides={(0, 9): 0.0}))
    assert matrices.xy[0, 9] == 0.0
    result = lanczos_extremal(matrices, enumerate_sector(10, 5))
    sea = jw_solve(np.full(9, J), 5)
    assert result.energy == pytest.approx(sea.energy, abs=1e-9)

    assert np.max(np.abs(observable_czz(result.state) - cz_from_G(sea.G))) < 1e-9
    assert np.max(np.abs(observable_cxx(result.state) - cx_matrix(sea.G))) < 1e-9
    print("[OK] C^z and C^x agree within 1e-9")


def test_dense_and_iterative_paths_agree():
    print("\n=== Testing dense and iterative Lanczos ===")
    geom = ChainGeometry(n_sites=12)
    vdw = VdwTensor(uu=0.32, dd=-0.044, ud=0.36, du=0.36)
    matrices = build_couplings(geom, CouplingModel(j_xy=J, vdw=vdw))
    basis = enumerate_sector(12, 6)
    dense = lanczos_extremal(matrices, basis)
    iterative = lanczos_extremal(matrices, basis, dense_cap=0)
    assert iterative.energy == pytest.approx(dense.energy, abs=1e-9)
    assert abs(dense.state.overlap(iterative.state)) == pytest.approx(1.0, abs=1e-8)
    spectrum = full_spectrum(matrices, basis)
    assert spectrum.energies[0] == pytest.approx(dense.energy, abs=1e-9)
    print("[OK] eigsh, dense eigh and the full spectrum agree")


def test_two_site_rabi_oscillation():
    print("\n=== Testing Krylov propagation ===")
    matrices = build_couplings(ChainGeometry(n_sites=2), CouplingModel(j_xy=J))
    state = product_state(2, [0])
    flipped = state.basis.rank_config(0b10)
    for t in (0.1, 0.45, 1.2):
        evolved = krylov_propagate(matrices, None, state, 0.0, t, 0.01)
        assert abs(evolved.amplitudes[flipped]) ** 2 == pytest.approx(math.sin(J * t) ** 2, abs=1e-10)
        assert evolved.norm == pytest.approx(1.0, abs=1e-12)
    print("[OK] P(down up)(t) = sin^2(J t)")


def test_propagation_is_step_independent():
    geom = ChainGeometry(n_sites=8)
    matrices = build_couplings(geom, CouplingModel(j_xy=J))
    state = product_state(8, [0, 2, 4, 6])
    coarse = krylov_propagate(matrices, None, state, 0.0, 0.5, 0.05)
    fine = krylov_propagate(matrices, None, state, 0.0, 0.5, 0.025)
    assert np.max(np.abs(coarse.amplitudes - fine.amplitudes)) < 1e-9


def test_thermal_low_temperature_limit():
    print("\n=== Testing thermal states ===")
    geom, matrices = _nn_ring(6)
    ground = lanczos_extremal(matrices, enumerate_sector(6, 3))
    obs = thermal_observables(geom, CouplingModel(j_xy=J, exponent=math.inf), 0.02 * J)
    assert np.max(np.abs(obs.cz - observable_czz(ground.state))) < 1e-6
    assert np.max(np.abs(obs.cx - observable_cxx(ground.state))) < 1e-6
    assert obs.variance_mz == pytest.approx(0.0, abs=1e-6)
    with pytest.raises(ValueError):
        thermal_observables(geom, CouplingModel(j_xy=J), 0.0)
    print("[OK] T -> 0 reproduces the ground-state correlations")


def test_thermal_capacity():
    with pytest.raises(CapacityError):
        thermal_observables(ChainGeometry(n_sites=14), CouplingModel(j_xy=J), 1.0)


def test_thermal_workers_after_numba_kernels():
    print("\n=== Testing process workers ===")
    geom = ChainGeometry(n_sites=6)
    model = CouplingModel(j_xy=J)
    # The parent runs the parallel numba kernels first
    ground = lanczos_extremal(build_couplings(geom, model), enumerate_sector(6, 3))
    assert np.isfinite(ground.energy)
    kwargs = dict(hole_density=0.2, n_realizations=4, seed=9)
    inline = thermal_observables(geom, model, 0.5 * J, workers=1, **kwargs)
    pooled = thermal_observables(geom, model, 0.5 * J, workers=2, **kwargs)
    np.testing.assert_allclose(inline.cz, pooled.cz, atol=1e-12)
    np.testing.assert_allclose(inline.cx, pooled.cx, atol=1e-12)
    print("[OK] identical averages for 1 and 2 workers")


def test_varmz_offset():
    czz = np.ones((24, 24))
    corrected = varmz_offset_correction(czz, 0.0)
    assert np.allclose(corrected, 0.0)
    assert np.sum(varmz_offset_correction(czz, 48.0)) == pytest.approx(48.0)
    print("[OK] uniform offset -sum/576 at N = 24")


def test_nn_susceptibility_closes_on_fermi_velocity():
    print("\n=== Testing susceptibility and sound velocity ===")
    geom, matrices = _nn_ring(16)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PhysicsWarning)
        result = susceptibility_and_velocity(matrices, geom, CouplingModel(j_xy=J, exponent=math.inf), 1.0)
    assert result.kappa == pytest.approx(1.0 / math.pi, abs=0.01)
    assert result.u_over_2ja == pytest.approx(1.0, abs=0.02)
    print(f"[OK] kappa = {result.kappa:.4f}, u/(2Ja) = {result.u_over_2ja:.4f}")


def test_structure_factor_sum_rules():
    print("\n=== Testing the dynamical structure factor ===")
    geom, matrices = _nn_ring(8)
    basis = enumerate_sector(8, 4)
    spectrum = full_spectrum(matrices, basis)
    grid = dynamical_structure_factor(matrices, geom, spectrum, n_omega=50)
    zero = grid.poles[0]
    assert np.sum(zero["weight"][zero["omega"] > 1e-9]) < 1e-10
    psi0 = spectrum.states[:, 0]
    for iq, q in enumerate(grid.q):
        assert grid.static[iq] == pytest.approx(static_structure_factor(psi0, basis, q, 8), abs=1e-10)
    assert grid.intensity.max() == pytest.approx(1.0)

    ground = lanczos_extremal(matrices, basis)
    iterative = dynamical_structure_factor(matrices, geom, ground, n_omega=50)
    assert np.allclose(iterative.static, grid.static, atol=1e-8)
    print("[OK] q = 0 carries no inelastic weight; static factors agree")


if __name__ == "__main__":
    test_two_site_extremal_states()
    test_two_site_spectrum()
    test_nn_ring_matches_filled_fermi_sea()
    test_open_chain_correlations_match_free_fermions()
    test_dense_and_iterative_paths_agree()
    test_two_site_rabi_oscillation()
    test_propagation_is_step_independent()
    test_thermal_low_temperature_limit()
    test_thermal_capacity()
    test_varmz_offset()
    test_nn_susceptibility_closes_on_fermi_velocity()
    test_structure_factor_sum_rules()
    print("\n[SUCCESS] All exact-solver tests passed")
