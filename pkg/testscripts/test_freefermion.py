"""
Test Jordan-Wigner Free Fermions and the Bond-Disordered Chain
"""

import math
import os
import sys

import numpy as np
import pytest

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from freefermion.disorder import default_distances, disorder_ensemble, pair_positions
from freefermion.jordan_wigner import (
    build_hopping, cx_from_G, cx_matrix, cz_from_G, hopping_from_couplings, jw_solve,
)
from lattice.couplings import build_couplings
from lattice.geometry import chord_of_separation, open_chain
from models.lattice_models import CouplingModel
from utils.exceptions import GeometryError


def test_two_site_single_particle():
    print("\n=== Testing two-site hopping ===")
    sea = jw_solve(np.array([1.5]), 1)
    assert sea.energy == pytest.approx(-1.5)
    assert sea.G[0, 1] == pytest.approx(0.5)
    assert cx_from_G(sea.G, 0, 1) == pytest.approx(1.0)
    print("[OK] E = -J, G_01 = 1/2, triplet C^x = 1")


def test_boundary_sign_follows_particle_parity():
    odd = build_hopping(np.ones(6), periodic=True, n_particles=3)
    even = build_hopping(np.ones(6), periodic=True, n_particles=2)
    assert odd.matrix[5, 0] == pytest.approx(-1.0)
    assert even.matrix[5, 0] == pytest.approx(1.0)
    with pytest.raises(ValueError):
        build_hopping(np.ones(6), periodic=True)
    with pytest.raises(GeometryError):
        jw_solve(np.ones(5), 7)
    print("[OK] periodic for odd, antiperiodic for even fillings")


def test_bonds_from_open_chain_couplings():
    geom = open_chain(8)
    matrices = build_couplings(geom, CouplingModel(j_xy=2.0, exponent=math.inf))
    bonds = hopping_from_couplings(matrices, geom.active_sites())
    assert np.allclose(bonds, 2.0) and len(bonds) == 7


def test_half_filled_nearest_neighbor_cz():
    print("\n=== Testing C^z at half filling ===")
    sea = jw_solve(np.ones(400), 200, periodic=True)
    cz = cz_from_G(sea.G)
    assert cz[0, 1] == pytest.approx(-4.0 / math.pi ** 2, rel=0.01)
    assert np.allclose(np.diag(cz), 1.0)
    # Even separations vanish at half filling
    assert abs(cz[0, 2]) < 1e-10
    print(f"[OK] C^z(1) = {cz[0, 1]:.5f}")


def test_cx_power_law_exponent():
    print("\n=== Testing the K = 1 power law of C^x ===")
    n = 400
    sea = jw_solve(np.ones(n), n // 2, periodic=True)
    scaled = []
    for r in (10, 20, 50, 100):
        value = cx_from_G(sea.G, 100, 100 + r)
        scaled.append(value * math.sqrt(float(chord_of_separation(r, n))))
    scaled = np.array(scaled)
    assert np.all(scaled > 0)
    assert np.ptp(scaled) / scaled.mean() < 0.03
    print(f"[OK] C^x(r) r^(1/2) = {scaled.mean():.4f} +- {np.ptp(scaled):.1e}")


def test_cx_matrix_symmetry():
    sea = jw_solve(np.ones(9), 5)
    cx = cx_matrix(sea.G)
    assert np.allclose(cx, cx.T)
    assert np.allclose(np.diag(cx), 1.0)
    assert np.all(cx[0, 1:] > 0)


def test_pair_positions_avoid_edge_bonds():
    print("\n=== Testing disorder pair selection ===")
    starts = pair_positions(400, 10, 5)
    assert len(starts) == 5
    assert all(1 <= i and i + 10 <= 398 for i in starts)
    assert pair_positions(10, 9, 5) == []
    distances = default_distances(400)
    assert distances.min() >= 1 and distances.max() <= 397
    print("[OK] centred pairs, edge bonds excluded")


def test_disorder_ensemble_clean_limit():
    clean = disorder_ensemble(60, 0.0, n_realizations=1, distances=[1, 2, 5, 10])
    sea = jw_solve(np.ones(59), 30)
    starts = pair_positions(60, 5, 5)
    expected = np.mean([cx_from_G(sea.G, i, i + 5) for i in starts])
    assert clean.mean[2] == pytest.approx(expected, abs=1e-12)
    assert np.allclose(clean.stderr, 0.0)


def test_disorder_ensemble_is_seeded():
    print("\n=== Testing seeded disorder ensembles ===")
    kwargs = dict(n_realizations=6, seed=9, distances=[1, 3, 7, 15])
    first = disorder_ensemble(40, 0.2, **kwargs)
    second = disorder_ensemble(40, 0.2, **kwargs)
    parallel = disorder_ensemble(40, 0.2, workers=2, **kwargs)
    assert np.array_equal(first.mean, second.mean)
    assert np.array_equal(first.mean, parallel.mean)
    other = disorder_ensemble(40, 0.2, n_realizations=6, seed=10, distances=[1, 3, 7, 15])
    assert not np.array_equal(first.mean, other.mean)
    print("[OK] same seed gives identical averages for any worker count")


if __name__ == "__main__":
    test_two_site_single_particle()
    test_boundary_sign_follows_particle_parity()
    test_bonds_from_open_chain_couplings()
    test_half_filled_nearest_neighbor_cz()
    test_cx_power_law_exponent()
    test_cx_matrix_symmetry()
    test_pair_positions_avoid_edge_bonds()
    test_disorder_ensemble_clean_limit()
    test_disorder_ensemble_is_seeded()
    print("\n[SUCCESS] All free-fermion tests passed")
