"""
Ring geometry: chord, perimeter and physical distances, hole sampling.
"""

import math
from typing import Dict, List

import numpy as np

from models.lattice_models import Boundary, ChainGeometry
from utils.exceptions import GeometryError


def _check_site(i: int, geom: ChainGeometry):
    if not 0 <= i < geom.n_sites:
        raise GeometryError(f"site {i} outside [0, {geom.n_sites})")


def ring_separation(i: int, j: int, n_sites: int) -> int:
    """Number of ring steps between two sites, in [0, N/2]"""
    s = abs(i - j) % n_sites
    return min(s, n_sites - s)


def chord_distance(i: int, j: int, geom: ChainGeometry) -> float:
    """r_ij = (N/pi) sin(pi |i-j| / N)"""
    _check_site(i, geom)
    _check_site(j, geom)
    n = geom.n_sites
    return (n / math.pi) * math.sin(math.pi * abs(i - j) / n) * geom.spacing


def perimeter_distance(r: float, geom: ChainGeometry) -> float:
    """d(r) = (N/pi) arcsin(pi r / N), inverse of chord_distance on [0, N/2]"""
    n = geom.n_sites
    r_max = n / math.pi
    if r < 0 or r > r_max * (1 + 1e-12):
        raise GeometryError(f"chord distance {r} outside [0, {r_max:.6g}]")
    x = min(1.0, math.pi * r / n)
    return (n / math.pi) * math.asin(x)


def perimeter_distances(r: np.ndarray, n_sites: int) -> np.ndarray:
    """Vectorized perimeter distance for arrays of chord distances"""
    r = np.asarray(r, dtype=float)
    x = np.clip(np.pi * r / n_sites, 0.0, 1.0)
    return (n_sites / np.pi) * np.arcsin(x)


def chord_of_separation(separation, n_sites: int):
    """Chord distance of an integer (or real) number of ring steps"""
    return (n_sites / np.pi) * np.sin(np.pi * np.asarray(separation, dtype=float) / n_sites)


def geometric_distance(i: int, j: int, geom: ChainGeometry) -> float:
    """Physical inter-atom distance in units of the nearest-neighbor spacing"""
    n = geom.n_sites
    s = ring_separation(i, j, n)
    if s == 0:
        return 0.0
    return geom.spacing * math.sin(math.pi * s / n) / math.sin(math.pi / n)


def geometric_distance_matrix(geom: ChainGeometry) -> np.ndarray:
    n = geom.n_sites
    idx = np.arange(n)
    sep = np.abs(idx[:, None] - idx[None, :])
    sep = np.minimum(sep, n - sep)
    return geom.spacing * np.sin(np.pi * sep / n) / np.sin(np.pi / n)


def open_chain(n_spins: int) -> ChainGeometry:
    """Open chain of n_spins realized as a ring with one extra removed site"""
    return ChainGeometry(n_sites=n_spins + 1, boundary=Boundary.OPEN_RING, removed_site=n_spins)


def squeeze_index_map(geom: ChainGeometry) -> Dict[int, int]:
    """Old site index -> relabeled index with holes and the removed site deleted"""
    return {site: new for new, site in enumerate(geom.active_sites())}


def sample_holes(geom: ChainGeometry, p: float, rng: np.random.Generator) -> ChainGeometry:
    """Draw i.i.d. holes with density p on the active sites"""
    if not 0.0 <= p <= 1.0:
        raise GeometryError(f"hole density must be in [0, 1], got {p}")
    if p == 0.0:
        return geom
    active = geom.active_sites()
    draws = rng.random(len(active)) < p
    extra = frozenset(site for site, hit in zip(active, draws) if hit)
    return geom.with_holes(extra)


def sublattice(geom: ChainGeometry, parity: int) -> List[int]:
    """Active sites with index parity equal to `parity`"""
    return [i for i in geom.active_sites() if i % 2 == parity]
