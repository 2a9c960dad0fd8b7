"""
State constructors and transformations: product states, coherent spin
states, quantum-jump site removal and dense rotated vectors.
"""

from typing import Dict, Optional, Sequence

import numpy as np
from numba import njit, prange

from hilbert.basis import SectorBasis, enumerate_sector
from models.state_models import FullState, SectorState
from utils.exceptions import CapacityError, GeometryError

MAX_DENSE_SITES = 22


def product_state(n_sites: int, up_sites: Sequence[int],
                  active_sites: Optional[Sequence[int]] = None) -> SectorState:
    """Basis state with the given sites up and every other active site down"""
    if active_sites is None:
        active_sites = range(n_sites)
    active = sorted(active_sites)
    up = set(up_sites)
    if not up <= set(active):
        raise GeometryError("up spins must sit on active sites")
    basis = enumerate_sector(n_sites, len(up), active)
    code = sum(1 << b for b, site in enumerate(active) if site in up)
    amplitudes = np.zeros(basis.dim, dtype=np.complex128)
    amplitudes[basis.rank(code)] = 1.0
    return SectorState(basis, amplitudes)


@njit(parallel=True, cache=True)
def _css_amplitudes(codes, n_bits, odd_mask, norm):
    out = np.empty(codes.shape[0], dtype=np.complex128)
    for k in prange(codes.shape[0]):
        c = codes[k]
        phase = 1.0 + 0.0j
        for b in range(n_bits):
            if ((c >> b) & 1) == 0:
                if (odd_mask >> b) & 1:
                    phase *= -1j
                else:
                    phase *= 1j
        out[k] = norm * phase
    return out


def css_state(n_sites: int, active_sites: Optional[Sequence[int]] = None,
              staggered: bool = False) -> FullState:
    """Coherent spin state along +y (odd sites along -y when staggered)

    Single-site factor (|up> + i|down>)/sqrt(2), -i on odd sites when staggered.
    """
    if active_sites is None:
        active_sites = range(n_sites)
    active = sorted(active_sites)
    n_bits = len(active)
    odd_mask = 0
    if staggered:
        for b, site in enumerate(active):
            if site % 2 == 1:
                odd_mask |= 1 << b
    norm = 2.0 ** (-n_bits / 2.0)
    sectors: Dict[int, SectorState] = {}
    for n_up in range(n_bits + 1):
        basis = enumerate_sector(n_sites, n_up, active)
        sectors[n_up] = SectorState(basis, _css_amplitudes(basis.codes, n_bits, odd_mask, norm))
    return FullState(sectors)


def to_dense_vector(state) -> np.ndarray:
    """Dense 2^M amplitudes over the active sites, index = compressed code"""
    sectors = list(state.sectors.values()) if isinstance(state, FullState) else [state]
    n_bits = sectors[0].basis.n_active
    if n_bits > MAX_DENSE_SITES:
        raise CapacityError("dense rotated-basis vector over sites", n_bits, MAX_DENSE_SITES)
    vector = np.zeros(1 << n_bits, dtype=np.complex128)
    for s in sectors:
        vector[s.basis.codes] += s.amplitudes
    return vector


def measurement_rotation(theta: float) -> np.ndarray:
    """Single-site unitary mapping the s_theta eigenbasis onto (down, up)

    Index 0 = down, 1 = up. Row 1 is the conjugate of the +1 eigenvector
    (e^{i theta}, 1)/sqrt(2), row 0 of the -1 eigenvector (-e^{i theta}, 1)/sqrt(2).
    """
    e = np.exp(-1j * theta)
    return np.array([[-e, 1.0], [e, 1.0]], dtype=np.complex128) / np.sqrt(2.0)


def rotate_full_vector(vector: np.ndarray, n_bits: int, theta: float) -> np.ndarray:
    """Apply the global measurement rotation of phase theta to every site"""
    u = measurement_rotation(theta)
    tensor = vector.reshape((2,) * n_bits) if n_bits else vector
    for b in range(n_bits):
        axis = n_bits - 1 - b
        tensor = np.moveaxis(np.tensordot(u, tensor, axes=([1], [axis])), 0, axis)
    return tensor.reshape(-1)


def project_out_site(state: SectorState, site: int, spin_up: bool) -> SectorState:
    """Project a site onto a spin value and delete it from the basis

    Returns a normalized state over the remaining active sites. The removed
    site becomes a frozen spectator (hole).
    """
    basis = state.basis
    b = basis.site_bit(site)
    bit = 1 << b
    codes = basis.codes
    keep = ((codes & bit) != 0) if spin_up else ((codes & bit) == 0)

    remaining = [int(s) for s in basis.active_sites if s != site]
    n_up = basis.n_up - 1 if spin_up else basis.n_up
    if n_up < 0 or n_up > len(remaining):
        raise GeometryError(f"cannot project site {site} onto spin_up={spin_up}")
    new_basis = enumerate_sector(basis.n_sites, n_up, remaining)

    kept = codes[keep]
    low = kept & (bit - 1)
    high = kept >> (b + 1)
    compressed = low | (high << b)
    amplitudes = np.zeros(new_basis.dim, dtype=np.complex128)
    amplitudes[new_basis.rank_codes(compressed)] = state.amplitudes[keep]
    norm = np.linalg.norm(amplitudes)
    if norm == 0.0:
        raise GeometryError(f"projection of site {site} has zero weight")
    return SectorState(new_basis, amplitudes / norm)


def random_sector_state(basis: SectorBasis, rng: np.random.Generator) -> SectorState:
    """Normalized complex Gaussian state, used by checks and start vectors"""
    v = rng.standard_normal(basis.dim) + 1j * rng.standard_normal(basis.dim)
    return SectorState(basis, v / np.linalg.norm(v))
