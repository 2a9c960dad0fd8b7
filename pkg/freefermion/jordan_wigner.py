"""
Jordan-Wigner free fermions for nearest-neighbor XY chains.

H = -sum_i J_i (s+_i s-_{i+1} + h.c.) maps onto hopping fermions with
h[i, i+1] = -J_i. On a ring the boundary bond picks up the fermion-parity
factor: periodic for an odd particle number, antiperiodic for an even one.
"""

import logging
from typing import Optional

import numpy as np
import scipy.linalg

from models.lattice_models import CouplingMatrices
from models.state_models import FreeFermionSolution, HoppingMatrix
from utils.exceptions import GeometryError

CONDITION_LOG_DISTANCE = 200

logger = logging.getLogger(__name__)


def build_hopping(bonds: np.ndarray, periodic: bool = False, n_particles: Optional[int] = None
                  ) -> HoppingMatrix:
    """Hopping matrix from bond strengths (length N-1 open, N periodic)"""
    bonds = np.asarray(bonds, dtype=float)
    n = len(bonds) if periodic else len(bonds) + 1
    h = np.zeros((n, n))
    open_bonds = bonds if not periodic else bonds[:-1]
    idx = np.arange(len(open_bonds))
    h[idx, idx + 1] = -open_bonds
    h[idx + 1, idx] = -open_bonds
    sign = 1.0
    if periodic:
        if n_particles is None:
            raise ValueError("periodic hopping needs the particle number for the boundary sign")
        sign = 1.0 if n_particles % 2 == 1 else -1.0
        h[n - 1, 0] += -bonds[-1] * sign
        h[0, n - 1] += -bonds[-1] * sign
    return HoppingMatrix(matrix=h, periodic=periodic, boundary_sign=sign)


def hopping_from_couplings(matrices: CouplingMatrices, sites: list, periodic: bool = False) -> np.ndarray:
    """NN bond strengths along `sites` (closing bond appended when periodic)"""
    bonds = [matrices.xy[a, b] for a, b in zip(sites[:-1], sites[1:])]
    if periodic:
        bonds.append(matrices.xy[sites[-1], sites[0]])
    return np.array(bonds)


def jw_solve(bonds: np.ndarray, n_particles: int, periodic: bool = False,
             degeneracy_tol: float = 1e-10) -> FreeFermionSolution:
    """Filled Fermi sea with n_particles fermions"""
    bonds = np.asarray(bonds, dtype=float)
    n = len(bonds) if periodic else len(bonds) + 1
    if not 0 <= n_particles <= n:
        raise GeometryError(f"n_particles={n_particles} outside [0, {n}]")
    hopping = build_hopping(bonds, periodic, n_particles)
    eps, orbitals = np.linalg.eigh(hopping.matrix)
    occupied = orbitals[:, :n_particles]
    G = occupied.conj() @ occupied.T
    degenerate = (0 < n_particles < n
                  and abs(eps[n_particles] - eps[n_particles - 1]) < degeneracy_tol)
    if degenerate:
        logger.warning(f"[WARNING] degenerate Fermi level at filling {n_particles}/{n}")
    return FreeFermionSolution(
        G=np.real_if_close(G), energy=float(eps[:n_particles].sum()), n_particles=n_particles,
        orbital_energies=eps, hopping=hopping, degenerate_fermi_level=degenerate,
    )


def cz_from_G(G: np.ndarray) -> np.ndarray:
    """Connected C^z from Wick's theorem: -4|G_ij|^2 off the diagonal"""
    sz = 2.0 * np.real(np.diag(G)) - 1.0
    cz = -4.0 * np.abs(G) ** 2
    np.fill_diagonal(cz, 1.0 - sz ** 2)
    return cz


def cx_from_G(G: np.ndarray, i: int, j: int, log: Optional[logging.Logger] = None) -> float:
    """<sx_i sx_j> as the determinant of M[a, b] = 2 G_{i+a, i+1+b} - delta"""
    log = log or logger
    if i == j:
        return 1.0
    if i > j:
        i, j = j, i
    size = j - i
    # Row site i+a meets column site i+1+b on the subdiagonal a = b+1
    block = 2.0 * np.real(G[i:j, i + 1: j + 1]) - np.eye(size, k=-1)
    lu, piv = scipy.linalg.lu_factor(block, check_finite=False)
    sign = -1.0 if np.count_nonzero(piv != np.arange(size)) % 2 else 1.0
    det = sign * float(np.prod(np.diag(lu)))
    if size > CONDITION_LOG_DISTANCE:
        cond = np.linalg.cond(block)
        log.info(f"[CONDITION] det block {i}..{j}: size {size}, condition number {cond:.3e}")
    return det


def cx_matrix(G: np.ndarray) -> np.ndarray:
    """All <sx_i sx_j> of a chain"""
    n = G.shape[0]
    out = np.eye(n)
    for i in range(n):
        for j in range(i + 1, n):
            out[i, j] = out[j, i] = cx_from_G(G, i, j)
    return out
