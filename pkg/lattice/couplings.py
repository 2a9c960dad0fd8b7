"""
Coupling matrices of H_XY + H_vdW on a ring with holes.

The XY and vdW strengths fall off with the physical inter-atom distance
(1/r^exponent and 1/r^6). Inactive sites (holes, removed atom) have zero
rows and columns.
"""

import logging
from typing import Optional, Tuple

import numpy as np

from lattice.geometry import geometric_distance_matrix, ring_separation, squeeze_index_map
from models.lattice_models import Boundary, ChainGeometry, CouplingMatrices, CouplingModel
from utils.exceptions import GeometryError

logger = logging.getLogger(__name__)


def build_couplings(geom: ChainGeometry, model: CouplingModel) -> CouplingMatrices:
    """Assemble xy, zz, field_z and the constant offset"""
    n = geom.n_sites
    dist = geometric_distance_matrix(geom)
    active = np.zeros(n, dtype=bool)
    active[geom.active_sites()] = True

    xy = np.zeros((n, n))
    zz = np.zeros((n, n))
    field_z = np.zeros(n)
    offset = 0.0

    vdw = model.vdw
    for i in range(n):
        if not active[i]:
            continue
        for j in range(i + 1, n):
            if not active[j]:
                continue
            if model.nearest_neighbor_only:
                if ring_separation(i, j, n) != 1:
                    continue
                xy_ij = model.j_xy
                inv_r6 = 1.0
            else:
                r = dist[i, j]
                xy_ij = model.j_xy / r ** model.exponent
                inv_r6 = 1.0 / r ** 6
            xy_ij *= model.override(i, j)
            xy[i, j] = xy[j, i] = xy_ij

            if not vdw.is_zero:
                zz[i, j] = zz[j, i] = vdw.zz * inv_r6
                field_z[i] += vdw.field_first * inv_r6
                field_z[j] += vdw.field_second * inv_r6
                offset += vdw.constant * inv_r6

    return CouplingMatrices(xy=xy, zz=zz, field_z=field_z, offset=offset)


def squeeze_holes(geom: ChainGeometry,
                  matrices: CouplingMatrices) -> Tuple[ChainGeometry, CouplingMatrices]:
    """Delete inactive sites and relabel the survivors in ring order

    Couplings between survivors are carried over unchanged, so a hole between
    former neighbors leaves a reduced bond.
    """
    index_map = squeeze_index_map(geom)
    if len(index_map) < 2:
        raise GeometryError("cannot squeeze: fewer than two sites carry a spin")
    if not geom.inactive_sites:
        return geom, matrices

    survivors = sorted(index_map, key=index_map.get)
    squeezed = ChainGeometry(n_sites=len(survivors), boundary=Boundary.PERIODIC_RING,
                             spacing=geom.spacing)
    logger.debug(f"Squeezed {geom.n_sites} sites to {len(survivors)}")
    return squeezed, matrices.submatrices(survivors)


def nearest_neighbor_bonds(matrices: CouplingMatrices, sites: Optional[list] = None) -> np.ndarray:
    """Bond strengths between consecutive sites of `sites` (default: all)"""
    if sites is None:
        sites = list(range(matrices.n_sites))
    return np.array([matrices.xy[a, b] for a, b in zip(sites[:-1], sites[1:])])
