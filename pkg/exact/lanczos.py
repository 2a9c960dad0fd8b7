"""
Extremal eigenpairs of one magnetization sector.

Large sectors use implicitly restarted Lanczos (ARPACK eigsh) on the
matrix-free operator; small ones are diagonalized densely. The highest
state of H is the lowest state of -H.
"""

import logging
import warnings
from typing import Optional

import numpy as np
from scipy.sparse.linalg import ArpackNoConvergence, eigsh

from hilbert.basis import SectorBasis
from hilbert.operators import SectorOperator
from models.lattice_models import CouplingMatrices
from models.state_models import LanczosResult, SectorState, Which
from utils.exceptions import ConvergenceError, PhysicsWarning

DENSE_CAP = 2000


def start_vector(dim: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def lanczos_extremal(matrices: CouplingMatrices, sector: SectorBasis,
                     which: Which = Which.LOWEST, tol: float = 1e-10, max_iter: int = 3000,
                     seed: int = 0, light_shift: Optional[np.ndarray] = None,
                     dense_cap: int = DENSE_CAP, degeneracy_tol: float = 1e-8,
                     residual_tol: float = 1e-8,
                     logger: Optional[logging.Logger] = None) -> LanczosResult:
    """Lowest or highest eigenpair of H_XY + H_vdW (+ light shift) in a sector"""
    logger = logger or logging.getLogger(__name__)
    scale = which.scale
    op = SectorOperator(matrices, sector, light_shift=light_shift, scale=scale, logger=logger)
    dim = sector.dim

    if dim <= dense_cap:
        values, vectors = np.linalg.eigh(op.to_dense())
        ground = vectors[:, 0]
        lowest = values[:2]
        iterations = 1
    else:
        v0 = start_vector(dim, seed)
        try:
            lowest, vectors = eigsh(op.as_linear_operator(), k=2, which="SA", v0=v0,
                                    tol=tol, maxiter=max_iter)
        except ArpackNoConvergence as exc:
            residual = None
            if exc.eigenvectors is not None and exc.eigenvectors.shape[1] > 0:
                vec = exc.eigenvectors[:, 0]
                residual = float(np.linalg.norm(op.matvec(vec) - exc.eigenvalues[0] * vec))
            raise ConvergenceError("Lanczos", max_iter, residual) from exc
        order = np.argsort(lowest)
        lowest = lowest[order]
        ground = vectors[:, order[0]]
        iterations = op.n_matvec

    # Deterministic global phase: largest component real and positive
    pivot = int(np.argmax(np.abs(ground)))
    ground = ground * np.sign(ground[pivot])
    ground = ground / np.linalg.norm(ground)

    scaled_energy = float(lowest[0])
    residual = float(np.linalg.norm(op.matvec(ground) - scaled_energy * ground))
    energy = scale * scaled_energy
    gap = float(lowest[1] - lowest[0]) if len(lowest) > 1 else None
    degenerate = gap is not None and gap < degeneracy_tol * max(1.0, abs(energy))

    if residual > residual_tol * max(1.0, abs(energy)):
        msg = f"Lanczos residual {residual:.2e} above tolerance for sector dim {dim}"
        logger.warning(f"[WARNING] {msg}")
        warnings.warn(msg, PhysicsWarning)
    if degenerate:
        msg = f"degenerate extremal state in sector n_up={sector.n_up} (gap {gap:.2e})"
        logger.warning(f"[WARNING] {msg}")
        warnings.warn(msg, PhysicsWarning)

    logger.debug(f"Lanczos {which.value}: dim={dim} E={energy:.10f} residual={residual:.2e}")
    return LanczosResult(
        energy=energy,
        state=SectorState(sector, ground.astype(np.complex128)),
        residual=residual,
        iterations=iterations,
        which=which,
        gap=gap,
        degenerate=degenerate,
    )
