"""
Dense spectra of small sectors.
"""

import logging
from typing import Optional

import numpy as np

from hilbert.basis import SectorBasis
from hilbert.operators import SectorOperator
from models.lattice_models import CouplingMatrices
from models.state_models import SpectrumResult
from utils.exceptions import CapacityError

SPECTRUM_CAP = 4000


def full_spectrum(matrices: CouplingMatrices, sector: SectorBasis,
                  cap: int = SPECTRUM_CAP, scale: float = 1.0,
                  light_shift: Optional[np.ndarray] = None,
                  logger: Optional[logging.Logger] = None) -> SpectrumResult:
    """All eigenpairs of scale * H in one sector, ascending"""
    logger = logger or logging.getLogger(__name__)
    if sector.dim > cap:
        raise CapacityError("dense sector diagonalization", sector.dim, cap, module="exact")
    op = SectorOperator(matrices, sector, light_shift=light_shift, scale=scale, logger=logger)
    energies, states = np.linalg.eigh(op.to_dense())
    logger.debug(f"Dense spectrum of sector n_up={sector.n_up}: dim={sector.dim}")
    return SpectrumResult(energies=energies, states=states, basis=sector, scale=scale)
