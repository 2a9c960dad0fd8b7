"""
Spin susceptibility from sector ground energies and the TLL sound velocity.

With m = M_z/N and the field h conjugate to m through h = d(E/N)/dm,
kappa = (J/2) dm/dh. The second derivative of E/N with respect to m is taken
from sectors M-2, M, M+2:

    d2e/dm2 ~ N (E(M+2) + E(M-2) - 2 E(M)) / 4

This normalization gives kappa = 1/pi for the nearest-neighbor chain, where
u = 2 a J pi kappa K closes on u_NN = 2 a J with K = 1.
"""

import logging
import math
from typing import Dict, Optional

from hilbert.basis import enumerate_sector
from exact.lanczos import lanczos_extremal
from models.lattice_models import ChainGeometry, CouplingMatrices, CouplingModel
from models.state_models import SusceptibilityResult, Which


def _second_difference(e_minus: float, e_center: float, e_plus: float, n_sites: int) -> float:
    return n_sites * (e_plus + e_minus - 2.0 * e_center) / 4.0


def susceptibility_and_velocity(matrices: CouplingMatrices, geom: ChainGeometry,
                                model: CouplingModel, luttinger_k: float,
                                magnetization: int = 0, seed: int = 0,
                                logger: Optional[logging.Logger] = None) -> SusceptibilityResult:
    """(kappa, u) around the sector with M_z = magnetization"""
    logger = logger or logging.getLogger(__name__)
    n_active = geom.n_active
    which = Which.LOWEST if model.sign.scale > 0 else Which.HIGHEST
    if (n_active + magnetization) % 2:
        raise ValueError(f"M_z={magnetization} has the wrong parity for {n_active} spins")
    n_up_center = (n_active + magnetization) // 2
    if n_up_center + 1 > n_active or n_up_center - 1 < 0:
        raise ValueError("need sectors M-2, M and M+2 inside the spectrum")

    energies: Dict[int, float] = {}
    degenerate = False
    for offset in (-1, 0, 1, 2):
        n_up = n_up_center + offset
        if n_up > n_active:
            continue
        basis = enumerate_sector(geom.n_sites, n_up, geom.active_sites())
        result = lanczos_extremal(matrices, basis, which=which, seed=seed, logger=logger)
        # Energies in the frame where the target state is the lowest one
        energies[2 * n_up - n_active] = which.scale * result.energy
        degenerate = degenerate or result.degenerate

    m = magnetization
    curvature = _second_difference(energies[m - 2], energies[m], energies[m + 2], n_active)
    kappa = 0.5 * model.j_xy / curvature
    kappa_err = 0.0
    if m + 4 in energies:
        curvature_alt = _second_difference(energies[m], energies[m + 2], energies[m + 4], n_active)
        kappa_err = abs(0.5 * model.j_xy / curvature_alt - kappa)

    u = 2.0 * geom.spacing * model.j_xy * math.pi * kappa * luttinger_k
    logger.info(f"[SUCCESS] kappa={kappa:.4f} +- {kappa_err:.4f}, u/(2Ja)={u / (2 * model.j_xy):.4f}")
    return SusceptibilityResult(
        kappa=kappa, kappa_err=kappa_err, u=u,
        u_over_2ja=u / (2.0 * model.j_xy * geom.spacing),
        luttinger_k=luttinger_k, energies=energies, degenerate=degenerate,
    )
