"""
Friedel oscillations at fixed magnetization on an open ring.

The open chain of N spins is a ring of N + 1 positions with the last one
removed; the background is the closed ring of N spins prepared with the
same addressing pattern and schedule. The addressed (down) sites spread as
uniformly as possible: site k is addressed iff floor((k+1) n_dn / N)
exceeds floor(k n_dn / N), with n_dn = (N - M_z) / 2.
"""

import dataclasses
import logging
from typing import Optional, Tuple

import numpy as np

from analyzers.friedel_fit import chain_coordinates
from exact.lanczos import lanczos_extremal
from hilbert.basis import enumerate_sector
from hilbert.observables import observable_sz
from lattice.couplings import build_couplings
from lattice.geometry import open_chain
from models.lattice_models import Boundary, ChainGeometry, CouplingModel
from models.protocol_models import FriedelMode, FriedelResult, NoiseModel, RampSchedule
from models.state_models import Which
from protocol.ramp import run_ramp


def check_friedel_sector(n_spins: int, mz: int):
    if n_spins % 2 == 0:
        raise ValueError(f"Friedel chains need an odd number of spins, got {n_spins}")
    if (n_spins + mz) % 2 or abs(mz) > n_spins:
        raise ValueError(f"M_z={mz} is not reachable with {n_spins} spins (parity mismatch)")


def addressing_pattern(n_spins: int, mz: int) -> Tuple[int, ...]:
    """Chain sites initially down for a target magnetization"""
    check_friedel_sector(n_spins, mz)
    n_dn = (n_spins - mz) // 2
    return tuple(k for k in range(n_spins)
                 if ((k + 1) * n_dn) // n_spins > (k * n_dn) // n_spins)


def _ground_profile(geom: ChainGeometry, model: CouplingModel, n_up: int, seed: int,
                    logger: logging.Logger):
    which = Which.LOWEST if model.sign.scale > 0 else Which.HIGHEST
    basis = enumerate_sector(geom.n_sites, n_up, geom.active_sites(), logger=logger)
    result = lanczos_extremal(build_couplings(geom, model), basis, which=which, seed=seed,
                              logger=logger)
    return observable_sz(result.state), result.degenerate


def _ramp_profile(geom: ChainGeometry, model: CouplingModel, schedule: RampSchedule,
                  noise: Optional[NoiseModel], n_trajectories: int, seed: int, workers: int,
                  logger: logging.Logger) -> np.ndarray:
    result = run_ramp(geom, model, schedule, noise, n_trajectories, seed, workers, logger=logger)
    stack = np.stack([observable_sz(tr.state) for tr in result.trajectories])
    with np.errstate(invalid="ignore"):
        return np.nanmean(stack, axis=0)


def run_friedel(n_spins: int, model: CouplingModel, mz: int,
                mode: FriedelMode = FriedelMode.DIRECT_GROUND_STATE,
                schedule: Optional[RampSchedule] = None, noise: Optional[NoiseModel] = None,
                n_trajectories: int = 1, seed: int = 0, workers: int = 1,
                logger: Optional[logging.Logger] = None) -> FriedelResult:
    """<sz_j> on the open chain, its closed-ring background and their difference"""
    logger = logger or logging.getLogger(__name__)
    pattern = addressing_pattern(n_spins, mz)
    obc_geom = open_chain(n_spins)
    pbc_geom = ChainGeometry(n_sites=n_spins, boundary=Boundary.PERIODIC_RING)
    logger.info(f"[START] Friedel N={n_spins}, M_z={mz}, mode={mode.value}")

    degenerate = False
    if mode is FriedelMode.DIRECT_GROUND_STATE:
        n_up = (n_spins + mz) // 2
        obc, deg_obc = _ground_profile(obc_geom, model, n_up, seed, logger)
        pbc, deg_pbc = _ground_profile(pbc_geom, model, n_up, seed, logger)
        degenerate = deg_obc or deg_pbc
    else:
        if schedule is None:
            raise ValueError("AdiabaticRamp mode needs a ramp schedule")
        schedule = dataclasses.replace(schedule, addressed_sites=pattern,
                                       sign=1 if model.sign.scale > 0 else -1)
        obc = _ramp_profile(obc_geom, model, schedule, noise, n_trajectories, seed, workers, logger)
        pbc = _ramp_profile(pbc_geom, model, schedule, noise, n_trajectories, seed, workers, logger)

    obc = np.asarray(obc[:n_spins], dtype=float)
    pbc = np.asarray(pbc[:n_spins], dtype=float)
    logger.info(f"[SUCCESS] Friedel profile M_z={mz}: max |signal| = "
                f"{np.nanmax(np.abs(obc - pbc)):.4f}")
    return FriedelResult(n_spins=n_spins, mz=mz, mode=mode, j=chain_coordinates(n_spins),
                         obc=obc, pbc=pbc, signal=obc - pbc, addressed=pattern,
                         degenerate=degenerate)
