"""
Measurements along cos(theta) x + sin(theta) y after a ramp.
"""

import logging
import math
import warnings
from typing import Optional, Sequence, Union

import numpy as np

from hilbert.observables import rotated_moments
from lattice.geometry import sublattice
from models.lattice_models import ChainGeometry
from models.protocol_models import AngularScanResult, TrajectoryState
from models.state_models import FullState, SectorState
from protocol.ramp import ensemble_profile

State = Union[SectorState, FullState, TrajectoryState]


def angular_scan(states: Union[State, Sequence[State]], thetas: Sequence[float],
                 geom: ChainGeometry, addressed: Optional[Sequence[int]] = None,
                 logger: Optional[logging.Logger] = None) -> AngularScanResult:
    """Per-theta sublattice magnetizations and binned connected C^theta(r)

    Averages run over the state ensemble; correlations are connected with
    respect to the ensemble mean.
    """
    logger = logger or logging.getLogger(__name__)
    if isinstance(states, (SectorState, FullState, TrajectoryState)):
        states = [states]
    states = [s.state if isinstance(s, TrajectoryState) else s for s in states]
    if addressed is None:
        addressed = sublattice(geom, 1)
    a_mask = np.zeros(geom.n_sites, dtype=bool)
    a_mask[list(addressed)] = True
    b_mask = ~a_mask

    thetas = np.asarray(thetas, dtype=float)
    mags, sub_a, sub_b, profiles = [], [], [], []
    for theta in thetas:
        firsts, seconds = [], []
        for state in states:
            s_theta, c_theta = rotated_moments(state, theta)
            firsts.append(s_theta)
            seconds.append(c_theta + np.outer(s_theta, s_theta))
        firsts = np.stack(firsts)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            mean = np.nanmean(firsts, axis=0)
            sub_a.append(float(np.nanmean(mean[a_mask])) if a_mask.any() else math.nan)
            sub_b.append(float(np.nanmean(mean[b_mask])) if b_mask.any() else math.nan)
        mags.append(mean)
        profiles.append(ensemble_profile(np.stack(seconds), firsts, geom, f"theta={theta:.6g}"))
        logger.debug(f"theta={theta:.3f}: <s_theta> A={sub_a[-1]:.4f} B={sub_b[-1]:.4f}")

    return AngularScanResult(thetas=thetas, sublattice_a=np.array(sub_a), sublattice_b=np.array(sub_b),
                             magnetization=np.array(mags), profiles=profiles)
