"""
Projective snapshots with readout errors.

z-basis shots are drawn from the sector probabilities directly. xy-plane
bases first apply the ideal global pi/2 pulse of phase theta to the dense
state over the active sites. Outcomes are +1/-1; atoms missing from the
state (holes, removed site) are reported as 0.
"""

import logging
import math
from typing import List, Optional, Sequence, Union

import numpy as np

from hilbert.states import rotate_full_vector, to_dense_vector
from models.protocol_models import NoiseModel, SnapshotSet, TrajectoryState
from models.state_models import FullState, SectorState

StateSource = Union[SectorState, FullState, Sequence[Union[SectorState, FullState, TrajectoryState]]]

BASIS_ANGLES = {"x": 0.0, "y": math.pi / 2.0}


def _sectors(state) -> List[SectorState]:
    if isinstance(state, FullState):
        return [state.sectors[n] for n in sorted(state.sectors)]
    return [state]


def _basis_angle(basis_label: str, theta: Optional[float]) -> Optional[float]:
    if basis_label == "z":
        return None
    if basis_label in BASIS_ANGLES:
        return BASIS_ANGLES[basis_label]
    if basis_label == "theta":
        if theta is None:
            raise ValueError("basis 'theta' needs an angle")
        return float(theta)
    raise ValueError(f"unknown measurement basis '{basis_label}'")


def _codes_to_shots(codes: np.ndarray, active: np.ndarray, n_sites: int) -> np.ndarray:
    shots = np.zeros((codes.shape[0], n_sites), dtype=np.int8)
    bits = (codes[:, None] >> np.arange(len(active))[None, :]) & 1
    shots[:, active] = (2 * bits - 1).astype(np.int8)
    return shots


def _sample_state(state, n_shots: int, theta: Optional[float], rng: np.random.Generator) -> np.ndarray:
    sectors = _sectors(state)
    basis = sectors[0].basis
    active = basis.active_sites
    if theta is None:
        codes = np.concatenate([s.basis.codes for s in sectors])
        prob = np.concatenate([s.probabilities() for s in sectors])
    else:
        vector = rotate_full_vector(to_dense_vector(state), basis.n_active, theta)
        prob = np.abs(vector) ** 2
        codes = np.arange(prob.shape[0], dtype=np.int64)
    prob = prob / prob.sum()
    picks = rng.choice(codes.shape[0], size=n_shots, p=prob)
    return _codes_to_shots(codes[picks], active, basis.n_sites)


def apply_readout_errors(shots: np.ndarray, eps_up: float, eps_dn: float,
                         rng: np.random.Generator) -> np.ndarray:
    """Flip up -> down with eps_up and down -> up with eps_dn; zeros untouched"""
    out = shots.copy()
    draws = rng.random(shots.shape)
    out[(shots == 1) & (draws < eps_up)] = -1
    out[(shots == -1) & (draws < eps_dn)] = 1
    return out


def sample_snapshots(source: StateSource, basis_label: str = "z", n_shots: int = 1000,
                     noise: Optional[NoiseModel] = None, seed: int = 0,
                     theta: Optional[float] = None,
                     logger: Optional[logging.Logger] = None) -> SnapshotSet:
    """Born-rule shots of a state or of a trajectory ensemble (shots split evenly)"""
    logger = logger or logging.getLogger(__name__)
    angle = _basis_angle(basis_label, theta)
    if isinstance(source, (SectorState, FullState)):
        states = [source]
    else:
        states = [s.state if isinstance(s, TrajectoryState) else s for s in source]
    if not states:
        raise ValueError("no states to sample")

    base, extra = divmod(n_shots, len(states))
    counts = [base + (1 if k < extra else 0) for k in range(len(states))]
    children = np.random.SeedSequence(seed).spawn(len(states) + 1)
    batches = []
    for state, count, child in zip(states, counts, children):
        if count:
            batches.append(_sample_state(state, count, angle, np.random.default_rng(child)))
    shots = np.concatenate(batches, axis=0)

    noise = noise or NoiseModel.ideal()
    eps_up, eps_dn = noise.readout_errors
    if eps_up or eps_dn:
        shots = apply_readout_errors(shots, eps_up, eps_dn, np.random.default_rng(children[-1]))
    logger.debug(f"Sampled {n_shots} shots in basis {basis_label} from {len(states)} states")
    return SnapshotSet(basis_label=basis_label, shots=shots, theta=angle,
                       metadata={"seed": seed, "n_states": len(states), "eps_up": eps_up,
                                 "eps_dn": eps_dn})
