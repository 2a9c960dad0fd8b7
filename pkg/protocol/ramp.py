"""
Adiabatic light-shift ramps with holes and quantum-jump decay.

Every trajectory starts from the addressed pattern (addressed sites down,
all other active sites up), evolves under H_XY + H_vdW + H_Z(t) with

    H_Z(t) = sign * delta(t) * sum_{i in B} (1 + sz_i) / 2,

and loses atoms at a state-independent total rate 2 gamma per spin. Since
the non-Hermitian part of H_eff is proportional to the identity, jump times
are drawn up front from an exponential law; at a jump a site is picked
uniformly, projected onto up with probability <n_up_i>, and becomes a hole.
A positive sign prepares the FM ground state, a negative sign the highest
(AFM) state of H_XY.
"""

import logging
import math
import time
import warnings
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from analyzers.binning import bin_correlations
from exact.krylov import propagate_operator
from hilbert.observables import observable_cxx, observable_czz, observable_sz
from hilbert.operators import SectorOperator
from hilbert.states import product_state, project_out_site
from lattice.couplings import build_couplings
from lattice.geometry import sample_holes, sublattice
from models.lattice_models import ChainGeometry, CouplingModel
from models.protocol_models import (
    DecayChannel, JumpRecord, NoiseModel, RampCheckpoint, RampResult, RampSchedule, TrajectoryState,
)
from models.result_models import CorrelationProfile
from models.state_models import SectorState
from utils.exceptions import PhysicsWarning
from utils.parallel import TaskPool

STEP_SELF_CHECK_TOLERANCE = 1e-4


def lila_delta(t: float, schedule: RampSchedule) -> float:
    """delta(t) = delta0 (T - t) / (T - (1 - alpha) t) for 0 <= t <= T"""
    T = schedule.T
    if t < -1e-12 or t > T * (1 + 1e-12):
        raise ValueError(f"t={t} outside the ramp interval [0, {T}]")
    t = min(max(t, 0.0), T)
    return schedule.delta0 * (T - t) / (T - (1.0 - schedule.alpha) * t)


def schedule_delta(t: float, schedule: RampSchedule) -> float:
    """Ramp down on [0, T], hold at zero, then the mirrored ramp up when reverse"""
    T = schedule.T
    if t <= T:
        return lila_delta(t, schedule)
    t_hold_end = T + schedule.hold_us
    if t <= t_hold_end or not schedule.reverse:
        return 0.0
    return lila_delta(max(0.0, T - (t - t_hold_end)), schedule)


def addressed_sites(geom: ChainGeometry, schedule: RampSchedule) -> List[int]:
    """Addressed active sites (default: odd sublattice)"""
    sites = schedule.addressed_sites or tuple(sublattice(geom, 1))
    return [s for s in sites if geom.is_active(s)]


def light_shift_vector(t: float, schedule: RampSchedule, n_sites: int,
                       addressed: Sequence[int]) -> np.ndarray:
    shift = np.zeros(n_sites)
    shift[list(addressed)] = schedule.sign * schedule_delta(t, schedule)
    return shift


def rate_equation_population(gamma: float, t: float) -> float:
    """Survival probability of one spin under four channels of rate gamma (two per state)"""
    return math.exp(-2.0 * gamma * t)


@dataclass
class _TrajectoryTask:
    trajectory: int
    geom: ChainGeometry
    model: CouplingModel
    schedule: RampSchedule
    noise: NoiseModel
    checkpoints: Tuple[float, ...]
    seed_sequence: np.random.SeedSequence
    krylov_dim: int
    tol: float


@dataclass
class _Snapshot:
    """Per-trajectory observables at one checkpoint (NaN at inactive sites)"""
    sz: np.ndarray
    zz: np.ndarray          # second moment <sz sz>
    xx: np.ndarray          # <sx sx>
    energy: float
    n_active: int


def _record(state: SectorState, op: SectorOperator) -> _Snapshot:
    sz = observable_sz(state)
    czz = observable_czz(state)
    # Energy of H_XY + H_vdW without the addressing term
    op.set_light_shift(None)
    return _Snapshot(sz=sz, zz=czz + np.outer(sz, sz), xx=observable_cxx(state),
                     energy=op.energy(state), n_active=state.basis.n_active)


def _run_trajectory(task: _TrajectoryTask):
    logger = logging.getLogger(__name__)
    rng = np.random.default_rng(task.seed_sequence)
    schedule = task.schedule
    geom = sample_holes(task.geom, task.noise.hole_probability, rng)
    addressed = addressed_sites(geom, schedule)
    active = geom.active_sites()
    up = [s for s in active if s not in set(addressed)]
    state = product_state(geom.n_sites, up, active)

    def build(g: ChainGeometry, basis) -> SectorOperator:
        return SectorOperator(build_couplings(g, task.model), basis, logger=logger)

    op = build(geom, state.basis)

    def shift(t):
        return light_shift_vector(t, schedule, geom.n_sites, addressed)

    rate = task.noise.site_decay_rate
    jumps: List[JumpRecord] = []

    def next_jump(now: float) -> float:
        n_active = state.basis.n_active
        if rate <= 0 or n_active <= 1:
            return math.inf
        return now + rng.exponential(1.0 / (rate * n_active))

    records: List[_Snapshot] = []
    t_now = 0.0
    t_jump = next_jump(0.0)
    for t_check in task.checkpoints:
        while t_jump <= t_check:
            psi = propagate_operator(op, state.amplitudes, t_now, t_jump, schedule.dt_us, shift,
                                     task.krylov_dim, task.tol, logger)
            state = SectorState(state.basis, psi).normalized()
            t_now = t_jump

            site = int(rng.choice(state.basis.active_sites))
            p_up = 0.5 * (1.0 + observable_sz(state)[site])
            spin_up = bool(rng.random() < p_up)
            if spin_up:
                channel = DecayChannel.UP_TO_GROUND if rng.random() < 0.5 else DecayChannel.UP_TO_OTHER_RYDBERG
            else:
                channel = DecayChannel.DOWN_TO_GROUND if rng.random() < 0.5 else DecayChannel.DOWN_TO_OTHER_RYDBERG
            jumps.append(JumpRecord(task.trajectory, t_now, site, channel))
            state = project_out_site(state, site, spin_up)
            geom = geom.with_holes({site})
            addressed = [s for s in addressed if s != site]
            op = build(geom, state.basis)
            t_jump = next_jump(t_now)

        psi = propagate_operator(op, state.amplitudes, t_now, t_check, schedule.dt_us, shift,
                                 task.krylov_dim, task.tol, logger)
        state = SectorState(state.basis, psi).normalized()
        t_now = t_check
        records.append(_record(state, op))

    final = TrajectoryState(trajectory=task.trajectory, geometry=geom, state=state, jumps=jumps)
    return records, final


def _nanmean(stack: np.ndarray) -> np.ndarray:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        return np.nanmean(stack, axis=0)


def _mean_err(values: np.ndarray) -> Tuple[float, float]:
    values = np.asarray(values, dtype=float)
    values = values[np.isfinite(values)]
    if values.size == 0:
        return math.nan, math.nan
    if values.size == 1:
        return float(values[0]), 0.0
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(values.size))


def _profile_means(matrix: np.ndarray, geom: ChainGeometry, basis: str) -> Dict[float, Tuple[float, float, int]]:
    p = bin_correlations(matrix, geom, basis=basis)
    return {float(d): (float(r), float(m), int(n)) for d, r, m, n in zip(p.d, p.r, p.mean, p.n_pairs)}


def ensemble_profile(second: np.ndarray, first: Optional[np.ndarray], geom: ChainGeometry,
                     basis: str) -> CorrelationProfile:
    """Connected correlations of the trajectory mixture, binned, with jackknife errors

    second: (n_traj, N, N) second moments, first: (n_traj, N) means or None
    when the first moment vanishes identically.
    """
    n_traj = second.shape[0]

    def connected(idx):
        m2 = _nanmean(second[idx])
        if first is None:
            return m2
        m1 = _nanmean(first[idx])
        return m2 - np.outer(m1, m1)

    full = _profile_means(connected(np.arange(n_traj)), geom, basis)
    ds = sorted(full)
    errors = np.zeros(len(ds))
    if n_traj > 1:
        samples = np.full((n_traj, len(ds)), np.nan)
        for k in range(n_traj):
            leave_out = _profile_means(connected(np.delete(np.arange(n_traj), k)), geom, basis)
            for col, d in enumerate(ds):
                if d in leave_out:
                    samples[k, col] = leave_out[d][1]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            centered = samples - np.nanmean(samples, axis=0)
            errors = np.sqrt((n_traj - 1) / n_traj * np.nansum(centered ** 2, axis=0))
    return CorrelationProfile(
        r=np.array([full[d][0] for d in ds]), d=np.array(ds),
        mean=np.array([full[d][1] for d in ds]), stderr=errors,
        n_pairs=np.array([full[d][2] for d in ds], dtype=int), basis=basis, n_samples=n_traj,
    )


def run_ramp(geom: ChainGeometry, model: CouplingModel, schedule: RampSchedule,
             noise: Optional[NoiseModel] = None, n_trajectories: int = 1, seed: int = 0,
             workers: int = 1, krylov_dim: int = 30, tol: float = 1e-12,
             logger: Optional[logging.Logger] = None) -> RampResult:
    """Trajectory-averaged observables at the schedule checkpoints"""
    logger = logger or logging.getLogger(__name__)
    noise = noise or NoiseModel.ideal()
    if n_trajectories < 1:
        raise ValueError("n_trajectories must be >= 1")
    if noise.hole_probability == 0.0 and noise.site_decay_rate == 0.0 and n_trajectories > 1:
        logger.info("Noise-free ramp: a single trajectory is exact")
        n_trajectories = 1

    checkpoints = tuple(sorted(set([0.0] + schedule.checkpoint_times())))
    started = time.time()
    logger.info(f"[START] Ramp: N={geom.n_sites}, T={schedule.T} us, alpha={schedule.alpha}, "
                f"sign={schedule.sign:+d}, {n_trajectories} trajectories")

    children = np.random.SeedSequence(seed).spawn(n_trajectories)
    tasks = [_TrajectoryTask(k, geom, model, schedule, noise, checkpoints, child, krylov_dim, tol)
             for k, child in enumerate(children)]
    outputs = TaskPool(workers, logger).map(_run_trajectory, tasks)

    addressed = set(addressed_sites(geom, schedule))
    a_mask = np.array([i in addressed for i in range(geom.n_sites)])
    b_mask = np.array([geom.is_active(i) and i not in addressed for i in range(geom.n_sites)])
    n_initial = max(geom.n_active, 1)

    results: List[RampCheckpoint] = []
    for c, t in enumerate(checkpoints):
        snaps = [records[c] for records, _ in outputs]
        sz = np.stack([s.sz for s in snaps])
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            sub_a = np.nanmean(sz[:, a_mask], axis=1) if a_mask.any() else np.full(len(snaps), np.nan)
            sub_b = np.nanmean(sz[:, b_mask], axis=1) if b_mask.any() else np.full(len(snaps), np.nan)
        up_pop = np.array([np.nansum(0.5 * (1.0 + s.sz)) / n_initial for s in snaps])
        a_mean, a_err = _mean_err(sub_a)
        b_mean, b_err = _mean_err(sub_b)
        e_mean, e_err = _mean_err([s.energy for s in snaps])
        results.append(RampCheckpoint(
            t_us=t, delta=schedule.sign * schedule_delta(t, schedule),
            sublattice_a=a_mean, sublattice_a_err=a_err,
            sublattice_b=b_mean, sublattice_b_err=b_err,
            active_fraction=float(np.mean([s.n_active for s in snaps]) / n_initial),
            energy=e_mean, energy_err=e_err,
            cx=ensemble_profile(np.stack([s.xx for s in snaps]), None, geom, "x"),
            cz=ensemble_profile(np.stack([s.zz for s in snaps]), sz, geom, "z"),
            up_population=float(np.mean(up_pop)),
        ))

    trajectories = [final for _, final in outputs]
    n_jumps = sum(len(tr.jumps) for tr in trajectories)
    logger.info(f"[COMPLETE] Ramp finished in {time.time() - started:.2f}s "
                f"({n_jumps} jumps over {n_trajectories} trajectories)")
    return RampResult(schedule=schedule, checkpoints=results, trajectories=trajectories,
                      n_trajectories=n_trajectories)


def back_and_forth_contrast(result: RampResult) -> Tuple[float, float]:
    """Staggered contrast (<sz>_B - <sz>_A) / 2 at the start and at the end"""
    first, last = result.checkpoints[0], result.checkpoints[-1]
    return (0.5 * (first.sublattice_b - first.sublattice_a),
            0.5 * (last.sublattice_b - last.sublattice_a))


def ramp_step_self_check(geom: ChainGeometry, model: CouplingModel, schedule: RampSchedule,
                         tolerance: float = STEP_SELF_CHECK_TOLERANCE,
                         logger: Optional[logging.Logger] = None) -> float:
    """Largest change of the final C^x and C^z profiles when dt is halved"""
    logger = logger or logging.getLogger(__name__)
    coarse = run_ramp(geom, model, schedule, logger=logger).final()
    fine_schedule = RampSchedule(
        delta0=schedule.delta0, T=schedule.T, alpha=schedule.alpha, sign=schedule.sign,
        addressed_sites=schedule.addressed_sites, checkpoints=schedule.checkpoints,
        reverse=schedule.reverse, hold_us=schedule.hold_us, dt_us=schedule.dt_us / 2.0,
    )
    fine = run_ramp(geom, model, fine_schedule, logger=logger).final()
    change = float(max(np.max(np.abs(coarse.cx.mean - fine.cx.mean)),
                       np.max(np.abs(coarse.cz.mean - fine.cz.mean))))
    if change >= tolerance:
        msg = f"halving dt changes final correlations by {change:.2e} (>= {tolerance:.0e})"
        logger.warning(f"[WARNING] {msg}")
        warnings.warn(msg, PhysicsWarning)
    return change
