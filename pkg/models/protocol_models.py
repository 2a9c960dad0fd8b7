"""
Protocol Models - schedules, noise, snapshots and protocol results
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from models.lattice_models import ChainGeometry
from models.result_models import CorrelationProfile
from models.state_models import SectorState


class QuenchInitial(Enum):
    """Product state the quench starts from"""
    CSS_Y = "CSS_y"
    STAGGERED_CSS_Y = "StaggeredCSS_y"


class FriedelMode(Enum):
    """How the fixed-magnetization state is prepared"""
    ADIABATIC_RAMP = "AdiabaticRamp"
    DIRECT_GROUND_STATE = "DirectGroundState"


class DecayChannel(Enum):
    """Single-atom losses; every channel leaves a non-interacting hole"""
    UP_TO_GROUND = "up->g"
    UP_TO_OTHER_RYDBERG = "up->r'"
    DOWN_TO_GROUND = "down->g"
    DOWN_TO_OTHER_RYDBERG = "down->r'"


@dataclass(frozen=True)
class RampSchedule:
    """Light-shift ramp on the addressed sublattice

    delta(t) = delta0 (T - t) / (T - (1 - alpha) t) on [0, T], optionally
    mirrored back up on [T, 2T] and followed by hold_us at delta = 0.
    """
    delta0: float
    T: float
    alpha: float
    sign: int = 1                           # +1 -> FM, -1 -> AFM
    addressed_sites: Tuple[int, ...] = ()
    checkpoints: Tuple[float, ...] = ()
    reverse: bool = False
    hold_us: float = 0.0
    dt_us: float = 0.01

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError(f"ramp duration T must be > 0, got {self.T}")
        if not self.alpha >= 1:
            raise ValueError(f"alpha must be >= 1, got {self.alpha}")
        if self.sign not in (1, -1):
            raise ValueError(f"ramp sign must be +1 or -1, got {self.sign}")
        if self.hold_us < 0 or self.dt_us <= 0:
            raise ValueError("hold_us must be >= 0 and dt_us > 0")
        for t in self.checkpoints:
            if not 0.0 <= t <= self.end_time + 1e-12:
                raise ValueError(f"checkpoint {t} outside [0, {self.end_time}]")

    @property
    def end_time(self) -> float:
        return (2.0 * self.T if self.reverse else self.T) + self.hold_us

    def checkpoint_times(self) -> List[float]:
        """Sorted checkpoints, always including the final time"""
        times = sorted(set(float(t) for t in self.checkpoints) | {self.end_time})
        return times


@dataclass(frozen=True)
class NoiseModel:
    """Initial holes, decay to holes and readout flips"""
    p_init: float = 0.0
    gamma: float = 0.0                      # per channel, 1/us
    eps_up: float = 0.0
    eps_dn: float = 0.0
    holes_enabled: bool = True
    decay_enabled: bool = True
    detection_enabled: bool = True

    def __post_init__(self):
        for name in ("p_init", "eps_up", "eps_dn"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")

    @property
    def hole_probability(self) -> float:
        return self.p_init if self.holes_enabled else 0.0

    @property
    def site_decay_rate(self) -> float:
        """Total loss rate of one spin (two channels per spin state)"""
        return 2.0 * self.gamma if self.decay_enabled else 0.0

    @property
    def readout_errors(self) -> Tuple[float, float]:
        if not self.detection_enabled:
            return 0.0, 0.0
        return self.eps_up, self.eps_dn

    @classmethod
    def ideal(cls) -> "NoiseModel":
        return cls()


@dataclass
class SnapshotSet:
    """Projective measurement outcomes: +1, -1, or 0 for a missing atom"""
    basis_label: str
    shots: np.ndarray                       # int8, shape (n_shots, N)
    theta: Optional[float] = None
    metadata: Dict[str, Any] = field(default_factory=dict)

    @property
    def n_shots(self) -> int:
        return self.shots.shape[0]

    @property
    def n_sites(self) -> int:
        return self.shots.shape[1]


@dataclass
class QuenchGrid:
    """C^z(d, t) averaged over pairs at ring distance d"""
    times: np.ndarray
    d: np.ndarray
    values: np.ndarray                      # (n_t, n_d)
    stderr: np.ndarray
    variance_mz: np.ndarray                 # sum_ij C^z_ij(t)
    metadata: Dict[str, Any] = field(default_factory=dict)


@dataclass
class JumpRecord:
    trajectory: int
    time: float
    site: int
    channel: DecayChannel


@dataclass
class TrajectoryState:
    """Final pure state of one trajectory and the holes it accumulated"""
    trajectory: int
    geometry: ChainGeometry
    state: SectorState
    jumps: List[JumpRecord] = field(default_factory=list)


@dataclass
class RampCheckpoint:
    """Trajectory-averaged observables at one time"""
    t_us: float
    delta: float
    sublattice_a: float                     # addressed sites
    sublattice_a_err: float
    sublattice_b: float
    sublattice_b_err: float
    active_fraction: float
    energy: float
    energy_err: float
    cx: CorrelationProfile
    cz: CorrelationProfile
    up_population: float = 0.0


@dataclass
class RampResult:
    schedule: RampSchedule
    checkpoints: List[RampCheckpoint]
    trajectories: List[TrajectoryState]
    n_trajectories: int

    @property
    def jumps(self) -> List[JumpRecord]:
        return [j for traj in self.trajectories for j in traj.jumps]

    def final(self) -> RampCheckpoint:
        return self.checkpoints[-1]


@dataclass
class FriedelResult:
    """Fixed-magnetization <sz_j> on the open chain and its ring background"""
    n_spins: int
    mz: int
    mode: FriedelMode
    j: np.ndarray                           # chain coordinate from the center
    obc: np.ndarray
    pbc: np.ndarray
    signal: np.ndarray
    addressed: Tuple[int, ...]
    degenerate: bool = False


@dataclass
class AngularScanResult:
    """Rotated-basis magnetization and correlations per measurement angle"""
    thetas: np.ndarray
    sublattice_a: np.ndarray
    sublattice_b: np.ndarray
    magnetization: np.ndarray               # (n_theta, N)
    profiles: List[CorrelationProfile]
