"""
State Models - wavefunctions and solver results

SectorState holds amplitudes over one SectorBasis; FullState is a direct sum
of sector states spanning every magnetization.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Dict, List, Optional

import numpy as np

if TYPE_CHECKING:
    from hilbert.basis import SectorBasis

NORM_TOLERANCE = 1e-10


class Which(Enum):
    """Extremal eigenpair to target"""
    LOWEST = "lowest"
    HIGHEST = "highest"

    @property
    def scale(self) -> float:
        return 1.0 if self is Which.LOWEST else -1.0


@dataclass
class SectorState:
    """Complex amplitudes over one fixed-magnetization basis"""
    basis: "SectorBasis"
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != (self.basis.dim,):
            raise ValueError(f"amplitude length {self.amplitudes.shape} "
                             f"does not match basis dimension {self.basis.dim}")

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> "SectorState":
        return SectorState(self.basis, self.amplitudes / self.norm)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def overlap(self, other: "SectorState") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))


@dataclass
class FullState:
    """Direct sum of sector states keyed by n_up"""
    sectors: Dict[int, SectorState]

    @property
    def n_sites(self) -> int:
        return next(iter(self.sectors.values())).basis.n_sites

    @property
    def active_sites(self) -> np.ndarray:
        return next(iter(self.sectors.values())).basis.active_sites

    @property
    def norm(self) -> float:
        return float(np.sqrt(sum(s.norm ** 2 for s in self.sectors.values())))


@dataclass
class LanczosResult:
    """Extremal eigenpair of one sector"""
    energy: float
    state: SectorState
    residual: float
    iterations: int
    which: Which = Which.LOWEST
    gap: Optional[float] = None
    degenerate: bool = False


@dataclass
class SpectrumResult:
    """Dense spectrum of one sector, ascending in the solved frame"""
    energies: np.ndarray
    states: np.ndarray
    basis: "SectorBasis"
    scale: float = 1.0

    def ground(self) -> SectorState:
        return SectorState(self.basis, self.states[:, 0])


@dataclass
class DsfGrid:
    """S(q, omega) binned on a frequency grid and normalized to unit peak"""
    q: np.ndarray
    omega: np.ndarray
    intensity: np.ndarray
    eta: float
    norm_factor: float
    static: np.ndarray
    omega_edges: np.ndarray
    peak_omega: np.ndarray
    method: str = "exact"
    poles: List[Dict[str, np.ndarray]] = field(default_factory=list)


@dataclass
class SusceptibilityResult:
    """Spin susceptibility and sound velocity from sector ground energies"""
    kappa: float
    kappa_err: float
    u: float
    u_over_2ja: float
    luttinger_k: float
    energies: Dict[int, float]
    degenerate: bool = False
    convention: str = "kappa = (J/2) dm/dh, m = M_z/N, h = d(E/N)/dm"


@dataclass
class ThermalObservables:
    """Gibbs averages over hole realizations"""
    temperature: float
    transverse_field: float
    sz: np.ndarray
    sz_err: np.ndarray
    cx: np.ndarray
    cx_err: np.ndarray
    cz: np.ndarray
    cz_err: np.ndarray
    n_realizations: int
    variance_mz: float = 0.0


@dataclass
class HoppingMatrix:
    """Single-particle NN hopping matrix, entry (i, i+1) = -J_i"""
    matrix: np.ndarray
    periodic: bool = False
    boundary_sign: float = 1.0

    @property
    def n_sites(self) -> int:
        return self.matrix.shape[0]


@dataclass
class FreeFermionSolution:
    """Filled Fermi sea of a hopping matrix"""
    G: np.ndarray
    energy: float
    n_particles: int
    orbital_energies: np.ndarray
    hopping: HoppingMatrix
    degenerate_fermi_level: bool = False

    @property
    def sz(self) -> np.ndarray:
        return 2.0 * np.real(np.diag(self.G)) - 1.0
