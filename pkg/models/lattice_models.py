"""
Lattice Models - geometry and coupling containers for dipolar XY rings

Sites sit on a circle with nearest-neighbor spacing 1. A site can be a hole
(non-interacting vacancy) or, on an open ring, the single removed atom.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, List, Optional, Tuple

import numpy as np

from utils.exceptions import GeometryError


class Boundary(Enum):
    """Ring boundary condition"""
    PERIODIC_RING = "periodic_ring"
    OPEN_RING = "open_ring"


class Sign(Enum):
    """Which extremal state of H_XY the scenario targets"""
    FM = "FM"
    AFM = "AFM"

    @property
    def scale(self) -> float:
        """Operator scale: AFM targets the ground state of -H"""
        return 1.0 if self is Sign.FM else -1.0


@dataclass(frozen=True)
class ChainGeometry:
    """Sites on a closed or open ring"""
    n_sites: int
    boundary: Boundary = Boundary.PERIODIC_RING
    removed_site: Optional[int] = None
    holes: FrozenSet[int] = field(default_factory=frozenset)
    spacing: float = 1.0

    def __post_init__(self):
        if self.n_sites < 2:
            raise GeometryError(f"n_sites must be >= 2, got {self.n_sites}")
        object.__setattr__(self, "holes", frozenset(int(h) for h in self.holes))
        for h in self.holes:
            if not 0 <= h < self.n_sites:
                raise GeometryError(f"hole index {h} outside [0, {self.n_sites})")
        if self.boundary is Boundary.OPEN_RING:
            if self.removed_site is None:
                raise GeometryError("open ring requires exactly one removed site")
            if not 0 <= self.removed_site < self.n_sites:
                raise GeometryError(
                    f"removed site {self.removed_site} outside [0, {self.n_sites})")
            if self.removed_site in self.holes:
                raise GeometryError("removed site cannot also be a hole")
        elif self.removed_site is not None:
            raise GeometryError("periodic ring cannot have a removed site")

    @property
    def inactive_sites(self) -> FrozenSet[int]:
        """Holes plus the removed site"""
        if self.removed_site is None:
            return self.holes
        return self.holes | {self.removed_site}

    def active_sites(self) -> List[int]:
        """Sites carrying a spin, ascending"""
        inactive = self.inactive_sites
        return [i for i in range(self.n_sites) if i not in inactive]

    def is_active(self, site: int) -> bool:
        return site not in self.inactive_sites

    @property
    def n_active(self) -> int:
        return self.n_sites - len(self.inactive_sites)

    def with_holes(self, extra: FrozenSet[int]) -> "ChainGeometry":
        """Same ring with additional holes"""
        return ChainGeometry(
            n_sites=self.n_sites,
            boundary=self.boundary,
            removed_site=self.removed_site,
            holes=self.holes | frozenset(extra),
            spacing=self.spacing,
        )


@dataclass(frozen=True)
class VdwTensor:
    """Second-order van der Waals energies U_{s,t} (rad/us at unit distance)"""
    uu: float = 0.0
    dd: float = 0.0
    ud: float = 0.0
    du: float = 0.0

    def __post_init__(self):
        for name in ("uu", "dd", "ud", "du"):
            if not math.isfinite(getattr(self, name)):
                raise GeometryError(f"vdW entry {name} must be finite")

    @property
    def is_zero(self) -> bool:
        return self.uu == 0.0 and self.dd == 0.0 and self.ud == 0.0 and self.du == 0.0

    @property
    def zz(self) -> float:
        """Coefficient of sigma^z_i sigma^z_j"""
        return (self.uu + self.dd - self.ud - self.du) / 4.0

    @property
    def field_first(self) -> float:
        """Coefficient of sigma^z_i for the lower index i of a pair"""
        return (self.uu - self.dd + self.ud - self.du) / 4.0

    @property
    def field_second(self) -> float:
        """Coefficient of sigma^z_j for the upper index j of a pair"""
        return (self.uu - self.dd - self.ud + self.du) / 4.0

    @property
    def constant(self) -> float:
        return (self.uu + self.dd + self.ud + self.du) / 4.0


@dataclass(frozen=True)
class CouplingModel:
    """XY strength, decay exponent, vdW tensor and bond overrides"""
    j_xy: float
    exponent: float = 3.0
    sign: Sign = Sign.FM
    vdw: VdwTensor = field(default_factory=VdwTensor)
    bond_overrides: Dict[Tuple[int, int], float] = field(default_factory=dict)

    def __post_init__(self):
        if not self.j_xy > 0:
            raise GeometryError(f"j_xy must be > 0, got {self.j_xy}")
        if not (self.exponent > 0):
            raise GeometryError(f"exponent must be > 0 or inf, got {self.exponent}")
        normalized: Dict[Tuple[int, int], float] = {}
        for (i, j), scale in self.bond_overrides.items():
            if i == j:
                raise GeometryError(f"bond override on a single site ({i}, {j})")
            key = (min(i, j), max(i, j))
            if key in normalized and normalized[key] != scale:
                raise GeometryError(f"asymmetric bond override for pair {key}")
            normalized[key] = float(scale)
        object.__setattr__(self, "bond_overrides", normalized)

    @property
    def nearest_neighbor_only(self) -> bool:
        return math.isinf(self.exponent)

    def override(self, i: int, j: int) -> float:
        return self.bond_overrides.get((min(i, j), max(i, j)), 1.0)


@dataclass
class CouplingMatrices:
    """Pairwise couplings of H_XY + H_vdW

    H = -sum_{i<j} xy_ij (s+_i s-_j + h.c.) + sum_{i<j} zz_ij sz_i sz_j
        + sum_i field_z_i sz_i + offset
    """
    xy: np.ndarray
    zz: np.ndarray
    field_z: np.ndarray
    offset: float = 0.0

    @property
    def n_sites(self) -> int:
        return self.xy.shape[0]

    def submatrices(self, sites: List[int]) -> "CouplingMatrices":
        """Restriction to a subset of sites (in the given order)"""
        idx = np.asarray(sites, dtype=np.int64)
        return CouplingMatrices(
            xy=self.xy[np.ix_(idx, idx)].copy(),
            zz=self.zz[np.ix_(idx, idx)].copy(),
            field_z=self.field_z[idx].copy(),
            offset=self.offset,
        )
