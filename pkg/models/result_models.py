"""
Result Models - correlation profiles, fit results and run manifests

These are the containers that analyzers produce and generators serialize.
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np


def json_ready(x: Any) -> Any:
    """Plain Python values for json.dump; non-finite floats become strings"""
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, Enum):
        return x.value
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.ndarray):
        return [json_ready(v) for v in x.tolist()]
    if isinstance(x, (list, tuple)):
        return [json_ready(v) for v in x]
    if isinstance(x, dict):
        return {str(k): json_ready(v) for k, v in x.items()}
    return x


@dataclass
class CorrelationProfile:
    """Connected correlations binned by chord distance"""
    r: np.ndarray                   # chord distances, strictly increasing
    d: np.ndarray                   # perimeter distances (sites)
    mean: np.ndarray
    stderr: np.ndarray
    n_pairs: np.ndarray
    basis: str = "z"                # "x", "z" or "theta=<rad>"
    n_samples: int = 1
    pair_values: Optional[List[np.ndarray]] = None   # per-bin pair values, for bootstrap

    def __len__(self) -> int:
        return len(self.r)

    def scaled(self, factor: float) -> "CorrelationProfile":
        """Profile multiplied by a global factor"""
        pairs = None if self.pair_values is None else [v * factor for v in self.pair_values]
        return CorrelationProfile(self.r.copy(), self.d.copy(), self.mean * factor,
                                  self.stderr * abs(factor), self.n_pairs.copy(),
                                  self.basis, self.n_samples, pairs)


@dataclass
class FitResult:
    """Named parameters with covariance and diagnostics"""
    name: str
    params: Dict[str, float]
    errors: Dict[str, float]
    covariance: np.ndarray
    chi2_red: float
    n_points: int
    r_c: Optional[float] = None
    rescale: float = 1.0
    weighted: bool = False
    at_bound: List[str] = field(default_factory=list)
    metadata: Dict[str, Any] = field(default_factory=dict)

    def __getitem__(self, key: str) -> float:
        return self.params[key]

    def error(self, key: str) -> float:
        return self.errors.get(key, math.nan)

    def to_dict(self) -> Dict[str, Any]:
        """JSON-ready representation (inf and nan become strings)"""
        return json_ready({
            "name": self.name,
            "params": self.params,
            "errors": self.errors,
            "covariance": np.asarray(self.covariance, dtype=float),
            "param_names": list(self.params),
            "chi2_red": self.chi2_red,
            "n_points": self.n_points,
            "r_c": self.r_c,
            "rescale": self.rescale,
            "weighted": self.weighted,
            "at_bound": self.at_bound,
            "metadata": self.metadata,
        })


@dataclass
class CutoffRow:
    r_c: float
    K: float
    K_err: float
    n_points: int
    success: bool = True
    message: str = ""


@dataclass
class CutoffScanResult:
    """K(r_c) table and the selected cutoff, if a plateau was found"""
    channel: str
    rows: List[CutoffRow]
    selected_rc: Optional[float]
    tolerance: float
    selected_fit: Optional[FitResult] = None

    def k_values(self) -> Dict[float, float]:
        return {row.r_c: row.K for row in self.rows if row.success}


@dataclass
class DisorderProfile:
    """Ensemble-averaged C^x(r) of a bond-disordered chain"""
    r: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    n_realizations: int
    p: float
    weak_scale: float
    metadata: Dict[str, Any] = field(default_factory=dict)


@dataclass
class FftResult:
    """|<sz_q>| over q = 2 pi n / N"""
    n: np.ndarray
    q: np.ndarray
    amplitude: np.ndarray
    peak_n: int
    peak_q: float
    flat: bool = False
    noise_floor: float = 0.0


@dataclass
class OutputRecord:
    path: str
    sha256: str
    kind: str


@dataclass
class ResultManifest:
    """Everything one run emitted, with checksums"""
    scenario: str
    config_hash: str
    tool_version: str
    seed: int
    workers: int
    outputs: List[OutputRecord] = field(default_factory=list)
    wall_clock_s: float = 0.0
    warnings: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "scenario": self.scenario,
            "config_hash": self.config_hash,
            "tool_version": self.tool_version,
            "seed": self.seed,
            "workers": self.workers,
            "outputs": [{"path": o.path, "sha256": o.sha256, "kind": o.kind} for o in self.outputs],
            "wall_clock_s": round(self.wall_clock_s, 3),
            "warnings": list(self.warnings),
        }


@dataclass
class PlotSpec:
    """Quick-look figure: line series over a shared x axis, or a heatmap"""
    name: str
    kind: str                       # "line" or "heatmap"
    x: np.ndarray
    series: Dict[str, np.ndarray] = field(default_factory=dict)
    y: Optional[np.ndarray] = None  # heatmap rows
    z: Optional[np.ndarray] = None  # heatmap values, shape (len(y), len(x))
    xlabel: str = ""
    ylabel: str = ""
    title: str = ""
    log_log: bool = False


@dataclass
class ScenarioOutput:
    """Tables, JSON payloads and plots produced by one scenario run"""
    scenario: str
    tables: Dict[str, Any] = field(default_factory=dict)       # file name -> DataFrame
    payloads: Dict[str, Dict[str, Any]] = field(default_factory=dict)
    plots: List[PlotSpec] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)
