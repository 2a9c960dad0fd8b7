"""
Configuration management for tll-lab experiments.

An experiment config is one JSON file: a scenario name plus blocks for the
geometry, couplings, ramp, noise and the scenario-specific settings. Every
physical quantity carries its unit in the key name (T_us, j_rad_per_us).
Keys starting with an underscore are documentation and are ignored.
"""

import hashlib
import json
import math
import os
from dataclasses import asdict, dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional

import numpy as np
from dotenv import load_dotenv

from models.lattice_models import Boundary, ChainGeometry, CouplingModel, Sign, VdwTensor
from models.protocol_models import FriedelMode, NoiseModel, QuenchInitial, RampSchedule

TWO_PI = 2.0 * math.pi

ENV_WORKERS = "TLL_LAB_WORKERS"
ENV_LOG_LEVEL = "TLL_LAB_LOG_LEVEL"
ENV_OUTPUT_DIR = "TLL_LAB_OUTPUT_DIR"


class Scenario(Enum):
    """One figure-reproduction recipe per run"""
    GROUND_STATE_CORRELATIONS = "GroundStateCorrelations"
    ADIABATIC_RAMP = "AdiabaticRamp"
    BACK_AND_FORTH_RAMP = "BackAndForthRamp"
    FRIEDEL = "Friedel"
    QUENCH = "Quench"
    DSF = "DSF"
    DISORDERED_CHAIN = "DisorderedChain"
    THERMAL_COMPARISON = "ThermalComparison"


@dataclass
class GeometryConfig:
    """Ring of n_sites; open rings remove one site"""
    n_sites: int = 24
    boundary: str = Boundary.PERIODIC_RING.value
    removed_site: Optional[int] = None
    holes: List[int] = field(default_factory=list)

    def to_geometry(self) -> ChainGeometry:
        return ChainGeometry(n_sites=self.n_sites, boundary=Boundary(self.boundary),
                             removed_site=self.removed_site, holes=frozenset(self.holes))


@dataclass
class CouplingConfig:
    """Flip-flop strength, decay exponent and vdW energies (rad/us)"""
    preset: Optional[str] = None
    j_rad_per_us: float = TWO_PI * 0.55
    exponent: Any = 3.0                     # number or "inf" for nearest neighbors
    sign: str = Sign.FM.value
    include_vdw: bool = True
    vdw_uu_rad_per_us: float = 0.0
    vdw_dd_rad_per_us: float = 0.0
    vdw_ud_rad_per_us: float = 0.0
    vdw_du_rad_per_us: float = 0.0
    bond_overrides: List[List[float]] = field(default_factory=list)   # [i, j, scale] triples

    @property
    def exponent_value(self) -> float:
        if isinstance(self.exponent, str):
            return math.inf if self.exponent.lower() in ("inf", "infinity") else float(self.exponent)
        return float(self.exponent)

    def to_model(self) -> CouplingModel:
        vdw = VdwTensor()
        if self.include_vdw:
            vdw = VdwTensor(uu=self.vdw_uu_rad_per_us, dd=self.vdw_dd_rad_per_us,
                            ud=self.vdw_ud_rad_per_us, du=self.vdw_du_rad_per_us)
        overrides = {(int(i), int(j)): float(scale) for i, j, scale in self.bond_overrides}
        return CouplingModel(j_xy=self.j_rad_per_us, exponent=self.exponent_value,
                             sign=Sign(self.sign), vdw=vdw, bond_overrides=overrides)


@dataclass
class RampConfig:
    """LILA ramp on one sublattice, trajectories and optional snapshot readout"""
    delta0_rad_per_us: float = TWO_PI * 23.0
    T_us: float = 1.5
    alpha: float = 20.0
    sublattice: str = "odd"
    checkpoints_us: List[float] = field(default_factory=list)
    hold_us: float = 0.5
    dt_us: float = 0.001
    n_trajectories: int = 1
    angles_rad: List[float] = field(default_factory=list)
    n_shots: int = 0
    step_self_check: bool = False

    def to_schedule(self, geom: ChainGeometry, sign: Sign, reverse: bool = False) -> RampSchedule:
        parity = 1 if self.sublattice == "odd" else 0
        addressed = tuple(i for i in geom.active_sites() if i % 2 == parity)
        return RampSchedule(delta0=self.delta0_rad_per_us, T=self.T_us, alpha=self.alpha,
                            sign=1 if sign is Sign.FM else -1, addressed_sites=addressed,
                            checkpoints=tuple(self.checkpoints_us), reverse=reverse,
                            hold_us=self.hold_us, dt_us=self.dt_us)


@dataclass
class NoiseConfig:
    """Initial holes, decay per channel and detection errors"""
    preset: Optional[str] = None
    p_init: float = 0.0
    gamma_per_us: float = 0.0
    eps_up: float = 0.0
    eps_dn: float = 0.0
    holes_enabled: bool = True
    decay_enabled: bool = True
    detection_enabled: bool = True

    def to_noise(self) -> NoiseModel:
        return NoiseModel(p_init=self.p_init, gamma=self.gamma_per_us, eps_up=self.eps_up,
                          eps_dn=self.eps_dn, holes_enabled=self.holes_enabled,
                          decay_enabled=self.decay_enabled,
                          detection_enabled=self.detection_enabled)


@dataclass
class QuenchConfig:
    initial: str = QuenchInitial.CSS_Y.value
    t_max_us: float = 1.0
    n_times: int = 101
    dt_us: float = 0.01
    include_vdw: bool = True
    d_min: int = 2
    d_max: Optional[int] = None
    n_sigma: float = 3.0
    relative_threshold: float = 0.2
    front_fraction: float = 0.5

    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_max_us, self.n_times)


@dataclass
class FriedelConfig:
    Mz: List[int] = field(default_factory=lambda: [1])
    mode: str = FriedelMode.DIRECT_GROUND_STATE.value
    pin_wavevector: bool = True


@dataclass
class DsfConfig:
    Mz: int = 0
    eta_rad_per_us: float = 0.0
    n_omega: int = 200
    omega_max_rad_per_us: Optional[float] = None
    lanczos_steps: int = 200
    luttinger_k: Optional[float] = None


@dataclass
class DisorderConfig:
    p: float = 0.06
    weak_scale: float = 0.125
    n_realizations: int = 100
    n_offsets: int = 5
    n_distances: int = 25
    significance: float = 0.05


@dataclass
class ThermalConfig:
    temperatures_over_j: List[float] = field(default_factory=lambda: [0.5, 1.0, 2.0])
    transverse_field_rad_per_us: float = 0.0
    hole_density: float = 0.0
    n_realizations: int = 1
    target_variance_mz: Optional[float] = None


@dataclass
class AnalysisConfig:
    """Fit settings shared by the scenarios"""
    cutoffs: List[float] = field(default_factory=lambda: [0, 1, 2, 3, 4, 5])
    tolerance: float = 0.05
    bootstrap: int = 0
    envelope: bool = True
    k_guess: float = 1.0


BLOCKS = {
    "geometry": GeometryConfig,
    "coupling": CouplingConfig,
    "ramp": RampConfig,
    "noise": NoiseConfig,
    "quench": QuenchConfig,
    "friedel": FriedelConfig,
    "dsf": DsfConfig,
    "disorder": DisorderConfig,
    "thermal": ThermalConfig,
    "analysis": AnalysisConfig,
}


def strip_documentation(data: Any) -> Any:
    """Drop keys starting with '_' at every level"""
    if isinstance(data, dict):
        return {k: strip_documentation(v) for k, v in data.items() if not str(k).startswith("_")}
    if isinstance(data, list):
        return [strip_documentation(v) for v in data]
    return data


@dataclass
class ExperimentConfig:
    """Main configuration of one tll-lab run"""

    scenario: Scenario
    geometry: GeometryConfig = field(default_factory=GeometryConfig)
    coupling: CouplingConfig = field(default_factory=CouplingConfig)
    ramp: RampConfig = field(default_factory=RampConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    quench: QuenchConfig = field(default_factory=QuenchConfig)
    friedel: FriedelConfig = field(default_factory=FriedelConfig)
    dsf: DsfConfig = field(default_factory=DsfConfig)
    disorder: DisorderConfig = field(default_factory=DisorderConfig)
    thermal: ThermalConfig = field(default_factory=ThermalConfig)
    analysis: AnalysisConfig = field(default_factory=AnalysisConfig)

    # Run settings; None falls back to the environment, then to defaults
    seed: int = 0
    workers: Optional[int] = None
    output_directory: Optional[str] = None
    log_level: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        """Convert configuration to dictionary"""
        data = {"scenario": self.scenario.value}
        for name in BLOCKS:
            data[name] = asdict(getattr(self, name))
        data.update({"seed": self.seed, "workers": self.workers,
                     "output_directory": self.output_directory, "log_level": self.log_level})
        return data

    @classmethod
    def from_dict(cls, config_dict: Dict[str, Any]) -> "ExperimentConfig":
        """Create configuration from an already validated dictionary"""
        config_dict = strip_documentation(config_dict)
        blocks = {}
        for name, block_cls in BLOCKS.items():
            values = dict(config_dict.get(name, {}))
            if name == "coupling":
                values = resolve_coupling(values)
            elif name == "noise":
                values = resolve_noise(values)
            elif name == "ramp":
                values = resolve_ramp(values, blocks["coupling"].sign)
            elif name == "friedel" and isinstance(values.get("Mz"), int):
                values["Mz"] = [values["Mz"]]
            blocks[name] = block_cls(**values)
        return cls(
            scenario=Scenario(config_dict["scenario"]),
            seed=int(config_dict.get("seed", 0)),
            workers=config_dict.get("workers"),
            output_directory=config_dict.get("output_directory"),
            log_level=config_dict.get("log_level"),
            **blocks,
        )

    @classmethod
    def load_from_file(cls, file_path: str) -> "ExperimentConfig":
        """Load configuration from JSON file (no validation; see parsers.config_parser)"""
        with open(file_path, "r", encoding="utf-8") as f:
            return cls.from_dict(json.load(f))

    def save_to_file(self, file_path: str):
        with open(file_path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)

    def config_hash(self) -> str:
        """sha256 of the canonical JSON form"""
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


@dataclass
class RuntimeSettings:
    """Resolved run settings: CLI flag > config > environment > default"""
    seed: int = 0
    workers: int = 1
    output_directory: str = "./output"
    log_level: str = "INFO"
    log_file: Optional[str] = None


def environment_defaults(env_file: Optional[str] = None) -> Dict[str, Any]:
    """Worker count, log level and output directory from TLL_LAB_* variables"""
    load_dotenv(env_file)
    defaults: Dict[str, Any] = {}
    if os.getenv(ENV_WORKERS):
        defaults["workers"] = int(os.getenv(ENV_WORKERS))
    if os.getenv(ENV_LOG_LEVEL):
        defaults["log_level"] = os.getenv(ENV_LOG_LEVEL).upper()
    if os.getenv(ENV_OUTPUT_DIR):
        defaults["output_directory"] = os.getenv(ENV_OUTPUT_DIR)
    return defaults


def resolve_runtime(config: Optional[ExperimentConfig], seed: Optional[int] = None,
                    workers: Optional[int] = None, output_directory: Optional[str] = None,
                    log_level: Optional[str] = None, log_file: Optional[str] = None,
                    env: Optional[Dict[str, Any]] = None) -> RuntimeSettings:
    env = environment_defaults() if env is None else env
    base = RuntimeSettings()

    def pick(flag, key, default):
        if flag is not None:
            return flag
        if config is not None and getattr(config, key) is not None:
            return getattr(config, key)
        return env.get(key, default)

    return RuntimeSettings(
        seed=seed if seed is not None else (config.seed if config is not None else base.seed),
        workers=int(pick(workers, "workers", base.workers)),
        output_directory=str(pick(output_directory, "output_directory", base.output_directory)),
        log_level=str(pick(log_level, "log_level", base.log_level)).upper(),
        log_file=log_file,
    )


# Interaction energies at unit spacing, rad/us
COUPLING_PRESETS = {
    "adiabatic": CouplingConfig(
        preset="adiabatic",
        j_rad_per_us=TWO_PI * 0.55,
        vdw_uu_rad_per_us=TWO_PI * 0.051,
        vdw_dd_rad_per_us=-TWO_PI * 0.007,
        vdw_ud_rad_per_us=TWO_PI * 0.058,
        vdw_du_rad_per_us=TWO_PI * 0.058,
    ),
    "quench": CouplingConfig(
        preset="quench",
        j_rad_per_us=TWO_PI * 0.62,
        vdw_uu_rad_per_us=TWO_PI * 0.030,
        vdw_dd_rad_per_us=-TWO_PI * 0.006,
        vdw_ud_rad_per_us=TWO_PI * 0.009,
        vdw_du_rad_per_us=TWO_PI * 0.009,
    ),
}


# Ramp presets: FM and AFM schedules as run in the lab
RAMP_PRESETS = {
    "FM": RampConfig(T_us=1.5, alpha=20.0),
    "AFM": RampConfig(T_us=2.5, alpha=100.0),
}


# Noise measured in the lab: 2% initial holes, 4 decay channels, readout flips
NOISE_PRESETS = {
    "ideal": NoiseConfig(preset="ideal"),
    "lab": NoiseConfig(preset="lab", p_init=0.02, gamma_per_us=0.0037, eps_up=0.025, eps_dn=0.03),
}


def get_coupling_preset(preset_name: str) -> CouplingConfig:
    """Get a predefined coupling preset"""
    if preset_name in COUPLING_PRESETS:
        return COUPLING_PRESETS[preset_name]
    available_presets = list(COUPLING_PRESETS.keys())
    raise ValueError(f"Unknown preset '{preset_name}'. Available presets: {available_presets}")


def resolve_coupling(values: Dict[str, Any]) -> Dict[str, Any]:
    """Preset values filled in under explicitly given keys (adiabatic by default)"""
    explicit_j = "j_rad_per_us" in values
    preset_name = values.get("preset") or ("adiabatic" if not explicit_j else None)
    if preset_name is None:
        return values
    merged = asdict(get_coupling_preset(preset_name))
    merged.update(values)
    merged["preset"] = preset_name
    return merged


def resolve_noise(values: Dict[str, Any]) -> Dict[str, Any]:
    preset_name = values.get("preset")
    if preset_name is None:
        return values
    if preset_name not in NOISE_PRESETS:
        raise ValueError(f"Unknown noise preset '{preset_name}'. "
                         f"Available presets: {list(NOISE_PRESETS)}")
    merged = asdict(NOISE_PRESETS[preset_name])
    merged.update(values)
    return merged


def resolve_ramp(values: Dict[str, Any], sign: str) -> Dict[str, Any]:
    """FM or AFM ramp duration and gap ratio unless given explicitly"""
    merged = asdict(RAMP_PRESETS.get(sign, RAMP_PRESETS["FM"]))
    merged.update(values)
    return merged


SCENARIO_BLOCKS = {
    Scenario.GROUND_STATE_CORRELATIONS: ["geometry", "coupling", "analysis"],
    Scenario.ADIABATIC_RAMP: ["geometry", "coupling", "ramp", "noise", "analysis"],
    Scenario.BACK_AND_FORTH_RAMP: ["geometry", "coupling", "ramp", "noise"],
    Scenario.FRIEDEL: ["geometry", "coupling", "friedel", "analysis"],
    Scenario.QUENCH: ["geometry", "coupling", "quench"],
    Scenario.DSF: ["geometry", "coupling", "dsf", "analysis"],
    Scenario.DISORDERED_CHAIN: ["geometry", "coupling", "disorder", "analysis"],
    Scenario.THERMAL_COMPARISON: ["geometry", "coupling", "thermal"],
}

BLOCK_COMMENTS = {
    "geometry": "Ring of n_sites; 'open_ring' removes removed_site, holes are empty sites",
    "coupling": "Flip-flop J > 0 with sign FM or AFM; exponent 3 is dipolar, \"inf\" is nearest neighbor",
    "ramp": "Staggered field delta0 ramped down over T_us with gap ratio alpha, then held",
    "noise": "Preset 'lab' switches on initial holes, decay and readout errors",
    "quench": "Product state evolved under the chain; light-cone front fit on Czz(d, t)",
    "friedel": "Odd chains, one Mz per entry; mode DirectGroundState or AdiabaticRamp",
    "dsf": "Lanczos continued fraction for Szz(q, omega) at fixed Mz",
    "disorder": "Free fermions on a ring with random holes; tail compared against the clean chain",
    "thermal": "Gibbs states at T/J for small chains, compared with T = 0",
    "analysis": "Cutoff r_c scan, tolerance on K and bootstrap resamples for the fits",
}


def default_config(scenario: Scenario) -> ExperimentConfig:
    """Defaults for one scenario; Quench and DSF use the AFM chain"""
    config = ExperimentConfig(scenario=scenario)
    if scenario is Scenario.QUENCH:
        config.geometry.n_sites = 14
        config.coupling = CouplingConfig(**resolve_coupling({"preset": "quench", "sign": Sign.AFM.value}))
    elif scenario is Scenario.DSF:
        config.geometry.n_sites = 16
        config.coupling.sign = Sign.AFM.value
    elif scenario is Scenario.FRIEDEL:
        config.geometry.n_sites = 23
        config.friedel.Mz = [1, 3, 5]
    elif scenario is Scenario.THERMAL_COMPARISON:
        config.geometry.n_sites = 10
    elif scenario is Scenario.DISORDERED_CHAIN:
        config.geometry.n_sites = 400
    elif scenario in (Scenario.ADIABATIC_RAMP, Scenario.BACK_AND_FORTH_RAMP):
        config.geometry.n_sites = 12
        config.noise = NoiseConfig(**resolve_noise({"preset": "lab"}))
    return config


def save_documented_config(output_file: str, scenario: Scenario):
    """Write a scenario config with '_comment' keys explaining each block"""
    config = default_config(scenario)
    data: Dict[str, Any] = {
        "_documentation": {
            "title": f"tll-lab {scenario.value} experiment",
            "description": "Keys starting with '_' are ignored. Units are part of the key names.",
        },
        "scenario": scenario.value,
        "seed": config.seed,
        "_seed_explanation": "Same seed gives byte-identical outputs for any worker count",
    }
    for name in SCENARIO_BLOCKS[scenario]:
        block = {"_comment": BLOCK_COMMENTS[name]}
        block.update(asdict(getattr(config, name)))
        data[name] = block
    with open(output_file, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2, ensure_ascii=False)
