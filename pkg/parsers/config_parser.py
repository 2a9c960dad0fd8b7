"""
Config Parser - validates experiment configs and reports every problem at once.

Validation runs in two passes over the same document: a JSON Schema pass
(unknown keys, types, enums) and a semantic pass (ring sizes, parities,
ranges). Unknown keys are checked for a unit mismatch first (T_ns vs T_us)
and otherwise get a closest-match suggestion.
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

from fuzzywuzzy import process
from jsonschema import Draft7Validator

from analyzers.detection import MAX_EPS
from exact.thermal import MAX_THERMAL_SITES
from models.lattice_models import Boundary, Sign
from models.protocol_models import FriedelMode, QuenchInitial
from protocol.quench import MAX_QUENCH_SITES
from utils.config import (
    BLOCKS, COUPLING_PRESETS, NOISE_PRESETS, ExperimentConfig, Scenario, strip_documentation,
)
from utils.exceptions import ConfigurationError

# Longest first so "_rad_per_us" wins over "_us"
UNIT_SUFFIXES = sorted([
    "_rad_per_us", "_rad_per_ns", "_rad_per_ms", "_rad_per_s", "_per_us", "_per_ns", "_per_ms",
    "_per_s", "_mhz", "_khz", "_hz", "_us", "_ns", "_ms", "_s",
], key=len, reverse=True)

SUGGESTION_SCORE = 60

NUMBER = {"type": "number"}
INTEGER = {"type": "integer"}
BOOLEAN = {"type": "boolean"}
NUMBER_LIST = {"type": "array", "items": NUMBER}
NULLABLE_NUMBER = {"type": ["number", "null"]}


def _block(properties: Dict[str, Any]) -> Dict[str, Any]:
    return {"type": "object", "properties": properties, "additionalProperties": False}


CONFIG_SCHEMA = {
    "$schema": "http://json-schema.org/draft-07/schema#",
    "type": "object",
    "required": ["scenario"],
    "additionalProperties": False,
    "properties": {
        "scenario": {"enum": [s.value for s in Scenario]},
        "seed": {"type": "integer", "minimum": 0},
        "workers": {"type": ["integer", "null"], "minimum": 1},
        "output_directory": {"type": ["string", "null"]},
        "log_level": {"enum": ["DEBUG", "INFO", "WARNING", "ERROR", None]},
        "geometry": _block({
            "n_sites": INTEGER,
            "boundary": {"enum": [b.value for b in Boundary]},
            "removed_site": {"type": ["integer", "null"]},
            "holes": {"type": "array", "items": INTEGER},
        }),
        "coupling": _block({
            "preset": {"enum": list(COUPLING_PRESETS) + [None]},
            "j_rad_per_us": NUMBER,
            "exponent": {"anyOf": [NUMBER, {"enum": ["inf", "infinity"]}]},
            "sign": {"enum": [s.value for s in Sign]},
            "include_vdw": BOOLEAN,
            "vdw_uu_rad_per_us": NUMBER,
            "vdw_dd_rad_per_us": NUMBER,
            "vdw_ud_rad_per_us": NUMBER,
            "vdw_du_rad_per_us": NUMBER,
            "bond_overrides": {"type": "array", "items": {
                "type": "array", "minItems": 3, "maxItems": 3,
                "items": [INTEGER, INTEGER, NUMBER],
            }},
        }),
        "ramp": _block({
            "delta0_rad_per_us": NUMBER,
            "T_us": NUMBER,
            "alpha": NUMBER,
            "sublattice": {"enum": ["odd", "even"]},
            "checkpoints_us": NUMBER_LIST,
            "hold_us": NUMBER,
            "dt_us": NUMBER,
            "n_trajectories": {"type": "integer", "minimum": 1},
            "angles_rad": NUMBER_LIST,
            "n_shots": {"type": "integer", "minimum": 0},
            "step_self_check": BOOLEAN,
        }),
        "noise": _block({
            "preset": {"enum": list(NOISE_PRESETS) + [None]},
            "p_init": NUMBER,
            "gamma_per_us": NUMBER,
            "eps_up": NUMBER,
            "eps_dn": NUMBER,
            "holes_enabled": BOOLEAN,
            "decay_enabled": BOOLEAN,
            "detection_enabled": BOOLEAN,
        }),
        "quench": _block({
            "initial": {"enum": [q.value for q in QuenchInitial]},
            "t_max_us": NUMBER,
            "n_times": {"type": "integer", "minimum": 2},
            "dt_us": NUMBER,
            "include_vdw": BOOLEAN,
            "d_min": {"type": "integer", "minimum": 1},
            "d_max": {"type": ["integer", "null"], "minimum": 1},
            "n_sigma": NUMBER,
            "relative_threshold": NUMBER,
            "front_fraction": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        }),
        "friedel": _block({
            "Mz": {"anyOf": [INTEGER, {"type": "array", "items": INTEGER, "minItems": 1}]},
            "mode": {"enum": [m.value for m in FriedelMode]},
            "pin_wavevector": BOOLEAN,
        }),
        "dsf": _block({
            "Mz": INTEGER,
            "eta_rad_per_us": NUMBER,
            "n_omega": {"type": "integer", "minimum": 1},
            "omega_max_rad_per_us": NULLABLE_NUMBER,
            "lanczos_steps": {"type": "integer", "minimum": 2},
            "luttinger_k": NULLABLE_NUMBER,
        }),
        "disorder": _block({
            "p": NUMBER,
            "weak_scale": NUMBER,
            "n_realizations": {"type": "integer", "minimum": 1},
            "n_offsets": {"type": "integer", "minimum": 1},
            "n_distances": {"type": "integer", "minimum": 3},
            "significance": NUMBER,
        }),
        "thermal": _block({
            "temperatures_over_j": NUMBER_LIST,
            "transverse_field_rad_per_us": NUMBER,
            "hole_density": NUMBER,
            "n_realizations": {"type": "integer", "minimum": 1},
            "target_variance_mz": NULLABLE_NUMBER,
        }),
        "analysis": _block({
            "cutoffs": NUMBER_LIST,
            "tolerance": NUMBER,
            "bootstrap": {"type": "integer", "minimum": 0},
            "envelope": BOOLEAN,
            "k_guess": NUMBER,
        }),
    },
}


def _split_unit(key: str):
    for suffix in UNIT_SUFFIXES:
        if key.lower().endswith(suffix) and len(key) > len(suffix):
            return key[: -len(suffix)], suffix
    return key, None


def describe_unknown_key(key: str, known: List[str], where: str) -> str:
    """Unit mismatch if the stem is known with another unit, else a closest-match hint"""
    stem, suffix = _split_unit(key)
    if suffix is not None:
        for candidate in known:
            candidate_stem, candidate_suffix = _split_unit(candidate)
            if candidate_suffix is not None and candidate_stem == stem and candidate_suffix != suffix:
                return (f"{where}: unit mismatch for '{key}': expected '{candidate}' "
                        f"(units {candidate_suffix[1:]})")
    message = f"{where}: unknown key '{key}'"
    match = process.extractOne(key, known) if known else None
    if match and match[1] >= SUGGESTION_SCORE:
        message += f" (did you mean '{match[0]}'?)"
    return message


class ConfigParser:
    """Parses and validates tll-lab experiment configs"""

    def __init__(self, logger: Optional[logging.Logger] = None):
        self.logger = logger or logging.getLogger(__name__)
        self.validator = Draft7Validator(CONFIG_SCHEMA)

    def parse_file(self, file_path: str) -> ExperimentConfig:
        path = Path(file_path)
        if not path.exists():
            raise ConfigurationError([f"config file not found: {file_path}"], source=str(path))
        try:
            with open(path, "r", encoding="utf-8") as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigurationError([f"invalid JSON: {e}"], source=str(path))
        self.logger.info(f"[CONFIG] Parsing {path.name}")
        return self.parse_dict(data, source=str(path))

    def parse_dict(self, data: Dict[str, Any], source: str = "config") -> ExperimentConfig:
        errors = self.validate(data)
        if errors:
            for error in errors:
                self.logger.error(f"[ERROR] {error}")
            raise ConfigurationError(errors, source=source)
        config = ExperimentConfig.from_dict(data)
        self.logger.info(f"[CONFIG] Scenario {config.scenario.value}, N={config.geometry.n_sites}, "
                         f"sign={config.coupling.sign}")
        return config

    def validate(self, data: Any) -> List[str]:
        """Every schema and semantic problem, in a stable order"""
        if not isinstance(data, dict):
            return ["config root must be an object"]
        data = strip_documentation(data)
        errors = self._schema_errors(data)
        errors.extend(self._semantic_errors(data))
        return errors

    def _schema_errors(self, data: Dict[str, Any]) -> List[str]:
        errors = []
        for error in sorted(self.validator.iter_errors(data), key=lambda e: list(map(str, e.path))):
            where = "/".join(str(p) for p in error.path) or "config"
            if error.validator == "additionalProperties":
                allowed = list(error.schema.get("properties", {}))
                for key in sorted(set(error.instance) - set(allowed)):
                    errors.append(describe_unknown_key(key, allowed, where))
            elif error.validator == "required":
                errors.append(f"{where}: missing required key ({error.message})")
            else:
                errors.append(f"{where}: {error.message}")
        return errors

    def _semantic_errors(self, data: Dict[str, Any]) -> List[str]:
        errors: List[str] = []

        def block(name):
            value = data.get(name, {})
            return value if isinstance(value, dict) else {}

        def number(value):
            return isinstance(value, (int, float)) and not isinstance(value, bool)

        geometry = block("geometry")
        n_sites = geometry.get("n_sites", BLOCKS["geometry"]().n_sites)
        scenario = data.get("scenario")
        if not isinstance(n_sites, int) or isinstance(n_sites, bool):
            return errors
        if n_sites < 2:
            errors.append(f"geometry/n_sites: need N >= 2, got {n_sites}")
            return errors

        boundary = geometry.get("boundary", Boundary.PERIODIC_RING.value)
        removed = geometry.get("removed_site")
        if boundary == Boundary.OPEN_RING.value:
            if not isinstance(removed, int) or not 0 <= removed < n_sites:
                errors.append(f"geometry/removed_site: open ring needs a removed site in [0, {n_sites})")
        elif removed is not None:
            errors.append("geometry/removed_site: periodic ring cannot have a removed site")
        holes = [h for h in geometry.get("holes", []) if isinstance(h, int)]
        for h in holes:
            if not 0 <= h < n_sites:
                errors.append(f"geometry/holes: hole {h} outside [0, {n_sites})")
        if removed is not None and removed in holes:
            errors.append("geometry/holes: removed site cannot also be a hole")

        coupling = block("coupling")
        j = coupling.get("j_rad_per_us")
        if number(j) and j <= 0:
            errors.append(f"coupling/j_rad_per_us: must be > 0, got {j}")
        exponent = coupling.get("exponent")
        if number(exponent) and exponent <= 0:
            errors.append(f"coupling/exponent: must be > 0 or 'inf', got {exponent}")
        errors.extend(self._bond_override_errors(coupling.get("bond_overrides", []), n_sites))

        ramp = block("ramp")
        alpha = ramp.get("alpha")
        if number(alpha) and alpha < 1:
            errors.append(f"ramp/alpha: gap ratio must be >= 1, got {alpha}")
        for key in ("T_us", "dt_us"):
            value = ramp.get(key)
            if number(value) and value <= 0:
                errors.append(f"ramp/{key}: must be > 0, got {value}")
        if number(ramp.get("hold_us")) and ramp["hold_us"] < 0:
            errors.append(f"ramp/hold_us: must be >= 0, got {ramp['hold_us']}")

        noise = block("noise")
        for key in ("p_init",):
            value = noise.get(key)
            if number(value) and not 0.0 <= value <= 1.0:
                errors.append(f"noise/{key}: probability must be in [0, 1], got {value}")
        for key in ("eps_up", "eps_dn"):
            value = noise.get(key)
            if number(value) and not 0.0 <= value < MAX_EPS:
                errors.append(f"noise/{key}: detection error must be in [0, {MAX_EPS}), got {value}")
        if number(noise.get("gamma_per_us")) and noise["gamma_per_us"] < 0:
            errors.append(f"noise/gamma_per_us: must be >= 0, got {noise['gamma_per_us']}")

        quench = block("quench")
        d_min, d_max = quench.get("d_min", 2), quench.get("d_max")
        if isinstance(d_min, int) and isinstance(d_max, int) and d_max < d_min:
            errors.append(f"quench/d_max: must be >= d_min={d_min}, got {d_max}")

        if scenario == Scenario.FRIEDEL.value:
            errors.extend(self._friedel_errors(block("friedel"), n_sites))
        elif scenario == Scenario.QUENCH.value and n_sites - len(holes) > MAX_QUENCH_SITES:
            errors.append(f"geometry/n_sites: quench supports at most {MAX_QUENCH_SITES} spins, got {n_sites}")
        elif scenario == Scenario.THERMAL_COMPARISON.value:
            if n_sites - len(holes) > MAX_THERMAL_SITES:
                errors.append(f"geometry/n_sites: thermal comparison supports at most "
                              f"{MAX_THERMAL_SITES} spins, got {n_sites}")
            temps = block("thermal").get("temperatures_over_j", [])
            if isinstance(temps, list) and any(number(t) and t <= 0 for t in temps):
                errors.append("thermal/temperatures_over_j: temperatures must be > 0")
            target = block("thermal").get("target_variance_mz")
            if number(target) and target < 0:
                errors.append(f"thermal/target_variance_mz: a variance must be >= 0, got {target}")
        elif scenario == Scenario.DSF.value:
            mz = block("dsf").get("Mz", 0)
            if isinstance(mz, int) and (n_sites - len(holes) + mz) % 2:
                errors.append(f"dsf/Mz: M_z={mz} has the wrong parity for {n_sites - len(holes)} spins")
        elif scenario == Scenario.DISORDERED_CHAIN.value:
            p = block("disorder").get("p")
            if number(p) and not 0.0 <= p < 0.5:
                errors.append(f"disorder/p: weak-bond probability must be in [0, 0.5), got {p}")
        return errors

    @staticmethod
    def _bond_override_errors(overrides: Any, n_sites: int) -> List[str]:
        errors = []
        if not isinstance(overrides, list):
            return errors
        seen = {}
        for entry in overrides:
            if not isinstance(entry, list) or len(entry) != 3:
                continue
            i, j, scale = entry
            if not (isinstance(i, int) and isinstance(j, int)):
                continue
            if not (0 <= i < n_sites and 0 <= j < n_sites):
                errors.append(f"coupling/bond_overrides: bond ({i}, {j}) outside [0, {n_sites})")
            elif i == j:
                errors.append(f"coupling/bond_overrides: bond ({i}, {j}) joins a site to itself")
            elif isinstance(scale, (int, float)) and scale < 0:
                errors.append(f"coupling/bond_overrides: scale for ({i}, {j}) must be >= 0, got {scale}")
            else:
                key = (min(i, j), max(i, j))
                if key in seen and seen[key] != scale:
                    errors.append(f"coupling/bond_overrides: conflicting scales for bond {key}")
                seen[key] = scale
        return errors

    @staticmethod
    def _friedel_errors(friedel: Dict[str, Any], n_spins: int) -> List[str]:
        errors = []
        if n_spins % 2 == 0:
            errors.append(f"geometry/n_sites: Friedel chains need an odd number of spins, got {n_spins}")
        values = friedel.get("Mz", [1])
        values = [values] if isinstance(values, int) else values
        for mz in values:
            if not isinstance(mz, int):
                continue
            if abs(mz) > n_spins or (n_spins + mz) % 2:
                errors.append(f"friedel/Mz: M_z={mz} is not reachable with {n_spins} spins "
                              f"(parity mismatch)")
        return errors


def parse_config(path: str, logger: Optional[logging.Logger] = None) -> ExperimentConfig:
    """Validated ExperimentConfig or ConfigurationError listing every problem"""
    return ConfigParser(logger).parse_file(path)
