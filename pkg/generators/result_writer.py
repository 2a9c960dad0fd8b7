"""
Result Writer

Writes a ScenarioOutput to the output directory: CSV tables with fixed
column orders, JSON payloads, SVG quick-looks and finally manifest.json with
the sha256 of every emitted file. The manifest writer is the only sink.
"""

import hashlib
import json
import logging
import time
from pathlib import Path
from typing import Dict, List, Optional

import pandas as pd

from generators.plots import render_plot
from models.result_models import OutputRecord, ResultManifest, ScenarioOutput, json_ready
from utils.exceptions import SchemaError

TOOL_VERSION = "1.0.0"
CSV_FLOAT_FORMAT = "%.12g"

PROFILE_SCHEMA = ["r", "d", "mean", "stderr", "n_pairs"]

CSV_SCHEMAS: Dict[str, List[str]] = {
    "gs_cx.csv": PROFILE_SCHEMA,
    "gs_cz.csv": PROFILE_SCHEMA,
    "ramp_observables.csv": ["t_us", "sublattice_a", "sublattice_a_err", "sublattice_b",
                             "sublattice_b_err", "active_fraction", "energy", "energy_err"],
    "ramp_profiles.csv": ["t_us", "basis", "r", "d", "mean", "stderr"],
    "angular_scan.csv": ["theta", "sublattice_a", "sublattice_b"],
    "quench_grid.csv": ["t_us", "d_sites", "czz", "stderr"],
    "friedel_profile.csv": ["Mz", "site", "j", "obc", "pbc", "signal"],
    "friedel_fft.csv": ["Mz", "n", "q", "amplitude"],
    "dsf.csv": ["q", "omega", "S"],
    "disorder_cx.csv": ["r", "mean_cx", "stderr", "n_realizations"],
    "thermal_profiles.csv": ["T_over_J", "basis", "r", "d", "mean", "stderr"],
    "cutoff_scan.csv": ["channel", "r_c", "K", "K_err"],
}


def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def check_csv_schema(filename: str, frame: pd.DataFrame):
    """Raise SchemaError unless the columns match the documented order exactly"""
    expected = CSV_SCHEMAS.get(filename)
    if expected is None:
        raise SchemaError(filename, ["no documented schema"])
    actual = list(frame.columns)
    if actual != expected:
        raise SchemaError(filename, [f"expected columns {expected}, got {actual}"])


def validate_output_directory(output_dir: str) -> List[str]:
    """Re-read every emitted file against its schema and the manifest checksums"""
    root = Path(output_dir)
    manifest_path = root / "manifest.json"
    if not manifest_path.exists():
        return ["manifest.json missing"]
    with open(manifest_path, "r", encoding="utf-8") as f:
        manifest = json.load(f)
    problems = []
    for entry in manifest.get("outputs", []):
        path = root / entry["path"]
        if not path.exists():
            problems.append(f"{entry['path']}: listed in the manifest but missing")
            continue
        if sha256_file(path) != entry["sha256"]:
            problems.append(f"{entry['path']}: checksum mismatch")
        if path.suffix == ".csv":
            frame = pd.read_csv(path)
            try:
                check_csv_schema(path.name, frame)
            except SchemaError as exc:
                problems.extend(exc.problems)
        elif path.suffix == ".json":
            try:
                with open(path, "r", encoding="utf-8") as f:
                    json.load(f)
            except json.JSONDecodeError as exc:
                problems.append(f"{entry['path']}: invalid JSON ({exc})")
    return problems


class ResultWriter:
    """Writes scenario outputs and the run manifest"""

    def __init__(self, output_dir: str = "output", logger: Optional[logging.Logger] = None):
        self.output_dir = Path(output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        self.logger = logger or logging.getLogger(__name__)

    def _record(self, path: Path, kind: str) -> OutputRecord:
        self.logger.info(f"[OUTPUT] Wrote {kind}: {path.name}")
        return OutputRecord(path=path.name, sha256=sha256_file(path), kind=kind)

    def write_table(self, filename: str, frame: pd.DataFrame) -> OutputRecord:
        check_csv_schema(filename, frame)
        path = self.output_dir / filename
        frame.to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT, lineterminator="\n")
        return self._record(path, "csv")

    def write_json(self, filename: str, payload: Dict) -> OutputRecord:
        path = self.output_dir / filename
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            json.dump(json_ready(payload), f, indent=2, sort_keys=True)
            f.write("\n")
        return self._record(path, "json")

    def write(self, output: ScenarioOutput, config_hash: str, seed: int, workers: int,
              started: Optional[float] = None) -> ResultManifest:
        """Emit every table, payload and plot, then manifest.json"""
        started = time.time() if started is None else started
        records = []
        for filename in sorted(output.tables):
            records.append(self.write_table(filename, output.tables[filename]))
        for filename in sorted(output.payloads):
            records.append(self.write_json(filename, output.payloads[filename]))
        for spec in output.plots:
            path = render_plot(spec, self.output_dir)
            records.append(self._record(path, "svg"))

        manifest = ResultManifest(
            scenario=output.scenario, config_hash=config_hash, tool_version=TOOL_VERSION,
            seed=seed, workers=workers, outputs=records, wall_clock_s=time.time() - started,
            warnings=list(output.warnings),
        )
        manifest_path = self.output_dir / "manifest.json"
        with open(manifest_path, "w", encoding="utf-8", newline="\n") as f:
            json.dump(manifest.to_dict(), f, indent=2, sort_keys=True)
            f.write("\n")
        self.logger.info(f"[OUTPUT] Manifest with {len(records)} files: {manifest_path}")
        return manifest
