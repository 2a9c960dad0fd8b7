"""
Test Config Validation, Runtime Settings, Result Files and the CLI
"""

import json
import os
import sys
import tempfile

import numpy as np
import pandas as pd
import pytest

sys.path.append(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from generators.result_writer import (
    CSV_SCHEMAS, ResultWriter, check_csv_schema, validate_output_directory,
)
from lattice.couplings import build_couplings
from main import EXIT_ERROR, EXIT_OK, main, run_scenario
from models.result_models import PlotSpec, ScenarioOutput
from parsers.config_parser import ConfigParser, describe_unknown_key, parse_config
from protocol.scenarios import ScenarioRunner
from utils.config import (
    TWO_PI, ExperimentConfig, RuntimeSettings, Scenario, resolve_runtime, save_documented_config,
)
from utils.exceptions import ConfigurationError, SchemaError

REPRODUCTIONS = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))),
                             "reproductions")


def _errors(data):
    return ConfigParser().validate(data)


def test_minimal_config_uses_adiabatic_preset():
    print("\n=== Testing config defaults ===")
    config = ConfigParser().parse_dict({"scenario": "GroundStateCorrelations"})
    assert config.scenario is Scenario.GROUND_STATE_CORRELATIONS
    assert config.coupling.preset == "adiabatic"
    assert config.coupling.j_rad_per_us == pytest.approx(TWO_PI * 0.55)
    assert config.coupling.vdw_dd_rad_per_us == pytest.approx(-TWO_PI * 0.007)
    assert config.geometry.n_sites == 24
    print("[OK] adiabatic preset filled in")


def test_presets_resolve_under_explicit_keys():
    config = ConfigParser().parse_dict({
        "scenario": "AdiabaticRamp",
        "coupling": {"preset": "quench", "sign": "AFM", "j_rad_per_us": 3.0},
        "noise": {"preset": "lab", "eps_dn": 0.04},
    })
    assert config.coupling.j_rad_per_us == 3.0
    assert config.coupling.vdw_uu_rad_per_us == pytest.approx(TWO_PI * 0.030)
    assert config.ramp.T_us == 2.5 and config.ramp.alpha == 100.0
    assert config.noise.p_init == 0.02
    assert config.noise.eps_dn == 0.04
    model = config.coupling.to_model()
    assert model.sign.scale == -1.0


def test_documentation_keys_are_ignored():
    assert _errors({"_documentation": "notes", "scenario": "DSF",
                    "geometry": {"_comment": "ring", "n_sites": 8}}) == []


def test_rejects_single_site():
    errors = _errors({"scenario": "GroundStateCorrelations", "geometry": {"n_sites": 1}})
    assert any("N >= 2" in e for e in errors)


def test_rejects_even_friedel_chain_and_parity():
    errors = _errors({"scenario": "Friedel", "geometry": {"n_sites": 24},
                      "friedel": {"Mz": [1]}})
    assert any("odd number of spins" in e for e in errors)
    assert any("parity mismatch" in e for e in errors)
    assert _errors({"scenario": "Friedel", "geometry": {"n_sites": 23}, "friedel": {"Mz": 3}}) == []


def test_unit_mismatch_is_reported():
    print("\n=== Testing unknown keys ===")
    errors = _errors({"scenario": "AdiabaticRamp", "ramp": {"T_ns": 1500}})
    assert len(errors) == 1
    assert "unit mismatch" in errors[0]
    assert "'T_us'" in errors[0]
    print(f"[OK] {errors[0]}")


def test_unknown_key_gets_suggestion():
    message = describe_unknown_key("n_site", ["n_sites", "boundary", "holes"], "geometry")
    assert "did you mean 'n_sites'" in message


def test_all_problems_reported_together():
    errors = _errors({
        "scenario": "Quench",
        "geometry": {"n_sites": 20},
        "coupling": {"j_rad_per_us": -1.0},
        "noise": {"eps_up": 0.3},
    })
    assert any("quench supports at most 16" in e for e in errors)
    assert any("j_rad_per_us" in e for e in errors)
    assert any("eps_up" in e for e in errors)


def test_schema_type_errors():
    errors = _errors({"scenario": "Nope", "seed": -1})
    assert len(errors) == 2
    with pytest.raises(ConfigurationError) as info:
        ConfigParser().parse_dict({"scenario": "DSF", "geometry": {"n_sites": 9}})
    assert any("wrong parity" in e for e in info.value.errors)


def test_reproduction_configs_validate():
    parser = ConfigParser()
    names = sorted(os.listdir(REPRODUCTIONS))
    assert names
    for name in names:
        config = parser.parse_file(os.path.join(REPRODUCTIONS, name))
        assert isinstance(config, ExperimentConfig)


def test_config_hash_is_stable():
    data = {"scenario": "Quench", "geometry": {"n_sites": 12}}
    one = ConfigParser().parse_dict(data)
    two = ConfigParser().parse_dict(json.loads(json.dumps(data)))
    assert one.config_hash() == two.config_hash()
    three = ConfigParser().parse_dict({"scenario": "Quench", "geometry": {"n_sites": 10}})
    assert one.config_hash() != three.config_hash()


def test_bond_overrides_reach_the_model():
    print("\n=== Testing bond overrides ===")
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "weak_bond.json")
        with open(path, "w", encoding="utf-8") as f:
            json.dump({"scenario": "GroundStateCorrelations", "geometry": {"n_sites": 10},
                       "coupling": {"j_rad_per_us": 1.0, "exponent": "inf",
                                    "bond_overrides": [[9, 0, 0.0], [3, 4, 0.5]]}}, f)
        config = parse_config(path)
    assert config.coupling.bond_overrides == [[9, 0, 0.0], [3, 4, 0.5]]
    model = config.coupling.to_model()
    assert model.override(0, 9) == 0.0
    assert model.override(4, 3) == 0.5
    assert model.override(1, 2) == 1.0
    matrices = build_couplings(config.geometry.to_geometry(), model)
    assert matrices.xy[0, 9] == 0.0
    assert matrices.xy[3, 4] == pytest.approx(0.5 * matrices.xy[1, 2])
    print("[OK] overrides parsed into the coupling matrices")


def test_bond_override_errors():
    errors = _errors({"scenario": "DSF", "geometry": {"n_sites": 8},
                      "coupling": {"bond_overrides": [[0, 8, 0.5], [2, 2, 0.5], [1, 2, -1.0],
                                                      [3, 4, 0.5], [4, 3, 0.7]]}})
    assert any("outside [0, 8)" in e for e in errors)
    assert any("joins a site to itself" in e for e in errors)
    assert any("must be >= 0" in e for e in errors)
    assert any("conflicting scales" in e for e in errors)
    assert len(_errors({"scenario": "DSF", "geometry": {"n_sites": 8},
                        "coupling": {"bond_overrides": [[0, 1]]}})) == 1


def test_thermal_scenario_applies_variance_target():
    print("\n=== Testing the Var(M_z) offset in the thermal scenario ===")
    config = ConfigParser().parse_dict({
        "scenario": "ThermalComparison",
        "geometry": {"n_sites": 6},
        "coupling": {"j_rad_per_us": 1.0, "include_vdw": False},
        "thermal": {"temperatures_over_j": [1.0], "target_variance_mz": 0.5},
    })
    output = ScenarioRunner(config).run()
    entry = output.payloads["thermal_summary.json"]["temperatures"]["1"]
    assert entry["variance_mz_corrected"] == pytest.approx(0.5, abs=1e-9)
    assert entry["variance_mz"] > 0.5
    assert entry["czz_offset"] < 0
    assert _errors({"scenario": "ThermalComparison", "geometry": {"n_sites": 6},
                    "thermal": {"target_variance_mz": -1.0}}) != []
    print(f"[OK] offset {entry['czz_offset']:.4f}")


def test_afm_structure_factor_takes_k_from_cz():
    config = ConfigParser().parse_dict({
        "scenario": "DSF",
        "geometry": {"n_sites": 10},
        "coupling": {"j_rad_per_us": 1.0, "sign": "AFM", "include_vdw": False},
        "dsf": {"n_omega": 50, "lanczos_steps": 60},
    })
    output = ScenarioRunner(config).run()
    chi = output.payloads["susceptibility.json"]
    assert chi["luttinger_k_source"] == "fit_cz"
    assert 0.5 < chi["luttinger_k"] < 1.2


def test_saved_config_loads_back():
    config = ConfigParser().parse_dict({"scenario": "Friedel", "geometry": {"n_sites": 11},
                                        "friedel": {"Mz": [1, 3]}, "seed": 5})
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "friedel.json")
        config.save_to_file(path)
        loaded = ExperimentConfig.load_from_file(path)
    assert loaded.scenario is Scenario.FRIEDEL
    assert loaded.config_hash() == config.config_hash()


def test_runtime_precedence():
    config = ConfigParser().parse_dict({"scenario": "DSF", "geometry": {"n_sites": 8},
                                        "workers": 3, "seed": 4})
    env = {"workers": 6, "log_level": "DEBUG", "output_directory": "/tmp/env-out"}
    settings = resolve_runtime(config, env=env)
    assert settings.workers == 3
    assert settings.seed == 4
    assert settings.log_level == "DEBUG"
    assert settings.output_directory == "/tmp/env-out"
    flagged = resolve_runtime(config, seed=9, workers=1, output_directory="out", env=env)
    assert (flagged.seed, flagged.workers, flagged.output_directory) == (9, 1, "out")
    assert resolve_runtime(None, env={}).workers == 1


def test_documented_configs_round_trip():
    print("\n=== Testing documented configs ===")
    with tempfile.TemporaryDirectory() as tmp:
        for scenario in Scenario:
            path = os.path.join(tmp, f"{scenario.value}.json")
            save_documented_config(path, scenario)
            config = ConfigParser().parse_file(path)
            assert config.scenario is scenario
    print(f"[OK] {len(Scenario)} scenarios")


def test_csv_schema_check():
    good = pd.DataFrame(columns=CSV_SCHEMAS["gs_cx.csv"])
    check_csv_schema("gs_cx.csv", good)
    with pytest.raises(SchemaError):
        check_csv_schema("gs_cx.csv", good[["d", "r", "mean", "stderr", "n_pairs"]])
    with pytest.raises(SchemaError):
        check_csv_schema("unknown.csv", good)


def test_result_writer_and_manifest():
    print("\n=== Testing result writer ===")
    output = ScenarioOutput(scenario="GroundStateCorrelations")
    output.tables["gs_cx.csv"] = pd.DataFrame({
        "r": [1.0, 2.0], "d": [1, 2], "mean": [0.5, 0.3], "stderr": [0.0, 0.0], "n_pairs": [8, 8],
    })
    output.payloads["gs_summary.json"] = {"energy": np.float64(-1.5), "K_cx": None}
    output.plots.append(PlotSpec(name="gs_correlations", kind="line", x=np.array([1.0, 2.0]),
                                 series={"C^x": np.array([0.5, 0.3])}, log_log=True))
    output.warnings.append("example warning")
    with tempfile.TemporaryDirectory() as tmp:
        manifest = ResultWriter(tmp).write(output, "abc", seed=1, workers=1)
        assert sorted(r.path for r in manifest.outputs) == [
            "gs_correlations.svg", "gs_cx.csv", "gs_summary.json"]
        assert validate_output_directory(tmp) == []
        with open(os.path.join(tmp, "manifest.json"), encoding="utf-8") as f:
            stored = json.load(f)
        assert stored["warnings"] == ["example warning"]
        with open(os.path.join(tmp, "gs_cx.csv"), "a", encoding="utf-8") as f:
            f.write("3,3,0.1,0,8\n")
        assert any("checksum" in p for p in validate_output_directory(tmp))
    print("[OK] manifest checksums verified")


def test_ground_state_run_is_reproducible():
    print("\n=== Testing end-to-end run ===")
    config = ConfigParser().parse_dict({
        "scenario": "GroundStateCorrelations",
        "seed": 2,
        "geometry": {"n_sites": 12},
        "coupling": {"j_rad_per_us": 1.0, "include_vdw": False},
        "analysis": {"cutoffs": [0, 1]},
    })
    checksums = []
    with tempfile.TemporaryDirectory() as tmp:
        for workers in (1, 2):
            out = os.path.join(tmp, f"run{workers}")
            settings = RuntimeSettings(seed=2, workers=workers, output_directory=out)
            manifest = run_scenario(config, settings)
            assert validate_output_directory(out) == []
            checksums.append({r.path: r.sha256 for r in manifest.outputs})
            frame = pd.read_csv(os.path.join(out, "gs_cx.csv"))
            assert list(frame["d"]) == [1, 2, 3, 4, 5, 6]
            assert np.all(frame["mean"] > 0)
    assert checksums[0] == checksums[1]
    print(f"[OK] {len(checksums[0])} files identical for 1 and 2 workers")


def test_cli_validate_exit_codes():
    with tempfile.TemporaryDirectory() as tmp:
        good = os.path.join(tmp, "good.json")
        bad = os.path.join(tmp, "bad.json")
        with open(good, "w", encoding="utf-8") as f:
            json.dump({"scenario": "DSF", "geometry": {"n_sites": 8}}, f)
        with open(bad, "w", encoding="utf-8") as f:
            json.dump({"scenario": "DSF", "geometry": {"n_sites": 1}}, f)
        assert main(["validate", good]) == EXIT_OK
        assert main(["validate", bad]) == EXIT_ERROR
        assert main(["validate", os.path.join(tmp, "missing.json")]) == EXIT_ERROR
        assert main(["run", bad]) == EXIT_ERROR


def test_cli_init_writes_valid_config():
    with tempfile.TemporaryDirectory() as tmp:
        path = os.path.join(tmp, "quench.json")
        assert main(["init", "Quench", "--config-output", path]) == EXIT_OK
        assert main(["validate", path]) == EXIT_OK


if __name__ == "__main__":
    print("Testing configs and CLI")
    print("=" * 60)
    test_minimal_config_uses_adiabatic_preset()
    test_unit_mismatch_is_reported()
    test_documented_configs_round_trip()
    test_result_writer_and_manifest()
    test_ground_state_run_is_reproducible()
    print("\n" + "=" * 60)
    print("All config and CLI checks passed")
