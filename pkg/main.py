"""
Main entry point for tll-lab.
Command-line interface for running and validating dipolar XY chain experiments.
"""

import argparse
import logging
import sys
import time
from typing import Optional

from generators.result_writer import ResultWriter
from models.result_models import ResultManifest
from parsers.config_parser import ConfigParser
from protocol.scenarios import ScenarioRunner
from utils.config import ExperimentConfig, RuntimeSettings, Scenario, resolve_runtime, save_documented_config
from utils.exceptions import ConfigurationError, TllLabError
from utils.logger import setup_logging

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_PHYSICS_WARNINGS = 2


def setup_cli_parser() -> argparse.ArgumentParser:
    """Setup command-line argument parser"""

    parser = argparse.ArgumentParser(
        prog="tll-lab",
        description="Dipolar XY chain laboratory: ground states, ramps, quenches and Luttinger fits",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Validate a config and list every problem found
  python main.py validate reproductions/gs_fm_n24.json

  # Run a scenario
  python main.py run reproductions/gs_fm_n24.json --out output/gs_fm

  # Same run on 8 workers with another seed (identical checksums for equal seeds)
  python main.py run reproductions/quench_nn_n14.json --workers 8 --seed 7

  # Write a documented starting config for a scenario
  python main.py init Quench --config-output my_quench.json

Exit codes: 0 success, 2 physics warnings recorded, 1 errors.
        """
    )

    subparsers = parser.add_subparsers(dest="command", required=True)

    run_parser = subparsers.add_parser("run", help="Run the scenario described by a config file")
    run_parser.add_argument("config", help="Experiment config (JSON)")
    run_parser.add_argument("--seed", type=int, help="Random seed (overrides the config)")
    run_parser.add_argument("--workers", type=int, help="Worker processes (overrides config and environment)")
    run_parser.add_argument("--out", help="Output directory (overrides config and environment)")

    validate_parser = subparsers.add_parser("validate", help="Validate a config file")
    validate_parser.add_argument("config", help="Experiment config (JSON)")

    init_parser = subparsers.add_parser("init", help="Write a documented config for a scenario")
    init_parser.add_argument("scenario", choices=[s.value for s in Scenario])
    init_parser.add_argument("--config-output", metavar="FILE", default="experiment.json",
                             help="Output file (default: experiment.json)")

    for sub in (run_parser, validate_parser, init_parser):
        sub.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"],
                         help="Logging level (default: INFO or TLL_LAB_LOG_LEVEL)")
        sub.add_argument("--log-file", type=str, help="Log file path")

    return parser


def run_scenario(config: ExperimentConfig, settings: RuntimeSettings,
                 logger: Optional[logging.Logger] = None) -> ResultManifest:
    """Run one scenario and write its outputs plus manifest.json"""
    logger = logger or logging.getLogger(__name__)
    started = time.time()
    output = ScenarioRunner(config, seed=settings.seed, workers=settings.workers, logger=logger).run()
    writer = ResultWriter(settings.output_directory, logger)
    return writer.write(output, config.config_hash(), settings.seed, settings.workers, started)


def run_command(config_file: str, settings: RuntimeSettings, config: ExperimentConfig,
                logger) -> dict:
    """Execute run command"""

    logger.info(f"[START] Running {config.scenario.value} from {config_file}")
    manifest = run_scenario(config, settings, logger)

    for warning in manifest.warnings:
        logger.warning(f"[WARNING] {warning}")
    logger.info(f"[SUCCESS] {len(manifest.outputs)} files written to {settings.output_directory}")
    return {
        "success": True,
        "warnings": list(manifest.warnings),
        "manifest": manifest.to_dict(),
    }


def validate_command(config_file: str, logger) -> dict:
    """Execute validate command"""

    logger.info(f"=== Validating {config_file} ===")
    try:
        config = ConfigParser(logger).parse_file(config_file)
    except ConfigurationError as e:
        logger.error(f"[ERROR] {len(e.errors)} problem(s) in {config_file}")
        return {"success": False, "errors": e.errors}

    logger.info(f"[SUCCESS] Config is valid: scenario {config.scenario.value}, "
                f"hash {config.config_hash()[:12]}")
    return {"success": True, "errors": [], "config_hash": config.config_hash()}


def init_command(scenario: str, output_file: str, logger) -> dict:
    """Execute init command"""

    save_documented_config(output_file, Scenario(scenario))
    logger.info(f"[SUCCESS] Documented {scenario} config saved to: {output_file}")
    return {"success": True, "output_file": output_file}


def main(argv: Optional[list] = None) -> int:
    """Main entry point"""

    parser = setup_cli_parser()
    args = parser.parse_args(argv)

    settings = resolve_runtime(None, log_level=args.log_level, log_file=args.log_file)
    logger = setup_logging(settings.log_level, args.log_file)

    try:
        if args.command == "validate":
            results = validate_command(args.config, logger)
            return EXIT_OK if results["success"] else EXIT_ERROR

        if args.command == "init":
            init_command(args.scenario, args.config_output, logger)
            return EXIT_OK

        try:
            config = ConfigParser(logger).parse_file(args.config)
        except ConfigurationError as e:
            for error in e.errors:
                logger.error(f"[ERROR] {error}")
            return EXIT_ERROR

        settings = resolve_runtime(config, seed=args.seed, workers=args.workers,
                                   output_directory=args.out, log_level=args.log_level,
                                   log_file=args.log_file)
        logging.getLogger().setLevel(settings.log_level)
        logger.info(f"[CONFIG] seed={settings.seed}, workers={settings.workers}, "
                    f"out={settings.output_directory}")

        results = run_command(args.config, settings, config, logger)
        return EXIT_PHYSICS_WARNINGS if results["warnings"] else EXIT_OK

    except KeyboardInterrupt:
        logger.info("[STOP] Operation cancelled by user")
        return EXIT_ERROR
    except TllLabError as e:
        logger.error(f"[ERROR] {e}")
        return EXIT_ERROR
    except Exception as e:
        logger.error(f"[FATAL] Unexpected error: {e}")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
