"""cqt command-line entry point."""

from __future__ import annotations

import argparse
import logging
import logging.handlers
import sys
from pathlib import Path

import yaml
from dotenv import load_dotenv
from pydantic import ValidationError

from cqt.config import OutputConfig, RunConfig, load_config
from cqt.runner.convergence import COLUMNS as CONVERGENCE_COLUMNS
from cqt.runner.convergence import run_convergence
from cqt.runner.output import write_rows
from cqt.runner.sweep import columns, run_sweep

load_dotenv()

logger = logging.getLogger("cqt")

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_FAILED_POINTS = 2

DEFAULT_CONVERGENCE_PATH = "results/convergence.csv"


def _setup_logging(config: RunConfig, quiet: bool = False) -> None:
    level = logging.WARNING if quiet else getattr(logging, config.logging.level.upper(),
                                                  logging.INFO)
    # stdout may carry the result table
    handlers: list[logging.Handler] = [logging.StreamHandler(sys.stderr)]
    if config.logging.dir:
        log_dir = Path(config.logging.dir)
        log_dir.mkdir(parents=True, exist_ok=True)
        handlers.append(
            logging.handlers.RotatingFileHandler(
                log_dir / "cqt.log", maxBytes=10_000_000, backupCount=5
            )
        )
    logging.basicConfig(
        level=level,
        format="%(asctime)s [%(levelname)s] %(name)s: %(message)s",
        handlers=handlers,
        force=True,
    )


def _load(args: argparse.Namespace) -> RunConfig:
    """Config file plus command-line overrides, validated as a whole."""
    if args.config is not None and not Path(args.config).exists():
        raise FileNotFoundError(f"Config file not found: {args.config}")
    cfg = load_config(args.config) if args.config else RunConfig()
    raw = cfg.model_dump()
    if args.cutoff is not None:
        raw["model"]["n_cutoff"] = args.cutoff
    if args.axis is not None and args.axis != raw["sweep"]["axis"]:
        raw["sweep"] = {"axis": args.axis, "values": None}
    if args.frame is not None:
        raw["solver"]["frame"] = args.frame
    if args.workers is not None:
        raw["runner"]["max_workers"] = args.workers
    if args.output is not None:
        raw["output"]["path"] = args.output
    if args.format is not None:
        raw["output"]["format"] = args.format
    return RunConfig.model_validate(raw)


def _run(cfg: RunConfig, quiet: bool) -> int:
    rows = run_sweep(cfg, progress=not quiet)
    write_rows(rows, columns(cfg.currents_to_count), cfg.output.path, cfg.output.format)
    failed = [r for r in rows if r["error"]]
    if failed:
        logger.warning("%d point(s) failed; see the error column", len(failed))
        return EXIT_FAILED_POINTS
    return EXIT_OK


def _converge(cfg: RunConfig) -> int:
    report = run_convergence(cfg)
    path = cfg.output.path
    if path == OutputConfig().path:
        path = DEFAULT_CONVERGENCE_PATH
    write_rows(report.rows, CONVERGENCE_COLUMNS, path, cfg.output.format)
    logger.info("Convergence: cutoff %s, scale %s",
                "pass" if report.cutoff_passed else "FAIL",
                "pass" if report.scale_passed else "FAIL")
    return EXIT_OK if report.passed else EXIT_FAILED_POINTS


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cqt", description="Thermodynamics of a cavity-driven three-level maser"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="YAML run profile (default: built-in)")
    common.add_argument("--output", default=None, help="Output path, '-' for stdout")
    common.add_argument("--format", choices=["csv", "json"], default=None)
    common.add_argument("--cutoff", type=int, default=None, help="Fock cutoff override")
    common.add_argument("--axis", choices=["n_H", "g_ratio"], default=None,
                        help="Sweep axis override (uses that axis' default values)")
    common.add_argument("--frame", choices=["lab", "displaced"], default=None)
    common.add_argument("--quiet", action="store_true", help="Only log warnings")

    run = sub.add_parser("run", parents=[common], help="Parameter sweep")
    run.add_argument("--workers", type=int, default=None, help="Parallel worker processes")

    sub.add_parser("converge", parents=[common], help="Cutoff and semi-classical convergence")
    return parser


def cli(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    if not hasattr(args, "workers"):
        args.workers = None
    try:
        cfg = _load(args)
    except (OSError, yaml.YAMLError, ValidationError, ValueError) as exc:
        logging.basicConfig(level=logging.WARNING, force=True)
        logger.error("Invalid configuration: %s", exc)
        return EXIT_CONFIG

    _setup_logging(cfg, args.quiet)
    logger.info("cqt %s: %s", args.command, args.config or "built-in profile")
    try:
        if args.command == "run":
            return _run(cfg, args.quiet)
        return _converge(cfg)
    except OSError as exc:
        logger.error("Could not write results: %s", exc)
        return EXIT_CONFIG


def main() -> None:
    sys.exit(cli())


if __name__ == "__main__":
    main()
