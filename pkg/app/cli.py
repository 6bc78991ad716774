"""
Command-line driver: ``persistent-lasso {simulate,eigen-study,forecast,serve}``.

Configuration is layered: settings from the environment, then an optional
``key = value`` file given with --config, then command-line flags.
Exit status is 0 on success, 2 on a configuration error and 1 on any other
failure.
"""

import argparse
import logging
from pathlib import Path
from typing import Any

from app.config.settings import Settings, get_settings
from app.factory import Factory
from app.models.run_config import Command, ConfigError, RunConfig, SimulationCell
from app.models.simulation import DgpVariant
from app.services.dgp_service import InvalidConfig
from app.services.forecast_service import load_csv
from app.services.numerics import RngStream

logger = logging.getLogger(__name__)

LIST_KEYS = {
    "cells",
    "estimators",
    "s_values",
    "p_values",
    "window_years",
    "horizons",
    "methods",
    "transforms",
}

# flag destination -> RunConfig field
FLAG_KEYS = {
    "seed": "seed",
    "reps": "replications",
    "out": "output_dir",
    "jobs": "jobs",
    "dgp": "dgp",
    "cells": "cells",
    "estimators": "estimators",
    "tuning": "tuning",
    "folds": "folds",
    "grid_size": "grid_size",
    "eps_ratio": "eps_ratio",
    "calibration_reps": "calibration_reps",
    "n": "n",
    "s_values": "s_values",
    "expected_d_s": "expected_d_s",
    "expected_d_reps": "expected_d_reps",
    "p_values": "p_values",
    "data": "data",
    "target": "target",
    "windows": "window_years",
    "horizons": "horizons",
    "methods": "methods",
    "transforms": "transforms",
    "augmented": "augmented",
    "test_start": "test_start",
}


def read_config_file(path: str | Path) -> dict[str, Any]:
    """
    Parse ``key = value`` lines. Blank lines and lines starting with # are
    skipped; list values are separated by commas or whitespace.
    """
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except OSError as e:
        raise ConfigError(f"Cannot read config file {path}: {e}") from e

    values: dict[str, Any] = {}
    known = set(RunConfig.model_fields) - {"command"}
    for number, line in enumerate(lines, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{number}: expected key = value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in known:
            raise ConfigError(f"{path}:{number}: unknown key {key!r}")
        values[key] = value.replace(",", " ").split() if key in LIST_KEYS else value
    return values


def settings_defaults(settings: Settings) -> dict[str, Any]:
    return {
        "seed": settings.simulation.seed,
        "replications": settings.simulation.replications,
        "output_dir": settings.simulation.output_dir,
        "jobs": settings.simulation.jobs,
        "folds": settings.tuning.folds,
        "grid_size": settings.tuning.grid_size,
        "eps_ratio": settings.tuning.eps_ratio,
        "calibration_reps": settings.tuning.calibration_reps,
    }


def build_run_config(args: argparse.Namespace, settings: Settings) -> RunConfig:
    """Merge settings, the config file and flags (flags win) into a RunConfig."""
    values = settings_defaults(settings)
    if args.config:
        values.update(read_config_file(args.config))
    for dest, key in FLAG_KEYS.items():
        flag = getattr(args, dest, None)
        if flag is not None:
            values[key] = flag
    values["command"] = Command(args.command)

    if values["command"] == Command.SIMULATE:
        try:
            dgp = DgpVariant(str(values.get("dgp", DgpVariant.DGP1.value)).upper())
        except ValueError as e:
            raise ConfigError(f"Unknown design {values.get('dgp')!r}") from e
        values["dgp"] = dgp
        values["cells"] = [
            cell if isinstance(cell, SimulationCell) else SimulationCell.parse(str(cell), dgp)
            for cell in values.get("cells", [])
        ]
    return RunConfig.build(values)


def _shared(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, help="Base seed; replication r uses seed + r")
    parser.add_argument("--reps", type=int, help="Monte-Carlo replications")
    parser.add_argument("--out", help="Output directory for CSV files")
    parser.add_argument("--jobs", type=int, help="Maximum worker threads")
    parser.add_argument("--config", help="Plain-text key = value configuration file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="persistent-lasso",
        description="Plasso and Slasso for predictive regressions with persistent regressors",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    simulate = sub.add_parser("simulate", help="Monte-Carlo comparison of oracle, Plasso and Slasso")
    _shared(simulate)
    simulate.add_argument("--dgp", help="DGP1, DGP2, DGP3, DGP4 or COINT")
    simulate.add_argument("--cells", nargs="+", help="Cells as n:p_x[:p_z]")
    simulate.add_argument("--estimators", nargs="+", choices=["plasso", "slasso"])
    simulate.add_argument("--tuning", choices=["cv", "calibrated"])
    simulate.add_argument("--folds", type=int)
    simulate.add_argument("--grid-size", dest="grid_size", type=int)
    simulate.add_argument("--eps-ratio", dest="eps_ratio", type=float)
    simulate.add_argument("--calibration-reps", dest="calibration_reps", type=int)
    simulate.add_argument(
        "--dump-sample",
        dest="dump_sample",
        action="store_true",
        help="Also write replication 0 of the first cell with its true coefficients",
    )

    eigen = sub.add_parser("eigen-study", help="Eigenvalues of i.i.d. versus unit-root Gram matrices")
    _shared(eigen)
    eigen.add_argument("--n", type=int, help="Sample size")
    eigen.add_argument("--s-values", dest="s_values", nargs="*", type=int)
    eigen.add_argument("--expected-d-s", dest="expected_d_s", type=int)
    eigen.add_argument("--expected-d-reps", dest="expected_d_reps", type=int)
    eigen.add_argument("--p-values", dest="p_values", nargs="+", type=int, help="Also trace the deviation bound")

    forecast = sub.add_parser("forecast", help="Rolling-window forecast evaluation")
    _shared(forecast)
    forecast.add_argument("--data", help="FRED-MD layout CSV")
    forecast.add_argument("--target", help="Dependent variable")
    forecast.add_argument("--windows", nargs="+", type=int, help="Window lengths in years")
    forecast.add_argument("--horizons", nargs="+", type=int)
    forecast.add_argument("--methods", nargs="+", choices=["RWwD", "ARBIC", "Plasso", "Slasso"])
    forecast.add_argument("--transforms", nargs="+", choices=["NT", "ST"])
    forecast.add_argument("--augmented", action="store_true", default=None)
    forecast.add_argument("--test-start", dest="test_start", help="Date label of the first forecast target")

    serve = sub.add_parser("serve", help="Run the HTTP API")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    return parser


def run_simulate(cfg: RunConfig, factory: Factory, dump_sample: bool = False) -> list[Path]:
    rows = factory.simulation_service.run(cfg)
    writer = factory.report_writer(cfg.output_dir)
    paths = [writer.simulation_summary(rows)]
    if dump_sample:
        cell = cfg.cells[0]
        sample = factory.dgp_service.generate(cfg.dgp, cell.n, cell.p_x, cell.p_z, RngStream(cfg.seed).spawn(0))
        paths.extend(writer.sample(sample))
    return paths


def run_eigen_study(cfg: RunConfig, factory: Factory) -> list[Path]:
    diagnostics = factory.diagnostics_service
    writer = factory.report_writer(cfg.output_dir)
    rows = diagnostics.eigen_study(cfg.s_values, cfg.n, cfg.replications, RngStream(cfg.seed))
    D = diagnostics.expected_D(cfg.expected_d_s, cfg.n, cfg.expected_d_reps, RngStream(cfg.seed))
    paths = [writer.eigen_study(rows)]
    paths.extend(writer.expected_d(diagnostics.summarize_D(D, cfg.n, cfg.expected_d_reps), D))
    if cfg.p_values:
        bound = diagnostics.deviation_bound_rows(cfg.p_values, cfg.n, cfg.replications, RngStream(cfg.seed))
        paths.append(writer.deviation_bound(bound))
    return paths


def run_forecast(cfg: RunConfig, factory: Factory) -> list[Path]:
    ds = load_csv(cfg.data)
    if cfg.target not in ds.names:
        raise ConfigError(f"Target column {cfg.target!r} not found in {cfg.data}")
    if cfg.test_start is not None and cfg.test_start not in ds.dates:
        raise ConfigError(f"Test start {cfg.test_start!r} is not a date in {cfg.data}")
    service = factory.forecast_service
    records = service.run(
        ds,
        cfg.target,
        cfg.window_years,
        cfg.horizons,
        cfg.methods,
        cfg.transforms,
        augmented=cfg.augmented,
        test_start=cfg.test_start,
    )
    writer = factory.report_writer(cfg.output_dir)
    return [
        writer.forecast_records(records),
        writer.forecast_summary(service.summarize(records)),
        writer.selection_frequency(service.selection_by_group(records)),
        writer.active_counts(service.active_counts(ds, records, cfg.augmented)),
        writer.scale_summary(service.scale_summary(ds, cfg.target)),
    ]


def serve(host: str, port: int) -> None:
    import uvicorn

    uvicorn.run("app.server:app", host=host, port=port)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    settings = get_settings()
    logging.basicConfig(
        level=logging.DEBUG if settings.debug else settings.log_level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    if args.command == "serve":
        serve(args.host, args.port)
        return 0

    try:
        cfg = build_run_config(args, settings)
        factory = Factory(settings)
        factory.diagnostics_service.jobs = cfg.jobs
        factory.forecast_service.jobs = cfg.jobs
        if cfg.command == Command.SIMULATE:
            paths = run_simulate(cfg, factory, dump_sample=args.dump_sample)
        elif cfg.command == Command.EIGEN_STUDY:
            paths = run_eigen_study(cfg, factory)
        else:
            paths = run_forecast(cfg, factory)
    except (ConfigError, InvalidConfig) as e:
        logger.error(f"Configuration error: {e}")
        return 2
    except Exception as e:
        logger.error(f"{args.command} failed: {e}")
        return 1

    logger.info(f"{args.command} finished: {', '.join(str(p) for p in paths)}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
