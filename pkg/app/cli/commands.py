"""Command handlers; each returns the process exit code."""
from __future__ import annotations
import argparse
import logging
import os
from dataclasses import replace
from typing import Any, Callable, Sequence
from app.cli.logging_setup import configure_logging
from app.cli.parser import build_parser
from app.core import pipeline, validate
from app.core.adversary import sample_trajectories
from app.core.errors import (
    ConfigError,
    DegenerateCovarianceError,
    InsufficientSamplesError,
    SolverError,
)
from app.io import report_writer
from app.io.config_loader import apply_overrides, config_hash, derive_seed, load_config
from app.io.csv_loader import LoadFile, write_trajectories
from app.models.config import RunConfig
from app.models.estimates import Probability

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
EXIT_INTERNAL = 3


def _load(args: argparse.Namespace) -> RunConfig:
    path = args.config
    if path is None and os.path.exists(LoadFile.get_config_path()):
        path = LoadFile.get_config_path()
    config = load_config(path)
    return apply_overrides(
        config,
        seed=args.seed,
        mode=getattr(args, "mode", None),
        samples=getattr(args, "samples", None) if args.command in ("plan", "sample") else None,
        trials=getattr(args, "trials", None),
        realizations=getattr(args, "realizations", None),
        out=args.out,
    )


def _provenance(config: RunConfig, command: str, **extra: Any) -> dict[str, Any]:
    return {"command": command, "seed": config.seed, "config_hash": config_hash(config), **extra}


def cmd_plan(args: argparse.Namespace, config: RunConfig) -> int:
    outcome = pipeline.plan_case_study(config)
    result = outcome.result
    provenance = _provenance(
        config, "plan",
        mode=config.planner.mode,
        frame=config.planner.frame,
        frame_origin=outcome.origin.tolist(),
        samples=outcome.trajectories.sample_count,
        sampling_seed=outcome.sampling_seed,
        big_m=outcome.problem.big_m,
        misocp_counts=outcome.misocp.counts(),
    )
    written = report_writer.write_plan(result, config.output.directory, provenance, outcome.interchange())
    logger.info("wrote %s", ", ".join(written))
    if result.status != "optimal":
        logger.error("planning ended with status %s", result.status)
        return EXIT_FAILED
    logger.info("terminal forward position %.3f m", result.states[-1, 0])
    return EXIT_OK


def cmd_validate(args: argparse.Namespace, config: RunConfig) -> int:
    status, positions = report_writer.load_plan_positions(args.plan)
    if positions.shape[0] == 0:
        logger.error("plan %s has status %s and no trajectory to validate", args.plan, status)
        return EXIT_FAILED
    planner = config.planner
    seed = derive_seed(config.seed, "validation")
    scenario = pipeline.build_scenario(config, seed)
    report = validate.empirical_violation(
        positions, scenario, config.validation.realizations, seed,
        planner.ego_length_m, planner.ego_width_m, planner.inflation, planner.face_convention,
    )
    written = report_writer.write_violation(
        report, config.output.directory, _provenance(config, "validate", plan=args.plan, epsilon=planner.epsilon)
    )
    logger.info("wrote %s", ", ".join(written))
    if report.probability > planner.epsilon:
        logger.error("empirical violation %.5f exceeds epsilon %.5f", report.probability, planner.epsilon)
        return EXIT_FAILED
    return EXIT_OK


def cmd_example1(args: argparse.Namespace, config: RunConfig) -> int:
    n_samples = args.samples if args.samples is not None else config.validation.example1_samples
    beta = Probability.coerce(args.beta if args.beta is not None else config.planner.beta)
    if n_samples < 2:
        raise ConfigError("samples", f"must be at least 2, got {n_samples}")
    seed = derive_seed(config.seed, "example1")
    results = validate.example1_compare(n_samples, config.validation.trials, beta, seed)
    written = report_writer.write_example1(
        results, config.output.directory,
        _provenance(config, "example1", example1_seed=seed, sample_count=n_samples),
    )
    logger.info("wrote %s", ", ".join(written))
    return EXIT_OK


def cmd_sample(args: argparse.Namespace, config: RunConfig) -> int:
    scenario = pipeline.build_scenario(config)
    trajectories = sample_trajectories(scenario, config.planner.samples)
    face_set = pipeline.estimate_faces(config, scenario, trajectories)
    directory = config.output.directory
    os.makedirs(directory, exist_ok=True)
    csv_path = write_trajectories(trajectories, os.path.join(directory, "adversary_samples.csv"))
    json_path = report_writer.write_json(
        {
            **_provenance(config, "sample", sampling_seed=scenario.seed, samples=config.planner.samples),
            "faces": report_writer.face_estimates_payload(face_set),
        },
        os.path.join(directory, "faces.json"),
    )
    logger.info("wrote %s, %s", csv_path, json_path)
    return EXIT_OK


def cmd_coverage(args: argparse.Namespace, config: RunConfig) -> int:
    n_samples = args.samples if args.samples is not None else config.planner.samples
    beta = Probability.coerce(args.beta if args.beta is not None else config.planner.beta)
    if args.dimension < 1:
        raise ConfigError("dimension", f"must be at least 1, got {args.dimension}")
    seed = derive_seed(config.seed, "coverage")
    report = validate.concentration_coverage(
        args.dimension, n_samples, beta, config.validation.trials, seed, diagonal_mode=args.diagonal
    )
    path = report_writer.write_json(
        {**_provenance(config, "coverage", coverage_seed=seed), **report.to_dict()},
        os.path.join(config.output.directory, "coverage.json"),
    )
    logger.info("wrote %s", path)
    if not report.passed:
        logger.error(
            "coverage below 1 - beta: mean %.4f, covariance %.4f", report.mean_coverage, report.cov_coverage
        )
        return EXIT_FAILED
    return EXIT_OK


def cmd_study(args: argparse.Namespace, config: RunConfig) -> int:
    if args.repetitions is not None:
        if args.repetitions < 1:
            raise ConfigError("repetitions", f"must be at least 1, got {args.repetitions}")
        config = replace(config, validation=replace(config.validation, repetitions=args.repetitions))
    if args.workers < 1:
        raise ConfigError("workers", f"must be at least 1, got {args.workers}")
    frame = pipeline.run_study(config, workers=args.workers)
    written = report_writer.write_study(frame, config.output.directory, _provenance(config, "study"))
    logger.info("wrote %s", ", ".join(written))
    return EXIT_OK


COMMANDS: dict[str, Callable[[argparse.Namespace, RunConfig], int]] = {
    "plan": cmd_plan,
    "validate": cmd_validate,
    "example1": cmd_example1,
    "sample": cmd_sample,
    "coverage": cmd_coverage,
    "study": cmd_study,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    configure_logging(args.log_level)
    try:
        config = _load(args)
    except (ConfigError, FileNotFoundError, ValueError) as exc:
        logger.error("invalid configuration: %s", exc)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args, config)
    except ConfigError as exc:
        logger.error("invalid configuration: %s", exc)
        return EXIT_USAGE
    except (SolverError, DegenerateCovarianceError, InsufficientSamplesError) as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return EXIT_INTERNAL
    except (FileNotFoundError, ValueError) as exc:
        logger.error("%s", exc)
        return EXIT_USAGE
