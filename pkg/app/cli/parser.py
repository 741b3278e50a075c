from __future__ import annotations
import argparse
from app.cli.logging_setup import LOG_LEVELS
from app.models.config import PLANNER_MODES


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", default=None, help="run configuration JSON (default: bundled case study)")
    parser.add_argument("--seed", type=int, default=None, help="master seed overriding the config")
    parser.add_argument("--out", default=None, help="output directory overriding the config")
    parser.add_argument("--log-level", default="INFO", choices=LOG_LEVELS)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="app.main",
        description="Moment-robust chance-constrained trajectory planning.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    plan = commands.add_parser("plan", help="sample, reformulate and solve the case study")
    _common(plan)
    plan.add_argument("--mode", choices=PLANNER_MODES, default=None)
    plan.add_argument("--samples", type=int, default=None, help="adversary trajectories N_s")

    check = commands.add_parser("validate", help="Monte Carlo violation of a written plan")
    _common(check)
    check.add_argument("--plan", required=True, help="plan.json written by the plan command")
    check.add_argument("--realizations", type=int, default=None)

    example = commands.add_parser("example1", help="naive versus robust scalar chance constraint")
    _common(example)
    example.add_argument("--samples", type=int, default=None)
    example.add_argument("--trials", type=int, default=None)
    example.add_argument("--beta", type=float, default=None)

    sample = commands.add_parser("sample", help="adversary samples and face estimates")
    _common(sample)
    sample.add_argument("--samples", type=int, default=None)

    coverage = commands.add_parser("coverage", help="how often r1 and r2 cover known Gaussian moments")
    _common(coverage)
    coverage.add_argument("--dimension", type=int, default=2)
    coverage.add_argument("--samples", type=int, default=None)
    coverage.add_argument("--trials", type=int, default=None)
    coverage.add_argument("--beta", type=float, default=None)
    coverage.add_argument("--diagonal", action="store_true", help="diagonal covariance mode")

    study = commands.add_parser("study", help="cases A, B and C over matched seeds")
    _common(study)
    study.add_argument("--repetitions", type=int, default=None)
    study.add_argument("--realizations", type=int, default=None)
    study.add_argument("--workers", type=int, default=1)
    return parser
