import os
import sys
import logging
import argparse
from typing import List, Optional

# Add the root directory to the Python path to enable proper imports
sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), '..')))

from core.pipelines.pipeline_types import PresetRegistry
from core.pipelines.runner import ExperimentRunner, RunOutcome, output_root
from infrastructure.database.connection import create_session_factory, resolve_database_url
from infrastructure.database.repository import RunRepository
from schema import ExitCode, PresetName

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

logger = logging.getLogger("cli")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Obstacle problems for p(x)-Laplacian operators with L1 data: solver and verification suite"
    )
    parser.add_argument("--verbose", action="store_true", help="Log at DEBUG level")
    commands = parser.add_subparsers(dest="command", required=True)

    for preset in PresetName:
        command = commands.add_parser(preset.value, help=PresetRegistry.describe(preset))
        _add_run_options(command)

    run = commands.add_parser("run", help="Run the preset named by run.preset in the config")
    _add_run_options(run)

    commands.add_parser("presets", help="List the available presets")

    history = commands.add_parser("history", help="List recorded runs from the run ledger")
    history.add_argument("--preset", choices=[preset.value for preset in PresetName], help="Only runs of this preset")
    history.add_argument("--limit", type=int, default=20, help="Number of runs to show")
    history.add_argument("--checks", action="store_true", help="List every recorded check under each run")
    return parser


def _add_run_options(command: argparse.ArgumentParser):
    command.add_argument("--config", required=True, help="Experiment config file (key = value lines)")
    command.add_argument("--out", help="Output directory (default: $OBSTACLE_OUTPUT_DIR/<preset>)")
    command.add_argument("--seed", type=int, help="Seed overriding run.seed")


def list_presets() -> List[str]:
    """One line per preset: name, what it verifies and the artifacts it writes"""
    width = max(len(preset.value) for preset in PresetName)
    return [
        f"{preset.value.ljust(width)}  {PresetRegistry.describe(preset)}  [{', '.join(PresetRegistry.get_artifacts(preset))}]"
        for preset in PresetRegistry.presets()
    ]


def _format_value(value: Optional[float]) -> str:
    return "n/a" if value is None else f"{value:.6g}"


def show_history(preset: Optional[str], limit: int, checks: bool = False) -> int:
    url = resolve_database_url(output_root())
    if url is None:
        logger.error("The run ledger is disabled (OBSTACLE_DATABASE_URL=none)")
        return int(ExitCode.CONFIG_ERROR)
    session_factory = create_session_factory(url)
    with session_factory() as db:
        repository = RunRepository(db)
        for run in repository.list_runs(preset=preset, limit=limit):
            failed = len(repository.failed_checks(run.id))
            print(f"{run.started_at:%Y-%m-%d %H:%M:%S}  {run.id}  {run.preset:<16} {run.status:<15} failed checks: {failed}")
            if checks:
                for check in repository.list_checks(run.id):
                    mark = "PASS" if check.passed else "FAIL"
                    print(f"    [{mark}] {check.name}: {_format_value(check.value)} (threshold {_format_value(check.threshold)})")
    return int(ExitCode.PASSED)


def report(outcome: RunOutcome):
    for check in outcome.checks:
        mark = "PASS" if check.passed else "FAIL"
        print(f"[{mark}] {check.name}: {check.value:.6g} (threshold {check.threshold:.6g})")
    for label in outcome.unconverged:
        print(f"[NOT CONVERGED] {label}")
    if outcome.error:
        print(f"[ERROR] {outcome.error}")
    print(f"{outcome.status.value} -> {outcome.out_dir}")


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point; returns the process exit code"""
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format=LOG_FORMAT)

    if args.command == "presets":
        for line in list_presets():
            print(line)
        return int(ExitCode.PASSED)

    if args.command == "history":
        return show_history(args.preset, args.limit, args.checks)

    preset = None if args.command == "run" else PresetName(args.command)
    outcome = ExperimentRunner().run_file(args.config, out=args.out, seed=args.seed, preset=preset)
    report(outcome)
    return int(outcome.exit_code)


if __name__ == "__main__":
    sys.exit(main())
