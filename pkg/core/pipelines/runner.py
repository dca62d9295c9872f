import logging
import os
import uuid
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from core.pipelines.base_pipeline import Pipeline, PipelineContext
from core.pipelines.config import ConfigError, config_digest, load_config
from core.pipelines.pipeline_factory import PipelineFactory
from core.solver.problem import SolverDivergenceError
from infrastructure.database.connection import create_session_factory, resolve_database_url
from infrastructure.database.ledger import RunLedger
from infrastructure.messaging.event_bus import EventBus
from infrastructure.storage.artifacts import ArtifactStore
from schema import CheckResult, EventType, ExitCode, ExperimentConfig, PresetName, RunEvent, RunStatus

OUTPUT_DIR_ENV = "OBSTACLE_OUTPUT_DIR"
DEFAULT_OUTPUT_ROOT = "output"

_EXIT_CODES = {
    RunStatus.PASSED: ExitCode.PASSED,
    RunStatus.CHECK_FAILED: ExitCode.CHECK_FAILED,
    RunStatus.CONFIG_ERROR: ExitCode.CONFIG_ERROR,
    RunStatus.SOLVER_FAILURE: ExitCode.SOLVER_FAILURE,
}


def output_root() -> str:
    return os.environ.get(OUTPUT_DIR_ENV, DEFAULT_OUTPUT_ROOT)


def resolve_out_dir(config: ExperimentConfig) -> str:
    """run.out, else <output root>/<preset>"""
    return config.run.out or os.path.join(output_root(), config.run.preset.value)


@dataclass
class RunOutcome:
    status: RunStatus
    out_dir: str
    run_id: Optional[str] = None
    checks: List[CheckResult] = field(default_factory=list)
    artifacts: List[str] = field(default_factory=list)
    unconverged: List[str] = field(default_factory=list)
    error: Optional[str] = None

    @property
    def exit_code(self) -> ExitCode:
        return _EXIT_CODES[self.status]


class ExperimentRunner:
    """
    Runs one preset: builds the pipeline, dispatches it and maps its outcome
    to an exit status. Failed runs leave a failure manifest in the run directory.
    """

    def __init__(self, factory: Optional[PipelineFactory] = None, use_ledger: bool = True):
        self.factory = factory or PipelineFactory()
        self.use_ledger = use_ledger
        self.logger = logging.getLogger("runner")

    def run_file(
        self,
        path: str,
        out: Optional[str] = None,
        seed: Optional[int] = None,
        preset: Optional[PresetName] = None,
    ) -> RunOutcome:
        """Load a config file with CLI overrides and run it"""
        overrides = {"run.out": out, "run.seed": seed, "run.preset": preset.value if preset else None}
        try:
            config = load_config(path, overrides)
        except ConfigError as e:
            self.logger.error(f"Config error: {str(e)}")
            out_dir = out or output_root()
            outcome = RunOutcome(status=RunStatus.CONFIG_ERROR, out_dir=out_dir, error=str(e))
            store = ArtifactStore(out_dir)
            outcome.artifacts.append(store.write_manifest(self._manifest(outcome, error_key=e.key)))
            return outcome
        return self.run(config)

    def _attach_ledger(self, event_bus: EventBus):
        if not self.use_ledger:
            return
        url = resolve_database_url(output_root())
        if url is None:
            self.logger.debug("Run ledger disabled")
            return
        try:
            RunLedger(create_session_factory(url)).attach(event_bus)
        except Exception as e:
            self.logger.error(f"Run ledger unavailable ({url}): {str(e)}")

    def run(self, config: ExperimentConfig) -> RunOutcome:
        """Execute the configured preset"""
        preset = config.run.preset
        out_dir = resolve_out_dir(config)
        run_id = str(uuid.uuid4())
        store = ArtifactStore(out_dir)
        store.discard_manifest()
        event_bus = EventBus()
        self._attach_ledger(event_bus)

        digest = config_digest(config)
        event_bus.publish(RunEvent(
            event_type=EventType.RUN_STARTED,
            run_id=run_id,
            payload={"preset": preset.value, "config_digest": digest, "seed": config.run.seed, "out_dir": store.out_dir},
        ))
        self.logger.info(f"Run {run_id}: preset {preset.value}, output {store.out_dir}")

        context = PipelineContext(config=config, run_id=run_id, artifacts=store, event_bus=event_bus)
        pipeline = self.factory.create_pipeline(preset, context)

        error_key = None
        error = None
        try:
            pipeline.run()
            status = self._status(pipeline)
        except SolverDivergenceError as e:
            self.logger.error(f"Solver diverged: {str(e)}")
            status, error = RunStatus.SOLVER_FAILURE, str(e)
        except (ValueError, FileNotFoundError) as e:
            self.logger.error(f"Invalid experiment: {str(e)}")
            status, error = RunStatus.CONFIG_ERROR, str(e)
            error_key = getattr(e, "key", None)

        outcome = RunOutcome(
            status=status,
            out_dir=store.out_dir,
            run_id=run_id,
            checks=list(pipeline.checks),
            unconverged=list(pipeline.unconverged),
            error=error,
        )
        if status != RunStatus.PASSED:
            store.write_manifest(self._manifest(outcome, digest, error_key))
        outcome.artifacts = list(store.written)

        event_bus.publish(RunEvent(
            event_type=EventType.RUN_FINISHED,
            run_id=run_id,
            payload={"status": status.value, "exit_code": int(outcome.exit_code)},
        ))
        self.logger.info(f"Run {run_id} finished: {status.value} (exit {int(outcome.exit_code)})")
        return outcome

    @staticmethod
    def _status(pipeline: Pipeline) -> RunStatus:
        if pipeline.unconverged:
            return RunStatus.SOLVER_FAILURE
        if pipeline.failed_checks():
            return RunStatus.CHECK_FAILED
        return RunStatus.PASSED

    @staticmethod
    def _manifest(outcome: RunOutcome, digest: Optional[str] = None, error_key: Optional[str] = None) -> Dict[str, Any]:
        """Failure record without run ids or timestamps, so reruns reproduce it"""
        return {
            "status": outcome.status.value,
            "exit_code": int(outcome.exit_code),
            "config_digest": digest,
            "error": outcome.error,
            "error_key": error_key,
            "failed_checks": [check.model_dump() for check in outcome.checks if not check.passed],
            "unconverged": outcome.unconverged,
        }
