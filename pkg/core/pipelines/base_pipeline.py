import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence

from core.grid.grid import ScalarField
from core.solver.problem import ObstacleProblem, SolveReport
from core.solver.vi_solver import solve_vi
from infrastructure.messaging.event_bus import EventBus
from infrastructure.storage.artifacts import ArtifactStore, Column
from schema import CheckResult, EventType, ExperimentConfig, PresetName, RunEvent


@dataclass
class PipelineContext:
    config: ExperimentConfig
    run_id: str
    artifacts: ArtifactStore
    event_bus: EventBus


class Pipeline(ABC):
    """Base class for all presets"""

    def __init__(self, preset: PresetName, context: PipelineContext):
        """Initialize the base pipeline"""
        self.preset = preset
        self.context = context
        self.checks: List[CheckResult] = []
        self.unconverged: List[str] = []
        self.logger = logging.getLogger(f"pipeline.{preset.value}")

    @property
    def config(self) -> ExperimentConfig:
        return self.context.config

    @abstractmethod
    def run(self):
        """Execute the preset - must be implemented by subclasses"""
        pass

    def _publish(self, event_type: EventType, payload: Dict[str, Any]):
        self.context.event_bus.publish(RunEvent(event_type=event_type, run_id=self.context.run_id, payload=payload))

    def solve_options(self) -> Dict[str, Any]:
        solver = self.config.solver
        return {"tol": solver.tol, "max_iter": solver.max_iter, "method": solver.method}

    def solve(self, problem: ObstacleProblem, label: str = "solve", **overrides) -> SolveReport:
        """solve_vi with the configured solver block; non-convergence is remembered, not raised"""
        options = {**self.solve_options(), **overrides}
        report = solve_vi(problem, **options)
        self.note_convergence(report, label)
        return report

    def note_convergence(self, report: SolveReport, label: str):
        if not report.converged:
            self.mark_unconverged(
                label, f"residual {report.complementarity_residual:.3e} > tol {report.tol:.3e}"
            )

    def mark_unconverged(self, label: str, reason: str = "solver did not converge"):
        self.unconverged.append(label)
        self.logger.warning(f"{label}: {reason}")

    def record_check(
        self,
        name: str,
        value: float,
        threshold: float,
        passed: bool,
        **detail: Any,
    ) -> CheckResult:
        check = CheckResult(name=name, value=float(value), threshold=float(threshold), passed=bool(passed), detail=detail)
        self.checks.append(check)
        level = logging.INFO if check.passed else logging.WARNING
        self.logger.log(level, f"Check {name}: value {check.value:.6g}, threshold {check.threshold:.6g}, passed={check.passed}")
        self._publish(EventType.CHECK_RECORDED, check.model_dump())
        return check

    def write_table(self, name: str, columns: Sequence[Column], rows: Sequence[Sequence[Any]]) -> str:
        path = self.context.artifacts.write_csv(name, columns, rows)
        self._publish(EventType.ARTIFACT_WRITTEN, {"path": path, "kind": "csv"})
        return path

    def write_field(self, name: str, field: ScalarField) -> str:
        path = self.context.artifacts.write_field(name, field)
        self._publish(EventType.ARTIFACT_WRITTEN, {"path": path, "kind": "field"})
        return path

    def write_summary(self, name: str, entries: Dict[str, Any], title: Optional[str] = None) -> str:
        path = self.context.artifacts.write_summary(name, title or self.preset.value, entries)
        self._publish(EventType.ARTIFACT_WRITTEN, {"path": path, "kind": "summary"})
        return path

    def failed_checks(self) -> List[CheckResult]:
        return [check for check in self.checks if not check.passed]
