import logging
import math
from datetime import datetime
from typing import List, Optional

from sqlalchemy.orm import Session
from sqlalchemy.exc import SQLAlchemyError

from infrastructure.database.models import Run, RunCheck
from schema import CheckResult, RunStatus

logger = logging.getLogger("repository")


def _finite_or_none(value: float) -> Optional[float]:
    return value if value is not None and math.isfinite(value) else None


class BaseRepository:
    """Base class for ledger repositories"""

    def __init__(self, db: Session):
        """Bind the repository to a session"""
        self.db = db


class RunRepository(BaseRepository):
    """Runs and their checks"""

    def create_run(self, run_id: str, preset: str, config_digest: str, seed: int, out_dir: str) -> Run:
        try:
            run = Run(
                id=run_id,
                preset=preset,
                config_digest=config_digest,
                seed=seed,
                out_dir=out_dir,
                status=RunStatus.RUNNING.value,
            )
            self.db.add(run)
            self.db.commit()
            self.db.refresh(run)
            return run
        except SQLAlchemyError as e:
            logger.error(f"Error creating run {run_id}: {str(e)}")
            self.db.rollback()
            raise

    def get_run(self, run_id: str) -> Optional[Run]:
        return self.db.query(Run).filter(Run.id == run_id).first()

    def finish_run(self, run_id: str, status: RunStatus, exit_code: int) -> Optional[Run]:
        """Stamp the final status; None when the run is unknown"""
        try:
            run = self.get_run(run_id)
            if not run:
                return None
            run.status = RunStatus(status).value
            run.exit_code = int(exit_code)
            run.finished_at = datetime.now()
            self.db.commit()
            self.db.refresh(run)
            return run
        except SQLAlchemyError as e:
            logger.error(f"Error finishing run {run_id}: {str(e)}")
            self.db.rollback()
            raise

    def add_check(self, run_id: str, check: CheckResult) -> RunCheck:
        try:
            record = RunCheck(
                run_id=run_id,
                name=check.name,
                value=_finite_or_none(check.value),
                threshold=_finite_or_none(check.threshold),
                passed=check.passed,
                detail=check.detail,
            )
            self.db.add(record)
            self.db.commit()
            self.db.refresh(record)
            return record
        except SQLAlchemyError as e:
            logger.error(f"Error recording check {check.name} for run {run_id}: {str(e)}")
            self.db.rollback()
            raise

    def list_runs(self, preset: Optional[str] = None, limit: int = 100) -> List[Run]:
        """Most recent runs first"""
        query = self.db.query(Run)
        if preset:
            query = query.filter(Run.preset == preset)
        return query.order_by(Run.started_at.desc()).limit(limit).all()

    def list_checks(self, run_id: str) -> List[RunCheck]:
        return self.db.query(RunCheck).filter(RunCheck.run_id == run_id).order_by(RunCheck.id).all()

    def failed_checks(self, run_id: str) -> List[RunCheck]:
        return (
            self.db.query(RunCheck)
            .filter(RunCheck.run_id == run_id, RunCheck.passed.is_(False))
            .order_by(RunCheck.id)
            .all()
        )
