import logging

from sqlalchemy.orm import sessionmaker

from infrastructure.database.repository import RunRepository
from infrastructure.messaging.event_bus import EventBus
from schema import CheckResult, EventType, RunEvent, RunStatus


class RunLedger:
    """Event-bus subscriber persisting runs and checks through RunRepository"""

    def __init__(self, session_factory: sessionmaker):
        self.session_factory = session_factory
        self.logger = logging.getLogger("ledger")

    def attach(self, event_bus: EventBus):
        event_bus.subscribe(EventType.RUN_STARTED, self.on_run_started)
        event_bus.subscribe(EventType.CHECK_RECORDED, self.on_check_recorded)
        event_bus.subscribe(EventType.RUN_FINISHED, self.on_run_finished)

    def on_run_started(self, event: RunEvent):
        payload = event.payload
        with self.session_factory() as db:
            RunRepository(db).create_run(
                run_id=event.run_id,
                preset=payload["preset"],
                config_digest=payload["config_digest"],
                seed=payload.get("seed", 0),
                out_dir=payload["out_dir"],
            )
        self.logger.debug(f"Run {event.run_id} recorded")

    def on_check_recorded(self, event: RunEvent):
        check = CheckResult(**event.payload)
        with self.session_factory() as db:
            RunRepository(db).add_check(event.run_id, check)

    def on_run_finished(self, event: RunEvent):
        with self.session_factory() as db:
            run = RunRepository(db).finish_run(
                event.run_id,
                RunStatus(event.payload["status"]),
                event.payload["exit_code"],
            )
        if run is None:
            self.logger.warning(f"Finished run {event.run_id} was never recorded as started")
