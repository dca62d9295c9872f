import logging
import threading
from typing import Callable, Dict, List

from schema import EventType, RunEvent


class EventBus:
    """
    In-process publish/subscribe channel for run events.

    Pipelines publish checks and artifacts; subscribers such as the run ledger
    persist them. A failing subscriber is logged and never breaks the run.
    """

    def __init__(self):
        """Initialize the event bus"""
        self.logger = logging.getLogger("event_bus")
        self.subscribers: Dict[EventType, List[Callable[[RunEvent], None]]] = {}
        self.lock = threading.Lock()

    def subscribe(self, event_type: EventType, callback: Callable[[RunEvent], None]):
        """Subscribe to one event type"""
        with self.lock:
            self.subscribers.setdefault(event_type, []).append(callback)
            self.logger.debug(f"Subscriber added for {event_type.value}")

    def publish(self, event: RunEvent) -> int:
        """Deliver an event synchronously; returns the number of subscribers that accepted it"""
        with self.lock:
            subscribers = list(self.subscribers.get(event.event_type, []))

        if not subscribers:
            self.logger.debug(f"No subscribers for {event.event_type.value}")
            return 0

        delivered = 0
        for callback in subscribers:
            try:
                callback(event)
                delivered += 1
            except Exception as e:
                self.logger.error(f"Error delivering {event.event_type.value} event to subscriber: {str(e)}")
        return delivered
