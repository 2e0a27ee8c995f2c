"""Event detection in 1D signals via center/duration regression."""

__version__ = "0.1.0"

from .core import Event, EventList, SignalRecord, TimeGrid, event_from_bounds, interval_iou

__all__ = [
    "Event",
    "EventList",
    "SignalRecord",
    "TimeGrid",
    "event_from_bounds",
    "interval_iou",
    "__version__",
]
