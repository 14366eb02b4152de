import sys
import threading
from types import TracebackType
from typing import Any

import structlog

from herdscent.events import Event
from tests.logs import setup_log

log = structlog.get_logger()


def _chain_excepthook(previous: Any) -> Any:
    def excepthook(
        exception_type: type[BaseException],
        e: BaseException,
        traceback: TracebackType | None,
    ) -> Any:
        log.error(event=Event.UNCAUGHT_EXCEPTION, exc_info=e)
        return previous(exception_type, e, traceback)

    return excepthook


def _chain_threading_excepthook(previous: Any) -> Any:
    def threading_excepthook(args: threading.ExceptHookArgs) -> Any:
        log.error(
            event=Event.UNCAUGHT_EXCEPTION,
            thread=args.thread.name if args.thread else None,
            exc_info=args.exc_value,
        )
        return previous(args)

    return threading_excepthook


def pytest_configure() -> None:
    setup_log("tests")
    sys.excepthook = _chain_excepthook(sys.excepthook)
    threading.excepthook = _chain_threading_excepthook(threading.excepthook)
