import logging
import sys

import structlog


def json_formatter() -> structlog.stdlib.ProcessorFormatter:
    """Renders every record, structlog or not, as one JSON object."""
    return structlog.stdlib.ProcessorFormatter(
        processors=[
            structlog.processors.add_log_level,
            structlog.processors.StackInfoRenderer(),
            structlog.dev.set_exc_info,
            structlog.processors.dict_tracebacks,
            structlog.processors.TimeStamper(fmt="iso", utc=True),
            structlog.stdlib.ProcessorFormatter.remove_processors_meta,
            structlog.processors.JSONRenderer(),
        ]
    )


def configure_structlog() -> None:
    structlog.configure(
        processors=[
            structlog.stdlib.ProcessorFormatter.wrap_for_formatter,
        ],
        logger_factory=structlog.stdlib.LoggerFactory(),
        cache_logger_on_first_use=True,
    )


def setup_log(level: str = "WARNING") -> None:
    """Routes structlog events through the standard library to stderr as
    JSON lines. Used by the command line entry point; the library
    itself never configures logging."""

    configure_structlog()
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(json_formatter())
    logging.basicConfig(handlers=[handler], level=level.upper(), force=True)
