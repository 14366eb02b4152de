import logging
from logging.handlers import RotatingFileHandler
from pathlib import Path

from herdscent.logs import configure_structlog, json_formatter


def find_project_dir(path: Path) -> Path:
    if path.is_dir() and path.joinpath("pyproject.toml").exists():
        return path
    return find_project_dir(path.parent)


def setup_log(log_file_name: str) -> None:
    """Test runs log every event, debug included, to target/<name>.log."""
    target_dir = find_project_dir(Path(__file__).resolve()).joinpath("target")
    target_dir.mkdir(exist_ok=True)

    configure_structlog()

    # Engine runs log per generation; rotate every 100MB and keep 3 backups
    handler = RotatingFileHandler(
        target_dir.joinpath(f"{log_file_name}.log"),
        maxBytes=100 * 1024 * 1024,
        backupCount=3,
    )
    handler.setFormatter(json_formatter())

    logging.basicConfig(handlers=[handler], level=logging.DEBUG)
