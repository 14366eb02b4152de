import csv
import json
from pathlib import Path
from typing import Any, Iterable, TextIO

import structlog

from ..events import Event
from ..units import herdscent_ureg, seconds
from .config import parse_engine
from .experiment import EngineSummary, QueryRow, RunReport, SweepCell

log = structlog.get_logger()

REPORT_COLUMNS = (
    "engine",
    "run",
    "query_index",
    "seed",
    "interest_terms",
    "score",
    "depth",
    "generations",
    "converged_generation",
    "migrations",
    "best_path",
    "best_texts",
)
CURVE_COLUMNS = ("engine", "run", "query_index", "generation", "best_fitness")
TIMING_COLUMNS = ("engine", "run", "query_index", "wall_time_s")


def sidecar(path: Path, kind: str) -> Path:
    """``report.csv`` -> ``report.<kind>``."""
    return path.with_name(f"{path.stem}.{kind}")


def _writer(f: TextIO) -> Any:
    return csv.writer(f, lineterminator="\n")


def write_report(report: RunReport, path: Path) -> None:
    """Writes the query rows plus three sidecars.

    ``<stem>.params.txt`` echoes every parameter, ``<stem>.curves.csv``
    holds the best-so-far fitness per generation in long format and
    ``<stem>.timing.csv`` the search wall times. Everything except the
    timing file is byte-identical for identical runs. Floats are written
    with full precision.
    """
    with path.open("w", encoding="utf-8", newline="") as f:
        writer = _writer(f)
        writer.writerow(REPORT_COLUMNS)
        for row in report.rows:
            writer.writerow(
                [
                    str(row.engine),
                    row.run,
                    row.query_index,
                    row.seed,
                    " ".join(row.interest_terms),
                    repr(row.score),
                    row.depth,
                    row.generations,
                    row.converged_generation,
                    row.migrations,
                    " ".join(str(e) for e in row.best_path),
                    json.dumps(list(row.best_texts), ensure_ascii=False),
                ]
            )

    with sidecar(path, "params.txt").open("w", encoding="utf-8", newline="\n") as f:
        f.write(f"# corpus_digest = {report.corpus_digest}\n")
        f.write(f"# seeds = {' '.join(str(s) for s in report.seeds)}\n")
        for key, value in report.params:
            f.write(f"{key} = {value}\n")

    with sidecar(path, "curves.csv").open("w", encoding="utf-8", newline="") as f:
        writer = _writer(f)
        writer.writerow(CURVE_COLUMNS)
        for row in report.rows:
            for generation, value in enumerate(row.curve, start=1):
                writer.writerow(
                    [str(row.engine), row.run, row.query_index, generation, repr(value)]
                )

    with sidecar(path, "timing.csv").open("w", encoding="utf-8", newline="") as f:
        writer = _writer(f)
        writer.writerow(TIMING_COLUMNS)
        for row in report.rows:
            writer.writerow(
                [
                    str(row.engine),
                    row.run,
                    row.query_index,
                    repr(seconds(row.wall_time)),
                ]
            )
    log.info(event=Event.REPORT_WRITTEN, path=str(path), rows=len(report.rows))


def _read_rows(path: Path) -> list[dict[str, str]]:
    with path.open(encoding="utf-8", newline="") as f:
        return list(csv.DictReader(f))


def read_report(path: Path) -> RunReport:
    """Reads back a report written by :py:func:`write_report`."""
    curves: dict[tuple[str, str, str], list[float]] = {}
    for entry in _read_rows(sidecar(path, "curves.csv")):
        key = (entry["engine"], entry["run"], entry["query_index"])
        curves.setdefault(key, []).append(float(entry["best_fitness"]))
    timings: dict[tuple[str, str, str], float] = {}
    timing_path = sidecar(path, "timing.csv")
    if timing_path.exists():
        for entry in _read_rows(timing_path):
            key = (entry["engine"], entry["run"], entry["query_index"])
            timings[key] = float(entry["wall_time_s"])

    digest = ""
    seeds: tuple[int, ...] = ()
    params = []
    for line in sidecar(path, "params.txt").read_text(encoding="utf-8").splitlines():
        key, _, value = line.lstrip("# ").partition(" = ")
        if line.startswith("#"):
            if key == "corpus_digest":
                digest = value
            elif key == "seeds":
                seeds = tuple(int(s) for s in value.split())
        elif key:
            params.append((key, value))

    rows = []
    for entry in _read_rows(path):
        key = (entry["engine"], entry["run"], entry["query_index"])
        rows.append(
            QueryRow(
                engine=parse_engine(entry["engine"]),
                run=int(entry["run"]),
                query_index=int(entry["query_index"]),
                seed=int(entry["seed"]),
                interest_terms=tuple(entry["interest_terms"].split()),
                score=float(entry["score"]),
                depth=int(entry["depth"]),
                generations=int(entry["generations"]),
                converged_generation=int(entry["converged_generation"]),
                migrations=int(entry["migrations"]),
                best_path=tuple(int(e) for e in entry["best_path"].split()),
                best_texts=tuple(json.loads(entry["best_texts"])),
                curve=tuple(curves.get(key, [])),
                wall_time=timings.get(key, 0.0) * herdscent_ureg.second,
            )
        )
    return RunReport(
        params=tuple(params), seeds=seeds, corpus_digest=digest, rows=tuple(rows)
    )


def write_summary(summaries: Iterable[EngineSummary], path: Path) -> None:
    with path.open("w", encoding="utf-8", newline="") as f:
        writer = _writer(f)
        writer.writerow(
            (
                "engine",
                "rows",
                "median_score",
                "median_wall_time_s",
                "median_depth",
                "median_converged_generation",
            )
        )
        for summary in summaries:
            writer.writerow(
                [
                    str(summary.engine),
                    summary.rows,
                    repr(summary.median_score),
                    repr(seconds(summary.median_wall_time)),
                    repr(float(summary.median_depth)),
                    repr(float(summary.median_converged_generation)),
                ]
            )


def write_sweep(
    cells: Iterable[SweepCell], first: str, second: str, path: Path
) -> None:
    with path.open("w", encoding="utf-8", newline="") as f:
        writer = _writer(f)
        writer.writerow((first, second, "runs", "mean_score", "mean_wall_time_s"))
        for cell in cells:
            writer.writerow(
                [
                    cell.first_value,
                    cell.second_value,
                    cell.runs,
                    repr(cell.mean_score),
                    repr(seconds(cell.mean_wall_time)),
                ]
            )
