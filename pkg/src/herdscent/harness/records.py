import hashlib
import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Iterable

import structlog

from ..errors import MalformedCorpusError, UnknownEdgeKindError
from ..events import Event
from ..graph import EdgeKind, SocialGraph, build_graph

log = structlog.get_logger()

#: share of malformed lines above which a corpus is rejected
MALFORMED_LIMIT = 0.1


@dataclass(frozen=True, kw_only=True)
class PostRecord:
    """One line of a JSON Lines corpus.

    ``target_user`` names the user an interaction points at (reply,
    mention, follow, friendship). ``parent_post`` is the id of the post a
    repost or reply refers to.
    """

    id: str
    author: str
    kind: EdgeKind
    text: str = ""
    target_user: None | str = None
    parent_post: None | str = None

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("Record id must not be empty.")
        if not self.author:
            raise ValueError(f"Record {self.id} has an empty author.")
        if not self.kind.is_content and not self.target_user:
            raise ValueError(
                f"Record {self.id} of kind {self.kind} needs a target_user."
            )

    def to_json(self) -> str:
        payload = asdict(self)
        payload["kind"] = str(self.kind)
        return json.dumps(payload, ensure_ascii=False, sort_keys=True)


def parse_edge_kind(name: str) -> EdgeKind:
    try:
        return EdgeKind(name.strip().lower())
    except ValueError as e:
        raise UnknownEdgeKindError(
            f"Unknown edge kind {name!r}. Kind must be one of {[str(k) for k in EdgeKind]}"
        ) from e


def _optional_str(payload: dict[str, Any], key: str) -> None | str:
    value = payload.get(key)
    if value is None or value == "":
        return None
    if not isinstance(value, str):
        raise ValueError(f"Field {key} must be a string, got {value!r}.")
    return value


def parse_record(line: str) -> PostRecord:
    """Parses one JSON object into a :py:class:`PostRecord`.

    Raises ValueError (or :py:class:`UnknownEdgeKindError`) when the line
    is not a valid record.
    """
    payload = json.loads(line)
    if not isinstance(payload, dict):
        raise ValueError(f"Expected a JSON object, got {type(payload).__name__}.")
    for key in ("id", "author", "kind"):
        if not isinstance(payload.get(key), str):
            raise ValueError(f"Field {key} is missing or not a string.")
    text = payload.get("text", "")
    if not isinstance(text, str):
        raise ValueError(f"Field text must be a string, got {text!r}.")
    return PostRecord(
        id=payload["id"],
        author=payload["author"],
        kind=parse_edge_kind(payload["kind"]),
        text=text,
        target_user=_optional_str(payload, "target_user"),
        parent_post=_optional_str(payload, "parent_post"),
    )


def corpus_digest(records: Iterable[PostRecord]) -> str:
    """SHA-256 over the canonical JSON of the parsed records, in order."""
    digest = hashlib.sha256()
    for record in records:
        digest.update(record.to_json().encode("utf-8"))
        digest.update(b"\n")
    return digest.hexdigest()


def write_corpus(records: Iterable[PostRecord], path: Path) -> None:
    with path.open("w", encoding="utf-8", newline="\n") as f:
        for record in records:
            f.write(record.to_json())
            f.write("\n")


@dataclass(frozen=True, kw_only=True)
class Corpus:
    records: tuple[PostRecord, ...]
    graph: SocialGraph
    #: lines that could not be parsed into a record
    malformed: int
    digest: str

    @property
    def lines(self) -> int:
        return len(self.records) + self.malformed


def read_records(path: Path) -> tuple[list[PostRecord], int]:
    """Parses a JSON Lines corpus, skipping blank lines.

    Returns the records and the number of malformed lines. Raises
    :py:class:`MalformedCorpusError` when more than 10% of the lines are
    malformed.
    """
    records: list[PostRecord] = []
    malformed = 0
    with path.open("rb") as f:
        for line_number, raw in enumerate(f, start=1):
            line = raw.decode("utf-8", errors="ignore").strip()
            if not line:
                continue
            try:
                records.append(parse_record(line))
            except (ValueError, UnknownEdgeKindError) as e:
                malformed += 1
                log.warning(
                    event=Event.MALFORMED_RECORD,
                    path=str(path),
                    line=line_number,
                    reason=str(e),
                )
    total = len(records) + malformed
    if total and malformed > MALFORMED_LIMIT * total:
        raise MalformedCorpusError(
            f"{malformed} of {total} lines in {path} are malformed."
        )
    return records, malformed


def ingest(path: Path) -> Corpus:
    records, malformed = read_records(path)
    graph = build_graph(records)
    corpus = Corpus(
        records=tuple(records),
        graph=graph,
        malformed=malformed,
        digest=corpus_digest(records),
    )
    # An empty corpus is legal but almost always a mistake.
    emit = log.info if records else log.warning
    emit(
        event=Event.INGEST_FINISHED,
        path=str(path),
        records=len(records),
        malformed=malformed,
        content_edges=graph.m,
        structural_edges=len(graph.structural_edges),
        dangling_parents=graph.dangling_parents,
    )
    return corpus
