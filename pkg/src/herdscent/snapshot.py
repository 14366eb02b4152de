import json
from pathlib import Path
from typing import Any

import structlog

from .errors import SnapshotFormatError, SnapshotMissingError
from .events import Event
from .territories import Clustering, rebuild_clustering, wss
from .text import VectorSpace

log = structlog.get_logger()

SNAPSHOT_FORMAT = "herdscent-clustering"
SNAPSHOT_VERSION = 1


def snapshot_document(clustering: Clustering, corpus_digest: str) -> dict[str, Any]:
    return {
        "format": SNAPSHOT_FORMAT,
        "version": SNAPSHOT_VERSION,
        "corpus_digest": corpus_digest,
        "k": clustering.k,
        "converged": clustering.converged,
        "iterations": clustering.iterations,
        "wss": wss(clustering),
        "territories": [
            {
                "cluster_id": t.cluster_id,
                "centroid_edge": t.centroid_edge,
                "members": list(t.members),
                "position_range": list(t.position_range),
            }
            for t in clustering.territories
        ],
        "overflow": clustering.has_overflow,
    }


def save_snapshot(clustering: Clustering, path: Path, corpus_digest: str) -> None:
    document = snapshot_document(clustering, corpus_digest)
    path.write_text(json.dumps(document, indent=1) + "\n", encoding="utf-8")
    log.info(event=Event.SNAPSHOT_SAVED, path=str(path), k=clustering.k)


def _field(document: dict[str, Any], key: str, kind: type) -> Any:
    value = document.get(key)
    if not isinstance(value, kind):
        raise SnapshotFormatError(
            f"Snapshot field {key!r} must be a {kind.__name__}, got {value!r}."
        )
    return value


def load_snapshot(path: Path, space: VectorSpace, corpus_digest: str) -> Clustering:
    """Reads a clustering saved by :py:func:`save_snapshot`.

    The snapshot must come from the same corpus. Centroid distances are
    recomputed from ``space``.
    """
    if not path.exists():
        raise SnapshotMissingError(f"Clustering snapshot {path} does not exist.")
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise SnapshotFormatError(f"Snapshot {path} is not valid JSON: {e}") from e
    if not isinstance(document, dict):
        raise SnapshotFormatError(f"Snapshot {path} must hold a JSON object.")
    if document.get("format") != SNAPSHOT_FORMAT:
        raise SnapshotFormatError(
            f"Snapshot {path} has format {document.get('format')!r}, expected {SNAPSHOT_FORMAT!r}."
        )
    if document.get("version") != SNAPSHOT_VERSION:
        raise SnapshotFormatError(
            f"Snapshot {path} has version {document.get('version')!r}, expected {SNAPSHOT_VERSION}."
        )
    if document.get("corpus_digest") != corpus_digest:
        raise SnapshotFormatError(
            f"Snapshot {path} was built from another corpus (digest {document.get('corpus_digest')!r})."
        )

    k = _field(document, "k", int)
    m = space.m
    assignment = [-1] * m
    centroids: list[int] = []
    entries = _field(document, "territories", list)
    if not all(isinstance(entry, dict) for entry in entries):
        raise SnapshotFormatError(f"Snapshot {path} has a malformed territory entry.")
    for entry in sorted(entries, key=lambda e: _field(e, "cluster_id", int)):
        cluster_id = _field(entry, "cluster_id", int)
        if not 0 <= cluster_id <= k:
            raise SnapshotFormatError(
                f"Territory id {cluster_id} is out of range. It must be in a range [0,{k}]"
            )
        centroid = entry.get("centroid_edge")
        if cluster_id < k:
            if not isinstance(centroid, int):
                raise SnapshotFormatError(
                    f"Territory {cluster_id} has no centroid edge."
                )
            centroids.append(centroid)
        for edge_id in _field(entry, "members", list):
            if not isinstance(edge_id, int) or not 0 <= edge_id < m:
                raise SnapshotFormatError(
                    f"Territory {cluster_id} names edge {edge_id!r}. Edge ids must be in a range [0,{m - 1}]"
                )
            if assignment[edge_id] != -1:
                raise SnapshotFormatError(f"Edge {edge_id} belongs to two territories.")
            assignment[edge_id] = cluster_id
    if len(centroids) != k:
        raise SnapshotFormatError(
            f"Snapshot declares k={k} but lists {len(centroids)} territories with a centroid."
        )
    if -1 in assignment:
        raise SnapshotFormatError(
            f"Edge {assignment.index(-1)} belongs to no territory."
        )
    try:
        clustering = rebuild_clustering(
            space.matrix,
            centroids,
            assignment,
            bool(document.get("converged")),
            _field(document, "iterations", int),
        )
    except ValueError as e:
        raise SnapshotFormatError(f"Snapshot {path} is inconsistent: {e}") from e
    log.info(event=Event.SNAPSHOT_LOADED, path=str(path), k=k)
    return clustering
