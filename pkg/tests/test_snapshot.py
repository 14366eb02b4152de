import json
from pathlib import Path

import numpy as np
import pytest

from herdscent.errors import SnapshotFormatError, SnapshotMissingError
from herdscent.snapshot import load_snapshot, save_snapshot
from herdscent.territories import Clustering, ClusteringConfig, cluster_corpus
from herdscent.text import VectorSpace, tfidf_vectorize

DIGEST = "0" * 64


@pytest.fixture(name="space")
def space_fixture() -> VectorSpace:
    return tfidf_vectorize(
        [
            "kiwi mango",
            "the of",
            "kiwi papaya",
            "guava durian",
            "durian lychee",
            "mango kiwi kiwi",
        ]
    )


@pytest.fixture(name="clustering")
def clustering_fixture(space: VectorSpace) -> Clustering:
    return cluster_corpus(
        space, ClusteringConfig(k=2, restarts=3), np.random.default_rng(1)
    )


def test_round_trip(tmp_path: Path, space: VectorSpace, clustering: Clustering) -> None:
    path = tmp_path.joinpath("clusters.json")
    save_snapshot(clustering, path, DIGEST)
    loaded = load_snapshot(path, space, DIGEST)
    assert loaded.centroids == clustering.centroids
    assert loaded.assignment == clustering.assignment
    assert loaded.centroid_distance == pytest.approx(clustering.centroid_distance)
    assert loaded.positions == clustering.positions
    assert loaded.has_overflow


def test_missing_snapshot(tmp_path: Path, space: VectorSpace) -> None:
    with pytest.raises(SnapshotMissingError):
        load_snapshot(tmp_path.joinpath("absent.json"), space, DIGEST)


def edit_snapshot(path: Path, **changes: object) -> None:
    document = json.loads(path.read_text())
    document.update(changes)
    path.write_text(json.dumps(document))


@pytest.mark.parametrize(
    "changes",
    [
        {"format": "other"},
        {"version": 2},
        {"corpus_digest": "f" * 64},
        {"k": "two"},
        {"k": 3},
        {"territories": "none"},
        {"iterations": None},
    ],
)
def test_rejects_bad_documents(
    tmp_path: Path,
    space: VectorSpace,
    clustering: Clustering,
    changes: dict[str, object],
) -> None:
    path = tmp_path.joinpath("clusters.json")
    save_snapshot(clustering, path, DIGEST)
    edit_snapshot(path, **changes)
    with pytest.raises(SnapshotFormatError):
        load_snapshot(path, space, DIGEST)


def test_rejects_edge_in_two_territories(
    tmp_path: Path, space: VectorSpace, clustering: Clustering
) -> None:
    path = tmp_path.joinpath("clusters.json")
    save_snapshot(clustering, path, DIGEST)
    document = json.loads(path.read_text())
    territories = document["territories"]
    territories[0]["members"].append(territories[1]["members"][0])
    path.write_text(json.dumps(document))
    with pytest.raises(SnapshotFormatError):
        load_snapshot(path, space, DIGEST)


def test_rejects_unassigned_edge(
    tmp_path: Path, space: VectorSpace, clustering: Clustering
) -> None:
    path = tmp_path.joinpath("clusters.json")
    save_snapshot(clustering, path, DIGEST)
    document = json.loads(path.read_text())
    document["territories"][-1]["members"] = []
    path.write_text(json.dumps(document))
    with pytest.raises(SnapshotFormatError):
        load_snapshot(path, space, DIGEST)


def test_rejects_invalid_json(tmp_path: Path, space: VectorSpace) -> None:
    path = tmp_path.joinpath("clusters.json")
    path.write_text("{not json")
    with pytest.raises(SnapshotFormatError):
        load_snapshot(path, space, DIGEST)
