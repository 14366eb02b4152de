import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
import structlog
from numpy.typing import NDArray
from scipy.sparse import csr_matrix

from .errors import InvalidPositionError, TooManyCentroidsError
from .events import Event
from .graph import SocialGraph
from .text import VectorSpace

log = structlog.get_logger()


@dataclass(frozen=True, kw_only=True)
class ClusteringConfig:
    k: int = 55
    max_iterations: int = 100
    #: independent k-means runs; the lowest WSS wins
    restarts: int = 1
    wss_squared: bool = False

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError(f"k must be at least 1, got {self.k}.")
        if self.max_iterations < 0:
            raise ValueError(
                f"max_iterations must not be negative, got {self.max_iterations}."
            )
        if self.restarts < 1:
            raise ValueError(f"restarts must be at least 1, got {self.restarts}.")


@dataclass(frozen=True, kw_only=True)
class Territory:
    cluster_id: int
    #: None for the overflow territory of empty-vector posts
    centroid_edge: None | int
    #: member edge ids in semantic position order
    members: tuple[int, ...]
    #: inclusive semantic position range
    position_range: tuple[int, int]

    @property
    def overflow(self) -> bool:
        return self.centroid_edge is None

    @property
    def size(self) -> int:
        return len(self.members)


@dataclass(frozen=True, kw_only=True)
class SemanticPositions:
    """Bijection between content edges and the integers ``1..m``.

    Territories occupy consecutive ranges in cluster id order. Inside a
    territory positions grow with the distance to its centroid.
    """

    #: ``order[p - 1]`` is the edge at position ``p``
    order: tuple[int, ...]
    #: ``positions[e]`` is the position of edge ``e``
    positions: tuple[int, ...]
    ranges: tuple[tuple[int, int], ...]

    @property
    def m(self) -> int:
        return len(self.order)

    def edge_at(self, position: int) -> int:
        if not 1 <= position <= self.m:
            raise InvalidPositionError(
                f"Position {position} is out of range. Positions must be in a range [1,{self.m}]"
            )
        return self.order[position - 1]

    def position_of(self, edge_id: int) -> int:
        return self.positions[edge_id]


@dataclass(frozen=True, kw_only=True)
class TerritorySizes:
    minimum: int
    median: float
    maximum: int


@dataclass(frozen=True, kw_only=True)
class Clustering:
    """Result of territory clustering over all ``m`` content edges.

    Edges with an empty vector never take part in k-means. They are
    labelled ``k`` and form an overflow territory laid out after all
    real territories.
    """

    centroids: tuple[int, ...]
    #: cluster id of every content edge
    assignment: tuple[int, ...]
    #: distance of every content edge to its centroid; 0 for overflow edges
    centroid_distance: tuple[float, ...]
    converged: bool
    iterations: int

    def __post_init__(self) -> None:
        if len(self.assignment) != len(self.centroid_distance):
            raise ValueError(
                f"Assignment covers {len(self.assignment)} edges but distances cover {len(self.centroid_distance)}."
            )
        for edge_id, label in enumerate(self.assignment):
            if not 0 <= label <= self.k:
                raise ValueError(
                    f"Edge {edge_id} is assigned to cluster {label}. Cluster ids must be in a range [0,{self.k}]"
                )
        for cluster_id, centroid in enumerate(self.centroids):
            if self.assignment[centroid] != cluster_id:
                raise ValueError(
                    f"Centroid {centroid} of cluster {cluster_id} is assigned to cluster {self.assignment[centroid]}."
                )

    @property
    def k(self) -> int:
        return len(self.centroids)

    @property
    def m(self) -> int:
        return len(self.assignment)

    @property
    def has_overflow(self) -> bool:
        return self.k in self.assignment

    def members(self, cluster_id: int) -> tuple[int, ...]:
        return tuple(
            e for e, label in enumerate(self.assignment) if label == cluster_id
        )

    @cached_property
    def positions(self) -> SemanticPositions:
        return assign_semantic_positions(self)

    @cached_property
    def territories(self) -> tuple[Territory, ...]:
        positions = self.positions
        result = []
        for cluster_id, (lo, hi) in enumerate(positions.ranges):
            result.append(
                Territory(
                    cluster_id=cluster_id,
                    centroid_edge=(
                        self.centroids[cluster_id] if cluster_id < self.k else None
                    ),
                    members=positions.order[lo - 1 : hi],
                    position_range=(lo, hi),
                )
            )
        return tuple(result)

    @property
    def real_territories(self) -> tuple[Territory, ...]:
        return self.territories[: self.k]


def _squared_distances(
    points: csr_matrix, center: NDArray[np.float64]
) -> NDArray[np.float64]:
    """Squared Euclidean distance of every row of ``points`` to a dense center.

    Only the row supports are visited, so the cost is proportional to the
    nonzeros of ``points`` plus the length of ``center``.
    """
    at = center[points.indices]
    contrib = (points.data - at) ** 2 - at**2
    row_of_entry = np.repeat(np.arange(points.shape[0]), np.diff(points.indptr))
    per_row = np.bincount(row_of_entry, weights=contrib, minlength=points.shape[0])
    return np.maximum(float(center @ center) + per_row, 0.0)


def _sparse_row(points: csr_matrix, row: int) -> csr_matrix:
    return csr_matrix(points[row], dtype=np.float64)


def _squared_distances_to(
    points: csr_matrix, center: csr_matrix
) -> NDArray[np.float64]:
    """Squared Euclidean distance of every row of ``points`` to a sparse row.

    Summed from the explicit differences, so mirrored rows at equal
    distance compare equal. Assignment ties depend on that.
    """
    tiled = csr_matrix(np.ones((points.shape[0], 1), dtype=np.float64)) @ center
    difference = csr_matrix(points - tiled)
    difference.sort_indices()
    return np.asarray(difference.multiply(difference).sum(axis=1)).ravel()


def _rows(points: csr_matrix, rows: None | Sequence[int]) -> NDArray[np.intp]:
    if rows is None:
        return np.arange(points.shape[0])
    return np.asarray(rows, dtype=np.intp)


def init_centroids(
    points: csr_matrix,
    k: int,
    rng: np.random.Generator,
    rows: None | Sequence[int] = None,
) -> tuple[int, ...]:
    """Draws ``k`` distinct rows uniformly without replacement."""
    eligible = _rows(points, rows)
    if k < 1:
        raise ValueError(f"k must be at least 1, got {k}.")
    if k > len(eligible):
        raise TooManyCentroidsError(
            f"Cannot choose {k} centroids among {len(eligible)} posts with a non-empty vector."
        )
    return tuple(int(c) for c in rng.choice(eligible, size=k, replace=False))


def assign_clusters(
    points: csr_matrix,
    centroids: Sequence[int],
    rows: None | Sequence[int] = None,
) -> NDArray[np.intp]:
    """Labels each row with the cluster of its nearest centroid.

    The result is aligned with ``rows``. Ties go to the lowest cluster
    id, and a centroid row always lands in its own cluster.
    """
    if not centroids:
        raise ValueError("At least one centroid is needed.")
    participating = _rows(points, rows)
    sub = points[participating]
    distances = np.empty((len(participating), len(centroids)), dtype=np.float64)
    for cluster_id, centroid in enumerate(centroids):
        distances[:, cluster_id] = _squared_distances_to(
            sub, _sparse_row(points, centroid)
        )
    labels = np.argmin(distances, axis=1)
    index_of = {int(row): i for i, row in enumerate(participating)}
    for cluster_id, centroid in enumerate(centroids):
        if centroid in index_of:
            labels[index_of[centroid]] = cluster_id
    return labels


def update_centroid(points: csr_matrix, members: Sequence[int]) -> int:
    """The member nearest to the cluster mean. Ties go to the lowest row id."""
    if not members:
        raise ValueError("Cannot update the centroid of an empty cluster.")
    ordered = np.sort(np.asarray(members, dtype=np.intp))
    sub = points[ordered]
    mean = np.asarray(sub.mean(axis=0), dtype=np.float64).ravel()
    return int(ordered[int(np.argmin(_squared_distances(sub, mean)))])


def update_centroids(
    points: csr_matrix,
    labels: NDArray[np.intp],
    centroids: Sequence[int],
    rows: None | Sequence[int] = None,
) -> tuple[int, ...]:
    """Medoid step for every cluster.

    An empty cluster is re-seeded with the member of the largest cluster
    that lies farthest from that cluster's current centroid.
    """
    participating = _rows(points, rows)
    members = [participating[labels == j] for j in range(len(centroids))]
    updated = [
        update_centroid(points, list(rows_j)) if len(rows_j) else -1
        for rows_j in members
    ]
    for cluster_id, centroid in enumerate(updated):
        if centroid >= 0:
            continue
        largest = max(range(len(members)), key=lambda j: (len(members[j]), -j))
        donors = np.sort(members[largest])
        unused = donors[~np.isin(donors, updated)]
        if len(unused):
            donors = unused
        distances = _squared_distances_to(
            points[donors], _sparse_row(points, centroids[largest])
        )
        # argmax on the reversed array so ties go to the lowest row id
        farthest = int(donors[len(donors) - 1 - int(np.argmax(distances[::-1]))])
        updated[cluster_id] = farthest
        log.debug(
            event=Event.KMEANS_RESEEDED,
            cluster_id=cluster_id,
            donor_cluster=largest,
            centroid=farthest,
        )
    return tuple(updated)


def _build_clustering(
    points: csr_matrix,
    centroids: Sequence[int],
    labels: NDArray[np.intp],
    rows: NDArray[np.intp],
    converged: bool,
    iterations: int,
) -> Clustering:
    m = points.shape[0]
    k = len(centroids)
    assignment = np.full(m, k, dtype=np.intp)
    assignment[rows] = labels
    distance = np.zeros(m, dtype=np.float64)
    for cluster_id, centroid in enumerate(centroids):
        members = rows[labels == cluster_id]
        squared = _squared_distances_to(
            points[members], _sparse_row(points, centroid)
        )
        distance[members] = np.sqrt(squared)
        distance[centroid] = 0.0
    return Clustering(
        centroids=tuple(int(c) for c in centroids),
        assignment=tuple(int(a) for a in assignment),
        centroid_distance=tuple(float(d) for d in distance),
        converged=converged,
        iterations=iterations,
    )


def rebuild_clustering(
    points: csr_matrix,
    centroids: Sequence[int],
    assignment: Sequence[int],
    converged: bool,
    iterations: int,
) -> Clustering:
    """Recomputes centroid distances for a known assignment, e.g. a loaded snapshot."""
    full = np.asarray(assignment, dtype=np.intp)
    rows = np.flatnonzero(full < len(centroids))
    return _build_clustering(points, centroids, full[rows], rows, converged, iterations)


def run_kmeans(
    points: csr_matrix,
    k: int,
    rng: np.random.Generator,
    max_iterations: int = 100,
    rows: None | Sequence[int] = None,
) -> Clustering:
    """Medoid k-means: assign, then move each centroid to the member
    nearest to the cluster mean, until no assignment changes or
    ``max_iterations`` updates have run.

    Rows left out of ``rows`` end up in the overflow territory.
    """
    participating = _rows(points, rows)
    centroids = init_centroids(points, k, rng, participating)
    labels = assign_clusters(points, centroids, participating)
    converged = False
    iterations = 0
    while iterations < max_iterations:
        centroids = update_centroids(points, labels, centroids, participating)
        new_labels = assign_clusters(points, centroids, participating)
        iterations += 1
        changed = int(np.count_nonzero(new_labels != labels))
        labels = new_labels
        log.debug(event=Event.KMEANS_ITERATION, iteration=iterations, changed=changed)
        if changed == 0:
            converged = True
            break
    log.debug(
        event=Event.KMEANS_CONVERGED, k=k, converged=converged, iterations=iterations
    )
    return _build_clustering(
        points, centroids, labels, participating, converged, iterations
    )


def wss(clustering: Clustering, squared: bool = False) -> float:
    """Sum over real territories of member distances to the centroid."""
    k = clustering.k
    return math.fsum(
        d * d if squared else d
        for d, label in zip(clustering.centroid_distance, clustering.assignment)
        if label < k
    )


def nonempty_rows(space: VectorSpace) -> list[int]:
    return [e for e, vector in enumerate(space.vectors) if vector]


def cluster_corpus(
    space: VectorSpace,
    config: ClusteringConfig,
    rng: np.random.Generator,
) -> Clustering:
    """Clusters the posts of a vector space, keeping the best of ``config.restarts`` runs."""
    rows = nonempty_rows(space)
    best: None | Clustering = None
    best_wss = math.inf
    for _ in range(config.restarts):
        candidate = run_kmeans(space.matrix, config.k, rng, config.max_iterations, rows)
        candidate_wss = wss(candidate, config.wss_squared)
        if candidate_wss < best_wss:
            best, best_wss = candidate, candidate_wss
    assert best is not None
    sizes = territory_sizes(best)
    log.info(
        event=Event.KMEANS_CONVERGED,
        k=best.k,
        converged=best.converged,
        iterations=best.iterations,
        wss=best_wss,
        smallest=sizes.minimum,
        median=sizes.median,
        largest=sizes.maximum,
        overflow=len(best.assignment) - len(rows),
    )
    return best


def scan_k(
    points: csr_matrix,
    k_values: Sequence[int],
    rng: np.random.Generator,
    max_iterations: int = 100,
    rows: None | Sequence[int] = None,
    squared: bool = False,
    restarts: int = 1,
) -> list[tuple[int, float]]:
    """WSS for each ``k``, in input order, for elbow plots."""
    if not k_values:
        raise ValueError("k_values must not be empty.")
    result = []
    for k in k_values:
        scores = [
            wss(run_kmeans(points, k, rng, max_iterations, rows), squared)
            for _ in range(restarts)
        ]
        result.append((k, min(scores)))
    return result


def find_elbow(scan: Sequence[tuple[int, float]]) -> int:
    """The ``k`` where the WSS curve bends most (largest second difference).

    With fewer than three points there is no bend and the first ``k`` is
    returned.
    """
    if not scan:
        raise ValueError("Cannot find the elbow of an empty scan.")
    if len(scan) < 3:
        return scan[0][0]
    values = [w for _, w in scan]
    bends = [
        (values[i - 1] - values[i]) - (values[i] - values[i + 1])
        for i in range(1, len(values) - 1)
    ]
    return scan[1 + int(np.argmax(bends))][0]


def assign_semantic_positions(clustering: Clustering) -> SemanticPositions:
    k = clustering.k
    by_cluster: list[list[int]] = [[] for _ in range(k + 1)]
    for edge_id, label in enumerate(clustering.assignment):
        by_cluster[label].append(edge_id)
    if not by_cluster[k]:
        by_cluster.pop()

    order: list[int] = []
    ranges: list[tuple[int, int]] = []
    for cluster_id, members in enumerate(by_cluster):
        centroid = clustering.centroids[cluster_id] if cluster_id < k else -1
        members.sort(
            key=lambda e: (clustering.centroid_distance[e], e != centroid, e)
        )
        ranges.append((len(order) + 1, len(order) + len(members)))
        order.extend(members)

    positions = [0] * len(order)
    for index, edge_id in enumerate(order):
        positions[edge_id] = index + 1
    return SemanticPositions(
        order=tuple(order), positions=tuple(positions), ranges=tuple(ranges)
    )


def territory_sizes(clustering: Clustering) -> TerritorySizes:
    sizes = [t.size for t in clustering.real_territories]
    return TerritorySizes(
        minimum=min(sizes), median=float(np.median(sizes)), maximum=max(sizes)
    )


def neighbor_territories(
    graph: SocialGraph, clustering: Clustering
) -> dict[int, frozenset[int]]:
    """Territories sharing a user through their content edges.

    Two territories are neighbors when an edge of one is adjacent to an
    edge of the other. The overflow territory is left out.
    """
    k = clustering.k
    neighbors: dict[int, set[int]] = {cluster_id: set() for cluster_id in range(k)}
    for user in sorted(graph.users):
        edge_ids = graph.incident_content_edges(user)
        touching = {clustering.assignment[e] for e in edge_ids} - {k}
        for cluster_id in touching:
            neighbors[cluster_id] |= touching - {cluster_id}
    return {cluster_id: frozenset(n) for cluster_id, n in neighbors.items()}
