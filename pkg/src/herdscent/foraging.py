import math
from dataclasses import dataclass
from typing import AbstractSet, Mapping, Protocol

import numpy as np
from numpy.typing import NDArray

from .errors import EmptyPathError, InvalidPositionError
from .graph import SocialGraph
from .text import InterestVector, TermVector, VectorSpace, cosine_similarity


class PositionSpace(Protocol):
    """Maps integer positions ``1..m`` onto content edge ids."""

    @property
    def m(self) -> int: ...

    def edge_at(self, position: int) -> int: ...

    def position_of(self, edge_id: int) -> int: ...


@dataclass(frozen=True)
class RawPositions:
    """Position ``p`` is content edge ``p - 1``."""

    m: int

    def edge_at(self, position: int) -> int:
        if not 1 <= position <= self.m:
            raise InvalidPositionError(
                f"Position {position} is out of range. Positions must be in a range [1,{self.m}]"
            )
        return position - 1

    def position_of(self, edge_id: int) -> int:
        return edge_id + 1


@dataclass(frozen=True, kw_only=True)
class SurfingPath:
    edges: tuple[int, ...]
    similarities: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.edges) != len(self.similarities):
            raise ValueError(
                f"Path has {len(self.edges)} edges but {len(self.similarities)} similarities."
            )
        if len(set(self.edges)) != len(self.edges):
            raise ValueError(f"Path {self.edges} repeats an edge.")
        for before, after in zip(self.similarities, self.similarities[1:]):
            if not after > before:
                raise ValueError(
                    f"Path similarities {self.similarities} are not strictly increasing."
                )

    @property
    def depth(self) -> int:
        return len(self.edges)

    @property
    def terminal(self) -> int:
        if not self.edges:
            raise EmptyPathError("An empty path has no terminal edge.")
        return self.edges[-1]

    @property
    def fitness(self) -> float:
        return path_fitness(self)


def path_fitness(path: SurfingPath) -> float:
    """Similarity of the last edge with the interests."""
    if not path.edges:
        raise EmptyPathError("Cannot evaluate the fitness of an empty path.")
    return path.similarities[-1]


def info_scent(
    current: TermVector, candidate: TermVector, interests: TermVector
) -> float:
    return cosine_similarity(candidate, interests) - cosine_similarity(
        current, interests
    )


def selection_probabilities(scents: Mapping[int, float]) -> dict[int, float]:
    """Normalizes the positive scents; non-positive candidates get nothing.

    An empty result means the surfer stops.
    """
    positive = {edge: s for edge, s in scents.items() if s > 0}
    total = math.fsum(positive.values())
    return {edge: s / total for edge, s in positive.items()}


def sample_edge(probabilities: Mapping[int, float], rng: np.random.Generator) -> int:
    """Inverse-CDF draw over the candidates sorted by edge id."""
    candidates = sorted(probabilities)
    cumulative = np.cumsum([probabilities[e] for e in candidates])
    threshold = rng.random() * cumulative[-1]
    index = int(np.searchsorted(cumulative, threshold, side="right"))
    return candidates[min(index, len(candidates) - 1)]


@dataclass(frozen=True, kw_only=True)
class ScentField:
    """Similarity of every content edge with one query, computed once.

    ``space`` and ``query`` are kept for engines that also need distances
    in the vector space. A field built from bare similarities has neither.
    """

    graph: SocialGraph
    similarities: NDArray[np.float64]
    space: None | VectorSpace = None
    query: None | TermVector = None

    def __post_init__(self) -> None:
        if len(self.similarities) != self.graph.m:
            raise ValueError(
                f"Got {len(self.similarities)} similarities for {self.graph.m} content edges."
            )

    @classmethod
    def for_interests(
        cls, graph: SocialGraph, space: VectorSpace, interests: InterestVector
    ) -> "ScentField":
        query = interests.project(space.vocabulary)
        return cls(
            graph=graph,
            similarities=space.similarities(query),
            space=space,
            query=query,
        )

    @property
    def m(self) -> int:
        return self.graph.m

    def similarity(self, edge_id: int) -> float:
        return float(self.similarities[edge_id])

    def scent(self, current: int, candidate: int) -> float:
        return self.similarity(candidate) - self.similarity(current)

    def scents(self, current: int, candidates: AbstractSet[int]) -> dict[int, float]:
        return {c: self.scent(current, c) for c in sorted(candidates)}

    def positive_neighbors(
        self, current: int, exclude: AbstractSet[int] = frozenset()
    ) -> dict[int, float]:
        """Scents of the adjacent edges that improve on ``current``."""
        candidates = self.graph.adjacent_content_edges(current) - exclude
        return {
            c: s for c, s in self.scents(current, candidates).items() if s > 0
        }

    def selection_probabilities(
        self, current: int, exclude: AbstractSet[int] = frozenset()
    ) -> dict[int, float]:
        return selection_probabilities(self.positive_neighbors(current, exclude))


def build_surfing_path(
    start_position: int,
    field: ScentField,
    positions: PositionSpace,
    rng: np.random.Generator,
    max_path_length: None | int = None,
) -> SurfingPath:
    """Walks from the edge at ``start_position`` while some neighbor has
    positive scent, choosing the next edge with the scent-proportional
    rule. Every step strictly improves the similarity, so the walk ends.
    """
    edge = positions.edge_at(start_position)
    edges = [edge]
    similarities = [field.similarity(edge)]
    visited = {edge}
    while max_path_length is None or len(edges) < max_path_length:
        probabilities = field.selection_probabilities(edge, visited)
        if not probabilities:
            break
        edge = sample_edge(probabilities, rng)
        edges.append(edge)
        similarities.append(field.similarity(edge))
        visited.add(edge)
    return SurfingPath(edges=tuple(edges), similarities=tuple(similarities))
