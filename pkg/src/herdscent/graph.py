import enum
from dataclasses import dataclass, field
from enum import StrEnum
from itertools import chain
from typing import TYPE_CHECKING, Iterator, Sequence

import networkx as nx
import structlog

from .errors import DuplicatePostError, EdgeNotInGraphError
from .events import Event

if TYPE_CHECKING:
    from .harness.records import PostRecord

log = structlog.get_logger()


@enum.unique
class EdgeKind(StrEnum):
    POST = "post"
    REPOST = "repost"
    REPLY = "reply"
    MENTION = "mention"
    FOLLOW = "follow"
    FRIENDSHIP = "friendship"

    @property
    def is_content(self) -> bool:
        """Post, repost, reply and mention edges carry a post."""
        return self in CONTENT_KINDS


CONTENT_KINDS = frozenset(
    [EdgeKind.POST, EdgeKind.REPOST, EdgeKind.REPLY, EdgeKind.MENTION]
)


@dataclass(frozen=True, kw_only=True)
class ContentEdge:
    edge_id: int
    post_id: str
    source: str
    target: str
    kind: EdgeKind
    raw_text: str

    @property
    def endpoints(self) -> frozenset[str]:
        return frozenset((self.source, self.target))


@dataclass(frozen=True, kw_only=True)
class StructuralEdge:
    post_id: str
    source: str
    target: str
    kind: EdgeKind


@dataclass(frozen=True, kw_only=True)
class SocialGraph:
    """Directed multigraph of users and their interactions.

    Content-sharing edges are numbered densely ``0..m-1`` in input
    order. Storage is directed, but the foraging neighborhood is the
    undirected shared-vertex rule. The graph is never mutated after
    :py:func:`build_graph` returns.
    """

    users: frozenset[str]
    content_edges: tuple[ContentEdge, ...]
    structural_edges: tuple[StructuralEdge, ...]
    multigraph: nx.MultiDiGraph
    dangling_parents: int = 0

    _adjacency_cache: dict[int, frozenset[int]] = field(
        default_factory=dict, repr=False, compare=False
    )

    @property
    def m(self) -> int:
        return len(self.content_edges)

    def __iter__(self) -> Iterator[ContentEdge]:
        return iter(self.content_edges)

    def edge(self, edge_id: int) -> ContentEdge:
        if not 0 <= edge_id < self.m:
            raise EdgeNotInGraphError(
                f"Edge {edge_id} is not a content edge of this graph. Edge ids must be in a range [0,{self.m - 1}]"
            )
        return self.content_edges[edge_id]

    def incident_content_edges(self, user: str) -> frozenset[int]:
        """Ids of the content edges leaving or entering ``user``."""
        if user not in self.multigraph:
            return frozenset()
        edges = chain(
            self.multigraph.out_edges(user, data="edge_id"),
            self.multigraph.in_edges(user, data="edge_id"),
        )
        # structural edges carry no edge_id
        return frozenset(e for _, _, e in edges if e is not None)

    def adjacent_content_edges(self, edge_id: int) -> frozenset[int]:
        edge = self.edge(edge_id)
        cached = self._adjacency_cache.get(edge_id)
        if cached is not None:
            return cached
        neighbors: set[int] = set()
        for user in edge.endpoints:
            neighbors.update(self.incident_content_edges(user))
        neighbors.discard(edge_id)
        result = frozenset(neighbors)
        # Dict assignment is atomic, so concurrent readers at worst
        # compute the same set twice.
        self._adjacency_cache[edge_id] = result
        return result


def adjacent_content_edges(graph: SocialGraph, edge_id: int) -> frozenset[int]:
    """Content edges other than ``edge_id`` sharing at least one endpoint with it."""
    return graph.adjacent_content_edges(edge_id)


def build_graph(records: Sequence["PostRecord"]) -> SocialGraph:
    """Builds the social graph, one edge per record.

    Original posts become self-loops on their author. A repost or reply
    whose parent post has not been seen points at ``target_user`` when
    given, otherwise at its own author, and is counted as dangling.
    """
    seen_posts: dict[str, str] = {}
    users: set[str] = set()
    content_edges: list[ContentEdge] = []
    structural_edges: list[StructuralEdge] = []
    multigraph = nx.MultiDiGraph()
    dangling = 0

    for record in records:
        if record.id in seen_posts:
            raise DuplicatePostError(f"Duplicate post id: {record.id}")
        seen_posts[record.id] = record.author
        users.add(record.author)

        if not record.kind.is_content:
            assert record.target_user is not None
            users.add(record.target_user)
            structural_edges.append(
                StructuralEdge(
                    post_id=record.id,
                    source=record.author,
                    target=record.target_user,
                    kind=record.kind,
                )
            )
            multigraph.add_edge(
                record.author, record.target_user, key=record.id, kind=record.kind
            )
            continue

        target = record.target_user
        if record.parent_post is not None:
            parent_author = seen_posts.get(record.parent_post)
            if parent_author is None:
                dangling += 1
                log.debug(
                    event=Event.DANGLING_PARENT,
                    post_id=record.id,
                    parent_post=record.parent_post,
                )
            elif target is None:
                target = parent_author
        if target is None:
            target = record.author
        users.add(target)

        edge = ContentEdge(
            edge_id=len(content_edges),
            post_id=record.id,
            source=record.author,
            target=target,
            kind=record.kind,
            raw_text=record.text,
        )
        content_edges.append(edge)
        multigraph.add_edge(
            edge.source,
            edge.target,
            key=record.id,
            kind=record.kind,
            edge_id=edge.edge_id,
        )

    multigraph.add_nodes_from(users)
    graph = SocialGraph(
        users=frozenset(users),
        content_edges=tuple(content_edges),
        structural_edges=tuple(structural_edges),
        multigraph=multigraph,
        dangling_parents=dangling,
    )
    log.info(
        event=Event.GRAPH_BUILT,
        users=len(graph.users),
        content_edges=graph.m,
        structural_edges=len(graph.structural_edges),
        dangling_parents=dangling,
    )
    return graph
