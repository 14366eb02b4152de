from dataclasses import dataclass

import numpy as np

from ..graph import EdgeKind
from .config import Query
from .records import PostRecord


@dataclass(frozen=True, kw_only=True)
class SynthConfig:
    """Shape of a planted-topic corpus.

    Topic ``t`` owns the words ``t{t}w0 .. t{t}w{vocabulary - 1}`` and
    its own community of users. Noise words ``n0 ..`` are shared by all
    topics.
    """

    n_posts: int = 4000
    n_topics: int = 3
    vocabulary: int = 40
    words_per_post: int = 8
    noise_ratio: float = 0.1
    noise_vocabulary: int = 30
    users_per_topic: int = 40
    #: share of posts that reply to an earlier post of the same topic
    reply_ratio: float = 0.5
    #: share of posts that mention a user of the same topic
    mention_ratio: float = 0.2
    #: follow edges generated per content post
    follow_ratio: float = 0.05
    seed: int = 0

    def __post_init__(self) -> None:
        counts = (
            "n_posts",
            "n_topics",
            "vocabulary",
            "words_per_post",
            "users_per_topic",
        )
        for name in counts:
            if getattr(self, name) < 1:
                raise ValueError(
                    f"{name} must be at least 1, got {getattr(self, name)}."
                )
        for name in ("noise_ratio", "reply_ratio", "mention_ratio", "follow_ratio"):
            value = getattr(self, name)
            if not 0 <= value <= 1:
                raise ValueError(f"{name} is {value}. It must be in a range [0,1]")
        if self.reply_ratio + self.mention_ratio > 1:
            raise ValueError(
                f"reply_ratio + mention_ratio is {self.reply_ratio + self.mention_ratio}. It must not exceed 1"
            )
        if self.noise_ratio > 0 and self.noise_vocabulary < 1:
            raise ValueError("Noise needs a noise vocabulary of at least one word.")


def topic_word(topic: int, index: int) -> str:
    return f"t{topic}w{index}"


def topic_user(topic: int, index: int) -> str:
    return f"u{topic}x{index}"


@dataclass(frozen=True, kw_only=True)
class PlantedCorpus:
    records: tuple[PostRecord, ...]
    #: planted topic of every content post, in edge id order
    topics: tuple[int, ...]


def synthesize(config: SynthConfig = SynthConfig()) -> PlantedCorpus:
    """Generates a corpus whose topics are separable by vocabulary.

    Every content post belongs to one topic; its author and any reply or
    mention target come from that topic's community.
    """
    rng = np.random.default_rng(config.seed)
    records: list[PostRecord] = []
    topics: list[int] = []
    posts_by_topic: list[list[tuple[str, str]]] = [[] for _ in range(config.n_topics)]

    for index in range(config.n_posts):
        topic = int(rng.integers(config.n_topics))
        author = topic_user(topic, int(rng.integers(config.users_per_topic)))
        words = []
        for _ in range(config.words_per_post):
            if rng.random() < config.noise_ratio:
                words.append(f"n{int(rng.integers(config.noise_vocabulary))}")
            else:
                words.append(topic_word(topic, int(rng.integers(config.vocabulary))))
        post_id = f"p{index}"
        roll = rng.random()
        earlier = posts_by_topic[topic]
        if roll < config.reply_ratio and earlier:
            parent_id, parent_author = earlier[int(rng.integers(len(earlier)))]
            record = PostRecord(
                id=post_id,
                author=author,
                kind=EdgeKind.REPLY,
                text=" ".join(words),
                target_user=parent_author,
                parent_post=parent_id,
            )
        elif roll < config.reply_ratio + config.mention_ratio:
            target = topic_user(topic, int(rng.integers(config.users_per_topic)))
            record = PostRecord(
                id=post_id,
                author=author,
                kind=EdgeKind.MENTION,
                text=" ".join([f"@{target}", *words]),
                target_user=target,
            )
        else:
            record = PostRecord(
                id=post_id, author=author, kind=EdgeKind.POST, text=" ".join(words)
            )
        records.append(record)
        topics.append(topic)
        earlier.append((post_id, author))

        if rng.random() < config.follow_ratio:
            other = int(rng.integers(config.n_topics))
            followed = topic_user(other, int(rng.integers(config.users_per_topic)))
            records.append(
                PostRecord(
                    id=f"f{index}",
                    author=author,
                    kind=EdgeKind.FOLLOW,
                    target_user=followed,
                )
            )
    return PlantedCorpus(records=tuple(records), topics=tuple(topics))


def synthesize_queries(
    n_topics: int,
    n_queries: int,
    words_per_query: int = 3,
    vocabulary: int = 40,
    seed: int = 0,
) -> list[tuple[int, Query]]:
    """Queries cycling through the topics, each built from its topic's words."""
    rng = np.random.default_rng(seed)
    queries = []
    for index in range(n_queries):
        topic = index % n_topics
        size = min(words_per_query, vocabulary)
        words = rng.choice(vocabulary, size=size, replace=False)
        keywords = " ".join(topic_word(topic, int(w)) for w in words)
        queries.append((topic, Query(keywords=keywords)))
    return queries
