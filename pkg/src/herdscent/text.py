import math
import re
from collections import Counter
from dataclasses import dataclass, field
from functools import cache, lru_cache
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
import structlog
from nltk.stem import PorterStemmer
from numpy.typing import NDArray
from scipy.sparse import csr_matrix

from .errors import EmptyInterestsError, EmptyTermListError, UnknownTermError
from .events import Event

log = structlog.get_logger()

_URL = re.compile(r"(?:https?://|www\.)\S+")
_HANDLE = re.compile(r"@\w+")
_WORD = re.compile(r"[^\W_]+")

_stemmer = PorterStemmer()


@dataclass(frozen=True, kw_only=True)
class TextConfig:
    #: None selects the natural logarithm
    idf_log_base: None | float = None
    #: one word per line, UTF-8; None selects the bundled English list
    stopwords_file: None | Path = None
    top_n: int = 10

    def __post_init__(self) -> None:
        if self.idf_log_base is not None and self.idf_log_base <= 1:
            raise ValueError(
                f"idf_log_base must be greater than 1, got {self.idf_log_base}."
            )
        if self.top_n < 1:
            raise ValueError(f"top_n must be at least 1, got {self.top_n}.")

    def stopwords(self) -> frozenset[str]:
        return load_stopwords(self.stopwords_file)


@cache
def _bundled_stopwords() -> frozenset[str]:
    text = resources.files("herdscent").joinpath("stopwords_en.txt").read_text("utf-8")
    return frozenset(word.strip() for word in text.splitlines() if word.strip())


def load_stopwords(path: None | Path = None) -> frozenset[str]:
    if path is None:
        return _bundled_stopwords()
    words = path.read_text(encoding="utf-8").splitlines()
    return frozenset(word.strip().lower() for word in words if word.strip())


@lru_cache(maxsize=1 << 16)
def _stem(token: str) -> str:
    return str(_stemmer.stem(token))


def normalize_text(
    raw: str | bytes, stopwords: None | frozenset[str] = None
) -> list[str]:
    """Turns post text into Porter-stemmed terms, in order.

    URLs and @handles are removed, hashtags keep their text without the
    ``#`` marker, and stopwords are dropped before stemming. Bytes that
    are not valid UTF-8 are ignored.
    """
    if isinstance(raw, bytes):
        raw = raw.decode("utf-8", errors="ignore")
    if stopwords is None:
        stopwords = _bundled_stopwords()
    text = _HANDLE.sub(" ", _URL.sub(" ", raw.lower())).replace("#", " ")
    return [
        _stem(token) for token in _WORD.findall(text) if token not in stopwords
    ]


def term_frequency(terms: Sequence[str]) -> dict[str, float]:
    if not terms:
        raise EmptyTermListError("Term frequency needs at least one term.")
    total = len(terms)
    return {term: count / total for term, count in Counter(terms).items()}


@dataclass(frozen=True, kw_only=True)
class TermVector:
    """Sparse bag of weighted terms keyed by vocabulary id.

    Weights are strictly positive; zeros are never stored. The Euclidean
    norm is computed once at construction.
    """

    entries: Mapping[int, float]
    norm: float = field(init=False)

    def __post_init__(self) -> None:
        for term_id, weight in self.entries.items():
            if not weight > 0:
                raise ValueError(
                    f"Term {term_id} has weight {weight}. Stored weights must be positive."
                )
        object.__setattr__(
            self, "norm", math.sqrt(math.fsum(w * w for w in self.entries.values()))
        )

    @classmethod
    def from_weights(cls, weights: Iterable[tuple[int, float]]) -> "TermVector":
        """Builds a vector, silently dropping zero weights."""
        return cls(entries={t: float(w) for t, w in weights if w != 0})

    @classmethod
    def from_dense(cls, values: Sequence[float]) -> "TermVector":
        return cls.from_weights(enumerate(values))

    def __len__(self) -> int:
        return len(self.entries)

    def __bool__(self) -> bool:
        return bool(self.entries)

    def get(self, term_id: int) -> float:
        return self.entries.get(term_id, 0.0)


EMPTY_VECTOR = TermVector(entries={})


def cosine_similarity(a: TermVector, b: TermVector) -> float:
    if not a or not b:
        return 0.0
    small, large = (a, b) if len(a) <= len(b) else (b, a)
    dot = math.fsum(w * large.get(t) for t, w in small.entries.items())
    return min(1.0, max(0.0, dot / (a.norm * b.norm)))


def euclidean_distance(a: TermVector, b: TermVector) -> float:
    support = a.entries.keys() | b.entries.keys()
    return math.sqrt(math.fsum((a.get(t) - b.get(t)) ** 2 for t in support))


@dataclass(frozen=True, kw_only=True)
class Vocabulary:
    #: terms in first-seen order; the index is the term id
    terms: tuple[str, ...]
    #: number of posts containing each term, indexed by term id
    document_frequency: tuple[int, ...]
    corpus_size: int
    term_ids: Mapping[str, int] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if len(self.terms) != len(self.document_frequency):
            raise ValueError(
                f"Vocabulary has {len(self.terms)} terms but {len(self.document_frequency)} document frequencies."
            )
        for term, n in zip(self.terms, self.document_frequency):
            if not 1 <= n <= self.corpus_size:
                raise ValueError(
                    f"Document frequency of {term!r} is {n}. It must be in a range [1,{self.corpus_size}]"
                )
        object.__setattr__(
            self, "term_ids", {term: i for i, term in enumerate(self.terms)}
        )

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, term: object) -> bool:
        return term in self.term_ids

    def id_of(self, term: str) -> int:
        try:
            return self.term_ids[term]
        except KeyError as e:
            raise UnknownTermError(f"Term {term!r} is not in the vocabulary.") from e


def inverse_document_frequency(
    vocabulary: Vocabulary, term: str, log_base: None | float = None
) -> float:
    n = vocabulary.document_frequency[vocabulary.id_of(term)]
    ratio = vocabulary.corpus_size / n
    if log_base is None:
        return math.log(ratio)
    return math.log(ratio, log_base)


@dataclass(frozen=True, kw_only=True)
class InterestVector:
    """A user's interests as term -> TF weight, before projection."""

    weights: Mapping[str, float]
    #: all normalized terms the interests were extracted from
    source_terms: tuple[str, ...]

    @property
    def terms(self) -> tuple[str, ...]:
        return tuple(self.weights)

    def project(self, vocabulary: Vocabulary) -> TermVector:
        """Maps the interest terms onto vocabulary ids. Terms no post uses are dropped."""
        return TermVector.from_weights(
            (vocabulary.term_ids[term], weight)
            for term, weight in self.weights.items()
            if term in vocabulary
        )


def extract_interests(
    keywords: str,
    profile_text: None | str = None,
    top_n: int = 10,
    stopwords: None | frozenset[str] = None,
) -> InterestVector:
    """Keeps the ``top_n`` highest-TF terms of keywords plus profile text.

    Ties are broken by lexicographic term order. Weights are plain TF;
    no IDF is applied to interests.
    """
    if top_n < 1:
        raise ValueError(f"top_n must be at least 1, got {top_n}.")
    terms = normalize_text(keywords, stopwords)
    if profile_text:
        terms += normalize_text(profile_text, stopwords)
    if not terms:
        raise EmptyInterestsError(
            f"Interests {keywords!r} / {profile_text!r} contain no usable terms."
        )
    tf = term_frequency(terms)
    ranked = sorted(tf.items(), key=lambda item: (-item[1], item[0]))[:top_n]
    interests = InterestVector(weights=dict(ranked), source_terms=tuple(terms))
    log.debug(event=Event.INTERESTS_EXTRACTED, terms=list(interests.weights))
    return interests


@dataclass(frozen=True, kw_only=True)
class VectorSpace:
    """TF-IDF model of a corpus.

    ``vectors[i]`` is the vector of content edge ``i``; ``matrix`` holds
    the same weights as CSR rows for vectorized passes.
    """

    vocabulary: Vocabulary
    vectors: tuple[TermVector, ...]
    matrix: csr_matrix
    norms: NDArray[np.float64]

    @property
    def m(self) -> int:
        return len(self.vectors)

    def similarities(
        self, interests: InterestVector | TermVector
    ) -> NDArray[np.float64]:
        """Cosine similarity of every post with the interests, clamped to [0,1]."""
        query = (
            interests.project(self.vocabulary)
            if isinstance(interests, InterestVector)
            else interests
        )
        result = np.zeros(self.m, dtype=np.float64)
        if not query or self.m == 0:
            return result
        dense = np.zeros(len(self.vocabulary), dtype=np.float64)
        for term_id, weight in query.entries.items():
            dense[term_id] = weight
        dots = np.asarray(self.matrix @ dense, dtype=np.float64)
        nonzero = self.norms > 0
        result[nonzero] = dots[nonzero] / (self.norms[nonzero] * query.norm)
        return np.clip(result, 0.0, 1.0)


def tfidf_vectorize(
    texts: Sequence[str], config: TextConfig = TextConfig()
) -> VectorSpace:
    """Builds the vocabulary and one TF-IDF vector per post text.

    Posts whose text normalizes to nothing get the empty vector. Terms
    that appear in every post weigh zero and are not stored.
    """
    if not texts:
        raise ValueError("Cannot vectorize an empty corpus.")
    stopwords = config.stopwords()
    documents = [normalize_text(text, stopwords) for text in texts]

    term_ids: dict[str, int] = {}
    document_frequency: list[int] = []
    for terms in documents:
        for term in dict.fromkeys(terms):
            term_id = term_ids.setdefault(term, len(term_ids))
            if term_id == len(document_frequency):
                document_frequency.append(0)
            document_frequency[term_id] += 1
    vocabulary = Vocabulary(
        terms=tuple(term_ids),
        document_frequency=tuple(document_frequency),
        corpus_size=len(documents),
    )
    idf = [
        inverse_document_frequency(vocabulary, term, config.idf_log_base)
        for term in vocabulary.terms
    ]

    vectors: list[TermVector] = []
    rows: list[int] = []
    cols: list[int] = []
    data: list[float] = []
    for row, terms in enumerate(documents):
        if not terms:
            vectors.append(EMPTY_VECTOR)
            continue
        vector = TermVector.from_weights(
            (term_ids[term], tf * idf[term_ids[term]])
            for term, tf in term_frequency(terms).items()
        )
        vectors.append(vector)
        for term_id, weight in vector.entries.items():
            rows.append(row)
            cols.append(term_id)
            data.append(weight)

    matrix = csr_matrix(
        (np.asarray(data, dtype=np.float64), (rows, cols)),
        shape=(len(documents), len(vocabulary)),
    )
    norms = np.array([vector.norm for vector in vectors], dtype=np.float64)
    log.info(
        event=Event.CORPUS_VECTORIZED,
        posts=len(documents),
        terms=len(vocabulary),
        empty_posts=sum(1 for vector in vectors if not vector),
    )
    return VectorSpace(
        vocabulary=vocabulary, vectors=tuple(vectors), matrix=matrix, norms=norms
    )
