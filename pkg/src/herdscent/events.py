import enum
from enum import StrEnum, auto


@enum.unique
class Event(StrEnum):
    UNCAUGHT_EXCEPTION = auto()

    # Graph and corpus events
    GRAPH_BUILT = auto()
    DANGLING_PARENT = auto()
    INGEST_FINISHED = auto()
    MALFORMED_RECORD = auto()

    # Text events
    CORPUS_VECTORIZED = auto()
    INTERESTS_EXTRACTED = auto()

    # Territory events
    KMEANS_ITERATION = auto()
    KMEANS_CONVERGED = auto()
    KMEANS_RESEEDED = auto()
    SNAPSHOT_SAVED = auto()
    SNAPSHOT_LOADED = auto()

    # Engine events
    POPULATION_INITIALIZED = auto()
    GENERATION_FINISHED = auto()
    CLAN_PLACED = auto()
    CLAN_MIGRATED = auto()
    PHEROMONE_UPDATED = auto()
    TIME_LIMIT_REACHED = auto()

    # Harness events
    EXPERIMENT_FINISHED = auto()
    REPORT_WRITTEN = auto()
    RAW_POSITIONS_FALLBACK = auto()
