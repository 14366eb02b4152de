import dataclasses
import math
import statistics
import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import structlog
from pint import Quantity

from ..engines.acs import AcsParams, run_acsif
from ..engines.eeholsif import EeholsifParams, run_eeholsif
from ..engines.eho import EhoParams, run_ehoif
from ..engines.pso import PsoParams, run_psoif
from ..engines.ranking import RankedPaths
from ..errors import ConfigError, SnapshotMissingError, TooManyCentroidsError
from ..events import Event
from ..foraging import PositionSpace, ScentField
from ..snapshot import load_snapshot, save_snapshot
from ..territories import Clustering, cluster_corpus
from ..text import extract_interests, tfidf_vectorize
from ..units import elapsed_since, herdscent_ureg
from .config import EngineName, ExperimentConfig, Query, apply_setting, config_echo
from .records import Corpus, ingest

log = structlog.get_logger()


@dataclass(frozen=True, kw_only=True)
class QueryRow:
    engine: EngineName
    #: index of the seed in a multi-seed comparison, 0 otherwise
    run: int
    query_index: int
    #: engine seed derived for this query
    seed: int
    interest_terms: tuple[str, ...]
    score: float
    depth: int
    generations: int
    converged_generation: int
    migrations: int
    best_path: tuple[int, ...]
    best_texts: tuple[str, ...]
    curve: tuple[float, ...]
    wall_time: Quantity

    def __post_init__(self) -> None:
        if not 0 <= self.score <= 1:
            raise ValueError(f"Score {self.score} must be in a range [0,1]")
        if len(self.curve) != self.generations:
            raise ValueError(
                f"Curve has {len(self.curve)} points for {self.generations} generations."
            )


@dataclass(frozen=True, kw_only=True)
class RunReport:
    #: full parameter echo, ``key = value`` pairs
    params: tuple[tuple[str, str], ...]
    seeds: tuple[int, ...]
    corpus_digest: str
    rows: tuple[QueryRow, ...]

    @property
    def engines(self) -> tuple[EngineName, ...]:
        return tuple(dict.fromkeys(row.engine for row in self.rows))


@dataclass(frozen=True, kw_only=True)
class EngineSummary:
    engine: EngineName
    rows: int
    median_score: float
    median_wall_time: Quantity
    median_depth: float
    median_converged_generation: float


@dataclass(frozen=True, kw_only=True)
class SweepCell:
    first_value: str
    second_value: str
    runs: int
    mean_score: float
    mean_wall_time: Quantity


def derive_seeds(root: np.random.SeedSequence, n: int) -> list[int]:
    return [int(child.generate_state(1)[0]) for child in root.spawn(n)]


def root_entropy(seed: None | int) -> int:
    """The seed itself, or fresh OS entropy that replays the run when echoed."""
    entropy = np.random.SeedSequence(seed).entropy
    assert isinstance(entropy, int)
    return entropy


class Workbench:
    """An ingested, vectorized corpus plus its clusterings, shared by
    every run over it. Clustering happens at most once per ``k``.
    """

    log = structlog.get_logger()

    def __init__(self, config: ExperimentConfig) -> None:
        if config.corpus is None:
            raise ConfigError("No corpus given. Set corpus.")
        self.config = config
        self.corpus: Corpus = ingest(config.corpus)
        self.graph = self.corpus.graph
        self.space = tfidf_vectorize(
            [edge.raw_text for edge in self.graph], config.text
        )
        self.stopwords = config.text.stopwords()
        self._clusterings: dict[int, Clustering] = {}

    def clustering(self, k: int, seeds: np.random.SeedSequence) -> Clustering:
        if k in self._clusterings:
            return self._clusterings[k]
        snapshot = self.config.snapshot
        if snapshot is not None and snapshot.exists():
            clustering = load_snapshot(snapshot, self.space, self.corpus.digest)
            if clustering.k != k:
                self.log.warning(
                    event=Event.SNAPSHOT_LOADED,
                    path=str(snapshot),
                    k=clustering.k,
                    requested_k=k,
                )
        elif self.config.no_cluster:
            raise SnapshotMissingError(
                f"Clustering snapshot {snapshot} is missing and clustering is disabled."
            )
        else:
            clustering = cluster_corpus(
                self.space,
                dataclasses.replace(self.config.clustering, k=k),
                np.random.default_rng(seeds),
            )
            if snapshot is not None:
                save_snapshot(clustering, snapshot, self.corpus.digest)
        self._clusterings[k] = clustering
        return clustering

    def swarm_positions(
        self, k: int, seeds: np.random.SeedSequence
    ) -> None | PositionSpace:
        """Semantic positions for the swarm, or raw ids when the corpus has
        fewer than ``k`` posts to cluster."""
        try:
            return self.clustering(k, seeds).positions
        except TooManyCentroidsError as e:
            self.log.warning(event=Event.RAW_POSITIONS_FALLBACK, k=k, reason=str(e))
            return None

    def search(
        self,
        engine: EngineName,
        config: ExperimentConfig,
        field: ScentField,
        seed: int,
        cluster_seeds: np.random.SeedSequence,
    ) -> tuple[RankedPaths, Quantity]:
        """Runs one engine on one query; only the search itself is timed."""
        params = dataclasses.replace(config.params_for(engine), seed=seed)
        match engine:
            case EngineName.EHOIF:
                assert isinstance(params, EhoParams)
                start = time.perf_counter()
                result = run_ehoif(
                    field, params, workers=config.workers, time_limit=config.time_limit
                )
            case EngineName.EEHOLSIF:
                assert isinstance(params, EeholsifParams)
                clustering = self.clustering(params.k, cluster_seeds)
                start = time.perf_counter()
                result = run_eeholsif(
                    field,
                    clustering,
                    params,
                    workers=config.workers,
                    time_limit=config.time_limit,
                )
            case EngineName.ACSIF:
                assert isinstance(params, AcsParams)
                start = time.perf_counter()
                result = run_acsif(
                    field, params, workers=config.workers, time_limit=config.time_limit
                )
            case EngineName.PSOIF:
                assert isinstance(params, PsoParams)
                positions = (
                    self.swarm_positions(config.eeholsif.k, cluster_seeds)
                    if config.semantic_positions
                    else None
                )
                start = time.perf_counter()
                result = run_psoif(
                    field,
                    params,
                    positions=positions,
                    workers=config.workers,
                    time_limit=config.time_limit,
                )
        return result, elapsed_since(start)

    def run_queries(
        self,
        config: ExperimentConfig,
        engines: Sequence[EngineName],
        queries: Sequence[Query],
        root: np.random.SeedSequence,
        run: int = 0,
    ) -> list[QueryRow]:
        cluster_seeds, query_seeds = root.spawn(2)
        seeds = derive_seeds(query_seeds, len(queries))
        rows = []
        for engine in engines:
            for query_index, (query, seed) in enumerate(zip(queries, seeds)):
                interests = extract_interests(
                    query.keywords,
                    query.profile_text,
                    config.text.top_n,
                    self.stopwords,
                )
                field = ScentField.for_interests(self.graph, self.space, interests)
                result, wall_time = self.search(
                    engine, config, field, seed, cluster_seeds
                )
                best = result.best
                rows.append(
                    QueryRow(
                        engine=engine,
                        run=run,
                        query_index=query_index,
                        seed=seed,
                        interest_terms=interests.terms,
                        score=result.best_fitness,
                        depth=best.depth if best else 0,
                        generations=result.generations,
                        converged_generation=result.converged_generation,
                        migrations=result.migrations,
                        best_path=best.edges if best else (),
                        best_texts=tuple(
                            self.graph.edge(e).raw_text
                            for e in (best.edges if best else ())
                        ),
                        curve=result.curve,
                        wall_time=wall_time,
                    )
                )
        return rows


def run_experiment(
    config: ExperimentConfig, workbench: None | Workbench = None
) -> RunReport:
    """Runs the configured engine over every query of the configuration."""
    workbench = workbench or Workbench(config)
    entropy = root_entropy(config.seed)
    rows = workbench.run_queries(
        config, [config.engine], config.queries(), np.random.SeedSequence(entropy)
    )
    report = RunReport(
        params=tuple(config_echo(dataclasses.replace(config, seed=entropy))),
        seeds=(entropy,),
        corpus_digest=workbench.corpus.digest,
        rows=tuple(rows),
    )
    log.info(
        event=Event.EXPERIMENT_FINISHED,
        engine=str(config.engine),
        queries=len(rows),
        seed=entropy,
    )
    return report


def run_comparison(
    config: ExperimentConfig,
    seeds: Sequence[None | int],
    engines: Sequence[EngineName] = tuple(EngineName),
    workbench: None | Workbench = None,
) -> RunReport:
    """Runs several engines over the same corpus, queries and seed list.

    Each seed is one run; within a run every engine sees the same
    per-query seeds.
    """
    if not seeds:
        raise ValueError("A comparison needs at least one seed.")
    workbench = workbench or Workbench(config)
    queries = config.queries()
    entropies = [root_entropy(seed) for seed in seeds]
    rows = []
    for run, entropy in enumerate(entropies):
        rows += workbench.run_queries(
            config, engines, queries, np.random.SeedSequence(entropy), run
        )
    report = RunReport(
        params=tuple(
            config_echo(dataclasses.replace(config, seed=entropies[0]), engines)
        ),
        seeds=tuple(entropies),
        corpus_digest=workbench.corpus.digest,
        rows=tuple(rows),
    )
    log.info(
        event=Event.EXPERIMENT_FINISHED,
        engines=[str(e) for e in engines],
        runs=len(entropies),
        queries=len(rows),
    )
    return report


def summarize(report: RunReport) -> list[EngineSummary]:
    """Medians per engine over all runs and queries."""
    summaries = []
    for engine in report.engines:
        rows = [row for row in report.rows if row.engine == engine]
        summaries.append(
            EngineSummary(
                engine=engine,
                rows=len(rows),
                median_score=statistics.median(row.score for row in rows),
                median_wall_time=statistics.median(
                    row.wall_time.to("second").magnitude for row in rows
                )
                * herdscent_ureg.second,
                median_depth=statistics.median(row.depth for row in rows),
                median_converged_generation=statistics.median(
                    row.converged_generation for row in rows
                ),
            )
        )
    return summaries


def run_sweep(
    config: ExperimentConfig,
    first: tuple[str, Sequence[str]],
    second: tuple[str, Sequence[str]],
    runs: int = 5,
    workbench: None | Workbench = None,
) -> list[SweepCell]:
    """Grid over two parameters of the configured engine.

    Every cell repeats ``runs`` seeded runs derived from the same root, so
    cells differ only in the swept values.
    """
    if runs < 1:
        raise ValueError(f"runs must be at least 1, got {runs}.")
    workbench = workbench or Workbench(config)
    queries = config.queries()
    entropy = root_entropy(config.seed)
    section = str(config.engine)
    cells = []
    for first_value in first[1]:
        for second_value in second[1]:
            cell_config = apply_setting(config, f"{section}.{first[0]}", first_value)
            cell_config = apply_setting(
                cell_config, f"{section}.{second[0]}", second_value
            )
            rows = []
            for run, root in enumerate(np.random.SeedSequence(entropy).spawn(runs)):
                rows += workbench.run_queries(
                    cell_config, [config.engine], queries, root, run
                )
            cells.append(
                SweepCell(
                    first_value=first_value,
                    second_value=second_value,
                    runs=runs,
                    mean_score=(
                        math.fsum(row.score for row in rows) / len(rows)
                        if rows
                        else 0.0
                    ),
                    mean_wall_time=(
                        math.fsum(row.wall_time.to("second").magnitude for row in rows)
                        / max(1, len(rows))
                        * herdscent_ureg.second
                    ),
                )
            )
    return cells
