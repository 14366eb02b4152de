import dataclasses
from pathlib import Path

import numpy as np
import pytest

from herdscent.errors import ConfigError, SnapshotMissingError
from herdscent.harness.config import (
    EngineName,
    ExperimentConfig,
    apply_settings,
    write_queries,
)
from herdscent.harness.experiment import (
    QueryRow,
    RunReport,
    Workbench,
    run_comparison,
    run_experiment,
    run_sweep,
    summarize,
)
from herdscent.harness.records import write_corpus
from herdscent.harness.report import sidecar, write_report
from herdscent.harness.synth import SynthConfig, synthesize, synthesize_queries
from herdscent.units import herdscent_ureg

SMALL_RUN = {
    "clustering.restarts": "2",
    "ehoif.n_clans": "3",
    "ehoif.n_per_clan": "8",
    "ehoif.max_generations": "4",
    "eeholsif.n_clans": "3",
    "eeholsif.n_per_clan": "8",
    "eeholsif.max_generations": "4",
    "eeholsif.k": "3",
    "eeholsif.t0": "2",
    "acsif.n_ants": "8",
    "acsif.n_generations": "4",
    "psoif.n_particles": "12",
    "psoif.n_generations": "4",
}


@pytest.fixture(name="study", scope="module")
def study_fixture(tmp_path_factory: pytest.TempPathFactory) -> ExperimentConfig:
    directory = tmp_path_factory.mktemp("study")
    corpus = directory.joinpath("corpus.jsonl")
    planted = synthesize(SynthConfig(n_posts=600, vocabulary=12, seed=3))
    write_corpus(planted.records, corpus)
    interests = directory.joinpath("queries.txt")
    write_queries(
        [query for _, query in synthesize_queries(3, 2, vocabulary=12, seed=1)],
        interests,
    )
    config = ExperimentConfig(corpus=corpus, interests=interests, seed=99)
    return apply_settings(config, SMALL_RUN)


@pytest.fixture(name="workbench", scope="module")
def workbench_fixture(study: ExperimentConfig) -> Workbench:
    return Workbench(study)


def without_timing(report: RunReport) -> RunReport:
    rows = tuple(
        dataclasses.replace(row, wall_time=0 * herdscent_ureg.second)
        for row in report.rows
    )
    return dataclasses.replace(report, rows=rows)


def test_workbench_needs_a_corpus() -> None:
    with pytest.raises(ConfigError):
        Workbench(ExperimentConfig(query="tea"))


@pytest.mark.parametrize("engine", list(EngineName))
def test_run_experiment_rows(
    study: ExperimentConfig, workbench: Workbench, engine: EngineName
) -> None:
    config = dataclasses.replace(study, engine=engine)
    report = run_experiment(config, workbench)
    assert report.engines == (engine,)
    assert report.seeds == (99,)
    assert [row.query_index for row in report.rows] == [0, 1]
    for row in report.rows:
        assert 0 <= row.score <= 1
        assert row.generations == 4
        assert len(row.curve) == 4
        assert row.depth == len(row.best_path) == len(row.best_texts)
        assert row.best_texts == tuple(
            workbench.graph.edge(e).raw_text for e in row.best_path
        )
        if row.best_path:
            assert row.score == pytest.approx(row.curve[-1])
        assert row.wall_time.check("[time]")


@pytest.mark.parametrize("engine", list(EngineName))
def test_identical_seeds_give_identical_reports(
    tmp_path: Path, study: ExperimentConfig, engine: EngineName
) -> None:
    config = dataclasses.replace(study, engine=engine)
    first = tmp_path.joinpath("first.csv")
    second = tmp_path.joinpath("second.csv")
    write_report(run_experiment(config, Workbench(config)), first)
    write_report(run_experiment(config, Workbench(config)), second)
    for kind in (None, "params.txt", "curves.csv"):
        a = first if kind is None else sidecar(first, kind)
        b = second if kind is None else sidecar(second, kind)
        assert a.read_bytes() == b.read_bytes()


def test_missing_seed_is_echoed_and_replays(
    study: ExperimentConfig, workbench: Workbench
) -> None:
    config = dataclasses.replace(study, seed=None, engine=EngineName.ACSIF)
    report = run_experiment(config, workbench)
    (entropy,) = report.seeds
    assert ("seed", str(entropy)) in report.params
    replay = run_experiment(dataclasses.replace(config, seed=entropy), workbench)
    assert without_timing(replay).rows == without_timing(report).rows


def test_params_echo_current_engine(
    study: ExperimentConfig, workbench: Workbench
) -> None:
    report = run_experiment(study, workbench)
    keys = {key for key, _ in report.params}
    assert {"engine", "seed", "clustering.k", "eeholsif.q0", "eeholsif.k"} <= keys
    assert "acsif.rho" not in keys


def test_comparison(study: ExperimentConfig, workbench: Workbench) -> None:
    engines = [EngineName.EHOIF, EngineName.EEHOLSIF, EngineName.ACSIF]
    report = run_comparison(study, [1, 2], engines, workbench)
    assert report.seeds == (1, 2)
    assert report.engines == tuple(engines)
    assert len(report.rows) == 2 * 3 * 2
    keys = {key for key, _ in report.params}
    assert {"ehoif.alpha", "eeholsif.q0", "acsif.rho"} <= keys
    assert "psoif.c1" not in keys

    seeds: dict[tuple[int, int], set[int]] = {}
    for row in report.rows:
        seeds.setdefault((row.run, row.query_index), set()).add(row.seed)
    # every engine of a run sees the same per-query seed
    assert all(len(s) == 1 for s in seeds.values())
    assert seeds[(0, 0)] != seeds[(1, 0)]

    summaries = summarize(report)
    assert [s.engine for s in summaries] == engines
    for summary in summaries:
        assert summary.rows == 4
        assert 0 <= summary.median_score <= 1
        assert summary.median_wall_time.check("[time]")


def test_comparison_needs_seeds(study: ExperimentConfig, workbench: Workbench) -> None:
    with pytest.raises(ValueError):
        run_comparison(study, [], workbench=workbench)


def test_summarize_medians() -> None:
    def row(score: float, depth: int, wall: float) -> QueryRow:
        return QueryRow(
            engine=EngineName.PSOIF,
            run=0,
            query_index=0,
            seed=1,
            interest_terms=("tea",),
            score=score,
            depth=depth,
            generations=1,
            converged_generation=1,
            migrations=0,
            best_path=tuple(range(depth)),
            best_texts=("",) * depth,
            curve=(score,),
            wall_time=wall * herdscent_ureg.second,
        )

    report = RunReport(
        params=(),
        seeds=(1,),
        corpus_digest="",
        rows=(row(0.2, 1, 3.0), row(0.8, 4, 1.0), row(0.5, 2, 2.0)),
    )
    (summary,) = summarize(report)
    assert summary.median_score == 0.5
    assert summary.median_depth == 2
    assert summary.median_wall_time.to("second").magnitude == pytest.approx(2.0)


def test_sweep(study: ExperimentConfig, workbench: Workbench) -> None:
    config = dataclasses.replace(study, engine=EngineName.EHOIF)
    alpha = ("alpha", ["0.2", "0.9"])
    cells = run_sweep(config, alpha, ("beta", ["0.1"]), 2, workbench)
    grid = [(c.first_value, c.second_value) for c in cells]
    assert grid == [("0.2", "0.1"), ("0.9", "0.1")]
    for cell in cells:
        assert cell.runs == 2
        assert 0 <= cell.mean_score <= 1
    with pytest.raises(ConfigError):
        run_sweep(config, ("gamma", ["1"]), ("beta", ["0.1"]), 1, workbench)


def test_clustering_is_cached_and_saved(
    tmp_path: Path, study: ExperimentConfig
) -> None:
    snapshot = tmp_path.joinpath("clusters.json")
    workbench = Workbench(dataclasses.replace(study, snapshot=snapshot))
    seeds = np.random.SeedSequence(5)
    first = workbench.clustering(3, seeds)
    assert workbench.clustering(3, seeds) is first
    assert snapshot.exists()
    reloaded = Workbench(dataclasses.replace(study, snapshot=snapshot, no_cluster=True))
    assert reloaded.clustering(3, seeds).assignment == first.assignment


def test_no_cluster_without_snapshot(tmp_path: Path, study: ExperimentConfig) -> None:
    config = dataclasses.replace(
        study,
        engine=EngineName.EEHOLSIF,
        snapshot=tmp_path.joinpath("absent.json"),
        no_cluster=True,
    )
    with pytest.raises(SnapshotMissingError):
        run_experiment(config)


def test_swarm_falls_back_to_raw_positions(tmp_path: Path) -> None:
    corpus = tmp_path.joinpath("tiny.jsonl")
    write_corpus(synthesize(SynthConfig(n_posts=10, seed=1)).records, corpus)
    config = apply_settings(
        ExperimentConfig(corpus=corpus, query="t0w1", seed=4),
        {"engine": "psoif", "psoif.n_particles": "4", "psoif.n_generations": "2"},
    )
    assert config.semantic_positions
    assert config.eeholsif.k > 10
    workbench = Workbench(config)
    seeds = np.random.SeedSequence(0)
    assert workbench.swarm_positions(config.eeholsif.k, seeds) is None
    (row,) = run_experiment(config, workbench).rows
    assert row.generations == 2


@pytest.mark.slow
def test_territories_beat_plain_herding(tmp_path: Path) -> None:
    corpus = tmp_path.joinpath("corpus.jsonl")
    write_corpus(synthesize(SynthConfig(n_posts=4_000, seed=11)).records, corpus)
    interests = tmp_path.joinpath("queries.txt")
    write_queries([query for _, query in synthesize_queries(3, 4, seed=2)], interests)
    config = apply_settings(
        ExperimentConfig(corpus=corpus, interests=interests), {"eeholsif.k": "3"}
    )
    workbench = Workbench(config)
    # cluster before timing so only the searches are compared
    workbench.clustering(3, np.random.SeedSequence(0))
    report = run_comparison(
        config, [1, 2, 3], [EngineName.EHOIF, EngineName.EEHOLSIF], workbench
    )
    plain, territorial = summarize(report)
    assert territorial.median_score >= plain.median_score
    assert territorial.median_wall_time < plain.median_wall_time
    assert (
        territorial.median_converged_generation
        <= plain.median_converged_generation
    )
