import argparse
from pathlib import Path

import pytest

from herdscent.cli import (
    EXIT_DATA,
    EXIT_OK,
    EXIT_USAGE,
    build_config,
    build_parser,
    main,
    parse_axis,
    parse_k_range,
)
from herdscent.engines.eho import MatriarchUpdate
from herdscent.harness.config import EngineName
from herdscent.harness.report import read_report, sidecar

SMALL_RUN = [
    "--set",
    "clustering.restarts=2",
    "--set",
    "eeholsif.k=3",
    "--n-clans",
    "3",
    "--n-per-clan",
    "6",
    "--max-generations",
    "3",
]


@pytest.fixture(name="corpus", scope="module")
def corpus_fixture(tmp_path_factory: pytest.TempPathFactory) -> Path:
    path = tmp_path_factory.mktemp("cli").joinpath("corpus.jsonl")
    assert (
        main(
            [
                "synth",
                str(path),
                "--posts",
                "400",
                "--vocabulary",
                "12",
                "--seed",
                "2",
                "--queries",
                "2",
            ]
        )
        == EXIT_OK
    )
    return path


def test_parse_k_range() -> None:
    assert parse_k_range("2..5") == [2, 3, 4, 5]
    for text in ("5..2", "0..3", "a..b", "3"):
        with pytest.raises(argparse.ArgumentTypeError):
            parse_k_range(text)


def test_parse_axis() -> None:
    assert parse_axis("q0=0.5, 0.9") == ("q0", ["0.5", "0.9"])
    for text in ("q0", "q0=", "=1"):
        with pytest.raises(argparse.ArgumentTypeError):
            parse_axis(text)


def test_flags_override_config_file(tmp_path: Path) -> None:
    config_file = tmp_path.joinpath("run.conf")
    config_file.write_text(
        "engine = ehoif\nseed = 1\nehoif.alpha = 0.3\nehoif.beta = 0.2\n"
    )
    args = build_parser().parse_args(
        [
            "forage",
            "--config",
            str(config_file),
            "--seed",
            "5",
            "--alpha",
            "0.6",
            "--matriarch-update",
            "convex",
            "--max-generations",
            "7",
            "--set",
            "ehoif.beta=0.9",
        ]
    )
    config = build_config(args)
    assert config.engine == EngineName.EHOIF
    assert config.seed == 5
    assert config.ehoif.alpha == 0.6
    assert config.ehoif.beta == 0.9
    assert config.ehoif.matriarch_update == MatriarchUpdate.CONVEX
    assert config.ehoif.max_generations == 7


def test_generation_flag_maps_per_engine() -> None:
    args = build_parser().parse_args(
        ["forage", "--engine", "acsif", "--max-generations", "4"]
    )
    assert build_config(args).acsif.n_generations == 4


def test_ingest(corpus: Path, capsys: pytest.CaptureFixture[str]) -> None:
    assert main(["ingest", str(corpus)]) == EXIT_OK
    output = capsys.readouterr().out
    assert "content_edges = 400" in output
    assert "malformed = 0" in output
    assert "dangling_parents = 0" in output


def test_synth_writes_queries(corpus: Path) -> None:
    queries = corpus.with_suffix(".queries.txt")
    assert len(queries.read_text().splitlines()) == 2


def test_cluster(
    corpus: Path, tmp_path: Path, capsys: pytest.CaptureFixture[str]
) -> None:
    snapshot = tmp_path.joinpath("clusters.json")
    code = main(
        [
            "cluster",
            str(corpus),
            "--k",
            "3",
            "--seed",
            "1",
            "--out",
            str(snapshot),
            "--neighbors",
        ]
    )
    assert code == EXIT_OK
    assert snapshot.exists()
    output = capsys.readouterr().out
    assert "k = 3" in output
    assert output.count("territory ") >= 3
    assert "neighbors 0" in output


def test_cluster_scan(corpus: Path, capsys: pytest.CaptureFixture[str]) -> None:
    code = main(["cluster", str(corpus), "--scan-k", "1..4", "--restarts", "2"])
    assert code == EXIT_OK
    output = capsys.readouterr().out
    assert output.count("wss = ") == 4
    assert "elbow = " in output


def test_forage(corpus: Path, tmp_path: Path) -> None:
    out = tmp_path.joinpath("report.csv")
    code = main(
        [
            "forage",
            "--corpus",
            str(corpus),
            "--interests",
            str(corpus.with_suffix(".queries.txt")),
            "--engine",
            "eeholsif",
            "--seed",
            "3",
            "--out",
            str(out),
            *SMALL_RUN,
        ]
    )
    assert code == EXIT_OK
    report = read_report(out)
    assert len(report.rows) == 2
    assert report.seeds == (3,)
    assert all(row.generations == 3 for row in report.rows)
    assert sidecar(out, "params.txt").exists()


def test_compare(corpus: Path, tmp_path: Path) -> None:
    out = tmp_path.joinpath("compare.csv")
    code = main(
        [
            "compare",
            "--corpus",
            str(corpus),
            "--query",
            "t1w1 t1w2",
            "--engines",
            "acsif",
            "psoif",
            "--seeds",
            "1",
            "2",
            "--set",
            "acsif.n_ants=5",
            "--set",
            "acsif.n_generations=2",
            "--set",
            "psoif.n_particles=5",
            "--set",
            "psoif.n_generations=2",
            "--set",
            "eeholsif.k=3",
            "--out",
            str(out),
        ]
    )
    assert code == EXIT_OK
    assert len(read_report(out).rows) == 4
    summary = tmp_path.joinpath("compare.summary.csv").read_text().splitlines()
    assert [line.split(",")[0] for line in summary[1:]] == ["acsif", "psoif"]


def test_sweep(corpus: Path, tmp_path: Path) -> None:
    out = tmp_path.joinpath("sweep.csv")
    code = main(
        [
            "sweep",
            "--corpus",
            str(corpus),
            "--query",
            "t0w1",
            "--engine",
            "ehoif",
            "--first",
            "alpha=0.2,0.8",
            "--second",
            "beta=0.5",
            "--runs",
            "1",
            "--out",
            str(out),
            *SMALL_RUN,
        ]
    )
    assert code == EXIT_OK
    assert len(out.read_text().splitlines()) == 3


def test_report_command(
    corpus: Path, tmp_path: Path, capsys: pytest.CaptureFixture[str]
) -> None:
    out = tmp_path.joinpath("report.csv")
    args = ["forage", "--corpus", str(corpus), "--query", "t2w3", "--out", str(out)]
    args += ["--engine", "acsif", "--set", "acsif.n_generations=2"]
    assert main(args) == EXIT_OK
    capsys.readouterr()
    assert main(["report", str(out)]) == EXIT_OK
    assert "acsif\trows = 1" in capsys.readouterr().out


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["forage", "--engine", "ga"],
        ["forage", "--workers", "many"],
        ["cluster", "corpus.jsonl", "--scan-k", "4..1"],
        ["forage", "--set", "ehoif.gamma=1", "--query", "tea"],
        ["forage", "--set", "nonsense"],
    ],
)
def test_usage_errors(argv: list[str]) -> None:
    assert main(argv) == EXIT_USAGE


def test_missing_corpus_is_usage_error() -> None:
    assert main(["forage", "--query", "tea"]) == EXIT_USAGE


def test_data_errors(tmp_path: Path) -> None:
    missing = tmp_path.joinpath("absent.jsonl")
    assert main(["ingest", str(missing)]) == EXIT_DATA

    broken = tmp_path.joinpath("broken.jsonl")
    broken.write_text("{not json\n" * 5)
    assert main(["ingest", str(broken)]) == EXIT_DATA

    report = tmp_path.joinpath("report.csv")
    report.write_text("garbage")
    assert main(["report", str(report)]) == EXIT_DATA


def test_missing_snapshot_is_data_error(corpus: Path, tmp_path: Path) -> None:
    argv = [
        "forage",
        "--corpus",
        str(corpus),
        "--query",
        "t0w1",
        "--engine",
        "eeholsif",
        "--snapshot",
        str(tmp_path.joinpath("absent.json")),
        "--no-cluster",
    ]
    assert main(argv) == EXIT_DATA
