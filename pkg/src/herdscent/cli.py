"""The ``herdscent`` command.

Exit codes: 0 on success, 1 on usage errors (bad flags, configuration
keys or engine names), 2 on data errors (unreadable or malformed corpus,
snapshot or report files, and every other failure of the library).
"""

import argparse
import dataclasses
import sys
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import __version__, errors
from .harness.config import (
    EngineName,
    ExperimentConfig,
    apply_settings,
    load_config_file,
    parse_engine,
    write_queries,
)
from .harness.experiment import (
    Workbench,
    run_comparison,
    run_experiment,
    run_sweep,
    summarize,
)
from .harness.records import ingest, write_corpus
from .harness.report import read_report, write_report, write_summary, write_sweep
from .harness.synth import SynthConfig, synthesize, synthesize_queries
from .logs import setup_log
from .snapshot import save_snapshot
from .territories import (
    cluster_corpus,
    find_elbow,
    neighbor_territories,
    nonempty_rows,
    scan_k,
    territory_sizes,
    wss,
)
from .units import seconds

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2

USAGE_ERRORS = (errors.ConfigError, errors.UnknownEngineError)
DATA_ERRORS = (
    errors.DuplicatePostError,
    errors.UnknownEdgeKindError,
    errors.EdgeNotInGraphError,
    errors.EmptyTermListError,
    errors.UnknownTermError,
    errors.EmptyInterestsError,
    errors.TooManyCentroidsError,
    errors.InvalidPositionError,
    errors.EmptyPathError,
    errors.PopulationConstraintError,
    errors.SnapshotMissingError,
    errors.SnapshotFormatError,
    errors.MalformedCorpusError,
    ValueError,
    OSError,
)

#: engine parameters exposed as flags; each maps to ``<engine>.<name>``
ENGINE_OPTIONS = (
    "alpha",
    "beta",
    "n_clans",
    "n_per_clan",
    "dist_clan",
    "dist_elephant",
    "matriarch_update",
    "separate",
    "q0",
    "t0",
    "k",
    "exploration_weighting",
    "rho",
    "n_ants",
    "c1",
    "c2",
    "inertia",
    "n_particles",
    "max_path_length",
)


class UsageError(Exception):
    """Raised by argparse instead of exiting"""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(f"{self.prog}: {message}")


def parse_k_range(text: str) -> list[int]:
    """``"1..8"`` -> ``[1, 2, ..., 8]``."""
    first, dots, last = text.partition("..")
    if not dots:
        raise argparse.ArgumentTypeError(f"Expected a range a..b, got {text!r}.")
    try:
        low, high = int(first), int(last)
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"Expected integers in {text!r}.") from e
    if not 1 <= low <= high:
        raise argparse.ArgumentTypeError(
            f"Range {text!r} must satisfy 1 <= a <= b."
        )
    return list(range(low, high + 1))


def parse_assignment(text: str) -> tuple[str, str]:
    key, equals, value = text.partition("=")
    if not equals or not key.strip():
        raise argparse.ArgumentTypeError(f"Expected key=value, got {text!r}.")
    return key.strip(), value.strip()


def parse_axis(text: str) -> tuple[str, list[str]]:
    """``"alpha=0.1,0.5,0.9"`` -> ``("alpha", ["0.1", "0.5", "0.9"])``."""
    name, values = parse_assignment(text)
    parsed = [v.strip() for v in values.split(",") if v.strip()]
    if not parsed:
        raise argparse.ArgumentTypeError(f"Axis {name!r} has no values.")
    return name, parsed


def _add_config_options(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="key = value configuration file")
    parser.add_argument(
        "--set",
        dest="settings",
        type=parse_assignment,
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override one configuration key, e.g. eeholsif.q0=0.9",
    )
    parser.add_argument("--seed", type=int)


def _add_run_options(parser: argparse.ArgumentParser) -> None:
    _add_config_options(parser)
    parser.add_argument("--corpus", type=Path, help="JSON Lines corpus")
    parser.add_argument("--interests", type=Path, help="one query per line")
    parser.add_argument("--query", help="inline keywords for a single query")
    parser.add_argument("--top-n", type=int, help="interest terms kept per query")
    parser.add_argument("--snapshot", type=Path, help="clustering snapshot path")
    parser.add_argument(
        "--no-cluster",
        action="store_true",
        default=None,
        help="fail instead of clustering when the snapshot is missing",
    )
    parser.add_argument("--workers", type=int)
    parser.add_argument("--time-limit", help='search time limit, e.g. "2 min"')


def _add_engine_options(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("engine parameters")
    for option in ENGINE_OPTIONS:
        group.add_argument(f"--{option.replace('_', '-')}", dest=option)
    group.add_argument(
        "--max-generations",
        dest="generations",
        help="generation count of any engine",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="herdscent",
        description="Information foraging on social graphs with elephant herding optimization.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument(
        "--log-level",
        default="WARNING",
        choices=("DEBUG", "INFO", "WARNING", "ERROR"),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    ingest_parser = sub.add_parser("ingest", help="parse a corpus and print its shape")
    ingest_parser.add_argument("corpus", type=Path)
    ingest_parser.set_defaults(func=cmd_ingest)

    cluster = sub.add_parser("cluster", help="cluster a corpus into territories")
    cluster.add_argument("corpus", type=Path)
    _add_config_options(cluster)
    cluster.add_argument("--k", type=int)
    cluster.add_argument(
        "--scan-k",
        type=parse_k_range,
        metavar="A..B",
        help="print WSS for every k in the range and the elbow",
    )
    cluster.add_argument("--max-iter", type=int)
    cluster.add_argument("--restarts", type=int)
    cluster.add_argument("--out", type=Path, help="write a clustering snapshot")
    cluster.add_argument(
        "--neighbors", action="store_true", help="print neighboring territories"
    )
    cluster.set_defaults(func=cmd_cluster)

    forage = sub.add_parser("forage", help="run one engine over the interests")
    _add_run_options(forage)
    forage.add_argument("--engine", type=parse_engine)
    _add_engine_options(forage)
    forage.add_argument("--out", type=Path, default=Path("report.csv"))
    forage.set_defaults(func=cmd_forage)

    compare = sub.add_parser("compare", help="run several engines on the same seeds")
    _add_run_options(compare)
    compare.add_argument(
        "--engines",
        type=parse_engine,
        nargs="+",
        default=list(EngineName),
    )
    compare.add_argument("--seeds", type=int, nargs="+", required=True)
    compare.add_argument("--out", type=Path, default=Path("compare.csv"))
    compare.add_argument("--summary-out", type=Path)
    compare.set_defaults(func=cmd_compare)

    sweep = sub.add_parser("sweep", help="grid over two engine parameters")
    _add_run_options(sweep)
    sweep.add_argument("--engine", type=parse_engine)
    _add_engine_options(sweep)
    sweep.add_argument(
        "--first", type=parse_axis, default=("alpha", ["0.1", "0.5", "0.9"])
    )
    sweep.add_argument(
        "--second", type=parse_axis, default=("beta", ["0.1", "0.5", "0.9"])
    )
    sweep.add_argument("--runs", type=int, default=5)
    sweep.add_argument("--out", type=Path, default=Path("sweep.csv"))
    sweep.set_defaults(func=cmd_sweep)

    synth = sub.add_parser("synth", help="generate a planted-topic corpus")
    synth.add_argument("out", type=Path)
    synth.add_argument("--posts", type=int, default=SynthConfig.n_posts)
    synth.add_argument("--topics", type=int, default=SynthConfig.n_topics)
    synth.add_argument("--vocabulary", type=int, default=SynthConfig.vocabulary)
    synth.add_argument("--words-per-post", type=int, default=SynthConfig.words_per_post)
    synth.add_argument("--noise-ratio", type=float, default=SynthConfig.noise_ratio)
    synth.add_argument("--seed", type=int, default=SynthConfig.seed)
    synth.add_argument("--queries", type=int, default=0, help="also write N queries")
    synth.add_argument("--queries-out", type=Path)
    synth.set_defaults(func=cmd_synth)

    report = sub.add_parser("report", help="summarize a written report")
    report.add_argument("report", type=Path)
    report.set_defaults(func=cmd_report)
    return parser


def _engine_key(engine: EngineName, name: str) -> str:
    if name == "generations":
        if engine in (EngineName.EHOIF, EngineName.EEHOLSIF):
            return f"{engine}.max_generations"
        return f"{engine}.n_generations"
    return f"{engine}.{name}"


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    """Defaults, then the config file, then flags."""
    config = ExperimentConfig()
    if args.config is not None:
        config = load_config_file(args.config, config)

    settings: dict[str, str] = {}
    top_level = {
        "engine": getattr(args, "engine", None),
        "corpus": getattr(args, "corpus", None),
        "interests": getattr(args, "interests", None),
        "query": getattr(args, "query", None),
        "seed": args.seed,
        "snapshot": getattr(args, "snapshot", None),
        "no_cluster": getattr(args, "no_cluster", None),
        "workers": getattr(args, "workers", None),
        "time_limit": getattr(args, "time_limit", None),
        "text.top_n": getattr(args, "top_n", None),
        "clustering.k": getattr(args, "k", None) if args.command == "cluster" else None,
        "clustering.max_iterations": getattr(args, "max_iter", None),
        "clustering.restarts": getattr(args, "restarts", None),
    }
    for key, value in top_level.items():
        if value is not None:
            settings[key] = str(value)
    config = apply_settings(config, settings)

    engine_settings: dict[str, str] = {}
    if args.command in ("forage", "sweep"):
        for name in (*ENGINE_OPTIONS, "generations"):
            value = getattr(args, name, None)
            if value is not None:
                engine_settings[_engine_key(config.engine, name)] = value
    engine_settings.update(dict(args.settings))
    return apply_settings(config, engine_settings)


def cmd_ingest(args: argparse.Namespace) -> int:
    corpus = ingest(args.corpus)
    graph = corpus.graph
    print(f"records = {len(corpus.records)}")
    print(f"malformed = {corpus.malformed}")
    print(f"users = {len(graph.users)}")
    print(f"content_edges = {graph.m}")
    print(f"structural_edges = {len(graph.structural_edges)}")
    print(f"dangling_parents = {graph.dangling_parents}")
    print(f"corpus_digest = {corpus.digest}")
    return EXIT_OK


def cmd_cluster(args: argparse.Namespace) -> int:
    config = build_config(args)
    workbench = Workbench(dataclasses.replace(config, snapshot=None))
    rng = np.random.default_rng(np.random.SeedSequence(config.seed))
    if args.scan_k:
        scan = scan_k(
            workbench.space.matrix,
            args.scan_k,
            rng,
            config.clustering.max_iterations,
            nonempty_rows(workbench.space),
            config.clustering.wss_squared,
            config.clustering.restarts,
        )
        for k, value in scan:
            print(f"k = {k}\twss = {value!r}")
        print(f"elbow = {find_elbow(scan)}")
        return EXIT_OK

    clustering = cluster_corpus(workbench.space, config.clustering, rng)
    if args.out is not None:
        save_snapshot(clustering, args.out, workbench.corpus.digest)
    sizes = territory_sizes(clustering)
    print(f"k = {clustering.k}")
    print(f"converged = {str(clustering.converged).lower()}")
    print(f"iterations = {clustering.iterations}")
    print(f"wss = {wss(clustering, config.clustering.wss_squared)!r}")
    print(f"smallest = {sizes.minimum}")
    print(f"median = {sizes.median!r}")
    print(f"largest = {sizes.maximum}")
    for territory in clustering.territories:
        label = "overflow" if territory.overflow else str(territory.cluster_id)
        low, high = territory.position_range
        print(f"territory {label}\tsize = {territory.size}\tpositions = {low}..{high}")
    if args.neighbors:
        for cluster_id, neighbors in neighbor_territories(
            workbench.graph, clustering
        ).items():
            listed = " ".join(str(n) for n in sorted(neighbors))
            print(f"neighbors {cluster_id}\t{listed}")
    return EXIT_OK


def cmd_forage(args: argparse.Namespace) -> int:
    config = build_config(args)
    report = run_experiment(config)
    write_report(report, args.out)
    for row in report.rows:
        print(
            f"{row.query_index}\t{row.score!r}\tdepth = {row.depth}"
            f"\t{seconds(row.wall_time):.3f} s"
        )
    return EXIT_OK


def cmd_compare(args: argparse.Namespace) -> int:
    config = build_config(args)
    report = run_comparison(config, args.seeds, tuple(dict.fromkeys(args.engines)))
    write_report(report, args.out)
    summaries = summarize(report)
    summary_out = args.summary_out or args.out.with_name(f"{args.out.stem}.summary.csv")
    write_summary(summaries, summary_out)
    for summary in summaries:
        print(
            f"{summary.engine}\tscore = {summary.median_score!r}"
            f"\ttime = {seconds(summary.median_wall_time):.3f} s"
            f"\tdepth = {summary.median_depth}"
            f"\tconverged = {summary.median_converged_generation}"
        )
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    config = build_config(args)
    cells = run_sweep(config, args.first, args.second, args.runs)
    write_sweep(cells, args.first[0], args.second[0], args.out)
    for cell in cells:
        print(
            f"{args.first[0]} = {cell.first_value}\t{args.second[0]} = {cell.second_value}"
            f"\tscore = {cell.mean_score!r}\ttime = {seconds(cell.mean_wall_time):.3f} s"
        )
    return EXIT_OK


def cmd_synth(args: argparse.Namespace) -> int:
    config = SynthConfig(
        n_posts=args.posts,
        n_topics=args.topics,
        vocabulary=args.vocabulary,
        words_per_post=args.words_per_post,
        noise_ratio=args.noise_ratio,
        seed=args.seed,
    )
    planted = synthesize(config)
    write_corpus(planted.records, args.out)
    print(f"records = {len(planted.records)}")
    if args.queries:
        queries_out = args.queries_out or args.out.with_suffix(".queries.txt")
        queries = synthesize_queries(
            config.n_topics,
            args.queries,
            vocabulary=config.vocabulary,
            seed=config.seed,
        )
        write_queries([query for _, query in queries], queries_out)
        print(f"queries = {len(queries)}")
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    report = read_report(args.report)
    print(f"corpus_digest = {report.corpus_digest}")
    print(f"seeds = {' '.join(str(s) for s in report.seeds)}")
    print(f"rows = {len(report.rows)}")
    for summary in summarize(report):
        print(
            f"{summary.engine}\trows = {summary.rows}"
            f"\tscore = {summary.median_score!r}"
            f"\ttime = {seconds(summary.median_wall_time):.3f} s"
            f"\tdepth = {summary.median_depth}"
            f"\tconverged = {summary.median_converged_generation}"
        )
    return EXIT_OK


def main(argv: None | Sequence[str] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except (UsageError, *USAGE_ERRORS) as e:
        print(f"herdscent: {e}", file=sys.stderr)
        return EXIT_USAGE
    setup_log(args.log_level)
    command: Callable[[argparse.Namespace], int] = args.func
    try:
        return command(args)
    except USAGE_ERRORS as e:
        print(f"herdscent: {e}", file=sys.stderr)
        return EXIT_USAGE
    except DATA_ERRORS as e:
        print(f"herdscent: {e}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
