import dataclasses
import enum
import re
import types
import typing
from dataclasses import dataclass, field
from enum import Enum, StrEnum
from pathlib import Path
from typing import Any, Iterable, Mapping, Union

from pint import Quantity

from ..engines.acs import AcsParams
from ..engines.eeholsif import EeholsifParams
from ..engines.eho import EhoParams
from ..engines.pso import PsoParams
from ..errors import ConfigError, UnknownEngineError
from ..territories import ClusteringConfig
from ..text import TextConfig
from ..units import parse_duration, seconds

#: a "#" standing alone as a word; "#covid" is a hashtag, not a comment
COMMENT = re.compile(r"(?:^|(?<=\s))#(?=\s|$)")


@enum.unique
class EngineName(StrEnum):
    EHOIF = "ehoif"
    EEHOLSIF = "eeholsif"
    ACSIF = "acsif"
    PSOIF = "psoif"


def parse_engine(name: str) -> EngineName:
    try:
        return EngineName(name.strip().lower())
    except ValueError as e:
        raise UnknownEngineError(
            f"Unknown engine {name!r}. Engine must be one of {[str(n) for n in EngineName]}"
        ) from e


@dataclass(frozen=True, kw_only=True)
class Query:
    keywords: str
    profile_text: None | str = None


def parse_queries(lines: Iterable[str]) -> list[Query]:
    """One query per line: ``keywords<TAB>profile text`` or keywords only.

    Blank lines and comment lines (``#`` followed by a space) are skipped.
    Hashtags such as ``#covid`` are kept as keywords.
    """
    queries = []
    for line in lines:
        stripped = line.strip()
        if not stripped or COMMENT.match(stripped):
            continue
        keywords, _, profile = line.rstrip("\r\n").partition("\t")
        queries.append(
            Query(keywords=keywords.strip(), profile_text=profile.strip() or None)
        )
    return queries


def read_queries(path: Path) -> list[Query]:
    return parse_queries(path.read_text(encoding="utf-8").splitlines())


def write_queries(queries: Iterable[Query], path: Path) -> None:
    with path.open("w", encoding="utf-8", newline="\n") as f:
        for query in queries:
            f.write(query.keywords)
            if query.profile_text:
                f.write(f"\t{query.profile_text}")
            f.write("\n")


EngineParams = EhoParams | AcsParams | PsoParams


@dataclass(frozen=True, kw_only=True)
class ExperimentConfig:
    """Everything a run depends on.

    Precedence is command-line flags over the config file over these
    defaults. Sections are addressed as ``section.key`` (for example
    ``eeholsif.q0``); top-level keys have no prefix.
    """

    engine: EngineName = EngineName.EEHOLSIF
    corpus: None | Path = None
    #: interests file, one query per line
    interests: None | Path = None
    #: inline keywords used when no interests file is given
    query: None | str = None
    seed: None | int = None
    snapshot: None | Path = None
    #: refuse to cluster when the snapshot is missing
    no_cluster: bool = False
    #: PSO particles move over semantic positions, clustered with eeholsif.k
    semantic_positions: bool = True
    workers: int = 1
    time_limit: None | Quantity = None

    text: TextConfig = field(default_factory=TextConfig)
    clustering: ClusteringConfig = field(default_factory=ClusteringConfig)
    ehoif: EhoParams = field(default_factory=EhoParams)
    eeholsif: EeholsifParams = field(default_factory=EeholsifParams)
    acsif: AcsParams = field(default_factory=AcsParams)
    psoif: PsoParams = field(default_factory=PsoParams)

    def __post_init__(self) -> None:
        if self.workers < 1:
            raise ValueError(f"workers must be at least 1, got {self.workers}.")

    def params_for(self, engine: EngineName) -> EngineParams:
        params: EngineParams = getattr(self, str(engine))
        return params

    def queries(self) -> list[Query]:
        if self.interests is not None:
            return read_queries(self.interests)
        if self.query:
            return [Query(keywords=self.query)]
        raise ConfigError("No interests given. Set interests (a file) or query.")


SECTIONS = ("text", "clustering", *(str(n) for n in EngineName))


def _coerce(annotation: Any, text: str) -> Any:
    args = typing.get_args(annotation)
    if typing.get_origin(annotation) in (Union, types.UnionType):
        if text.strip().lower() in ("", "none"):
            return None
        (inner,) = [a for a in args if a is not type(None)]
        return _coerce(inner, text)
    text = text.strip()
    if annotation is bool:
        lowered = text.lower()
        if lowered in ("true", "yes", "on", "1"):
            return True
        if lowered in ("false", "no", "off", "0"):
            return False
        raise ValueError(f"Expected a boolean, got {text!r}.")
    if annotation is Quantity:
        return parse_duration(text)
    if isinstance(annotation, type) and issubclass(annotation, Enum):
        return annotation(text.lower())
    if annotation in (int, float, str, Path):
        return annotation(text)
    raise TypeError(f"Unsupported configuration type {annotation!r}.")


def _with_value(instance: Any, name: str, text: str, key: str) -> Any:
    hints = typing.get_type_hints(type(instance))
    if name not in {f.name for f in dataclasses.fields(instance)} or name in SECTIONS:
        raise ConfigError(f"Unknown configuration key {key!r}.")
    try:
        return dataclasses.replace(instance, **{name: _coerce(hints[name], text)})
    except (ValueError, TypeError) as e:
        raise ConfigError(f"Invalid value {text!r} for {key!r}: {e}") from e


def apply_setting(config: ExperimentConfig, key: str, value: str) -> ExperimentConfig:
    key = key.strip()
    section, dot, name = key.partition(".")
    if not dot:
        if key == "engine":
            return dataclasses.replace(config, engine=parse_engine(value))
        return _with_value(config, key, value, key)
    if section not in SECTIONS:
        raise ConfigError(f"Unknown configuration section in key {key!r}.")
    updated = _with_value(getattr(config, section), name, value, key)
    return dataclasses.replace(config, **{section: updated})


def apply_settings(
    config: ExperimentConfig, settings: Mapping[str, str]
) -> ExperimentConfig:
    for key, value in settings.items():
        config = apply_setting(config, key, value)
    return config


def load_config_file(
    path: Path, config: None | ExperimentConfig = None
) -> ExperimentConfig:
    """Applies a ``key = value`` file on top of ``config``.

    A ``#`` followed by a space starts a comment; blank lines are ignored.
    Hashtags in values are kept.
    """
    if config is None:
        config = ExperimentConfig()
    for line_number, line in enumerate(
        path.read_text(encoding="utf-8").splitlines(), start=1
    ):
        content = COMMENT.split(line, maxsplit=1)[0].strip()
        if not content:
            continue
        key, equals, value = content.partition("=")
        if not equals:
            raise ConfigError(
                f"{path}:{line_number}: expected 'key = value', got {line!r}."
            )
        try:
            config = apply_setting(config, key, value)
        except ConfigError as e:
            raise ConfigError(f"{path}:{line_number}: {e}") from e
    return config


def _format(value: Any) -> str:
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, Quantity):
        return f"{seconds(value)!r} second"
    return str(value)


def _section_echo(prefix: str, instance: Any) -> list[tuple[str, str]]:
    return [
        (f"{prefix}{f.name}", _format(getattr(instance, f.name)))
        for f in dataclasses.fields(instance)
        if f.name not in SECTIONS
    ]


def config_echo(
    config: ExperimentConfig, engines: Iterable[EngineName] = ()
) -> list[tuple[str, str]]:
    """Every parameter of a run as ``(key, value)`` pairs, in a stable order.

    Lines in the form ``key = value`` load back with
    :py:func:`load_config_file`.
    """
    engines = list(engines) or [config.engine]
    echo = _section_echo("", config)
    echo += _section_echo("text.", config.text)
    echo += _section_echo("clustering.", config.clustering)
    for engine in engines:
        echo += _section_echo(f"{engine}.", config.params_for(engine))
    return echo
