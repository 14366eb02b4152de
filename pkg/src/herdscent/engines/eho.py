import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import StrEnum
from typing import Callable, Sequence, TypeVar

import numpy as np
import structlog
from pint import Quantity

from ..errors import PopulationConstraintError
from ..events import Event
from ..foraging import (
    PositionSpace,
    RawPositions,
    ScentField,
    SurfingPath,
    build_surfing_path,
)
from .ranking import Deadline, PathCollector, RankedPaths, best_of

T = TypeVar("T")
R = TypeVar("R")

# Clan seed layouts tried before dist_clan is reported as unsatisfiable.
SEED_DRAW_ROUNDS = 100


@enum.unique
class MatriarchUpdate(StrEnum):
    #: matriarch moves to round(beta * x_avg)
    LITERAL = "literal"
    #: matriarch moves to x_best + beta * (x_avg - x_best)
    CONVEX = "convex"


@dataclass(frozen=True, kw_only=True)
class EhoParams:
    alpha: float = 0.9
    beta: float = 0.4
    n_clans: int = 8
    n_per_clan: int = 90
    max_generations: int = 40
    #: minimum gap between clan seeds; None selects m / (2 * n_clans)
    dist_clan: None | float = None
    #: maximum gap between a member and its clan seed; None selects m / (10 * n_clans)
    dist_elephant: None | float = None
    matriarch_update: MatriarchUpdate = MatriarchUpdate.LITERAL
    #: replace the worst elephant of every clan each generation
    separate: bool = True
    max_path_length: None | int = None
    seed: None | int = None

    def __post_init__(self) -> None:
        for name in ("alpha", "beta"):
            value = getattr(self, name)
            if not 0 <= value <= 1:
                raise ValueError(f"{name} is {value}. It must be in a range [0,1]")
        if self.n_clans < 1 or self.n_per_clan < 1:
            raise ValueError(
                f"Population of {self.n_clans} clans x {self.n_per_clan} elephants must not be empty."
            )
        if self.max_generations < 0:
            raise ValueError(
                f"max_generations must not be negative, got {self.max_generations}."
            )
        for name in ("dist_clan", "dist_elephant"):
            value = getattr(self, name)
            if value is not None and value < 0:
                raise ValueError(f"{name} must not be negative, got {value}.")
        if self.max_path_length is not None and self.max_path_length < 1:
            raise ValueError(
                f"max_path_length must be at least 1, got {self.max_path_length}."
            )

    def clan_distance(self, m: int) -> float:
        if self.dist_clan is not None:
            return self.dist_clan
        return m / (2 * self.n_clans)

    def elephant_distance(self, m: int) -> float:
        if self.dist_elephant is not None:
            return self.dist_elephant
        return m / (10 * self.n_clans)


@dataclass(frozen=True)
class PositionBounds:
    x_min: int
    x_max: int

    def __post_init__(self) -> None:
        if self.x_min > self.x_max:
            raise ValueError(
                f"Position bounds [{self.x_min},{self.x_max}] are empty."
            )

    def snap(self, value: float) -> int:
        """Round half up, then clamp into the bounds."""
        return min(self.x_max, max(self.x_min, math.floor(value + 0.5)))


@dataclass(kw_only=True)
class Elephant:
    elephant_id: int
    position: int
    path: None | SurfingPath = None
    fitness: float = 0.0


@dataclass(kw_only=True)
class Clan:
    clan_id: int
    members: list[Elephant]
    rng: np.random.Generator = field(repr=False)
    best_solution: None | SurfingPath = None
    next_elephant_id: int = 0

    def __post_init__(self) -> None:
        self.next_elephant_id = max(
            self.next_elephant_id,
            1 + max((e.elephant_id for e in self.members), default=-1),
        )

    @property
    def fitnesses(self) -> list[float]:
        return [e.fitness for e in self.members]

    @property
    def matriarch_index(self) -> int:
        """Best fitness; ties go to the lowest member index."""
        return int(np.argmax(self.fitnesses))

    @property
    def worst_index(self) -> int:
        """Worst fitness; ties go to the highest member index."""
        fitnesses = self.fitnesses
        return len(fitnesses) - 1 - int(np.argmin(fitnesses[::-1]))

    def spawn_elephant(self, position: int) -> Elephant:
        elephant = Elephant(elephant_id=self.next_elephant_id, position=position)
        self.next_elephant_id += 1
        return elephant

    def record_best(self) -> None | SurfingPath:
        """Keeps the best path the clan has found so far."""
        generation_best = best_of(e.path for e in self.members)
        if generation_best is not None and (
            self.best_solution is None
            or generation_best.fitness > self.best_solution.fitness
        ):
            self.best_solution = generation_best
        return generation_best


def _draw_clan_seeds(
    n_clans: int, m: int, dist_clan: float, rng: np.random.Generator
) -> list[int]:
    all_positions = np.arange(1, m + 1)
    for _ in range(SEED_DRAW_ROUNDS):
        allowed = np.ones(m, dtype=bool)
        seeds: list[int] = []
        for _ in range(n_clans):
            free = all_positions[allowed]
            if len(free) == 0:
                break
            seed = int(rng.choice(free))
            seeds.append(seed)
            allowed &= np.abs(all_positions - seed) >= dist_clan
        if len(seeds) == n_clans:
            return seeds
    raise PopulationConstraintError(
        f"Could not place {n_clans} clans at least dist_clan={dist_clan} apart among {m} positions."
    )


def init_population(
    params: EhoParams, m: int, rng: np.random.Generator
) -> list[Clan]:
    """Spreads the clans over ``1..m``.

    Clan seeds are pairwise at least ``dist_clan`` apart. Every clan is
    filled with distinct positions within ``dist_elephant`` of its seed,
    the seed included. Each clan gets its own generator stream spawned
    from ``rng``.
    """
    if params.n_clans * params.n_per_clan > m:
        raise PopulationConstraintError(
            f"{params.n_clans} clans x {params.n_per_clan} elephants do not fit in {m} positions."
        )
    dist_elephant = params.elephant_distance(m)
    seeds = _draw_clan_seeds(params.n_clans, m, params.clan_distance(m), rng)
    clan_rngs = rng.spawn(params.n_clans)

    taken = np.zeros(m + 1, dtype=bool)
    taken[seeds] = True
    clans = []
    for clan_id, (seed, clan_rng) in enumerate(zip(seeds, clan_rngs)):
        lo = max(1, math.ceil(seed - dist_elephant))
        hi = min(m, math.floor(seed + dist_elephant))
        window = np.arange(lo, hi + 1)
        free = window[~taken[window]]
        if len(free) < params.n_per_clan - 1:
            raise PopulationConstraintError(
                f"Clan {clan_id} needs {params.n_per_clan} positions within dist_elephant={dist_elephant} of {seed}, only {len(free) + 1} are free."
            )
        chosen = rng.choice(free, size=params.n_per_clan - 1, replace=False)
        taken[chosen] = True
        positions = [seed, *(int(p) for p in chosen)]
        clans.append(
            Clan(
                clan_id=clan_id,
                members=[
                    Elephant(elephant_id=i, position=p) for i, p in enumerate(positions)
                ],
                rng=clan_rng,
            )
        )
    return clans


def position_update(
    x: int, x_best: int, alpha: float, r: float, bounds: PositionBounds
) -> int:
    """Pull toward the matriarch: x + alpha * (x_best - x) * r."""
    return bounds.snap(x + alpha * (x_best - x) * r)


def separation_position(r: float, bounds: PositionBounds) -> int:
    return bounds.snap(bounds.x_min + (bounds.x_max - bounds.x_min + 1) * r)


def average_fitness_position(clan: Clan) -> int:
    """Position of the member whose fitness is closest to the clan mean.

    Ties go to the lowest member index.
    """
    fitnesses = clan.fitnesses
    f_avg = math.fsum(fitnesses) / len(fitnesses)
    index = int(np.argmin([abs(f - f_avg) for f in fitnesses]))
    return clan.members[index].position


def update_positions(clan: Clan, params: EhoParams, bounds: PositionBounds) -> Clan:
    """Moves every non-matriarch member toward the matriarch.

    One uniform ``r`` is drawn per moved elephant from the clan stream.
    """
    matriarch = clan.matriarch_index
    x_best = clan.members[matriarch].position
    for index, elephant in enumerate(clan.members):
        if index == matriarch:
            continue
        r = float(clan.rng.random())
        elephant.position = position_update(
            elephant.position, x_best, params.alpha, r, bounds
        )
    return clan


def update_matriarch(
    clan: Clan,
    params: EhoParams,
    bounds: PositionBounds,
    x_avg: None | int = None,
) -> Clan:
    """Moves the matriarch using the position of the average-fitness member.

    ``x_avg`` may be given when the members already moved this
    generation and the pre-move value must be used.
    """
    if x_avg is None:
        x_avg = average_fitness_position(clan)
    matriarch = clan.members[clan.matriarch_index]
    if params.matriarch_update is MatriarchUpdate.LITERAL:
        target = x_avg * params.beta
    else:
        target = matriarch.position + params.beta * (x_avg - matriarch.position)
    matriarch.position = bounds.snap(target)
    return clan


def separate_worst(
    clan: Clan, bounds: PositionBounds, worst: None | int = None
) -> Clan:
    """Replaces the worst member with a newcomer at a uniform random position."""
    if worst is None:
        worst = clan.worst_index
    r = float(clan.rng.random())
    clan.members[worst] = clan.spawn_elephant(separation_position(r, bounds))
    return clan


def apply_operators(clan: Clan, params: EhoParams, bounds: PositionBounds) -> None:
    """Position update, matriarch update, then separation.

    The matriarch, the average-fitness position and the worst member are
    all taken from the positions that were just evaluated.
    """
    worst = clan.worst_index
    x_avg = average_fitness_position(clan)
    update_positions(clan, params, bounds)
    update_matriarch(clan, params, bounds, x_avg=x_avg)
    if params.separate:
        separate_worst(clan, bounds, worst=worst)


def seed_sequence(seed: None | int) -> np.random.SeedSequence:
    """Root of all streams of a run. A missing seed draws OS entropy."""
    return np.random.SeedSequence(seed)


def map_ordered(
    function: Callable[[T], R], items: Sequence[T], workers: int
) -> list[R]:
    """Maps in order, on a thread pool when ``workers > 1``."""
    if workers <= 1 or len(items) <= 1:
        return [function(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(function, items))


class EhoifEngine:
    """Adapted elephant herding over raw or semantic positions.

    Per generation every elephant builds a surfing path from its
    position, each clan's generation best is collected, then the herding
    operators run at a barrier in clan order.
    """

    log = structlog.get_logger()

    def __init__(
        self,
        field: ScentField,
        params: EhoParams,
        *,
        positions: None | PositionSpace = None,
        workers: int = 1,
        time_limit: None | Quantity = None,
    ) -> None:
        if field.m == 0:
            raise PopulationConstraintError("Cannot forage on a graph without posts.")
        self.field = field
        self.params = params
        self.positions: PositionSpace = positions or RawPositions(field.m)
        self.bounds = PositionBounds(1, field.m)
        self.workers = workers
        self.time_limit = time_limit
        self.seeds = seed_sequence(params.seed)
        self.clans: list[Clan] = []
        self.collector = PathCollector()
        self.generation = 0
        self.migrations = 0

    @property
    def seed_entropy(self) -> int:
        return int(self.seeds.entropy)  # type: ignore[arg-type]

    def initialize(self) -> None:
        self.clans = init_population(
            self.params, self.field.m, np.random.default_rng(self.seeds)
        )
        self.log.debug(
            event=Event.POPULATION_INITIALIZED,
            clans=len(self.clans),
            positions=[[e.position for e in clan.members] for clan in self.clans],
        )

    def _forage(self, clan: Clan) -> Clan:
        for elephant in clan.members:
            elephant.path = build_surfing_path(
                elephant.position,
                self.field,
                self.positions,
                clan.rng,
                self.params.max_path_length,
            )
            elephant.fitness = elephant.path.fitness
        return clan

    def _after_foraging(self, clan: Clan) -> None:
        apply_operators(clan, self.params, self.bounds)

    def step(self) -> float:
        """Runs one generation and returns the best fitness found so far."""
        map_ordered(self._forage, self.clans, self.workers)
        for clan in self.clans:
            self.collector.offer([clan.record_best()])
            self._after_foraging(clan)
        self.generation += 1
        best = self.collector.close_generation()
        self.log.debug(
            event=Event.GENERATION_FINISHED,
            generation=self.generation,
            best_fitness=best,
        )
        return best

    def run(self) -> RankedPaths:
        deadline = Deadline(self.time_limit)
        if self.params.max_generations > 0:
            self.initialize()
        while self.generation < self.params.max_generations:
            self.step()
            if deadline.expired() and self.generation < self.params.max_generations:
                self.log.info(
                    event=Event.TIME_LIMIT_REACHED, generation=self.generation
                )
                break
        return self.collector.ranked(self.migrations)


def run_ehoif(
    field: ScentField,
    params: EhoParams = EhoParams(),
    *,
    positions: None | PositionSpace = None,
    workers: int = 1,
    time_limit: None | Quantity = None,
) -> RankedPaths:
    return EhoifEngine(
        field, params, positions=positions, workers=workers, time_limit=time_limit
    ).run()
