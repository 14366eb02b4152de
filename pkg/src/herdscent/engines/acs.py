from dataclasses import dataclass

import numpy as np
import structlog
from numpy.typing import NDArray
from pint import Quantity

from ..events import Event
from ..foraging import ScentField, SurfingPath, sample_edge
from .eho import map_ordered, seed_sequence
from .ranking import Deadline, PathCollector, RankedPaths, best_of


@dataclass(frozen=True, kw_only=True)
class AcsParams:
    alpha: float = 0.2
    beta: float = 0.4
    rho: float = 0.8
    q0: float = 0.8
    n_ants: int = 50
    n_generations: int = 50
    max_path_length: None | int = None
    seed: None | int = None

    def __post_init__(self) -> None:
        if not 0 < self.rho <= 1:
            raise ValueError(f"rho is {self.rho}. It must be in a range (0,1]")
        if not 0 <= self.q0 <= 1:
            raise ValueError(f"q0 is {self.q0}. It must be in a range [0,1]")
        if self.alpha < 0 or self.beta < 0:
            raise ValueError(
                f"alpha and beta must not be negative, got {self.alpha} and {self.beta}."
            )
        if self.n_ants < 1:
            raise ValueError(f"n_ants must be at least 1, got {self.n_ants}.")
        if self.n_generations < 0:
            raise ValueError(
                f"n_generations must not be negative, got {self.n_generations}."
            )
        if self.max_path_length is not None and self.max_path_length < 1:
            raise ValueError(
                f"max_path_length must be at least 1, got {self.max_path_length}."
            )


def choose_next_edge(
    scents: dict[int, float],
    pheromone: NDArray[np.float64],
    params: AcsParams,
    rng: np.random.Generator,
) -> int:
    """ACS transition over candidates with positive scent.

    Desirability is ``tau ** alpha * scent ** beta``. With probability
    ``q0`` the most desirable candidate is taken (lowest id on ties),
    otherwise one is drawn proportionally to desirability.
    """
    candidates = sorted(scents)
    desirability = np.array(
        [pheromone[c] ** params.alpha * scents[c] ** params.beta for c in candidates]
    )
    if rng.random() < params.q0:
        return candidates[int(np.argmax(desirability))]
    total = float(desirability.sum())
    return sample_edge(
        {c: float(w) / total for c, w in zip(candidates, desirability)}, rng
    )


class AcsifEngine:
    """Ant colony system over the content edges.

    Pheromone lives on content edges and starts at ``tau0 = 1 / m``. Ants
    of a generation walk against a frozen pheromone table; local decay
    for every traversed edge and the global deposit on the best path so
    far are applied at the generation barrier.
    """

    log = structlog.get_logger()

    def __init__(
        self,
        field: ScentField,
        params: AcsParams,
        *,
        workers: int = 1,
        time_limit: None | Quantity = None,
    ) -> None:
        if field.m == 0:
            raise ValueError("Cannot forage on a graph without posts.")
        self.field = field
        self.params = params
        self.workers = workers
        self.time_limit = time_limit
        self.seeds = seed_sequence(params.seed)
        self.ant_rngs = [
            np.random.default_rng(s) for s in self.seeds.spawn(params.n_ants)
        ]
        self.tau0 = 1.0 / field.m
        self.pheromone = np.full(field.m, self.tau0, dtype=np.float64)
        self.collector = PathCollector()
        self.best_path: None | SurfingPath = None
        self.generation = 0

    @property
    def seed_entropy(self) -> int:
        return int(self.seeds.entropy)  # type: ignore[arg-type]

    def walk(self, rng: np.random.Generator) -> SurfingPath:
        edge = int(rng.integers(self.field.m))
        edges = [edge]
        similarities = [self.field.similarity(edge)]
        visited = {edge}
        limit = self.params.max_path_length
        while limit is None or len(edges) < limit:
            scents = self.field.positive_neighbors(edge, visited)
            if not scents:
                break
            edge = choose_next_edge(scents, self.pheromone, self.params, rng)
            edges.append(edge)
            similarities.append(self.field.similarity(edge))
            visited.add(edge)
        return SurfingPath(edges=tuple(edges), similarities=tuple(similarities))

    def local_update(self, path: SurfingPath) -> None:
        rho = self.params.rho
        for edge in path.edges:
            self.pheromone[edge] = (1 - rho) * self.pheromone[edge] + rho * self.tau0

    def global_update(self, path: SurfingPath) -> None:
        """Deposit on the best path. Pheromone never exceeds tau0 + 1.

        The deposit is ``tau0 + fitness``, so a best path of fitness 0
        leaves its edges at tau0. Only positive-fitness paths are reinforced.
        """
        rho = self.params.rho
        deposit = self.tau0 + path.fitness
        for edge in path.edges:
            self.pheromone[edge] = (1 - rho) * self.pheromone[edge] + rho * deposit

    def step(self) -> float:
        paths = map_ordered(self.walk, self.ant_rngs, self.workers)
        for path in paths:
            self.local_update(path)
        generation_best = best_of(paths)
        if generation_best is not None and (
            self.best_path is None or generation_best.fitness > self.best_path.fitness
        ):
            self.best_path = generation_best
        if self.best_path is not None:
            self.global_update(self.best_path)
        self.collector.offer([generation_best])
        self.generation += 1
        best = self.collector.close_generation()
        self.log.debug(
            event=Event.PHEROMONE_UPDATED,
            generation=self.generation,
            tau_min=float(self.pheromone.min()),
            tau_max=float(self.pheromone.max()),
        )
        self.log.debug(
            event=Event.GENERATION_FINISHED,
            generation=self.generation,
            best_fitness=best,
        )
        return best

    def run(self) -> RankedPaths:
        deadline = Deadline(self.time_limit)
        while self.generation < self.params.n_generations:
            self.step()
            if deadline.expired() and self.generation < self.params.n_generations:
                self.log.info(
                    event=Event.TIME_LIMIT_REACHED, generation=self.generation
                )
                break
        return self.collector.ranked()


def run_acsif(
    field: ScentField,
    params: AcsParams = AcsParams(),
    *,
    workers: int = 1,
    time_limit: None | Quantity = None,
) -> RankedPaths:
    return AcsifEngine(field, params, workers=workers, time_limit=time_limit).run()
