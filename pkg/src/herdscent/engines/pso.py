from dataclasses import dataclass

import numpy as np
import structlog
from pint import Quantity

from ..events import Event
from ..foraging import (
    PositionSpace,
    RawPositions,
    ScentField,
    SurfingPath,
    build_surfing_path,
)
from .eho import PositionBounds, map_ordered, seed_sequence
from .ranking import Deadline, PathCollector, RankedPaths


@dataclass(frozen=True, kw_only=True)
class PsoParams:
    c1: float = 1.5
    c2: float = 0.4
    inertia: float = 0.7
    n_particles: int = 600
    n_generations: int = 90
    max_path_length: None | int = None
    seed: None | int = None

    def __post_init__(self) -> None:
        if self.c1 < 0 or self.c2 < 0 or self.inertia < 0:
            raise ValueError(
                f"c1={self.c1}, c2={self.c2} and inertia={self.inertia} must not be negative."
            )
        if self.n_particles < 1:
            raise ValueError(f"n_particles must be at least 1, got {self.n_particles}.")
        if self.n_generations < 0:
            raise ValueError(
                f"n_generations must not be negative, got {self.n_generations}."
            )
        if self.max_path_length is not None and self.max_path_length < 1:
            raise ValueError(
                f"max_path_length must be at least 1, got {self.max_path_length}."
            )


@dataclass(kw_only=True)
class Particle:
    position: int
    velocity: float
    rng: np.random.Generator
    path: None | SurfingPath = None
    fitness: float = 0.0
    best_position: int = 0
    best_fitness: float = -1.0


class PsoifEngine:
    """Particle swarm over the position space.

    Every particle builds a surfing path from its position. Velocities
    follow ``w * v + c1 * r1 * (pbest - x) + c2 * r2 * (gbest - x)`` and
    positions are rounded and clamped to ``[1, m]``.
    """

    log = structlog.get_logger()

    def __init__(
        self,
        field: ScentField,
        params: PsoParams,
        *,
        positions: None | PositionSpace = None,
        workers: int = 1,
        time_limit: None | Quantity = None,
    ) -> None:
        if field.m == 0:
            raise ValueError("Cannot forage on a graph without posts.")
        self.field = field
        self.params = params
        self.positions: PositionSpace = positions or RawPositions(field.m)
        self.bounds = PositionBounds(1, field.m)
        self.workers = workers
        self.time_limit = time_limit
        self.seeds = seed_sequence(params.seed)
        self.particles: list[Particle] = []
        self.global_best_position = 1
        self.global_best_fitness = -1.0
        self.collector = PathCollector()
        self.generation = 0

    @property
    def seed_entropy(self) -> int:
        return int(self.seeds.entropy)  # type: ignore[arg-type]

    def initialize(self) -> None:
        self.particles = []
        for stream in self.seeds.spawn(self.params.n_particles):
            rng = np.random.default_rng(stream)
            position = int(rng.integers(1, self.field.m + 1))
            self.particles.append(
                Particle(
                    position=position, velocity=0.0, rng=rng, best_position=position
                )
            )
        self.log.debug(
            event=Event.POPULATION_INITIALIZED, particles=len(self.particles)
        )

    def _evaluate(self, particle: Particle) -> Particle:
        particle.path = build_surfing_path(
            particle.position,
            self.field,
            self.positions,
            particle.rng,
            self.params.max_path_length,
        )
        particle.fitness = particle.path.fitness
        return particle

    def _move(self, particle: Particle) -> None:
        r1, r2 = particle.rng.random(2)
        particle.velocity = (
            self.params.inertia * particle.velocity
            + self.params.c1 * r1 * (particle.best_position - particle.position)
            + self.params.c2 * r2 * (self.global_best_position - particle.position)
        )
        particle.position = self.bounds.snap(particle.position + particle.velocity)

    def step(self) -> float:
        map_ordered(self._evaluate, self.particles, self.workers)
        generation_best: None | SurfingPath = None
        for particle in self.particles:
            if particle.fitness > particle.best_fitness:
                particle.best_fitness = particle.fitness
                particle.best_position = particle.position
            if particle.fitness > self.global_best_fitness:
                self.global_best_fitness = particle.fitness
                self.global_best_position = particle.position
            if generation_best is None or particle.fitness > generation_best.fitness:
                generation_best = particle.path
        for particle in self.particles:
            self._move(particle)
        self.collector.offer([generation_best])
        self.generation += 1
        best = self.collector.close_generation()
        self.log.debug(
            event=Event.GENERATION_FINISHED,
            generation=self.generation,
            best_fitness=best,
            global_best_position=self.global_best_position,
        )
        return best

    def run(self) -> RankedPaths:
        deadline = Deadline(self.time_limit)
        if self.params.n_generations > 0:
            self.initialize()
        while self.generation < self.params.n_generations:
            self.step()
            if deadline.expired() and self.generation < self.params.n_generations:
                self.log.info(
                    event=Event.TIME_LIMIT_REACHED, generation=self.generation
                )
                break
        return self.collector.ranked()


def run_psoif(
    field: ScentField,
    params: PsoParams = PsoParams(),
    *,
    positions: None | PositionSpace = None,
    workers: int = 1,
    time_limit: None | Quantity = None,
) -> RankedPaths:
    return PsoifEngine(
        field, params, positions=positions, workers=workers, time_limit=time_limit
    ).run()
