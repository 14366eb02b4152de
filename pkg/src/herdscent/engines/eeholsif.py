import enum
import math
from dataclasses import dataclass
from enum import StrEnum
from typing import Sequence

import numpy as np
import structlog
from numpy.typing import NDArray
from pint import Quantity

from ..events import Event
from ..foraging import ScentField
from ..territories import Clustering, Territory
from ..text import euclidean_distance
from .eho import (
    Clan,
    EhoifEngine,
    EhoParams,
    Elephant,
    apply_operators,
)
from .ranking import RankedPaths

log = structlog.get_logger()


@enum.unique
class ExplorationWeighting(StrEnum):
    #: farther territories are likelier, as the placement formula is printed
    DIRECT = "direct"
    #: nearer territories are likelier (1 / d)
    INVERSE = "inverse"
    #: every territory is equally likely
    UNIFORM = "uniform"


@dataclass(frozen=True, kw_only=True)
class EeholsifParams(EhoParams):
    alpha: float = 0.5
    beta: float = 0.5
    n_clans: int = 5
    n_per_clan: int = 50
    max_generations: int = 25
    q0: float = 0.75
    t0: int = 6
    #: number of territories when the clustering is built for a run
    k: int = 55
    exploration_weighting: ExplorationWeighting = ExplorationWeighting.DIRECT

    def __post_init__(self) -> None:
        super().__post_init__()
        if not 0 <= self.q0 <= 1:
            raise ValueError(f"q0 is {self.q0}. It must be in a range [0,1]")
        if self.t0 < 1:
            raise ValueError(f"t0 must be at least 1, got {self.t0}.")
        if self.k < 1:
            raise ValueError(f"k must be at least 1, got {self.k}.")


@dataclass(kw_only=True)
class ClanState(Clan):
    territory_id: int
    #: consecutive generations without improving best_fitness
    stagnation: int = 0
    best_fitness: float = 0.0

    def observe(self, generation_best: float) -> None:
        if generation_best > self.best_fitness:
            self.best_fitness = generation_best
            self.stagnation = 0
        else:
            self.stagnation += 1


def territory_distances(field: ScentField, clustering: Clustering) -> list[float]:
    """Distance from the interests to the centroid of every real territory."""
    if field.space is None or field.query is None:
        raise ValueError(
            "Territory distances need a scent field built from a vector space."
        )
    return [
        euclidean_distance(field.query, field.space.vectors[centroid])
        for centroid in clustering.centroids
    ]


def territory_probabilities(
    distances: Sequence[float], weighting: ExplorationWeighting
) -> NDArray[np.float64]:
    """Selection probabilities of the exploration branch of clan placement."""
    d = np.asarray(distances, dtype=np.float64)
    uniform = np.full(len(d), 1.0 / len(d))
    if weighting is ExplorationWeighting.UNIFORM:
        return uniform
    if weighting is ExplorationWeighting.DIRECT:
        total = math.fsum(d)
        return d / total if total > 0 else uniform
    at_zero = d == 0
    if at_zero.any():
        return at_zero / np.count_nonzero(at_zero)
    inverse = 1.0 / d
    return inverse / math.fsum(inverse)


def choose_territory(
    distances: Sequence[float],
    q0: float,
    weighting: ExplorationWeighting,
    rng: np.random.Generator,
) -> int:
    """Pseudo-random proportional rule.

    With probability ``q0`` the nearest territory (lowest id on ties),
    otherwise a draw from :py:func:`territory_probabilities`.
    """
    if rng.random() < q0:
        return int(np.argmin(distances))
    cumulative = np.cumsum(territory_probabilities(distances, weighting))
    threshold = rng.random() * cumulative[-1]
    index = int(np.searchsorted(cumulative, threshold, side="right"))
    return min(index, len(distances) - 1)


def draw_positions_in(
    territory: Territory, n: int, dist_elephant: float, rng: np.random.Generator
) -> list[int]:
    """A seed inside the territory and ``n - 1`` members within
    ``dist_elephant`` of it, all inside the territory range.

    Members are distinct unless the window is too small to hold them.
    """
    lo, hi = territory.position_range
    seed = int(rng.integers(lo, hi + 1))
    window_lo = max(lo, math.ceil(seed - dist_elephant))
    window_hi = min(hi, math.floor(seed + dist_elephant))
    window = np.arange(window_lo, window_hi + 1)
    window = window[window != seed]
    replace = len(window) < n - 1
    if len(window) == 0:
        window = np.array([seed])
    others = rng.choice(window, size=n - 1, replace=replace)
    return [seed, *(int(p) for p in others)]


def place_clans(
    distances: Sequence[float],
    clustering: Clustering,
    params: EeholsifParams,
    rng: np.random.Generator,
) -> list[ClanState]:
    """Places every clan in a territory chosen by the pseudo-random
    proportional rule, one ``q`` per clan. Clan streams are spawned from
    ``rng`` after the placement draws.
    """
    territories = clustering.real_territories
    dist_elephant = params.elephant_distance(clustering.m)
    placements = []
    for _ in range(params.n_clans):
        territory_id = choose_territory(
            distances, params.q0, params.exploration_weighting, rng
        )
        positions = draw_positions_in(
            territories[territory_id], params.n_per_clan, dist_elephant, rng
        )
        placements.append((territory_id, positions))

    clans = []
    for clan_id, ((territory_id, positions), clan_rng) in enumerate(
        zip(placements, rng.spawn(params.n_clans))
    ):
        clans.append(
            ClanState(
                clan_id=clan_id,
                members=[
                    Elephant(elephant_id=i, position=p) for i, p in enumerate(positions)
                ],
                rng=clan_rng,
                territory_id=territory_id,
            )
        )
        log.debug(
            event=Event.CLAN_PLACED,
            clan_id=clan_id,
            territory_id=territory_id,
            position_range=territories[territory_id].position_range,
        )
    return clans


def migrate_clan(
    clan: ClanState, clustering: Clustering, params: EeholsifParams
) -> ClanState:
    """Moves a stagnating clan to a uniformly chosen other territory.

    Members are redrawn inside the new territory with fresh ids. The
    clan's best solution and best fitness are kept. With a single
    territory only the stagnation counter is reset.
    """
    territories = clustering.real_territories
    origin = clan.territory_id
    candidates = [t.cluster_id for t in territories if t.cluster_id != origin]
    clan.stagnation = 0
    if not candidates:
        return clan
    target = candidates[int(clan.rng.integers(len(candidates)))]
    positions = draw_positions_in(
        territories[target],
        len(clan.members),
        params.elephant_distance(clustering.m),
        clan.rng,
    )
    clan.members = [clan.spawn_elephant(p) for p in positions]
    clan.territory_id = target
    log.debug(
        event=Event.CLAN_MIGRATED,
        clan_id=clan.clan_id,
        origin=origin,
        territory_id=target,
    )
    return clan


class EeholsifEngine(EhoifEngine):
    """Territory-aware herding over semantic positions.

    Clans start in territories picked from the distance of the interests
    to each centroid. A clan whose best fitness has not improved for
    ``t0`` generations migrates instead of running the herding operators.
    Paths may still leave the territory.
    """

    def __init__(
        self,
        field: ScentField,
        clustering: Clustering,
        params: EeholsifParams,
        *,
        distances: None | Sequence[float] = None,
        workers: int = 1,
        time_limit: None | Quantity = None,
    ) -> None:
        if clustering.m != field.m:
            raise ValueError(
                f"Clustering covers {clustering.m} posts but the graph has {field.m}."
            )
        super().__init__(
            field,
            params,
            positions=clustering.positions,
            workers=workers,
            time_limit=time_limit,
        )
        self.eeholsif_params = params
        self.clustering = clustering
        self.distances = (
            list(distances)
            if distances is not None
            else territory_distances(field, clustering)
        )
        if len(self.distances) != clustering.k:
            raise ValueError(
                f"Got {len(self.distances)} territory distances for {clustering.k} territories."
            )

    def initialize(self) -> None:
        self.clans = list(
            place_clans(
                self.distances,
                self.clustering,
                self.eeholsif_params,
                np.random.default_rng(self.seeds),
            )
        )
        self.log.debug(
            event=Event.POPULATION_INITIALIZED,
            clans=len(self.clans),
            territories=[
                clan.territory_id for clan in self.clans if isinstance(clan, ClanState)
            ],
        )

    def _after_foraging(self, clan: Clan) -> None:
        assert isinstance(clan, ClanState)
        clan.observe(max(clan.fitnesses))
        if clan.stagnation >= self.eeholsif_params.t0:
            origin = clan.territory_id
            migrate_clan(clan, self.clustering, self.eeholsif_params)
            if clan.territory_id != origin:
                self.migrations += 1
            return
        apply_operators(clan, self.params, self.bounds)


def run_eeholsif(
    field: ScentField,
    clustering: Clustering,
    params: EeholsifParams = EeholsifParams(),
    *,
    distances: None | Sequence[float] = None,
    workers: int = 1,
    time_limit: None | Quantity = None,
) -> RankedPaths:
    return EeholsifEngine(
        field,
        clustering,
        params,
        distances=distances,
        workers=workers,
        time_limit=time_limit,
    ).run()

