import itertools

import numpy as np
import pytest

from herdscent.engines.eho import (
    Clan,
    EhoifEngine,
    EhoParams,
    Elephant,
    MatriarchUpdate,
    PositionBounds,
    average_fitness_position,
    init_population,
    map_ordered,
    position_update,
    run_ehoif,
    separate_worst,
    separation_position,
    update_matriarch,
    update_positions,
)
from herdscent.errors import PopulationConstraintError
from herdscent.foraging import ScentField
from herdscent.units import herdscent_ureg
from tests.fields import chain_field, planted_field


def make_clan(positions: list[int], fitnesses: list[float], seed: int = 0) -> Clan:
    return Clan(
        clan_id=0,
        members=[
            Elephant(elephant_id=i, position=p, fitness=f)
            for i, (p, f) in enumerate(zip(positions, fitnesses))
        ],
        rng=np.random.default_rng(seed),
    )


@pytest.mark.parametrize(
    "value,expected",
    [
        (2.5, 3),
        (2.49, 2),
        (0.2, 1),
        (-7.0, 1),
        (100.4, 100),
        (250.0, 100),
    ],
)
def test_snap(value: float, expected: int) -> None:
    assert PositionBounds(1, 100).snap(value) == expected


def test_empty_bounds() -> None:
    with pytest.raises(ValueError):
        PositionBounds(5, 4)


@pytest.mark.parametrize(
    "x,x_best,alpha,r,expected",
    [
        (10, 50, 0.5, 0.5, 20),
        (37, 37, 0.9, 0.7, 37),
        (10, 50, 0.0, 0.9, 10),
        (90, 10, 1.0, 1.0, 10),
    ],
)
def test_position_update(
    x: int, x_best: int, alpha: float, r: float, expected: int
) -> None:
    assert position_update(x, x_best, alpha, r, PositionBounds(1, 100)) == expected


@pytest.mark.parametrize(
    "r,expected",
    [
        (0.0, 1),
        (0.5, 51),
        (0.999999, 100),
    ],
)
def test_separation_position(r: float, expected: int) -> None:
    assert separation_position(r, PositionBounds(1, 100)) == expected


def test_average_fitness_position() -> None:
    clan = make_clan([5, 100, 7], [0.2, 0.4, 0.9])
    assert average_fitness_position(clan) == 100


def test_average_fitness_position_identical_fitness() -> None:
    clan = make_clan([12, 3, 40], [0.5, 0.5, 0.5])
    assert average_fitness_position(clan) == 12


def test_update_matriarch_literal() -> None:
    clan = make_clan([5, 100, 7], [0.2, 0.4, 0.9])
    update_matriarch(clan, EhoParams(beta=0.4), PositionBounds(1, 200))
    assert [e.position for e in clan.members] == [5, 100, 40]


def test_update_matriarch_convex() -> None:
    clan = make_clan([5, 100, 60], [0.2, 0.4, 0.9])
    params = EhoParams(beta=0.5, matriarch_update=MatriarchUpdate.CONVEX)
    update_matriarch(clan, params, PositionBounds(1, 200))
    assert clan.members[2].position == 80


def test_matriarch_and_worst_ties() -> None:
    clan = make_clan([1, 2, 3, 4], [0.3, 0.9, 0.9, 0.3])
    assert clan.matriarch_index == 1
    assert clan.worst_index == 3


def test_update_positions_alpha_zero() -> None:
    clan = make_clan([5, 50, 90], [0.1, 0.8, 0.3])
    update_positions(clan, EhoParams(alpha=0.0), PositionBounds(1, 100))
    assert [e.position for e in clan.members] == [5, 50, 90]


def test_update_positions_moves_toward_matriarch() -> None:
    clan = make_clan([5, 50, 90], [0.1, 0.8, 0.3])
    update_positions(clan, EhoParams(alpha=1.0), PositionBounds(1, 100))
    positions = [e.position for e in clan.members]
    assert positions[1] == 50
    assert 5 <= positions[0] <= 50
    assert 50 <= positions[2] <= 90


@pytest.mark.parametrize("seed", range(100))
def test_separate_worst(seed: int) -> None:
    clan = make_clan([10, 20, 30, 40], [0.5, 0.1, 0.7, 0.3], seed=seed)
    separate_worst(clan, PositionBounds(1, 100))
    ids = [e.elephant_id for e in clan.members]
    assert len(clan.members) == 4
    assert 1 not in ids
    assert ids[1] == 4
    assert 1 <= clan.members[1].position <= 100
    assert clan.members[1].fitness == 0.0


def test_init_population_single_elephant() -> None:
    clans = init_population(
        EhoParams(n_clans=1, n_per_clan=1), 50, np.random.default_rng(0)
    )
    assert len(clans) == 1
    assert len(clans[0].members) == 1
    assert 1 <= clans[0].members[0].position <= 50


@pytest.mark.parametrize("seed", range(100))
def test_init_population_spread(seed: int) -> None:
    params = EhoParams(n_clans=3, n_per_clan=5, dist_clan=1000)
    clans = init_population(params, 4000, np.random.default_rng(seed))
    seeds = [clan.members[0].position for clan in clans]
    for a, b in itertools.combinations(seeds, 2):
        assert abs(a - b) >= 1000
    dist_elephant = params.elephant_distance(4000)
    positions = [e.position for clan in clans for e in clan.members]
    assert len(set(positions)) == len(positions)
    for clan in clans:
        seed_position = clan.members[0].position
        for elephant in clan.members:
            assert 1 <= elephant.position <= 4000
            assert abs(elephant.position - seed_position) <= dist_elephant


def test_init_population_is_deterministic() -> None:
    params = EhoParams(n_clans=4, n_per_clan=6)
    first = init_population(params, 500, np.random.default_rng(9))
    second = init_population(params, 500, np.random.default_rng(9))
    assert [[e.position for e in c.members] for c in first] == [
        [e.position for e in c.members] for c in second
    ]


@pytest.mark.parametrize(
    "params,m",
    [
        (EhoParams(n_clans=4, n_per_clan=5), 10),
        (EhoParams(n_clans=3, n_per_clan=1, dist_clan=20), 10),
        (EhoParams(n_clans=1, n_per_clan=5, dist_elephant=1), 100),
    ],
)
def test_init_population_constraints(params: EhoParams, m: int) -> None:
    with pytest.raises(PopulationConstraintError):
        init_population(params, m, np.random.default_rng(0))


@pytest.mark.parametrize(
    "kwargs",
    [
        {"alpha": 1.5},
        {"beta": -0.1},
        {"n_clans": 0},
        {"max_generations": -1},
        {"dist_clan": -1.0},
        {"max_path_length": 0},
    ],
)
def test_params_validation(kwargs: dict[str, float]) -> None:
    with pytest.raises(ValueError):
        EhoParams(**kwargs)  # type: ignore[arg-type]


def test_map_ordered_keeps_order() -> None:
    items = list(range(20))
    assert map_ordered(lambda x: x * x, items, 4) == [x * x for x in items]


def test_zero_generations() -> None:
    field = chain_field([0.1, 0.2, 0.3])
    result = run_ehoif(field, EhoParams(max_generations=0, seed=1))
    assert result.paths == ()
    assert result.generations == 0
    assert result.best is None


def test_single_elephant_single_generation() -> None:
    field = chain_field([0.1, 0.2, 0.3, 0.4])
    params = EhoParams(n_clans=1, n_per_clan=1, max_generations=1, seed=3)
    engine = EhoifEngine(field, params)
    result = engine.run()
    assert len(result.paths) == 1
    start = result.paths[0].edges[0]
    # every edge climbs to the end of the chain
    assert result.paths[0].edges == tuple(range(start, 4))
    assert result.curve == (0.4,)


@pytest.fixture(name="planted", scope="module")
def planted_fixture() -> ScentField:
    field, _ = planted_field(1_500, seed=2)
    return field


def small_params(**kwargs: object) -> EhoParams:
    options: dict[str, object] = {
        "n_clans": 4,
        "n_per_clan": 10,
        "max_generations": 8,
        "seed": 11,
    }
    options.update(kwargs)
    return EhoParams(**options)  # type: ignore[arg-type]


def test_positions_stay_in_bounds(planted: ScentField) -> None:
    engine = EhoifEngine(planted, small_params())
    engine.initialize()
    for _ in range(engine.params.max_generations):
        engine.step()
        assert len(engine.clans) == 4
        for clan in engine.clans:
            assert len(clan.members) == 10
            for elephant in clan.members:
                assert 1 <= elephant.position <= planted.m


def test_curve_is_non_decreasing(planted: ScentField) -> None:
    result = run_ehoif(planted, small_params())
    assert result.generations == 8
    assert all(b >= a for a, b in zip(result.curve, result.curve[1:]))
    assert result.best_fitness == result.curve[-1]
    fitnesses = [path.fitness for path in result.paths]
    assert fitnesses == sorted(fitnesses, reverse=True)
    terminals = [path.terminal for path in result.paths]
    assert len(set(terminals)) == len(terminals)


def test_same_seed_same_result(planted: ScentField) -> None:
    first = run_ehoif(planted, small_params())
    second = run_ehoif(planted, small_params())
    assert first == second


def test_workers_do_not_change_result(planted: ScentField) -> None:
    serial = run_ehoif(planted, small_params())
    threaded = run_ehoif(planted, small_params(), workers=4)
    assert serial == threaded


def test_fixed_point_without_movement(planted: ScentField) -> None:
    params = small_params(
        alpha=0.0, beta=0.0, matriarch_update=MatriarchUpdate.CONVEX, separate=False
    )
    engine = EhoifEngine(planted, params)
    engine.initialize()
    before = [[e.position for e in clan.members] for clan in engine.clans]
    for _ in range(3):
        engine.step()
    assert [[e.position for e in clan.members] for clan in engine.clans] == before


def test_time_limit_stops_after_one_generation(planted: ScentField) -> None:
    result = run_ehoif(planted, small_params(), time_limit=0 * herdscent_ureg.second)
    assert result.generations == 1


@pytest.mark.slow
def test_default_parameters_keep_positions_in_bounds() -> None:
    field, _ = planted_field(5_000, seed=5)
    engine = EhoifEngine(field, EhoParams(seed=1))
    engine.initialize()
    for _ in range(engine.params.max_generations):
        engine.step()
        assert len(engine.clans) == 8
        for clan in engine.clans:
            assert len(clan.members) == 90
            assert all(1 <= e.position <= field.m for e in clan.members)
