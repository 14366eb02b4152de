import time
from dataclasses import dataclass
from typing import Iterable

from pint import Quantity

from ..foraging import SurfingPath
from ..units import elapsed_since


@dataclass(frozen=True, kw_only=True)
class RankedPaths:
    """Output of every engine run.

    ``paths`` are sorted by fitness, best first, with at most one path
    per terminal edge. ``curve[g]`` is the best fitness found up to and
    including generation ``g + 1``.
    """

    paths: tuple[SurfingPath, ...]
    curve: tuple[float, ...]
    migrations: int = 0

    @property
    def generations(self) -> int:
        return len(self.curve)

    @property
    def best(self) -> None | SurfingPath:
        return self.paths[0] if self.paths else None

    @property
    def best_fitness(self) -> float:
        return self.paths[0].fitness if self.paths else 0.0

    @property
    def converged_generation(self) -> int:
        """First generation whose best-so-far equals the final best, 0 if none ran."""
        if not self.curve:
            return 0
        final = self.curve[-1]
        return next(g + 1 for g, value in enumerate(self.curve) if value == final)


class PathCollector:
    def __init__(self) -> None:
        self._by_terminal: dict[int, SurfingPath] = {}
        self._curve: list[float] = []
        self._best = 0.0

    @property
    def best_fitness(self) -> float:
        return self._best

    def offer(self, paths: Iterable[None | SurfingPath]) -> None:
        for path in paths:
            if path is None or not path.edges:
                continue
            self._by_terminal.setdefault(path.terminal, path)
            self._best = max(self._best, path.fitness)

    def close_generation(self) -> float:
        self._curve.append(self._best)
        return self._best

    def ranked(self, migrations: int = 0) -> RankedPaths:
        paths = sorted(
            self._by_terminal.values(), key=lambda p: (-p.fitness, p.terminal)
        )
        return RankedPaths(
            paths=tuple(paths), curve=tuple(self._curve), migrations=migrations
        )


def best_of(paths: Iterable[None | SurfingPath]) -> None | SurfingPath:
    """Highest-fitness path; ties keep the earliest."""
    best: None | SurfingPath = None
    for path in paths:
        if path is not None and (best is None or path.fitness > best.fitness):
            best = path
    return best


class Deadline:
    """Optional wall-time budget checked between generations."""

    def __init__(self, limit: None | Quantity) -> None:
        self.limit = limit
        self.start = time.perf_counter()

    def expired(self) -> bool:
        if self.limit is None:
            return False
        return bool(elapsed_since(self.start) >= self.limit)
