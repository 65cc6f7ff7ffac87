"""Congestion games and their reduction to two-team zero-sum games.

Team A is the set of congestion players with their original strategy sets;
team B is one dummy per congestion player with a single action. Team A's
payoff is minus the Rosenthal potential and team B's is the potential, so a
unilateral deviation changes team A's payoff exactly as it changes the
deviator's congestion cost (with opposite sign).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import DimensionError, DomainError
from .core import TeamGame

__all__ = ["CongestionGame", "congestion_to_team_game"]


@dataclass(frozen=True)
class CongestionGame:
    """``costs[e][l - 1]`` is the per-user cost of edge ``e`` at load ``l``."""

    num_players: int
    costs: tuple[tuple[float, ...], ...]
    strategies: tuple[tuple[frozenset[int], ...], ...]

    def __post_init__(self):
        n = int(self.num_players)
        if n <= 0:
            raise DomainError("need at least one player")
        costs = tuple(tuple(float(c) for c in row) for row in self.costs)
        for e, row in enumerate(costs):
            if len(row) < n or not np.all(np.isfinite(row[:n])):
                raise DomainError(f"edge {e} needs finite costs for loads 1..{n}")
        if len(self.strategies) != n:
            raise DimensionError(f"expected strategy sets for {n} players")
        strategies = []
        for i, options in enumerate(self.strategies):
            opts = tuple(frozenset(int(e) for e in s) for s in options)
            if not opts:
                raise DomainError(f"player {i} has no strategies")
            for s in opts:
                if not s:
                    raise DomainError(f"player {i} has an empty strategy")
                if min(s) < 0 or max(s) >= len(costs):
                    raise DomainError(f"player {i} uses an unknown edge in {sorted(s)}")
            strategies.append(opts)
        object.__setattr__(self, "num_players", n)
        object.__setattr__(self, "costs", costs)
        object.__setattr__(self, "strategies", tuple(strategies))

    @classmethod
    def build(cls, costs: Sequence[Sequence[float]], strategies: Sequence[Sequence[Sequence[int]]]):
        return cls(len(strategies), tuple(map(tuple, costs)), tuple(tuple(map(frozenset, s)) for s in strategies))

    @property
    def num_edges(self) -> int:
        return len(self.costs)

    @property
    def strategy_counts(self) -> tuple[int, ...]:
        return tuple(len(s) for s in self.strategies)

    def loads(self, profile: Sequence[int]) -> np.ndarray:
        loads = np.zeros(self.num_edges, dtype=int)
        for i, a in enumerate(profile):
            for e in self.strategies[i][a]:
                loads[e] += 1
        return loads

    def player_cost(self, profile: Sequence[int], player: int) -> float:
        loads = self.loads(profile)
        return sum(self.costs[e][loads[e] - 1] for e in self.strategies[player][profile[player]])

    def potential(self, profile: Sequence[int]) -> float:
        """Rosenthal potential: sum over edges of the first ``load`` costs."""
        loads = self.loads(profile)
        return float(sum(sum(self.costs[e][:l]) for e, l in enumerate(loads)))

    def expected_cost(self, mixed: Sequence[np.ndarray], player: int) -> float:
        total = 0.0
        for profile in itertools.product(*(range(c) for c in self.strategy_counts)):
            p = np.prod([mixed[i][a] for i, a in enumerate(profile)])
            if p:
                total += p * self.player_cost(profile, player)
        return total

    def best_deviation_gain(self, mixed: Sequence[np.ndarray]) -> float:
        """Largest expected-cost reduction any single player gets by switching to a pure strategy."""
        gain = 0.0
        for i, count in enumerate(self.strategy_counts):
            current = self.expected_cost(mixed, i)
            for a in range(count):
                pure = np.zeros(count)
                pure[a] = 1.0
                trial = list(mixed)
                trial[i] = pure
                gain = max(gain, current - self.expected_cost(trial, i))
        return gain


def congestion_to_team_game(cg: CongestionGame) -> TeamGame:
    counts = cg.strategy_counts
    potential = np.zeros(counts)
    for profile in itertools.product(*(range(c) for c in counts)):
        potential[profile] = cg.potential(profile)
    payoff = potential.reshape(counts + (1,) * cg.num_players)
    return TeamGame(counts, (1,) * cg.num_players, payoff, {"family": "congestion"})
