"""Equilibrium quality measurements.

Best responses are found by enumerating pure strategies, which is exact
because each player's payoff is linear in their own mixed strategy.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

from .errors import DomainError
from .games.core import TeamGame, _vectors, evaluate_utility, gradient

__all__ = [
    "MetricSample",
    "best_response_value",
    "ne_gap",
    "ne_gap_terms",
    "ne_gap_batch",
    "distance",
]


@dataclass(frozen=True)
class MetricSample:
    step: int
    ne_gap: float
    dist_ref: float | None
    utility: float


def _player_utility(game: TeamGame, player: int, value: float) -> float:
    return -value if game.team_of(player) == "A" else value


def best_response_value(game: TeamGame, player: int, profile) -> float:
    """Best payoff ``player`` can get against the others' current strategies.

    Team A players maximize ``-U``, so their value is ``-min_k dU/dx_k``.
    """
    if not 0 <= player < game.n_players:
        raise DomainError(f"no player {player} in a {game.n_players}-player game")
    partials = gradient(game, profile)[player]
    if game.team_of(player) == "A":
        return float(-partials.min())
    return float(partials.max())


def ne_gap_terms(game: TeamGame, profile) -> np.ndarray:
    """Per-player regret of the current strategy against a pure best response."""
    flat = np.concatenate(_vectors(game, profile))
    value = evaluate_utility(game, flat)
    terms = np.empty(game.n_players)
    for i, partials in enumerate(gradient(game, flat)):
        if game.team_of(i) == "A":
            terms[i] = value - partials.min()
        else:
            terms[i] = partials.max() - value
    return np.maximum(terms, 0.0)


def ne_gap(game: TeamGame, profile) -> float:
    """Sum over all players of best-response value minus current value."""
    return float(ne_gap_terms(game, profile).sum())


def ne_gap_batch(game: TeamGame, profiles: np.ndarray) -> np.ndarray:
    """Vectorized :func:`ne_gap` over the rows of a ``(batch, dim)`` array."""
    profiles = np.asarray(profiles, dtype=np.float64)
    off = game.domain.offsets
    vecs = [profiles[:, off[i] : off[i + 1]] for i in range(game.n_players)]
    n = game.n_players
    batch = n  # einsum label for the batch axis
    gap = np.zeros(profiles.shape[0])
    value = None
    for i in range(n):
        operands: list[Any] = [game.payoff, list(range(n))]
        for j, v in enumerate(vecs):
            if j != i:
                operands += [v, [batch, j]]
        operands.append([batch, i])
        partials = np.einsum(*operands, optimize=True)
        if value is None:
            value = np.einsum("bk,bk->b", partials, vecs[i])
        if game.team_of(i) == "A":
            gap += np.maximum(value - partials.min(axis=1), 0.0)
        else:
            gap += np.maximum(partials.max(axis=1) - value, 0.0)
    return gap


def distance(z, reference) -> float:
    return float(np.linalg.norm(np.asarray(z) - np.asarray(reference)))


def classify(final_gap: float, tol: float = 1e-2) -> str:
    return "converged" if final_gap < tol else "not_converged"


def utility_of(game: TeamGame, player: int, profile) -> float:
    return _player_utility(game, player, evaluate_utility(game, profile))
