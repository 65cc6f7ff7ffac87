"""Two-team zero-sum normal-form games.

The payoff tensor stores team B's payoff ``U`` for every pure profile, one
axis per player with team A's players first. Team A receives ``-U``; that
value is never stored. Team A minimizes ``U`` and team B maximizes it.

All derivatives are taken with respect to the full probability coordinates
(one coordinate per pure strategy). Because ``U`` is multilinear, the partial
derivative with respect to ``x[i][k]`` is the expected payoff when player
``i`` plays ``k`` and everyone else keeps their mixed strategy.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
from numba import njit

from ..errors import DimensionError, DomainError
from ..geometry import Domain, chart_basis

__all__ = [
    "TeamGame",
    "MixedProfile",
    "evaluate_utility",
    "gradient",
    "hessian_blocks",
    "signed_field",
    "game_sign",
]

PROFILE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class TeamGame:
    """Dense two-team zero-sum game.

    ``payoff[a_1, ..., a_n, b_1, ..., b_m]`` is team B's payoff when team A's
    players pick ``a_i`` and team B's players pick ``b_j``.
    """

    team_a_strategy_counts: tuple[int, ...]
    team_b_strategy_counts: tuple[int, ...]
    payoff: np.ndarray
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        a = tuple(int(c) for c in self.team_a_strategy_counts)
        b = tuple(int(c) for c in self.team_b_strategy_counts)
        if not a or not b:
            raise DomainError("each team needs at least one player")
        if any(c <= 0 for c in a + b):
            raise DomainError("strategy counts must be positive")
        payoff = np.array(self.payoff, dtype=np.float64)
        if payoff.shape != a + b:
            raise DimensionError(f"payoff shape {payoff.shape} does not match counts {a + b}")
        if not np.all(np.isfinite(payoff)):
            raise DomainError("payoff entries must be finite")
        payoff.setflags(write=False)
        object.__setattr__(self, "team_a_strategy_counts", a)
        object.__setattr__(self, "team_b_strategy_counts", b)
        object.__setattr__(self, "payoff", payoff)
        object.__setattr__(self, "metadata", dict(self.metadata))

    @property
    def n_a(self) -> int:
        return len(self.team_a_strategy_counts)

    @property
    def n_b(self) -> int:
        return len(self.team_b_strategy_counts)

    @property
    def n_players(self) -> int:
        return self.n_a + self.n_b

    @property
    def counts(self) -> tuple[int, ...]:
        return self.team_a_strategy_counts + self.team_b_strategy_counts

    @property
    def domain(self) -> Domain:
        return Domain.simplices(self.counts)

    @property
    def dim(self) -> int:
        return sum(self.counts)

    @property
    def team_a_dim(self) -> int:
        return sum(self.team_a_strategy_counts)

    def team_of(self, player: int) -> str:
        if not 0 <= player < self.n_players:
            raise DomainError(f"no player {player} in a {self.n_players}-player game")
        return "A" if player < self.n_a else "B"

    def with_payoff(self, payoff) -> "TeamGame":
        return TeamGame(self.team_a_strategy_counts, self.team_b_strategy_counts, payoff)

    # Method-style access shared with PolynomialGame, so dynamics and
    # stability code can treat both uniformly.
    def utility(self, profile) -> float:
        return evaluate_utility(self, profile)

    def flat_gradient(self, z) -> np.ndarray:
        return np.concatenate(gradient(self, z))

    def hessian(self, z) -> np.ndarray:
        return hessian_blocks(self, z)


@dataclass(frozen=True)
class MixedProfile:
    """One probability vector per player, split by team."""

    x: tuple[np.ndarray, ...]
    y: tuple[np.ndarray, ...]

    def __post_init__(self):
        xs = tuple(np.array(v, dtype=np.float64) for v in self.x)
        ys = tuple(np.array(v, dtype=np.float64) for v in self.y)
        for v in xs + ys:
            if v.ndim != 1 or v.size == 0:
                raise DimensionError("each strategy must be a non-empty vector")
            if not np.all(np.isfinite(v)) or v.min() < -PROFILE_TOL:
                raise DomainError(f"not a probability vector: {v}")
            if abs(v.sum() - 1.0) > PROFILE_TOL:
                raise DomainError(f"probabilities sum to {v.sum()!r}, not 1")
            v.setflags(write=False)
        object.__setattr__(self, "x", xs)
        object.__setattr__(self, "y", ys)

    @property
    def vectors(self) -> tuple[np.ndarray, ...]:
        return self.x + self.y

    def flat(self) -> np.ndarray:
        return np.concatenate(self.vectors)

    @classmethod
    def from_flat(cls, game: TeamGame, z, tol: float = PROFILE_TOL) -> "MixedProfile":
        blocks = _split(game, z)
        # clip projection round-off so tiny negative entries do not fail validation
        cleaned = []
        for v in blocks:
            v = np.where((v < 0) & (v > -tol), 0.0, v)
            cleaned.append(v)
        return cls(tuple(cleaned[: game.n_a]), tuple(cleaned[game.n_a :]))

    @classmethod
    def uniform(cls, game: TeamGame) -> "MixedProfile":
        return cls.from_flat(game, game.domain.uniform())

    @classmethod
    def pure(cls, game: TeamGame, actions: Sequence[int]) -> "MixedProfile":
        if len(actions) != game.n_players:
            raise DimensionError(f"need {game.n_players} actions, got {len(actions)}")
        vecs = []
        for a, c in zip(actions, game.counts):
            if not 0 <= a < c:
                raise DomainError(f"action {a} out of range for {c} strategies")
            v = np.zeros(c)
            v[a] = 1.0
            vecs.append(v)
        return cls(tuple(vecs[: game.n_a]), tuple(vecs[game.n_a :]))


def _split(game: TeamGame, z) -> list[np.ndarray]:
    arr = np.asarray(z, dtype=np.float64)
    if arr.shape != (game.dim,):
        raise DimensionError(f"expected {game.dim} coordinates, got shape {arr.shape}")
    return game.domain.blocks(arr)


def _vectors(game: TeamGame, profile) -> list[np.ndarray]:
    if isinstance(profile, MixedProfile):
        vecs = list(profile.vectors)
        if tuple(v.size for v in vecs) != game.counts:
            raise DimensionError(
                f"profile shape {tuple(v.size for v in vecs)} does not match game {game.counts}"
            )
        return vecs
    return _split(game, profile)


def _contract_except(payoff: np.ndarray, vecs: Sequence[np.ndarray], keep: Sequence[int]):
    operands: list[Any] = [payoff, list(range(len(vecs)))]
    for j, v in enumerate(vecs):
        if j not in keep:
            operands += [v, [j]]
    operands.append(list(keep))
    return np.einsum(*operands, optimize=False)


def evaluate_utility(game: TeamGame, profile) -> float:
    """Expected team-B payoff ``E[U]`` under the product distribution ``profile``."""
    vecs = _vectors(game, profile)
    value = game.payoff
    for v in reversed(vecs):
        value = value @ v
    return float(value)


def gradient(game: TeamGame, profile) -> list[np.ndarray]:
    """Per-player partial derivatives of ``U`` in full probability coordinates."""
    vecs = _vectors(game, profile)
    return [_contract_except(game.payoff, vecs, [i]) for i in range(game.n_players)]


def game_sign(game) -> np.ndarray:
    """Per-coordinate sign turning ``grad U`` into each team's ascent direction.

    Team A coordinates get ``-1`` (they descend ``U``), team B coordinates ``+1``.
    """
    return np.concatenate([-np.ones(game.team_a_dim), np.ones(game.dim - game.team_a_dim)])


def signed_field(game, z) -> np.ndarray:
    """The learning field ``F(z) = (-grad_x U, grad_y U)`` shared by all dynamics."""
    return game_sign(game) * game.flat_gradient(z)


def hessian_blocks(game: TeamGame, profile) -> np.ndarray:
    """Full ``d x d`` matrix of second partials of ``U``.

    Blocks belonging to a single player are identically zero since each
    coordinate enters ``U`` with degree at most one.
    """
    vecs = _vectors(game, profile)
    off = game.domain.offsets
    hess = np.zeros((game.dim, game.dim))
    for i in range(game.n_players):
        for j in range(i + 1, game.n_players):
            block = _contract_except(game.payoff, vecs, [i, j])
            hess[off[i] : off[i + 1], off[j] : off[j + 1]] = block
            hess[off[j] : off[j + 1], off[i] : off[i + 1]] = block.T
    return hess


def reduced_hessian(game: TeamGame, profile) -> np.ndarray:
    """Hessian of ``U`` in the chart that drops each player's last probability."""
    basis = chart_basis(game.domain)
    return basis.T @ hessian_blocks(game, profile) @ basis


@njit(cache=True, nogil=True)
def multilinear_gradient_into(payoff_flat, counts, offsets, z, out):
    """Compiled gradient of the multilinear extension (row-major tensor walk)."""
    n = counts.shape[0]
    out[:] = 0.0
    idx = np.zeros(n, dtype=np.int64)
    prefix = np.empty(n)
    for f in range(payoff_flat.shape[0]):
        val = payoff_flat[f]
        if val != 0.0:
            acc = 1.0
            for i in range(n):
                prefix[i] = acc
                acc *= z[offsets[i] + idx[i]]
            suffix = 1.0
            for i in range(n - 1, -1, -1):
                c = offsets[i] + idx[i]
                out[c] += val * prefix[i] * suffix
                suffix *= z[c]
        i = n - 1
        while i >= 0:
            idx[i] += 1
            if idx[i] < counts[i]:
                break
            idx[i] = 0
            i -= 1
