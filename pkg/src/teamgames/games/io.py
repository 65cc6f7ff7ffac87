"""JSON documents for games.

Dense games store their strategy counts and the payoff tensor flattened in
row-major order; family metadata such as ``{"family": "gmp", "omega": 0.5}``
travels alongside. Congestion games store per-edge cost tables and each
player's strategies as lists of edge indices.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from ..errors import DimensionError, DomainError
from .congestion import CongestionGame
from .core import TeamGame
from .wgan import PolynomialGame

__all__ = ["game_to_dict", "game_from_dict", "save_game", "load_game"]


def game_to_dict(game) -> dict[str, Any]:
    if isinstance(game, TeamGame):
        return {
            "type": "team_game",
            "team_a_strategy_counts": list(game.team_a_strategy_counts),
            "team_b_strategy_counts": list(game.team_b_strategy_counts),
            "payoff": np.ascontiguousarray(game.payoff).ravel().tolist(),
            "metadata": game.metadata,
        }
    if isinstance(game, PolynomialGame):
        return {"type": "team_wgan", "mu": game.mu.tolist(), "pi1": game.pi1}
    if isinstance(game, CongestionGame):
        return {
            "type": "congestion",
            "num_players": game.num_players,
            "costs": [list(row) for row in game.costs],
            "strategies": [[sorted(s) for s in opts] for opts in game.strategies],
        }
    raise DomainError(f"cannot serialize {type(game).__name__}")


def game_from_dict(doc: dict[str, Any]):
    kind = doc.get("type", "team_game")
    try:
        if kind == "team_game":
            a = [int(c) for c in doc["team_a_strategy_counts"]]
            b = [int(c) for c in doc["team_b_strategy_counts"]]
            flat = np.asarray(doc["payoff"], dtype=np.float64)
            if flat.size != int(np.prod(a + b)):
                raise DimensionError(f"payoff has {flat.size} entries, counts need {int(np.prod(a + b))}")
            return TeamGame(tuple(a), tuple(b), flat.reshape(a + b), doc.get("metadata", {}))
        if kind == "team_wgan":
            return PolynomialGame(np.asarray(doc["mu"], dtype=np.float64), float(doc["pi1"]))
        if kind == "congestion":
            return CongestionGame.build(doc["costs"], doc["strategies"])
    except KeyError as exc:
        raise DomainError(f"game document is missing {exc.args[0]!r}") from exc
    raise DomainError(f"unknown game document type {kind!r}")


def save_game(game, path) -> None:
    Path(path).write_text(json.dumps(game_to_dict(game), indent=2))


def load_game(path):
    return game_from_dict(json.loads(Path(path).read_text()))
