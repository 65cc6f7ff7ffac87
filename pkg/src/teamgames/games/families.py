"""Constructors for the concrete game families used throughout the package.

Strategy index 0 is ``H`` and index 1 is ``T`` for every two-action player.
Tables are written from team A's point of view (row team A, column team B)
and converted to the stored team-B payoff by negation.
"""

from __future__ import annotations

import itertools
import warnings
from typing import Sequence

import numpy as np

from ..errors import DomainError
from .core import TeamGame

__all__ = [
    "make_gmp",
    "make_modified_gmp",
    "make_multiplayer_matching_pennies",
    "make_matching_pennies",
    "random_team_game",
]

# team-level outcome of a two-player team: "H" or "T" when both agree, None otherwise
_AGREE = {(0, 0): "H", (1, 1): "T"}


def _team_table_game(table_a: dict[tuple, float], metadata: dict) -> TeamGame:
    """Build a 2v2 binary game from team A's payoff indexed by team outcomes."""
    payoff = np.zeros((2, 2, 2, 2))
    for a1, a2, b1, b2 in itertools.product(range(2), repeat=4):
        key = (_AGREE.get((a1, a2)), _AGREE.get((b1, b2)))
        payoff[a1, a2, b1, b2] = -table_a[key]
    return TeamGame((2, 2), (2, 2), payoff, metadata)


def _table(hh_hh, hh_mix, hh_tt, mix_hh, mix_mix, mix_tt, tt_hh, tt_mix, tt_tt):
    rows = {"H": (hh_hh, hh_mix, hh_tt), None: (mix_hh, mix_mix, mix_tt), "T": (tt_hh, tt_mix, tt_tt)}
    cols = ("H", None, "T")
    return {(r, c): v for r, vals in rows.items() for c, v in zip(cols, vals)}


def make_gmp(omega: float) -> TeamGame:
    """Generalized matching pennies between two teams of two.

    A team "agrees" when both members pick the same action. Two agreeing
    teams play matching pennies (team A wins on a match); an agreeing team
    collects ``omega`` from a non-agreeing one; two non-agreeing teams get 0.
    The unique equilibrium for ``0 < omega < 1`` is uniform play.
    """
    omega = float(omega)
    if not omega > 0:
        raise DomainError(f"omega must be positive, got {omega}")
    if omega > 1:
        raise DomainError(f"omega must be at most 1, got {omega}")
    if omega == 1:
        warnings.warn("omega = 1 adds pure equilibria besides the uniform one", stacklevel=2)
    w = omega
    table = _table(1, w, -1, -w, 0, -w, -1, w, 1)
    return _team_table_game(table, {"family": "gmp", "omega": omega})


def make_modified_gmp() -> TeamGame:
    """GMP variant with asymmetric coordination payoffs (average-iterate counterexample)."""
    table = _table(2, 0.5, -2, -0.5, 0, -0.5, -1, 0.5, 1)
    return _team_table_game(table, {"family": "modified_gmp"})


def make_multiplayer_matching_pennies() -> TeamGame:
    """Two-team matching pennies where team A is the mismatching side.

    Entry for entry this is GMP with ``omega = 1/2`` and the two teams'
    payoffs exchanged, i.e. the negated tensor.
    """
    table = _table(-1, -0.5, 1, 0.5, 0, 0.5, 1, -0.5, -1)
    return _team_table_game(table, {"family": "multiplayer_matching_pennies"})


def make_matching_pennies() -> TeamGame:
    """Classic 1v1 matching pennies; team B wins on a match."""
    payoff = np.array([[1.0, -1.0], [-1.0, 1.0]])
    return TeamGame((2,), (2,), payoff, {"family": "matching_pennies"})


def random_team_game(
    n: int, m: int, strategy_counts: int | Sequence[int], seed: int
) -> TeamGame:
    """Game with i.i.d. Uniform[-1, 1] payoffs, reproducible from ``seed``.

    ``strategy_counts`` is either one count shared by every player or a
    sequence of ``n + m`` counts, team A first.
    """
    if n <= 0 or m <= 0:
        raise DomainError("both teams need at least one player")
    if isinstance(strategy_counts, (int, np.integer)):
        counts = (int(strategy_counts),) * (n + m)
    else:
        counts = tuple(int(c) for c in strategy_counts)
        if len(counts) != n + m:
            raise DomainError(f"expected {n + m} strategy counts, got {len(counts)}")
    if any(c <= 0 for c in counts):
        raise DomainError("every player needs at least one strategy")
    rng = np.random.default_rng(seed)
    payoff = rng.uniform(-1.0, 1.0, size=counts)
    meta = {"family": "random", "seed": int(seed)}
    return TeamGame(counts[:n], counts[n:], payoff, meta)
