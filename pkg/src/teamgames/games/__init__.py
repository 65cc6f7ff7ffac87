"""Game representations and constructors."""

from .congestion import CongestionGame, congestion_to_team_game
from .core import (
    MixedProfile,
    TeamGame,
    evaluate_utility,
    game_sign,
    gradient,
    hessian_blocks,
    reduced_hessian,
    signed_field,
)
from .families import (
    make_gmp,
    make_matching_pennies,
    make_modified_gmp,
    make_multiplayer_matching_pennies,
    random_team_game,
)
from .io import game_from_dict, game_to_dict, load_game, save_game
from .wgan import PolynomialGame, make_team_wgan

__all__ = [
    "CongestionGame",
    "congestion_to_team_game",
    "MixedProfile",
    "TeamGame",
    "evaluate_utility",
    "game_sign",
    "gradient",
    "hessian_blocks",
    "reduced_hessian",
    "signed_field",
    "make_gmp",
    "make_matching_pennies",
    "make_modified_gmp",
    "make_multiplayer_matching_pennies",
    "random_team_game",
    "PolynomialGame",
    "make_team_wgan",
    "game_to_dict",
    "game_from_dict",
    "save_game",
    "load_game",
]
