"""Two-team zero-sum games, learning dynamics and local stability analysis."""

from .bruteforce import find_ne_bruteforce
from .dynamics import (
    DynamicsConfig,
    DynamicsState,
    Trajectory,
    initial_state,
    run,
    step_eg,
    step_gda,
    step_kpv,
    step_ogda,
    step_omwu,
)
from .errors import (
    CapabilityError,
    DimensionError,
    DivergenceError,
    DomainError,
    NumericError,
    PreconditionError,
    TeamGameError,
)
from .games import (
    CongestionGame,
    MixedProfile,
    PolynomialGame,
    TeamGame,
    congestion_to_team_game,
    evaluate_utility,
    gradient,
    hessian_blocks,
    make_gmp,
    make_matching_pennies,
    make_modified_gmp,
    make_multiplayer_matching_pennies,
    make_team_wgan,
    random_team_game,
)
from .geometry import Domain, project_profile, project_simplex
from .metrics import best_response_value, ne_gap
from .stability import (
    StabilityReport,
    check_mvi,
    check_sufficient,
    dynamics_jacobian,
    eigenvalues,
    game_operator,
    is_weakly_stable,
    spectral_radius,
)

__version__ = "0.1.0"
