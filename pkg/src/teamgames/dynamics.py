"""First-order learning dynamics for two-team games and a trajectory runner.

Every method reads the game through the signed field ``F = (-grad_x U,
grad_y U)``: team A descends ``U`` and team B ascends it. Updates are
simultaneous. The per-step arithmetic lives in compiled kernels shared by
the ``step_*`` functions and :func:`run`.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np

from . import _kernels as K
from .errors import DimensionError, DivergenceError, DomainError
from .games.core import MixedProfile, TeamGame, game_sign
from .games.wgan import PolynomialGame
from .geometry import Domain, INTERIOR_TOL
from .metrics import ne_gap_batch

__all__ = [
    "METHODS",
    "DynamicsState",
    "DynamicsConfig",
    "Trajectory",
    "initial_state",
    "step",
    "step_gda",
    "step_ogda",
    "step_eg",
    "step_omwu",
    "step_kpv",
    "run",
]

METHODS = ("GDA", "OGDA", "EG", "OMWU", "KPV")


@dataclass(frozen=True)
class DynamicsState:
    """Iterate of one method.

    ``prev_gradient`` holds the previous signed field ``F`` (OGDA, OMWU) and
    ``theta`` the fixed-point estimate (KPV); both are ``None`` otherwise.
    """

    z: np.ndarray
    prev_gradient: np.ndarray | None = None
    theta: np.ndarray | None = None
    step_count: int = 0


@dataclass(frozen=True)
class DynamicsConfig:
    method: str
    eta: float
    k: float = 0.0
    p: float = 0.0
    max_iters: int = 10_000
    tol: float = 1e-10
    patience: int = 100
    stride: int = 100
    reference: Any = None

    def __post_init__(self):
        method = str(self.method).upper()
        if method not in METHODS:
            raise DomainError(f"unknown method {self.method!r}; expected one of {METHODS}")
        object.__setattr__(self, "method", method)
        if not self.eta > 0 or not np.isfinite(self.eta):
            raise DomainError(f"step size must be positive, got {self.eta}")
        if self.max_iters < 0 or self.stride < 1 or self.patience < 1:
            raise DomainError("max_iters must be >= 0, stride and patience >= 1")
        if method == "KPV" and (self.p <= 0 or self.k >= 0):
            warnings.warn("KPV is designed for p > 0 and k < 0", stacklevel=3)


@dataclass
class Trajectory:
    """Sampled run of one method.

    ``steps[j]`` is the iteration index of row ``j`` of ``iterates`` and
    ``averages``; ``averages[j]`` is the mean of iterates ``1..steps[j]``
    (the initial point for row 0).
    """

    method: str
    steps: np.ndarray
    iterates: np.ndarray
    averages: np.ndarray
    ne_gap: np.ndarray
    avg_ne_gap: np.ndarray
    dist_ref: np.ndarray
    reason: str
    n_steps: int
    final_state: DynamicsState
    metadata: dict = field(default_factory=dict)

    @property
    def final(self) -> np.ndarray:
        return self.iterates[-1]

    @property
    def final_average(self) -> np.ndarray:
        return self.averages[-1]

    def csv_header(self) -> list[str]:
        d = self.iterates.shape[1]
        return (
            ["step"]
            + [f"coord_{i}" for i in range(d)]
            + [f"avg_{i}" for i in range(d)]
            + ["ne_gap", "dist_ref"]
        )

    def csv_rows(self):
        for j, s in enumerate(self.steps):
            yield [int(s), *map(repr, self.iterates[j].tolist()), *map(repr, self.averages[j].tolist()),
                   repr(float(self.ne_gap[j])), repr(float(self.dist_ref[j]))]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(self.csv_header())
            writer.writerows(self.csv_rows())


# -- kernel plumbing -----------------------------------------------------------


def _game_arrays(game) -> tuple:
    """Flatten a game into the positional kernel arguments ``kind .. constrained``."""
    sign = game_sign(game)
    if isinstance(game, TeamGame):
        return (
            K.MULTILINEAR,
            np.ascontiguousarray(game.payoff).ravel(),
            np.asarray(game.counts, dtype=np.int64),
            game.domain.offsets,
            sign,
            np.zeros(1),
            0.0,
            True,
        )
    if isinstance(game, PolynomialGame):
        return (
            K.WGAN,
            np.zeros(1),
            np.zeros(1, dtype=np.int64),
            game.domain.offsets,
            sign,
            np.ascontiguousarray(game.mu),
            game.pi1 - game.pi2,
            False,
        )
    raise DomainError(f"unsupported game type {type(game).__name__}")


def _check_domain(game, domain: Domain | None) -> Domain:
    if domain is None:
        return game.domain
    if domain != game.domain:
        raise DimensionError(f"domain {domain} does not belong to this game")
    return domain


def _as_point(game, point) -> np.ndarray:
    if isinstance(point, MixedProfile):
        point = point.flat()
    z = np.array(point, dtype=np.float64)
    if z.shape != (game.dim,):
        raise DimensionError(f"expected {game.dim} coordinates, got shape {z.shape}")
    return z


def _field(game, z: np.ndarray) -> np.ndarray:
    args = _game_arrays(game)
    out = np.empty_like(z)
    K.field_into(*args[:7], z, out)
    return out


def initial_state(game, method: str, z0) -> DynamicsState:
    """State with the conventional bootstraps: ``F_prev = F(z0)`` and ``theta = z0``."""
    method = method.upper()
    if method not in METHODS:
        raise DomainError(f"unknown method {method!r}")
    z = _as_point(game, z0)
    prev = _field(game, z) if method in ("OGDA", "OMWU") else None
    theta = z.copy() if method == "KPV" else None
    return DynamicsState(z, prev, theta, 0)


def step(state: DynamicsState, game, method: str, eta: float, k: float = 0.0, p: float = 0.0,
         domain: Domain | None = None) -> DynamicsState:
    """One step of ``method``; see the ``step_*`` wrappers for each update rule."""
    method = method.upper()
    if method not in METHODS:
        raise DomainError(f"unknown method {method!r}")
    dom = _check_domain(game, domain)
    z = _as_point(game, state.z)
    if dom.constrained and not dom.contains(z):
        raise DomainError("state is not feasible")
    d = z.size
    prev = state.prev_gradient
    theta = state.theta
    if method in ("OGDA", "OMWU"):
        if prev is None:
            raise DomainError(f"{method} needs prev_gradient")
        prev = np.array(prev, dtype=np.float64)
    if method == "KPV":
        if theta is None:
            raise DomainError("KPV needs theta")
        theta = _as_point(game, theta)
        if dom.constrained and not dom.contains(theta):
            raise DomainError("theta is not feasible")
    if method == "OMWU" and z.min() <= 0:
        raise DomainError("OMWU needs every probability to be strictly positive")
    z_out = np.empty(d)
    prev_out = np.empty(d) if prev is not None else np.zeros(d)
    theta_out = np.empty(d) if theta is not None else np.zeros(d)
    K.step_into(
        K.METHOD_CODES[method], *_game_arrays(game), float(eta), float(k), float(p),
        z, prev if prev is not None else np.zeros(d), theta if theta is not None else np.zeros(d),
        z_out, prev_out, theta_out, np.empty(d), np.empty(d), np.empty(d),
    )
    return DynamicsState(
        z_out,
        prev_out if prev is not None else None,
        theta_out if theta is not None else None,
        state.step_count + 1,
    )


def step_gda(state, game, domain=None, eta: float = 0.1) -> DynamicsState:
    """``z <- P(z + eta F(z))``."""
    return step(state, game, "GDA", eta, domain=domain)


def step_ogda(state, game, domain=None, eta: float = 0.1) -> DynamicsState:
    """``z <- P(z + 2 eta F(z) - eta F_prev)``; records ``F(z)`` as the new ``F_prev``."""
    return step(state, game, "OGDA", eta, domain=domain)


def step_eg(state, game, domain=None, eta: float = 0.1) -> DynamicsState:
    """Extrapolate to ``w = P(z + eta F(z))``, then ``z <- P(z + eta F(w))``."""
    return step(state, game, "EG", eta, domain=domain)


def step_omwu(state, game, domain=None, eta: float = 0.1) -> DynamicsState:
    """``z_k <- z_k exp(eta (2 F_k - F_prev_k))``, renormalized per player."""
    return step(state, game, "OMWU", eta, domain=domain)


def step_kpv(state, game, domain=None, eta: float = 0.05, k: float = -1.1, p: float = 0.3) -> DynamicsState:
    """GDA with feedback ``eta k (z - theta)``; ``theta`` tracks ``z`` at rate ``eta p``."""
    return step(state, game, "KPV", eta, k=k, p=p, domain=domain)


# -- trajectories --------------------------------------------------------------


def _metric_curves(game, rows: np.ndarray) -> np.ndarray:
    if isinstance(game, TeamGame):
        return ne_gap_batch(game, rows)
    return np.full(rows.shape[0], np.nan)


def run(game, domain: Domain | None, config: DynamicsConfig, initial=None, seed: int | None = None) -> Trajectory:
    """Iterate ``config.method`` and return the sampled trajectory.

    Without ``initial`` a starting point is drawn from ``domain.sample`` with
    ``np.random.default_rng(seed)``. The run ends after ``max_iters`` steps or
    once the per-step displacement (of ``z`` and, for KPV, ``theta``) stays
    below ``tol`` for ``patience`` consecutive steps. A non-finite iterate
    raises :class:`DivergenceError` carrying the step index.
    """
    dom = _check_domain(game, domain)
    if initial is None:
        z0 = dom.sample(np.random.default_rng(seed))
    else:
        z0 = _as_point(game, initial)
    if dom.constrained and not dom.contains(z0):
        raise DomainError("initial point is not feasible")
    if not np.all(np.isfinite(z0)):
        raise DomainError("initial point must be finite")
    if config.method == "OMWU" and z0.min() <= 0:
        raise DomainError("OMWU needs a strictly interior starting point")

    state = initial_state(game, config.method, z0)
    d = z0.size
    z = z0.copy()
    prev = state.prev_gradient.copy() if state.prev_gradient is not None else np.zeros(d)
    theta = state.theta.copy() if state.theta is not None else np.zeros(d)
    cap = config.max_iters // config.stride + 2
    rec_steps = np.zeros(cap, dtype=np.int64)
    rec_z = np.zeros((cap, d))
    rec_avg = np.zeros((cap, d))
    steps, status, n_rec = K.run_into(
        K.METHOD_CODES[config.method], *_game_arrays(game),
        float(config.eta), float(config.k), float(config.p),
        z, prev, theta, int(config.max_iters), float(config.tol), int(config.patience),
        int(config.stride), rec_steps, rec_z, rec_avg,
    )
    if status == K.NONFINITE:
        raise DivergenceError(int(steps))

    rec_steps, rec_z, rec_avg = rec_steps[:n_rec], rec_z[:n_rec], rec_avg[:n_rec]
    if status == K.STABILIZED:
        reason = "stabilized" if dom.is_interior(rec_z[-1], INTERIOR_TOL) else "stabilized (boundary)"
    else:
        reason = "max_iters"

    if config.reference is not None:
        ref = _as_point(game, config.reference)
        dist = np.linalg.norm(rec_z - ref, axis=1)
    else:
        dist = np.full(n_rec, np.nan)

    final_state = DynamicsState(
        rec_z[-1].copy(),
        prev if state.prev_gradient is not None else None,
        theta if state.theta is not None else None,
        int(steps),
    )
    return Trajectory(
        method=config.method,
        steps=rec_steps,
        iterates=rec_z,
        averages=rec_avg,
        ne_gap=_metric_curves(game, rec_z),
        avg_ne_gap=_metric_curves(game, rec_avg),
        dist_ref=dist,
        reason=reason,
        n_steps=int(steps),
        final_state=final_state,
        metadata={"eta": config.eta, "k": config.k, "p": config.p, "seed": seed},
    )


def with_method(config: DynamicsConfig, method: str, **changes) -> DynamicsConfig:
    return replace(config, method=method, **changes)
