"""Closed-form Team-WGAN objective for a two-component Gaussian mixture.

Generators ``(theta, p)`` minimize and discriminators ``(v, w)`` maximize

    f = (pi1 - pi2) v.mu - 2 p v.theta + v.theta + sum_i w_i (mu_i^2 - theta_i^2)

over unconstrained parameters. Coordinates are concatenated as
``[theta (n), p (1), v (n), w (n)]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DimensionError, DomainError
from ..geometry import Domain

__all__ = ["PolynomialGame", "make_team_wgan"]


@dataclass(frozen=True, eq=False)
class PolynomialGame:
    mu: np.ndarray
    pi1: float

    def __post_init__(self):
        mu = np.array(self.mu, dtype=np.float64).ravel()
        if mu.size == 0 or not np.all(np.isfinite(mu)):
            raise DomainError("mu must be a non-empty finite vector")
        pi1 = float(self.pi1)
        if not 0.0 < pi1 < 1.0 or pi1 == 0.5:
            raise DomainError(f"pi1 must lie in (0, 1) and differ from 1/2, got {pi1}")
        mu.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "pi1", pi1)

    # shape bookkeeping shared with TeamGame
    n_a = 2
    n_b = 2

    @property
    def n(self) -> int:
        return self.mu.size

    @property
    def pi2(self) -> float:
        return 1.0 - self.pi1

    @property
    def domain(self) -> Domain:
        return Domain.free((self.n, 1, self.n, self.n))

    @property
    def dim(self) -> int:
        return 3 * self.n + 1

    @property
    def team_a_dim(self) -> int:
        return self.n + 1

    @property
    def metadata(self) -> dict:
        return {"family": "team_wgan", "mu": self.mu.tolist(), "pi1": self.pi1}

    def split(self, z):
        z = np.asarray(z, dtype=np.float64)
        if z.shape != (self.dim,):
            raise DimensionError(f"expected {self.dim} coordinates, got shape {z.shape}")
        n = self.n
        return z[:n], z[n], z[n + 1 : 2 * n + 1], z[2 * n + 1 :]

    def pack(self, theta, p, v, w) -> np.ndarray:
        return np.concatenate([np.ravel(theta), [float(p)], np.ravel(v), np.ravel(w)])

    def utility(self, z) -> float:
        theta, p, v, w = self.split(z)
        mu = self.mu
        return float(
            (self.pi1 - self.pi2) * v @ mu - 2 * p * v @ theta + v @ theta + w @ (mu**2 - theta**2)
        )

    def flat_gradient(self, z) -> np.ndarray:
        theta, p, v, w = self.split(z)
        mu = self.mu
        return self.pack(
            (1 - 2 * p) * v - 2 * w * theta,
            -2 * v @ theta,
            (self.pi1 - self.pi2) * mu + (1 - 2 * p) * theta,
            mu**2 - theta**2,
        )

    def hessian(self, z) -> np.ndarray:
        theta, p, v, w = self.split(z)
        n = self.n
        th, pp, vv, ww = slice(0, n), n, slice(n + 1, 2 * n + 1), slice(2 * n + 1, 3 * n + 1)
        hess = np.zeros((self.dim, self.dim))
        hess[th, th] = -2 * np.diag(w)
        hess[th, pp] = hess[pp, th] = -2 * v
        hess[th, vv] = hess[vv, th] = (1 - 2 * p) * np.eye(n)
        hess[th, ww] = hess[ww, th] = -2 * np.diag(theta)
        hess[pp, vv] = hess[vv, pp] = -2 * theta
        return hess

    def equilibria(self) -> list[np.ndarray]:
        """The two equilibria: ``theta = mu, p = pi1`` and ``theta = -mu, p = pi2``."""
        zero = np.zeros(self.n)
        return [
            self.pack(self.mu, self.pi1, zero, zero),
            self.pack(-self.mu, self.pi2, zero, zero),
        ]

    def parameter_error(self, z) -> float:
        """Distance of the generator parameters to the nearest equilibrium branch.

        Per branch the error is ``max(||theta -/+ mu||, |p - pi|)``; the smaller
        of the two branches is returned.
        """
        theta, p, _, _ = self.split(z)
        errs = []
        for sign, target in ((1.0, self.pi1), (-1.0, self.pi2)):
            errs.append(max(np.linalg.norm(theta - sign * self.mu), abs(p - target)))
        return float(min(errs))


def make_team_wgan(mu, pi1: float) -> PolynomialGame:
    return PolynomialGame(np.asarray(mu, dtype=np.float64), pi1)
