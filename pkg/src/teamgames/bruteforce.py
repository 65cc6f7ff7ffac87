"""Exhaustive equilibrium search for tiny games, used as a test oracle.

The product of simplices is scanned on a lattice with spacing
``1 / grid_resolution``. Lattice points that are local minima of the NE-gap
become candidates; each candidate is polished by solving the indifference
conditions on its support and kept if the resulting NE-gap is below ``tol``.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.optimize import least_squares

from .errors import CapabilityError, DomainError
from .games.core import MixedProfile, TeamGame, gradient
from .metrics import ne_gap, ne_gap_batch

__all__ = ["find_ne_bruteforce", "simplex_lattice"]

MAX_COORDS = 8
MAX_RESOLUTION = 50
MAX_GRID_POINTS = 8_000_000
_CHUNK = 100_000


def simplex_lattice(size: int, resolution: int) -> np.ndarray:
    """All points of the simplex in ``R^size`` with coordinates in ``(1/resolution) Z``."""
    points = []
    for bars in itertools.combinations(range(resolution + size - 1), size - 1):
        edges = (-1,) + bars + (resolution + size - 1,)
        points.append([edges[k + 1] - edges[k] - 1 for k in range(size)])
    return np.array(points, dtype=np.float64) / resolution


def _neighbours(lattice: np.ndarray, resolution: int) -> np.ndarray:
    """Padded index table of lattice points one mass unit away (self-padded)."""
    ints = np.rint(lattice * resolution).astype(int)
    lookup = {tuple(p): k for k, p in enumerate(ints)}
    table = []
    for p in ints:
        nbrs = []
        for a, b in itertools.permutations(range(len(p)), 2):
            if p[a] > 0:
                q = p.copy()
                q[a] -= 1
                q[b] += 1
                nbrs.append(lookup[tuple(q)])
        table.append(nbrs)
    width = max(1, max(len(n) for n in table))
    return np.array([n + [k] * (width - len(n)) for k, n in enumerate(table)], dtype=int)


def _refine(game: TeamGame, z: np.ndarray, resolution: int) -> np.ndarray:
    """Solve the within-support indifference equations starting from ``z``."""
    domain = game.domain
    off = domain.offsets
    supports = [
        np.flatnonzero(z[off[i] : off[i + 1]] > 0.5 / resolution) for i in range(game.n_players)
    ]
    free = [(i, s) for i, s in enumerate(supports) if len(s) > 1]
    if not free:
        return z

    def unpack(u):
        out = np.zeros(game.dim)
        pos = 0
        for i, s in enumerate(supports):
            if len(s) == 1:
                out[off[i] + s[0]] = 1.0
                continue
            head = u[pos : pos + len(s) - 1]
            pos += len(s) - 1
            out[off[i] + s[:-1]] = head
            out[off[i] + s[-1]] = 1.0 - head.sum()
        return out

    def residual(u):
        grads = gradient(game, unpack(u))
        return np.concatenate([grads[i][s[1:]] - grads[i][s[0]] for i, s in free])

    u0 = np.concatenate([z[off[i] + s[:-1]] for i, s in free])
    sol = least_squares(residual, u0, bounds=(0.0, 1.0), xtol=1e-15, ftol=1e-15, gtol=1e-15)
    out = unpack(sol.x)
    if out.min() < 0:
        out = np.maximum(out, 0.0)
        for i in range(game.n_players):
            out[off[i] : off[i + 1]] /= out[off[i] : off[i + 1]].sum()
    return out


def find_ne_bruteforce(
    game: TeamGame, grid_resolution: int = 20, tol: float = 1e-6, max_candidates: int = 64
) -> list[MixedProfile]:
    """Return the (deduplicated) equilibria found by a lattice scan plus polishing."""
    if game.dim > MAX_COORDS:
        raise CapabilityError(f"{game.dim} probability coordinates exceed the limit of {MAX_COORDS}")
    if not 1 <= grid_resolution <= MAX_RESOLUTION:
        raise DomainError(f"grid_resolution must be in 1..{MAX_RESOLUTION}")
    lattices = [simplex_lattice(s, grid_resolution) for s in game.counts]
    shape = tuple(len(lat) for lat in lattices)
    total = math.prod(shape)
    if total > MAX_GRID_POINTS:
        raise CapabilityError(f"lattice has {total} points; lower grid_resolution")

    def points(flat_idx):
        idx = np.unravel_index(flat_idx, shape)
        return np.concatenate([lat[k] for lat, k in zip(lattices, idx)], axis=1)

    gaps = np.empty(total)
    for start in range(0, total, _CHUNK):
        flat_idx = np.arange(start, min(total, start + _CHUNK))
        gaps[flat_idx] = ne_gap_batch(game, points(flat_idx))
    gaps = gaps.reshape(shape)

    is_min = np.ones(shape, dtype=bool)
    for axis, lat in enumerate(lattices):
        table = _neighbours(lat, grid_resolution)
        nbr = np.take(gaps, table, axis=axis)  # adds a trailing-neighbour axis after `axis`
        is_min &= gaps <= nbr.min(axis=axis + 1) + 1e-15

    scale = max(float(np.abs(game.payoff).max()), 1e-12)
    slack = 2.0 * game.n_players**2 * scale * max(game.counts) / grid_resolution
    cand = np.flatnonzero(is_min.ravel() & (gaps.ravel() <= gaps.min() + slack))
    cand = cand[np.argsort(gaps.ravel()[cand], kind="stable")][:max_candidates]

    found: list[np.ndarray] = []
    for flat_idx in cand:
        z = points(np.array([flat_idx]))[0]
        if ne_gap(game, z) >= tol:
            z = _refine(game, z, grid_resolution)
            if ne_gap(game, z) >= tol:
                continue
        if not any(np.max(np.abs(z - f)) < 1e-5 for f in found):
            found.append(z)
    return [MixedProfile.from_flat(game, z, tol=1e-9) for z in found]
