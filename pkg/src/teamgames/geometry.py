"""Feasible sets: products of probability simplices and the unconstrained space.

Probability blocks are projected with the sort-and-threshold method. The
compiled kernels at the bottom of this module are shared with the dynamics
kernels, so the Python entry points and the trajectory loop use exactly the
same arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np
from numba import njit

from .errors import DimensionError, DomainError, NumericError

__all__ = [
    "Domain",
    "project_simplex",
    "project_profile",
    "reduce_coords",
    "expand_coords",
    "chart_basis",
]

SIMPLEX_TOL = 1e-9
INTERIOR_TOL = 1e-6


@njit(cache=True, nogil=True)
def _project_simplex_into(v, out):
    """Sort-and-threshold projection; ``v`` and ``out`` must not alias."""
    n = v.shape[0]
    # points already on the simplex (to rounding) are returned bitwise, which
    # makes the projection exactly idempotent
    s = 0.0
    lo = v[0]
    for i in range(n):
        s += v[i]
        lo = min(lo, v[i])
    if lo >= 0.0 and abs(s - 1.0) <= 4.0 * n * 2.220446049250313e-16:
        for i in range(n):
            out[i] = v[i]
        return
    # stable insertion sort (descending) into ``out``; blocks are tiny, so
    # this beats argsort and never allocates
    for i in range(n):
        x = v[i]
        j = i
        while j > 0 and out[j - 1] < x:
            out[j] = out[j - 1]
            j -= 1
        out[j] = x
    css = 0.0
    theta = 0.0
    for j in range(n):
        css += out[j]
        t = (css - 1.0) / (j + 1)
        if out[j] - t > 0.0:
            theta = t
    for i in range(n):
        out[i] = max(v[i] - theta, 0.0)


@njit(cache=True, nogil=True)
def _project_blocks_into(v, offsets, out):
    for b in range(offsets.shape[0] - 1):
        lo = offsets[b]
        hi = offsets[b + 1]
        _project_simplex_into(v[lo:hi], out[lo:hi])


def project_simplex(v: Sequence[float] | np.ndarray) -> np.ndarray:
    """Euclidean projection of ``v`` onto the probability simplex."""
    arr = np.ascontiguousarray(v, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise DimensionError(f"expected a non-empty vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NumericError("cannot project a vector with NaN or infinite entries")
    out = np.empty_like(arr)
    _project_simplex_into(arr, out)
    return out


@dataclass(frozen=True)
class Domain:
    """Feasible set for a concatenated coordinate vector.

    ``shape`` lists the number of coordinates owned by each player. For a
    product of simplices each block is one player's mixed strategy; for an
    unconstrained domain the blocks are just parameter groups.
    """

    kind: Literal["product_of_simplices", "unconstrained"]
    shape: tuple[int, ...]

    def __post_init__(self):
        if self.kind not in ("product_of_simplices", "unconstrained"):
            raise DomainError(f"unknown domain kind {self.kind!r}")
        if not self.shape or any(int(s) <= 0 for s in self.shape):
            raise DomainError(f"block sizes must be positive, got {self.shape}")
        object.__setattr__(self, "shape", tuple(int(s) for s in self.shape))

    @classmethod
    def simplices(cls, counts: Sequence[int]) -> "Domain":
        return cls("product_of_simplices", tuple(counts))

    @classmethod
    def free(cls, shape: Sequence[int]) -> "Domain":
        return cls("unconstrained", tuple(shape))

    @property
    def constrained(self) -> bool:
        return self.kind == "product_of_simplices"

    @property
    def dim(self) -> int:
        return sum(self.shape)

    @property
    def offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.shape)]).astype(np.int64)

    def blocks(self, z: np.ndarray) -> list[np.ndarray]:
        off = self.offsets
        return [z[off[i] : off[i + 1]] for i in range(len(self.shape))]

    def check(self, z) -> np.ndarray:
        arr = np.ascontiguousarray(z, dtype=np.float64)
        if arr.shape != (self.dim,):
            raise DimensionError(f"expected {self.dim} coordinates, got shape {arr.shape}")
        return arr

    def contains(self, z, tol: float = SIMPLEX_TOL) -> bool:
        arr = self.check(z)
        if not np.all(np.isfinite(arr)):
            return False
        if not self.constrained:
            return True
        return all(
            blk.min() >= -tol and abs(blk.sum() - 1.0) <= tol for blk in self.blocks(arr)
        )

    def is_interior(self, z, tol: float = INTERIOR_TOL) -> bool:
        arr = self.check(z)
        if not self.constrained:
            return bool(np.all(np.isfinite(arr)))
        return self.contains(arr) and bool(arr.min() >= tol)

    def uniform(self) -> np.ndarray:
        if not self.constrained:
            return np.zeros(self.dim)
        return np.concatenate([np.full(s, 1.0 / s) for s in self.shape])

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        """Uniform draw from the domain (flat Dirichlet per block).

        Unconstrained domains have no uniform law; a standard normal draw is
        used instead.
        """
        if not self.constrained:
            return rng.standard_normal(self.dim)
        return np.concatenate([rng.dirichlet(np.ones(s)) for s in self.shape])


def project_profile(domain: Domain, raw) -> np.ndarray:
    """Project a coordinate vector onto ``domain`` block by block."""
    arr = domain.check(raw)
    if not domain.constrained:
        return arr.copy()
    if not np.all(np.isfinite(arr)):
        raise NumericError("cannot project a vector with NaN or infinite entries")
    out = np.empty_like(arr)
    _project_blocks_into(arr, domain.offsets, out)
    return out


def chart_basis(domain: Domain) -> np.ndarray:
    """Tangent basis mapping reduced coordinates to full-coordinate displacements.

    Each simplex block of size ``s`` is parametrized by its first ``s - 1``
    probabilities; the last one is ``1 - sum``. The returned ``d x r`` matrix
    is block diagonal with blocks ``[I; -1^T]``. Unconstrained domains get the
    identity.
    """
    if not domain.constrained:
        return np.eye(domain.dim)
    cols = domain.dim - len(domain.shape)
    basis = np.zeros((domain.dim, cols))
    row = col = 0
    for s in domain.shape:
        for k in range(s - 1):
            basis[row + k, col + k] = 1.0
            basis[row + s - 1, col + k] = -1.0
        row += s
        col += s - 1
    return basis


def reduce_coords(domain: Domain, z) -> np.ndarray:
    """Drop the last probability of every block."""
    arr = domain.check(z)
    if not domain.constrained:
        return arr.copy()
    return np.concatenate([blk[:-1] for blk in domain.blocks(arr)])


def expand_coords(domain: Domain, r) -> np.ndarray:
    """Inverse of :func:`reduce_coords`."""
    r = np.asarray(r, dtype=np.float64)
    if not domain.constrained:
        return domain.check(r).copy()
    if r.shape != (domain.dim - len(domain.shape),):
        raise DimensionError(f"expected {domain.dim - len(domain.shape)} reduced coordinates")
    parts = []
    pos = 0
    for s in domain.shape:
        head = r[pos : pos + s - 1]
        parts.append(np.append(head, 1.0 - head.sum()))
        pos += s - 1
    return np.concatenate(parts)
