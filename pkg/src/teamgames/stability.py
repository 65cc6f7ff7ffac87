"""Local stability analysis around equilibria.

Two coordinate charts are supported for Jacobians of the learning dynamics.

``"simplex"`` (default)
    The Jacobian of the step maps that :mod:`teamgames.dynamics` actually
    iterates (full probability coordinates with Euclidean projection),
    expressed in the chart that drops each player's last probability.
``"reduced"``
    The dynamics rewritten directly in the reduced coordinates, with the
    field ``H``-linearization used by :func:`game_operator`. GDA then has
    Jacobian ``I + eta H``. This is the convention of the classical
    closed-form stability computations and is what oracle tests compare to.

For binary players the two charts differ by a factor of two in the step
size: projecting a full-coordinate step onto the simplex halves the reduced
displacement. OMWU has no projection, so both charts coincide for it.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .dynamics import DynamicsState, step
from .errors import CapabilityError, DimensionError, DomainError, NumericError, PreconditionError
from .games.core import MixedProfile, TeamGame, _vectors, game_sign, gradient
from .games.wgan import PolynomialGame
from .geometry import INTERIOR_TOL, Domain, chart_basis, expand_coords, project_profile, reduce_coords
from .metrics import ne_gap

__all__ = [
    "DEFAULT_STEP_SIZES",
    "StabilityReport",
    "WeakStability",
    "game_operator",
    "eigenvalues",
    "spectral_radius",
    "dynamics_jacobian",
    "kpv_generator",
    "chart_operator",
    "check_sufficient",
    "is_weakly_stable",
    "check_mvi",
    "weak_mvi_search",
]

DEFAULT_STEP_SIZES = {"GDA": 0.2, "OGDA": 0.1, "EG": 0.2, "OMWU": 0.2}
ETA_GRID = np.geomspace(1e-3, 0.2, 20)
P_GRID = np.geomspace(1e-4, 1.0, 20)
MAX_EIG_DIM = 64
CHARTS = ("simplex", "reduced")


# -- linear algebra ------------------------------------------------------------


def eigenvalues(M) -> np.ndarray:
    """All eigenvalues of a real square matrix, with multiplicity.

    Uses LAPACK's balanced Hessenberg-QR driver. The result is sorted by
    real part, then imaginary part, so repeated calls are comparable.
    """
    arr = np.asarray(M, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {arr.shape}")
    if arr.shape[0] > MAX_EIG_DIM:
        raise CapabilityError(f"matrix of size {arr.shape[0]} exceeds {MAX_EIG_DIM}")
    if not np.all(np.isfinite(arr)):
        raise NumericError("matrix has NaN or infinite entries")
    try:
        vals = np.linalg.eigvals(arr)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigenvalue iteration did not converge: {exc}") from exc
    vals = vals.astype(np.complex128)
    return vals[np.lexsort((vals.imag, vals.real))]


def spectral_radius(M) -> float:
    return float(np.abs(eigenvalues(M)).max()) if np.size(M) else 0.0


# -- charts and derivatives ----------------------------------------------------


def _point(game, point) -> np.ndarray:
    if isinstance(point, MixedProfile):
        point = point.flat()
    z = np.array(point, dtype=np.float64)
    if z.shape != (game.dim,):
        raise DimensionError(f"expected {game.dim} coordinates, got shape {z.shape}")
    return z


def _interior_point(game, point) -> np.ndarray:
    z = _point(game, point)
    dom = game.domain
    if dom.constrained and not dom.is_interior(z, INTERIOR_TOL):
        raise DomainError(f"point must be interior (all probabilities >= {INTERIOR_TOL})")
    if not np.all(np.isfinite(z)):
        raise DomainError("point must be finite")
    return z


def _selector(domain: Domain) -> np.ndarray:
    """Matrix that drops the last coordinate of every block (left inverse of the chart basis)."""
    if not domain.constrained:
        return np.eye(domain.dim)
    keep = np.concatenate([np.arange(o, o + s - 1) for o, s in zip(domain.offsets, domain.shape)])
    return np.eye(domain.dim)[keep]


def _field_jacobian(game, z: np.ndarray) -> np.ndarray:
    """Derivative of the signed field ``F`` in full coordinates."""
    return game_sign(game)[:, None] * game.hessian(z)


def _signed_field(game, z: np.ndarray) -> np.ndarray:
    return game_sign(game) * game.flat_gradient(z)


def _projection_jacobian(domain: Domain, raw: np.ndarray) -> np.ndarray:
    """Derivative of the Euclidean projection at ``raw`` (away from kinks).

    On each block it is the orthogonal projector onto sum-zero vectors
    supported on the active face; unconstrained domains give the identity.
    """
    d = domain.dim
    if not domain.constrained:
        return np.eye(d)
    proj = project_profile(domain, raw)
    jac = np.zeros((d, d))
    for o, s in zip(domain.offsets, domain.shape):
        supp = o + np.flatnonzero(proj[o : o + s] > 0)
        jac[np.ix_(supp, supp)] = np.eye(supp.size) - 1.0 / supp.size
    return jac


def game_operator(game, point) -> np.ndarray:
    """``H = [[-U_xx, -U_xy], [U_yx, U_yy]]`` in reduced coordinates at ``point``.

    Equivalently, the derivative of the signed field with respect to the
    reduced coordinates, read off in the same chart.
    """
    return _reduced_field_jacobian(game, _interior_point(game, point))


def _reduced_field_jacobian(game, z: np.ndarray) -> np.ndarray:
    basis = chart_basis(game.domain)
    sign_r = _selector(game.domain) @ game_sign(game)
    return sign_r[:, None] * (basis.T @ game.hessian(z) @ basis)


def _reduced_field(game, z: np.ndarray) -> np.ndarray:
    basis = chart_basis(game.domain)
    sign_r = _selector(game.domain) @ game_sign(game)
    return sign_r * (basis.T @ game.flat_gradient(z))


def _full_jacobian(method: str, game, z: np.ndarray, eta: float, k: float, p: float) -> np.ndarray:
    """Jacobian of the library step map in full coordinates.

    Companion methods act on the pair ``(z, z_prev)`` (OGDA, OMWU, where the
    stored previous field is ``F(z_prev)``) or ``(z, theta)`` (KPV); the
    Jacobian is evaluated with both halves at ``z``.
    """
    dom = game.domain
    d = z.size
    eye = np.eye(d)
    f = _signed_field(game, z)
    df = _field_jacobian(game, z)
    if method == "GDA":
        return _projection_jacobian(dom, z + eta * f) @ (eye + eta * df)
    if method == "EG":
        raw1 = z + eta * f
        w = project_profile(dom, raw1)
        raw2 = z + eta * _signed_field(game, w)
        inner = _projection_jacobian(dom, raw1) @ (eye + eta * df)
        return _projection_jacobian(dom, raw2) @ (eye + eta * _field_jacobian(game, w) @ inner)
    if method == "OGDA":
        proj = _projection_jacobian(dom, z + eta * f)
        top = np.hstack([proj @ (eye + 2 * eta * df), -eta * proj @ df])
        return np.vstack([top, np.hstack([eye, np.zeros((d, d))])])
    if method == "OMWU":
        expo = np.exp(eta * f)  # 2F(z) - F(z_prev) with z_prev = z
        u = z * expo
        norm = np.zeros((d, d))
        for o, s in zip(dom.offsets, dom.shape):
            blk = slice(o, o + s)
            total = u[blk].sum()
            norm[blk, blk] = (np.eye(s) - np.outer(u[blk] / total, np.ones(s))) / total
        d_now = norm @ (np.diag(expo) + 2 * eta * u[:, None] * df)
        d_prev = -eta * norm @ (u[:, None] * df)
        return np.vstack([np.hstack([d_now, d_prev]), np.hstack([eye, np.zeros((d, d))])])
    if method == "KPV":
        proj_z = _projection_jacobian(dom, z + eta * f)
        proj_t = _projection_jacobian(dom, z.copy())
        top = np.hstack([proj_z @ ((1 + eta * k) * eye + eta * df), -eta * k * proj_z])
        bottom = np.hstack([eta * p * proj_t, (1 - eta * p) * proj_t])
        return np.vstack([top, bottom])
    raise DomainError(f"unknown method {method!r}")


def _reduced_chart_jacobian(method: str, game, z: np.ndarray, eta: float, k: float, p: float) -> np.ndarray:
    """Jacobian of the dynamics written directly in reduced coordinates."""
    h = _reduced_field_jacobian(game, z)
    r = h.shape[0]
    eye = np.eye(r)
    zero = np.zeros((r, r))
    if method == "GDA":
        return eye + eta * h
    if method == "EG":
        basis = chart_basis(game.domain)
        w = z + basis @ (eta * _reduced_field(game, z))
        return eye + eta * _reduced_field_jacobian(game, w) @ (eye + eta * h)
    if method == "OGDA":
        return np.block([[eye + 2 * eta * h, -eta * h], [eye, zero]])
    if method == "KPV":
        return np.block([[(1 + eta * k) * eye + eta * h, -eta * k * eye], [eta * p * eye, (1 - eta * p) * eye]])
    raise DomainError(f"unknown method {method!r}")


def dynamics_jacobian(
    method: str, game, point, eta: float, k: float = 0.0, p: float = 0.0, chart: str = "simplex"
) -> np.ndarray:
    """Jacobian of one step of ``method`` at an interior ``point``.

    The result lives in reduced coordinates (``d - #players`` per copy of the
    state). OGDA and OMWU return the companion matrix over ``(z_t, z_{t-1})``
    and KPV the matrix over ``(z, theta)``, evaluated with both copies at
    ``point``. See the module docstring for the two charts.
    """
    method = method.upper()
    if method not in ("GDA", "OGDA", "EG", "OMWU", "KPV"):
        raise DomainError(f"unknown method {method!r}")
    if chart not in CHARTS:
        raise DomainError(f"unknown chart {chart!r}; expected one of {CHARTS}")
    if not eta > 0:
        raise DomainError("step size must be positive")
    z = _interior_point(game, point)
    if chart == "reduced" and method != "OMWU":
        return _reduced_chart_jacobian(method, game, z, eta, k, p)
    jac = _full_jacobian(method, game, z, eta, k, p)
    sel = _selector(game.domain)
    basis = chart_basis(game.domain)
    if jac.shape[0] != game.dim:
        sel = np.kron(np.eye(2), sel)
        basis = np.kron(np.eye(2), basis)
    return sel @ jac @ basis


def step_map(method: str, game, eta: float, k: float = 0.0, p: float = 0.0):
    """Reduced-chart step map whose derivative :func:`dynamics_jacobian` returns.

    Exposed for finite-difference checks. Companion methods take and return
    the stacked pair of reduced states.
    """
    method = method.upper()
    dom = game.domain
    r = dom.dim - len(dom.shape) if dom.constrained else dom.dim

    def expand(v):
        return expand_coords(dom, v)

    def reduce(v):
        return reduce_coords(dom, v)

    def single(vec):
        state = DynamicsState(expand(vec))
        return reduce(step(state, game, method, eta).z)

    def pair(vec):
        z, other = expand(vec[:r]), expand(vec[r:])
        if method == "KPV":
            out = step(DynamicsState(z, theta=other), game, method, eta, k, p)
            return np.concatenate([reduce(out.z), reduce(out.theta)])
        prev = _signed_field(game, other)
        out = step(DynamicsState(z, prev_gradient=prev), game, method, eta)
        return np.concatenate([reduce(out.z), vec[:r]])

    return single if method in ("GDA", "EG") else pair


def kpv_generator(H, k: float, p: float) -> np.ndarray:
    """Continuous-time generator ``[[H + kI, -kI], [pI, -pI]]`` of the KPV linearization."""
    H = np.asarray(H, dtype=np.float64)
    eye = np.eye(H.shape[0])
    return np.block([[H + k * eye, -k * eye], [p * eye, -p * eye]])


# -- sufficient condition ------------------------------------------------------


@dataclass
class StabilityReport:
    H: np.ndarray
    eigenvalues: np.ndarray
    E: np.ndarray
    alpha: float | None
    beta: float | None
    invertible: bool
    condition_holds: bool
    e_empty: bool
    k_interval: tuple[float, float] | None
    search: dict[str, float] | None
    chart: str = "simplex"
    chart_alpha: float | None = None
    chart_beta: float | None = None
    chart_k_interval: tuple[float, float] | None = None
    jacobian_spectra: dict[str, dict[str, Any]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        def cplx(vals):
            return [[float(v.real), float(v.imag)] for v in np.asarray(vals)]

        def bound(v):
            return None if v is None or not math.isfinite(v) else float(v)

        return {
            "H": np.asarray(self.H).tolist(),
            "eigenvalues": cplx(self.eigenvalues),
            "E": cplx(self.E),
            "alpha": self.alpha,
            "beta": self.beta,
            "invertible": self.invertible,
            "condition_holds": self.condition_holds,
            "e_empty": self.e_empty,
            "k_interval": None if self.k_interval is None else [bound(v) for v in self.k_interval],
            "search": self.search,
            "chart": self.chart,
            "chart_alpha": self.chart_alpha,
            "chart_beta": self.chart_beta,
            "chart_k_interval": (
                None if self.chart_k_interval is None else [bound(v) for v in self.chart_k_interval]
            ),
            "jacobian_spectra": {
                m: {
                    **{key: val for key, val in info.items() if key != "eigenvalues"},
                    "eigenvalues": cplx(info["eigenvalues"]),
                }
                for m, info in self.jacobian_spectra.items()
            },
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def _midpoint_k(k_interval: tuple[float, float]) -> float:
    lo, hi = k_interval
    if not math.isfinite(lo):
        # vacuous condition: any negative gain works; use unit feedback
        return -1.0
    return 0.5 * (lo + hi)


def chart_operator(game, point, chart: str = "simplex") -> np.ndarray:
    """Linear part of the GDA step in ``chart``: ``(J_GDA - I) / eta``.

    In the reduced chart this is ``H``. In the simplex chart it is
    ``(B^T B)^{-1} H`` with ``B`` the chart basis, i.e. ``H / 2`` when
    every player has two strategies.
    """
    if chart not in CHARTS:
        raise DomainError(f"unknown chart {chart!r}; expected one of {CHARTS}")
    H = game_operator(game, point)
    if chart == "reduced" or not game.domain.constrained:
        return H
    basis = chart_basis(game.domain)
    return np.linalg.solve(basis.T @ basis, H)


def _alpha_beta(H: np.ndarray):
    """``(eigenvalues, E, alpha, beta, invertible, e_empty, holds, k_interval)`` for ``H``."""
    vals = eigenvalues(H)
    scale = max(1.0, float(np.abs(H).max())) if H.size else 1.0
    smallest_sv = float(np.linalg.svd(H, compute_uv=False).min()) if H.size else 0.0
    invertible = smallest_sv > 1e-10 * scale
    E = vals[vals.real > 1e-10 * scale]
    e_empty = E.size == 0
    if e_empty:
        alpha = beta = None
        holds = invertible
        k_interval = (-math.inf, 0.0) if holds else None
    else:
        alpha = float(E.real.max())
        beta = float((np.abs(E) ** 2 / E.real).min())
        holds = invertible and beta > alpha
        k_interval = (-beta, -alpha) if holds else None
    return vals, E, alpha, beta, invertible, e_empty, holds, k_interval


def check_sufficient(
    game,
    point,
    step_sizes: dict[str, float] | None = None,
    chart: str = "simplex",
    eta_grid=ETA_GRID,
    p_grid=P_GRID,
) -> StabilityReport:
    """Evaluate the scalar-feedback sufficient condition at an interior point.

    With ``E`` the eigenvalues of ``H`` having positive real part,
    ``alpha = max Re`` and ``beta = min |rho|^2 / Re(rho)`` over ``E``. The
    condition holds when ``H`` is invertible and ``beta > alpha``; any
    ``k`` in ``(-beta, -alpha)`` is then admissible. An empty ``E`` admits
    every ``k < 0``.

    The same test is repeated for :func:`chart_operator` of ``chart``, whose
    interval is the one that applies to the dynamics iterated in that chart.
    When it holds, ``(eta, p)`` pairs are scanned from the largest values
    down (``eta`` outer, ``p`` inner) and the first pair with
    ``spectral_radius(J_KPV) < 1`` at the chart interval's midpoint ``k`` is
    reported as ``search``.
    """
    H = game_operator(game, point)
    vals, E, alpha, beta, invertible, e_empty, holds, k_interval = _alpha_beta(H)
    Hc = chart_operator(game, point, chart)
    *_, c_alpha, c_beta, _, _, c_holds, c_interval = _alpha_beta(Hc)

    search = None
    if c_holds:
        k_mid = _midpoint_k(c_interval)
        for eta in eta_grid[::-1]:
            for p in p_grid[::-1]:
                rho = spectral_radius(dynamics_jacobian("KPV", game, point, eta, k_mid, p, chart=chart))
                if rho < 1.0:
                    search = {"eta": float(eta), "k": float(k_mid), "p": float(p), "spectral_radius": rho}
                    break
            if search is not None:
                break

    report = StabilityReport(
        H=H,
        eigenvalues=vals,
        E=E,
        alpha=alpha,
        beta=beta,
        invertible=invertible,
        condition_holds=holds,
        e_empty=e_empty,
        k_interval=k_interval,
        search=search,
        chart=chart,
        chart_alpha=c_alpha,
        chart_beta=c_beta,
        chart_k_interval=c_interval,
    )
    sizes = dict(DEFAULT_STEP_SIZES if step_sizes is None else step_sizes)
    for method, eta in sizes.items():
        report.jacobian_spectra[method] = _spectrum_entry(method, game, point, eta, 0.0, 0.0, chart)
    if search is not None and "KPV" not in sizes:
        report.jacobian_spectra["KPV"] = _spectrum_entry(
            "KPV", game, point, search["eta"], search["k"], search["p"], chart
        )
    return report


def _spectrum_entry(method, game, point, eta, k, p, chart) -> dict[str, Any]:
    jac = dynamics_jacobian(method, game, point, eta, k, p, chart=chart)
    vals = eigenvalues(jac)
    entry: dict[str, Any] = {"eta": float(eta), "eigenvalues": vals, "spectral_radius": float(np.abs(vals).max())}
    if method == "KPV":
        entry.update(k=float(k), p=float(p))
    return entry


# -- weak stability and variational inequalities -------------------------------


@dataclass(frozen=True)
class WeakStability:
    """Verdict of :func:`is_weakly_stable`.

    ``witness = (i, k, j, l, l2)``: pinning player ``i`` to pure strategy
    ``k`` makes teammate ``j`` strictly prefer ``l`` over ``l2``, both in
    ``j``'s support.
    """

    stable: bool
    witness: tuple[int, int, int, int, int] | None = None
    spread: float = 0.0

    def __bool__(self) -> bool:
        return self.stable


def is_weakly_stable(
    game: TeamGame, ne, gap_tol: float = 1e-8, spread_tol: float = 1e-8, support_tol: float = 1e-9
) -> WeakStability:
    """Check whether pinning any randomizing player keeps teammates indifferent."""
    vecs = [v.copy() for v in _vectors(game, ne)]
    gap = ne_gap(game, np.concatenate(vecs))
    if gap >= gap_tol:
        raise PreconditionError(f"profile is not a Nash equilibrium (NE-gap {gap:.3e})")
    supports = [np.flatnonzero(v > support_tol) for v in vecs]
    teams = (range(game.n_a), range(game.n_a, game.n_players))
    for team in teams:
        for i in team:
            if supports[i].size < 2:
                continue
            for k in supports[i]:
                pinned = list(vecs)
                pinned[i] = np.zeros_like(vecs[i])
                pinned[i][k] = 1.0
                partials = gradient(game, np.concatenate(pinned))
                for j in team:
                    if j == i or supports[j].size < 2:
                        continue
                    vals = partials[j][supports[j]]
                    spread = float(vals.max() - vals.min())
                    if spread >= spread_tol:
                        hi = supports[j][int(np.argmax(vals))]
                        lo = supports[j][int(np.argmin(vals))]
                        # team A prefers small U, team B large U
                        best, worst = (lo, hi) if game.team_of(j) == "A" else (hi, lo)
                        return WeakStability(False, (int(i), int(k), int(j), int(best), int(worst)), spread)
    return WeakStability(True)


def _descent_operator(game, z: np.ndarray) -> np.ndarray:
    """``(grad_x U, -grad_y U)``: the monotone-operator convention for a min-max problem."""
    return -_signed_field(game, z)


def check_mvi(game, z, z_star) -> float:
    """``<G(z), z - z*>`` for ``G = (grad_x U, -grad_y U)``; negative values violate the MVI."""
    z = _point(game, z)
    z_star = _point(game, z_star)
    return float(_descent_operator(game, z) @ (z - z_star))


def weak_mvi_search(
    game, z_star, rhos=None, n_samples: int = 20_000, seed: int = 0
) -> dict[str, Any]:
    """Randomized search for violations of the weak MVI.

    For every ``rho`` the weak MVI asks ``<G(z), z - z*> >= -(rho/2)||G(z)||^2``
    for all feasible ``z``. Points are drawn uniformly from the domain and
    the most negative slack per ``rho`` is reported. This is a heuristic:
    failing to find a violation proves nothing. Without ``rhos`` the grid
    ``{0, 0.001, ...}`` up to ``1/(4L)`` is used, with ``L`` estimated as
    the largest spectral norm of the field Jacobian over the samples.
    """
    z_star = _point(game, z_star)
    rng = np.random.default_rng(seed)
    dom = game.domain
    inner = np.empty(n_samples)
    sq = np.empty(n_samples)
    lip = 0.0
    points = np.empty((n_samples, game.dim))
    for s in range(n_samples):
        z = dom.sample(rng)
        g = _descent_operator(game, z)
        inner[s] = g @ (z - z_star)
        sq[s] = g @ g
        points[s] = z
        if s < 500:
            lip = max(lip, float(np.linalg.norm(_field_jacobian(game, z), 2)))
    if rhos is None:
        upper = 1.0 / (4.0 * lip) if lip > 0 else 0.0
        rhos = np.arange(0, math.floor(upper * 1000) + 1) / 1000.0
    rhos = np.asarray(rhos, dtype=np.float64)
    slack = inner[None, :] + 0.5 * rhos[:, None] * sq[None, :]
    worst = slack.argmin(axis=1)
    return {
        "lipschitz_estimate": lip,
        "rhos": rhos,
        "min_slack": slack[np.arange(rhos.size), worst],
        "witnesses": points[worst],
        "violated_for_all": bool(np.all(slack.min(axis=1) < 0)),
    }
