import json
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from teamgames.dynamics import DynamicsConfig, run
from teamgames.errors import CapabilityError, DimensionError, DomainError, PreconditionError
from teamgames.games import TeamGame, make_gmp, make_matching_pennies, make_team_wgan, random_team_game
from teamgames.games.core import reduced_hessian
from teamgames.stability import (
    chart_operator,
    check_mvi,
    check_sufficient,
    dynamics_jacobian,
    eigenvalues,
    game_operator,
    is_weakly_stable,
    kpv_generator,
    spectral_radius,
    step_map,
    weak_mvi_search,
)

NE = np.full(8, 0.5)
OMEGAS = (0.1, 0.25, 0.5, 0.75, 0.9)


def gmp_hessian(w):
    return np.array([
        [0, -2 * w, -1, -1],
        [-2 * w, 0, -1, -1],
        [-1, -1, 0, 2 * w],
        [-1, -1, 2 * w, 0],
    ], dtype=float)


def match_sets(a, b, tol):
    """Greedy one-to-one matching of two multisets of complex numbers."""
    a, b = list(np.asarray(a, dtype=complex)), list(np.asarray(b, dtype=complex))
    assert len(a) == len(b)
    for x in a:
        j = int(np.argmin([abs(x - y) for y in b]))
        assert abs(x - b[j]) < tol, (x, b)
        b.pop(j)


# -- eigensolver ---------------------------------------------------------------


def test_gmp_hessian_eigenvalues_half():
    s5 = np.sqrt(5.0)
    match_sets(eigenvalues(gmp_hessian(0.5)), [-1, 1, -s5, s5], 1e-12)


def test_identity_and_golden_ratio():
    np.testing.assert_allclose(eigenvalues(np.eye(3)), np.ones(3))
    assert spectral_radius(np.eye(4)) == pytest.approx(1.0)
    phi = (1 + np.sqrt(5)) / 2
    match_sets(eigenvalues([[1.0, 1.0], [1.0, 0.0]]), [phi, 1 - phi], 1e-14)


def test_eigensolver_errors():
    with pytest.raises(DimensionError):
        eigenvalues(np.ones((2, 3)))
    with pytest.raises(CapabilityError):
        eigenvalues(np.eye(65))


@given(st.integers(1, 8).flatmap(lambda n: arrays(np.float64, (n, n), elements=st.floats(-10, 10))))
def test_conjugate_closure(M):
    vals = eigenvalues(M)
    match_sets(vals, np.conj(vals), 1e-8 * max(1.0, np.abs(M).max()))


# -- game operator -------------------------------------------------------------


@pytest.mark.parametrize("w", OMEGAS)
def test_game_operator_spectrum_and_multiplicity(w):
    H = game_operator(make_gmp(w), NE)
    match_sets(eigenvalues(H), [-2 * w, -2 * w, 2 * w - 2j, 2 * w + 2j], 1e-7)
    # the Hessian of the min-max objective is the unsigned version
    np.testing.assert_allclose(reduced_hessian(make_gmp(w), NE), gmp_hessian(w), atol=1e-14)
    s = 2 * np.sqrt(1 + w**2)
    match_sets(eigenvalues(gmp_hessian(w)), [-2 * w, 2 * w, -s, s], 1e-12)


def test_boundary_point_rejected():
    z = NE.copy()
    z[:2] = [1.0, 0.0]
    with pytest.raises(DomainError):
        game_operator(make_gmp(0.5), z)
    with pytest.raises(DomainError):
        dynamics_jacobian("GDA", make_gmp(0.5), z, 0.1)


# -- closed-form oracles (reduced chart) ---------------------------------------


@pytest.mark.parametrize("w", (0.3, 0.5, 0.8))
@pytest.mark.parametrize("eta", (0.05, 0.2))
def test_reduced_gda_is_identity_plus_eta_h(w, eta):
    g = make_gmp(w)
    H = game_operator(g, NE)
    np.testing.assert_allclose(dynamics_jacobian("GDA", g, NE, eta, chart="reduced"), np.eye(4) + eta * H, atol=1e-14)


@pytest.mark.parametrize("w", (0.2, 0.5, 0.8))
@pytest.mark.parametrize("eta", (0.05, 0.2))
def test_eg_eigenvalue_formula(w, eta):
    root = np.sqrt(complex(-1 - 8 * eta * w - 16 * eta**2 * w**2))
    base = -4 * eta + 2 * w + 4 * eta * w**2
    pair = [1 + eta * (base + 2 * root), 1 + eta * (base - 2 * root)]
    vals = eigenvalues(dynamics_jacobian("EG", make_gmp(w), NE, eta, chart="reduced"))
    for lam in pair:
        assert np.min(np.abs(vals - lam)) < 1e-7


def ogda_polynomial(w, eta):
    lam = np.polynomial.Polynomial([0, 1])
    one = np.polynomial.Polynomial([1])
    first = 4 * (1 + w**2) * eta**2 * (one - 2 * lam) ** 2 + (lam - 1) ** 2 * lam**2 - 4 * w * eta * lam * (one - 3 * lam + 2 * lam**2)
    base = (lam - 1) * lam + 2 * w * eta * (2 * lam - 1)
    return first, base


def factored_roots(first, base):
    """Roots of ``first * base**2``; rooting the factors keeps double roots accurate."""
    return np.concatenate([first.roots(), base.roots(), base.roots()])


@pytest.mark.parametrize("w", (0.2, 0.5, 0.9))
@pytest.mark.parametrize("eta", (0.05, 0.1))
def test_ogda_characteristic_polynomial(w, eta):
    J = dynamics_jacobian("OGDA", make_gmp(w), NE, eta, chart="reduced")
    assert J.shape == (8, 8)
    first, base = ogda_polynomial(w, eta)
    assert first.degree() == 4 and base.degree() == 2
    match_sets(eigenvalues(J), factored_roots(first, base), 1e-7)


def reference_omwu_matrix(w, eta):
    top = np.array([
        [1, eta * w, eta, eta, 0, -eta * w / 2, -eta / 2, -eta / 2],
        [eta * w, 1, eta, eta, -eta * w / 2, 0, -eta / 2, -eta / 2],
        [-eta, -eta, 1, eta * w, eta / 2, eta / 2, 0, -eta * w / 2],
        [-eta, -eta, eta * w, 1, eta / 2, eta / 2, -eta * w / 2, 0],
    ])
    return np.vstack([top, np.hstack([np.eye(4), np.zeros((4, 4))])])


def omwu_polynomial(w, eta):
    lam = np.polynomial.Polynomial([0, 1])
    one = np.polynomial.Polynomial([1])
    first = (4 + w**2) * eta**2 * (one - 2 * lam) ** 2 + 4 * (lam - 1) ** 2 * lam**2 - 4 * w * eta * lam * (one - 3 * lam + 2 * lam**2)
    base = 2 * (lam - 1) * lam + w * eta * (2 * lam - 1)
    # the overall 1/16 does not move the roots
    return first / 16, base


@pytest.mark.parametrize("w", (0.2, 0.5, 0.9))
def test_eigensolver_on_reference_omwu_matrix(w):
    eta = 0.2
    match_sets(eigenvalues(reference_omwu_matrix(w, eta)), factored_roots(*omwu_polynomial(w, eta)), 1e-7)


def test_omwu_jacobian_structure():
    # chain rule through the normalization: D = x(1 - x) = 1/4 at the uniform point
    g = make_gmp(0.5)
    eta = 0.2
    H = game_operator(g, NE)
    D = 0.25
    expected = np.block([[np.eye(4) + 2 * eta * D * H, -eta * D * H], [np.eye(4), np.zeros((4, 4))]])
    np.testing.assert_allclose(dynamics_jacobian("OMWU", g, NE, eta), expected, atol=1e-12)
    np.testing.assert_allclose(dynamics_jacobian("OMWU", g, NE, eta, chart="reduced"), expected, atol=1e-12)
    assert spectral_radius(reference_omwu_matrix(0.5, eta)) > 1


@pytest.mark.parametrize("k, p", [(-1.1, 0.3), (-3.0, 0.05), (-0.5, 1.0)])
def test_kpv_generator_quadratic(k, p):
    H = game_operator(make_gmp(0.5), NE)
    vals = eigenvalues(kpv_generator(H, k, p))
    rhos = eigenvalues(H)
    for lam in vals:
        residual = min(abs(lam**2 + lam * (p - k - r) - r * p) for r in rhos)
        assert residual < 1e-9


def test_reduced_kpv_discrete_map():
    g = make_gmp(0.5)
    H = game_operator(g, NE)
    eta, k, p = 0.05, -1.1, 0.3
    expected = np.eye(8) + eta * kpv_generator(H, k, p)
    np.testing.assert_allclose(dynamics_jacobian("KPV", g, NE, eta, k, p, chart="reduced"), expected, atol=1e-14)


# -- charts --------------------------------------------------------------------


def test_simplex_chart_halves_the_step_for_binary_players():
    g = make_gmp(0.5)
    for method in ("GDA", "EG", "OGDA"):
        np.testing.assert_allclose(
            dynamics_jacobian(method, g, NE, 0.2), dynamics_jacobian(method, g, NE, 0.1, chart="reduced"), atol=1e-13
        )
    np.testing.assert_allclose(
        dynamics_jacobian("KPV", g, NE, 0.05, -1.1, 0.3),
        dynamics_jacobian("KPV", g, NE, 0.025, -2.2, 0.6, chart="reduced"),
        atol=1e-13,
    )
    np.testing.assert_allclose(chart_operator(g, NE), game_operator(g, NE) / 2, atol=1e-14)


def central_jacobian(fun, x, h=1e-6):
    cols = [(fun(x + h * e) - fun(x - h * e)) / (2 * h) for e in np.eye(x.size)]
    return np.array(cols).T


def reduced_point(game, seed):
    rng = np.random.default_rng(seed)
    z = 0.5 * game.domain.sample(rng) + 0.5 * game.domain.uniform()
    from teamgames.geometry import reduce_coords

    return z, reduce_coords(game.domain, z)


@pytest.mark.parametrize("method", ["GDA", "OGDA", "EG", "OMWU", "KPV"])
@pytest.mark.parametrize("seed", [0, 1])
def test_jacobian_matches_finite_differences(method, seed):
    g = random_team_game(2, 2, [2, 3, 2, 2], seed=seed)
    z, r = reduced_point(g, seed)
    # small steps keep the projection inactive around interior points
    eta, k, p = 0.02, -1.0, 0.3
    fun = step_map(method, g, eta, k, p)
    x = r if method in ("GDA", "EG") else np.concatenate([r, r])
    analytic = dynamics_jacobian(method, g, z, eta, k, p)
    assert np.abs(analytic - central_jacobian(fun, x)).max() < 1e-5


@pytest.mark.parametrize("method", ["GDA", "OGDA", "EG", "KPV"])
def test_jacobian_matches_finite_differences_wgan(method):
    g = make_team_wgan([1.0, -0.5], 0.7)
    z = g.equilibria()[0] + np.random.default_rng(0).normal(scale=0.2, size=g.dim)
    fun = step_map(method, g, 0.05, -0.5, 0.1)
    x = z if method in ("GDA", "EG") else np.concatenate([z, z])
    analytic = dynamics_jacobian(method, g, z, 0.05, -0.5, 0.1)
    assert np.abs(analytic - central_jacobian(fun, x)).max() < 1e-5


# -- instability certificates --------------------------------------------------


@pytest.mark.parametrize("w", [0.1, 0.3, 0.5, 0.7, 0.9])
def test_gda_unstable_at_non_weakly_stable_ne(w):
    g = make_gmp(w)
    assert not is_weakly_stable(g, NE)
    for eta in (0.01, 0.1, 0.2):
        assert spectral_radius(dynamics_jacobian("GDA", g, NE, eta)) > 1


def test_radii_at_gmp_half():
    g = make_gmp(0.5)
    expected = {"GDA": (0.2, 1.1180340), "OGDA": (0.1, 1.0483), "EG": (0.2, 1.0966), "OMWU": (0.2, 1.0483)}
    for method, (eta, rho) in expected.items():
        assert spectral_radius(dynamics_jacobian(method, g, NE, eta)) == pytest.approx(rho, abs=1e-4)
    assert spectral_radius(dynamics_jacobian("KPV", g, NE, 0.05, -1.1, 0.3)) < 1
    # in the reduced chart the same parameters sit just outside the unit disc
    assert spectral_radius(dynamics_jacobian("KPV", g, NE, 0.05, -1.1, 0.3, chart="reduced")) > 1


# -- sufficient condition ------------------------------------------------------


@pytest.mark.parametrize("w", OMEGAS)
def test_sufficient_condition_gmp(w):
    rep = check_sufficient(make_gmp(w), NE)
    assert rep.condition_holds and rep.invertible and not rep.e_empty
    assert rep.alpha == pytest.approx(2 * w, abs=1e-8)
    assert rep.beta == pytest.approx(2 * w + 2 / w, abs=1e-8)
    assert rep.alpha <= rep.beta
    assert rep.k_interval[0] == pytest.approx(-rep.beta) and rep.k_interval[1] == pytest.approx(-rep.alpha)


def test_sufficient_condition_interval_half():
    rep = check_sufficient(make_gmp(0.5), NE)
    assert rep.k_interval[0] == pytest.approx(-5.0, abs=1e-8)
    assert rep.k_interval[1] == pytest.approx(-1.0, abs=1e-8)
    assert rep.chart_k_interval == pytest.approx((-2.5, -0.5), abs=1e-8)
    doc = json.loads(rep.to_json())
    assert doc["k_interval"] == pytest.approx([-5.0, -1.0])
    assert all(len(v) == 2 for v in doc["eigenvalues"])
    assert doc["jacobian_spectra"]["GDA"]["spectral_radius"] > 1


@pytest.mark.parametrize("w", OMEGAS)
def test_certificate_is_stable_and_simulates(w):
    g = make_gmp(w)
    rep = check_sufficient(g, NE)
    s = rep.search
    assert s is not None
    assert spectral_radius(dynamics_jacobian("KPV", g, NE, s["eta"], s["k"], s["p"])) < 1
    rng = np.random.default_rng(1)
    d = rng.uniform(-1e-2, 1e-2, 4)
    z0 = np.concatenate([[0.5 + e, 0.5 - e] for e in d])
    cfg = DynamicsConfig("KPV", s["eta"], k=s["k"], p=s["p"], max_iters=200_000)
    traj = run(g, None, cfg, initial=z0)
    assert np.abs(traj.final - NE).max() < 1e-4


def test_all_equal_payoffs_fail_as_singular():
    g = TeamGame((2, 2), (2, 2), np.full((2, 2, 2, 2), 3.0))
    rep = check_sufficient(g, NE)
    np.testing.assert_array_equal(rep.H, np.zeros((4, 4)))
    assert not rep.condition_holds


def test_left_half_plane_operator_holds_vacuously():
    # the reduced operator of this 1v1 game is [[0, 2], [-2, 0]]: purely imaginary spectrum
    g = TeamGame((2,), (2,), np.array([[0.0, 1.0], [1.0, 0.0]]))
    rep = check_sufficient(g, np.full(4, 0.5))
    assert np.all(rep.eigenvalues.real <= 1e-10) and rep.invertible
    assert rep.e_empty and rep.condition_holds
    assert rep.alpha is None and rep.beta is None
    assert rep.k_interval == (-np.inf, 0.0)


# -- weak stability ------------------------------------------------------------


def test_gmp_not_weakly_stable_with_valid_witness():
    from teamgames.games import gradient

    g = make_gmp(0.5)
    verdict = is_weakly_stable(g, NE)
    assert not verdict and verdict.witness is not None
    i, k, j, best, worst = verdict.witness
    assert g.team_of(i) == g.team_of(j) and i != j
    pinned = g.domain.blocks(NE.copy())
    pinned[i][:] = np.eye(2)[k]
    partials = gradient(g, np.concatenate(pinned))[j]
    # team A members prefer smaller U
    if g.team_of(j) == "A":
        assert partials[best] < partials[worst]
    else:
        assert partials[best] > partials[worst]


def test_weak_stability_true_cases():
    assert is_weakly_stable(make_matching_pennies(), np.full(4, 0.5))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        g = make_gmp(1.0)
    pure = np.array([1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0])
    from teamgames.metrics import ne_gap

    assert ne_gap(g, pure) == 0.0
    assert is_weakly_stable(g, pure)


def test_weak_stability_needs_an_equilibrium():
    with pytest.raises(PreconditionError):
        is_weakly_stable(make_gmp(0.5), np.array([1.0, 0, 1, 0, 1, 0, 1, 0]))


# -- variational inequalities --------------------------------------------------


@pytest.mark.parametrize("w", [0.1, 0.5, 0.9])
def test_mvi_value(w):
    z = np.array([1 / 3, 2 / 3, 1 / 6, 5 / 6, 2 / 3, 1 / 3, 1 / 3, 2 / 3])
    assert check_mvi(make_gmp(w), z, NE) == pytest.approx(-w / 9, abs=1e-12)
    assert check_mvi(make_gmp(w), NE, NE) == 0.0


@given(st.integers(0, 10_000))
def test_bilinear_game_is_monotone(seed):
    g = random_team_game(1, 1, [3, 2], seed=seed)
    rng = np.random.default_rng(seed)
    # equilibrium-free check: <G(z) - G(z'), z - z'> = 0 for bilinear games, so the
    # MVI against any equilibrium is nonnegative; use the matching-pennies NE
    mp = make_matching_pennies()
    z = mp.domain.sample(rng)
    assert check_mvi(mp, z, np.full(4, 0.5)) >= -1e-12
    assert np.isfinite(check_mvi(g, g.domain.sample(rng), g.domain.uniform()))


def test_weak_mvi_search_gmp():
    out = weak_mvi_search(make_gmp(0.5), NE, n_samples=4000, seed=0)
    assert out["lipschitz_estimate"] > 0
    assert out["rhos"][0] == 0.0
    assert out["min_slack"][0] < 0
    assert out["violated_for_all"]
    assert out["witnesses"].shape == (out["rhos"].size, 8)
