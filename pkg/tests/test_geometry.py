import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from teamgames.errors import DimensionError, DomainError, NumericError
from teamgames.geometry import (
    Domain,
    chart_basis,
    expand_coords,
    project_profile,
    project_simplex,
    reduce_coords,
)

finite = st.floats(-5, 5, allow_nan=False, allow_infinity=False)
vectors = st.integers(1, 8).flatmap(lambda n: arrays(np.float64, n, elements=finite))


@pytest.mark.parametrize(
    "v, expected",
    [([0.5, 0.5], [0.5, 0.5]), ([1.2, -0.2], [1.0, 0.0]), ([0.6, 0.6], [0.5, 0.5])],
)
def test_projection_examples(v, expected):
    np.testing.assert_allclose(project_simplex(v), expected, atol=1e-15)


def test_projection_errors():
    with pytest.raises(NumericError):
        project_simplex([np.nan, 0.5])
    with pytest.raises(DimensionError):
        project_simplex([])


def test_profile_projection_blocks():
    dom = Domain.simplices([2, 2])
    np.testing.assert_allclose(project_profile(dom, [1.2, -0.2, 0.6, 0.6]), [1, 0, 0.5, 0.5], atol=1e-15)
    feasible = np.array([0.3, 0.7, 0.9, 0.1])
    np.testing.assert_array_equal(project_profile(dom, feasible), feasible)
    free = Domain.free([3])
    raw = np.array([4.0, -2.0, 0.5])
    np.testing.assert_array_equal(project_profile(free, raw), raw)
    with pytest.raises(DimensionError):
        project_profile(dom, [1.0, 0.0])


def test_domain_validation():
    with pytest.raises(DomainError):
        Domain.simplices([2, 0])
    with pytest.raises(DomainError):
        Domain("ball", (2,))


@given(vectors)
def test_projection_is_feasible(v):
    p = project_simplex(v)
    assert p.min() >= 0.0
    assert abs(p.sum() - 1.0) <= 1e-12


@given(vectors)
def test_idempotence(v):
    once = project_simplex(v)
    twice = project_simplex(once)
    np.testing.assert_allclose(twice, once, rtol=0, atol=1e-15)
    # after a second application the result is a bitwise fixed point
    np.testing.assert_array_equal(project_simplex(twice), twice)


@given(st.integers(1, 8).flatmap(lambda n: st.tuples(arrays(np.float64, n, elements=finite), arrays(np.float64, n, elements=finite))))
def test_nonexpansive(pair):
    u, v = pair
    assert np.linalg.norm(project_simplex(u) - project_simplex(v)) <= np.linalg.norm(u - v) + 1e-12


@pytest.mark.parametrize("seed", range(5))
def test_projection_beats_random_feasible_points(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 7))
    v = rng.normal(scale=2.0, size=n)
    p = project_simplex(v)
    others = rng.dirichlet(np.ones(n), size=1000)
    assert np.all(np.linalg.norm(others - v, axis=1) >= np.linalg.norm(p - v) - 1e-12)


def test_ties_are_deterministic():
    v = np.array([0.3, 0.3, 0.3, 0.3])
    np.testing.assert_array_equal(project_simplex(v), np.full(4, 0.25))


def test_reduce_expand_round_trip():
    dom = Domain.simplices([2, 3])
    z = np.array([0.4, 0.6, 0.2, 0.3, 0.5])
    r = reduce_coords(dom, z)
    np.testing.assert_array_equal(r, [0.4, 0.2, 0.3])
    np.testing.assert_allclose(expand_coords(dom, r), z, atol=1e-15)
    B = chart_basis(dom)
    assert B.shape == (5, 3)
    np.testing.assert_allclose(B.sum(axis=0)[:1], 0.0)
    # tangent directions keep every block sum fixed
    for block in dom.blocks(B):
        np.testing.assert_allclose(block.sum(axis=0), 0.0, atol=1e-15)


def test_domain_membership():
    dom = Domain.simplices([2, 2])
    assert dom.contains([0.5, 0.5, 1.0, 0.0])
    assert not dom.is_interior([0.5, 0.5, 1.0, 0.0])
    assert dom.is_interior(dom.uniform())
    assert not dom.contains([0.6, 0.6, 0.5, 0.5])
    assert not dom.contains([np.nan, 0.5, 0.5, 0.5])
    rng = np.random.default_rng(0)
    assert dom.contains(dom.sample(rng))
