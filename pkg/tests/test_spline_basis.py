import numpy as np
import pytest
from hypothesis import given, strategies as st

from igrm.spline_basis import (BC, DomainError, SplineParameterError, assembly_points,
                               basis_matrix, collocation, eval_basis, gauss_rule, make_space)

from conftest import naive_bspline_deriv


@st.composite
def spaces(draw, max_degree=5, max_elements=6):
    m = draw(st.integers(1, max_degree))
    k = draw(st.integers(0, m - 1))
    n = draw(st.integers(1, max_elements))
    return make_space(m, k, n)


def test_dimension_examples():
    assert make_space(3, 2, 20).n_basis == 23
    assert make_space(4, 2, 20).n_basis == 43
    assert make_space(3, 0, 20).n_basis == 61
    assert make_space(4, 1, 20).n_basis == 62


@given(spaces())
def test_dimension_formula(s):
    m, k, n = s.degree, s.continuity, s.n_elements
    assert s.n_basis == n * (m - k) + k + 1
    assert len(s.kv) == s.n_basis + m + 1
    assert s.with_bc("zero-both-ends").dim == s.n_basis - 2
    assert s.with_bc("one-dof-removed").dim == s.n_basis - 1


def test_knot_vector_multiplicities():
    s = make_space(3, 1, 2)
    np.testing.assert_array_equal(s.kv, [0, 0, 0, 0, 0.5, 0.5, 1, 1, 1, 1])


@pytest.mark.parametrize("m,k,n", [(0, 0, 3), (2, 2, 3), (3, -2, 2), (2, 1, 0)])
def test_bad_parameters(m, k, n):
    with pytest.raises(SplineParameterError):
        make_space(m, k, n)


@pytest.mark.parametrize("x", [-1e-9, 1.0 + 1e-9, np.nan])
def test_domain_error(x):
    with pytest.raises(DomainError):
        eval_basis(make_space(2, 1, 3), x)


@given(spaces(), st.floats(0.0, 1.0))
def test_partition_of_unity(s, x):
    first, tab = eval_basis(s, x, max_deriv=1)
    assert tab[0].sum() == pytest.approx(1.0, abs=1e-13)
    assert np.all(tab[0] >= -1e-15)
    assert abs(tab[1].sum()) < 1e-9


@given(spaces(max_degree=4, max_elements=4), st.floats(0.0, 1.0))
def test_matches_naive_recursion(s, x):
    kv = s.kv
    d = min(2, s.degree)
    first, tab = eval_basis(s, x, max_deriv=d)
    for dd in range(d + 1):
        full = np.zeros(s.n_basis)
        full[first:first + s.degree + 1] = tab[dd]
        ref = np.array([naive_bspline_deriv(kv, i, s.degree, x, dd) for i in range(s.n_basis)])
        np.testing.assert_allclose(full, ref, atol=1e-9 * max(1.0, np.abs(ref).max()))


def test_right_end_point():
    s = make_space(3, 2, 4)
    first, tab = eval_basis(s, 1.0)
    assert first + s.degree == s.n_basis - 1
    np.testing.assert_allclose(tab[0], [0, 0, 0, 1], atol=1e-15)


def test_single_linear_element():
    s = make_space(1, 0, 1)
    first, tab = eval_basis(s, 0.25, 1)
    np.testing.assert_allclose(tab, [[0.75, 0.25], [-1.0, 1.0]])


def test_derivative_beyond_degree_is_zero():
    _, tab = eval_basis(make_space(1, 0, 3), 0.4, max_deriv=2)
    np.testing.assert_array_equal(tab[2], 0.0)
    with pytest.raises(SplineParameterError):
        eval_basis(make_space(3, 2, 3), 0.4, max_deriv=3)


@pytest.mark.parametrize("npts", [1, 2, 5, 16])
def test_gauss_rule_exactness(npts):
    rule = gauss_rule(npts)
    for p in range(2 * npts):
        approx = sum(w * x ** p for x, w in zip(rule.nodes, rule.weights))
        assert approx == pytest.approx(1.0 / (p + 1), rel=1e-13)


@pytest.mark.parametrize("npts", [0, 17])
def test_gauss_rule_limits(npts):
    with pytest.raises(SplineParameterError):
        gauss_rule(npts)


def test_collocation_restricts_dofs():
    s = make_space(3, 2, 5)
    x, w, full = collocation(s, 4)
    _, _, inner = collocation(s.with_bc(BC.ZERO_BOTH_ENDS), 4)
    assert inner.shape == (full.shape[0], s.n_basis - 2)
    np.testing.assert_array_equal(inner.toarray(), full.toarray()[:, 1:-1])
    assert w.sum() == pytest.approx(1.0)


def test_basis_matrix_reproduces_polynomials():
    s = make_space(3, 1, 4)
    g = s.greville()
    xs = np.linspace(0, 1, 23)
    # Marsden: sum_i g_i B_i(x) = x for degree >= 1
    np.testing.assert_allclose(basis_matrix(s, xs) @ g, xs, atol=1e-14)


def test_assembly_points():
    assert assembly_points(make_space(3, 2, 2), make_space(4, 2, 2)) == 5
