import numpy as np
import pytest

from igrm.fields import (dirichlet_ring, edge_coefficients, evaluate_on_points,
                         evaluate_on_quadrature, l2_project, l2_project_constrained)
from igrm.spline_basis import basis_matrix, make_space


def poly(x, y):
    return 1.0 + 2.0 * x - x * y + 0.5 * y ** 3


def test_edge_interpolation_reproduces_cubics():
    s = make_space(3, 2, 5)
    g = s.greville()
    c = edge_coefficients(s, g ** 3 - g)
    xs = np.linspace(0, 1, 17)
    np.testing.assert_allclose(basis_matrix(s, xs) @ c, xs ** 3 - xs, atol=1e-13)


def test_anchor_mode_copies_values():
    s = make_space(2, 1, 4)
    v = np.arange(s.n_basis, dtype=float)
    np.testing.assert_array_equal(edge_coefficients(s, v, "anchor"), v)
    with pytest.raises(ValueError):
        edge_coefficients(s, v, "nearest")


def test_ring_traces_and_corners():
    sx, sy = make_space(3, 2, 4), make_space(3, 2, 3)
    g = lambda x, y, t: (poly(x, y), np.sin(x + y) * 0 + x * y)  # noqa: E731
    ring = dirichlet_ring(sx, sy, g, 0.0)
    assert not ring[0][1:-1, 1:-1].any()
    t = np.linspace(0, 1, 9)
    for c, exact in enumerate((poly, lambda x, y: x * y)):
        bottom = evaluate_on_points(ring[c], sx, sy, t, [0.0])[:, 0]
        left = evaluate_on_points(ring[c], sx, sy, [0.0], t)[0]
        top = evaluate_on_points(ring[c], sx, sy, t, [1.0])[:, 0]
        np.testing.assert_allclose(bottom, exact(t, 0.0), atol=1e-13)
        np.testing.assert_allclose(left, exact(0.0, t), atol=1e-13)
        np.testing.assert_allclose(top, exact(t, 1.0), atol=1e-13)


def test_l2_projection_reproduces_space_members():
    sx, sy = make_space(3, 2, 3), make_space(2, 1, 4)
    rng = np.random.default_rng(0)
    c = rng.normal(size=(sx.n_basis, sy.n_basis))
    f = lambda x, y: evaluate_on_points(c, sx, sy, np.ravel(x), np.ravel(y))  # noqa: E731
    np.testing.assert_allclose(l2_project(sx, sy, f), c, rtol=1e-10, atol=1e-11)


def test_constrained_projection_keeps_ring():
    sx = sy = make_space(3, 2, 4)
    ring = dirichlet_ring(sx, sy, lambda x, y, t: (poly(x, y), 0 * x + 0 * y), 0.0)[0]
    c = l2_project_constrained(sx, sy, lambda x, y: poly(x, y), ring)
    np.testing.assert_array_equal(c[0], ring[0])
    np.testing.assert_array_equal(c[:, -1], ring[:, -1])
    # cubic data lies in the space, so the constrained projection is exact
    x, y, wx, wy, vals = evaluate_on_quadrature(c, sx, sy, 5)
    np.testing.assert_allclose(vals, poly(x[:, None], y[None, :]), atol=1e-12)


def test_evaluate_derivatives():
    sx = sy = make_space(3, 2, 3)
    c = l2_project(sx, sy, poly)
    x, y, *_ , dx = evaluate_on_quadrature(c, sx, sy, 4, dx=1)
    np.testing.assert_allclose(dx, 2.0 - y[None, :] + 0 * x[:, None], atol=1e-11)
    dy = evaluate_on_points(c, sx, sy, [0.2, 0.7], [0.1, 0.9], dy=1)
    np.testing.assert_allclose(dy, -np.array([0.2, 0.7])[:, None] + 1.5 * np.array([0.1, 0.9]) ** 2,
                               atol=1e-11)
