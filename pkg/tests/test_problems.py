import numpy as np
import pytest
import sympy as sp

from igrm.problems import PROBLEMS, cavity, get_problem, ns_mms, project_initial, stokes_mms
from igrm.splitting import Discretization


def symbolic_forcing(re, convection):
    x, y, t = sp.symbols("x y t")
    v1 = sp.sin(x) * sp.sin(y + t)
    v2 = sp.cos(x) * sp.cos(y + t)
    p = sp.cos(x) * sp.sin(y + t)
    out = []
    for v in (v1, v2):
        lap = sp.diff(v, x, 2) + sp.diff(v, y, 2)
        f = sp.diff(v, t) - lap / re
        if convection:
            f += v1 * sp.diff(v, x) + v2 * sp.diff(v, y)
        out.append(f)
    out[0] += sp.diff(p, x)
    out[1] += sp.diff(p, y)
    div = sp.simplify(sp.diff(v1, x) + sp.diff(v2, y))
    return sp.lambdify((x, y, t), out, "numpy"), div


@pytest.mark.parametrize("problem,re,conv", [(stokes_mms(), 1.0, False),
                                             (ns_mms(1000.0), 1000.0, True),
                                             (ns_mms(7.0), 7.0, True)])
def test_forcing_matches_symbolic_residual(problem, re, conv):
    f_ref, div = symbolic_forcing(sp.Float(re), conv)
    assert div == 0
    rng = np.random.default_rng(3)
    x, y, t = rng.uniform(0, 1, 50), rng.uniform(0, 1, 50), 1.3
    got = problem.forcing(x, y, t)
    ref = f_ref(x, y, t)
    for c in range(2):
        np.testing.assert_allclose(got[c], ref[c], rtol=1e-12, atol=1e-13)


def test_exact_gradient():
    prob = stokes_mms()
    x, y, t, h = 0.3, 0.6, 0.2, 1e-6
    g = prob.exact_grad_v(x, y, t)
    for c in range(2):
        dx = (prob.exact_v(x + h, y, t)[c] - prob.exact_v(x - h, y, t)[c]) / (2 * h)
        dy = (prob.exact_v(x, y + h, t)[c] - prob.exact_v(x, y - h, t)[c]) / (2 * h)
        assert g[c][0] == pytest.approx(dx, abs=1e-8)
        assert g[c][1] == pytest.approx(dy, abs=1e-8)


def test_cavity_lid():
    prob = cavity(100.0)
    x = np.linspace(0, 1, 5)
    v1, v2 = prob.dirichlet(x, np.ones(5), 0.0)
    np.testing.assert_array_equal(v1, 1.0)
    np.testing.assert_array_equal(v2, 0.0)
    v1, _ = prob.dirichlet(x, np.full(5, 0.999), 0.0)
    np.testing.assert_array_equal(v1, 0.0)
    assert not prob.has_exact


def test_callables_are_pure():
    for name in PROBLEMS:
        prob = get_problem(name)
        x, y = np.linspace(0, 1, 7), np.linspace(0, 1, 7)
        a, b = prob.forcing(x, y, 0.5), prob.forcing(x, y, 0.5)
        for u, v in zip(a, b):
            np.testing.assert_array_equal(u, v)


def test_unknown_problem_and_bad_re():
    with pytest.raises(ValueError, match="unknown problem"):
        get_problem("channel")
    with pytest.raises(ValueError):
        ns_mms(0.0)
    with pytest.raises(ValueError):
        cavity(-1.0)


def test_initial_projection():
    prob = stokes_mms()
    d = Discretization(6, 6)
    s = project_initial(prob, d)
    assert s.n == 0 and s.t == 0.0
    assert s.p[0, 0] == 0.0 and not s.phi.any()
    assert s.v1.shape == d.vel_shape and s.p.shape == d.p_shape
