import numpy as np
import pytest
from scipy.interpolate import BSpline

from igrm.problems import ns_mms, project_initial, stokes_mms, zero_problem
from igrm.splitting import (Discretization, DivergenceError, FlowState, GMStepper, SpaceChoice,
                            StepperConfig)


def make(problem, n=6, mode="igrm", tau=0.05, chi=0.0, choice=None, **kw):
    d = Discretization(n, n, choice or SpaceChoice())
    cfg = StepperConfig(tau=tau, re=problem.re, chi=chi, mode=mode,
                        include_convection=problem.include_convection, **kw)
    return d, GMStepper(d, cfg, problem)


def random_state(d, rng, ring_zero=True):
    v1, v2 = (rng.normal(size=d.vel_shape) for _ in range(2))
    if ring_zero:
        for v in (v1, v2):
            v[0], v[-1], v[:, 0], v[:, -1] = 0, 0, 0, 0
    p = rng.normal(size=d.p_shape)
    return FlowState(v1, v2, p, rng.normal(size=d.p_shape), 3, 0.15)


@pytest.mark.parametrize("kw", [dict(tau=0), dict(tau=0.1, re=0), dict(tau=0.1, chi=1.5),
                                dict(tau=0.1, mode="fem"), dict(tau=0.1, convection="y")])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        StepperConfig(**kw)


def test_dimensions():
    d = Discretization(20, 20)
    assert d.dim_trial == 2 * 23 ** 2 + 23 ** 2
    assert d.dim_test == 3 * 43 ** 2
    assert d.dim_trial_dofs == 2 * 21 ** 2 + 23 ** 2 - 1


@pytest.mark.parametrize("mode", ["igrm", "galerkin"])
def test_zero_in_zero_out(mode):
    prob = zero_problem(10.0, convection=True)
    d, st = make(prob, mode=mode)
    s = project_initial(prob, d)
    for _ in range(3):
        s = st.advance(s)
    for a in (s.v1, s.v2, s.p, s.phi):
        assert not a.any()
    assert s.n == 3 and s.t == pytest.approx(0.15)


def test_deterministic():
    prob = ns_mms(50.0)
    out = []
    for _ in range(2):
        d, st = make(prob)
        s = project_initial(prob, d)
        for _ in range(3):
            s = st.advance(s)
        out.append(s)
    for name in ("v1", "v2", "p", "phi"):
        np.testing.assert_array_equal(getattr(out[0], name), getattr(out[1], name))


@pytest.mark.parametrize("mode", ["igrm", "galerkin"])
def test_transpose_equivariance(mode, rng):
    """Swapping x and y (and the velocity components) swaps the two half-steps."""
    prob = zero_problem(3.0)
    d, st = make(prob, n=5, mode=mode)
    s = random_state(d, rng)
    ring = st.ring(0.0)
    p_tilde = s.p + s.phi
    Lx = st.x_rhs(s, p_tilde, 0.0, ring)
    Ly = st.y_rhs([s.v2.T, s.v1.T], p_tilde.T, 0.0, ring)
    np.testing.assert_allclose(Lx[0], Ly[1].T, rtol=1e-12, atol=1e-13)
    np.testing.assert_allclose(Lx[1], Ly[0].T, rtol=1e-12, atol=1e-13)
    ux = st._lift_and_solve(Lx[0], "x")
    uy = st._lift_and_solve(Ly[1], "y")
    np.testing.assert_allclose(ux, uy.T, rtol=1e-10, atol=1e-13)


def test_penalty_step_linear(rng):
    prob = zero_problem()
    d, st = make(prob, n=5)
    a, b = random_state(d, rng, False), random_state(d, rng, False)
    lhs = st.penalty_step(2.0 * a.v1 - b.v1, 2.0 * a.v2 - b.v2)
    rhs = 2.0 * st.penalty_step(a.v1, a.v2) - st.penalty_step(b.v1, b.v2)
    np.testing.assert_allclose(lhs, rhs, rtol=1e-10, atol=1e-12)


def test_penalty_of_divergence_free_field_is_small():
    prob = stokes_mms()
    d, st = make(prob, n=8)
    s = project_initial(prob, d)
    phi = st.penalty_step(s.v1, s.v2)
    # the projected field is only discretely close to solenoidal
    assert np.abs(phi).max() * st.cfg.tau < 1e-3


def test_convection_load_matches_tensor_contraction(rng):
    prob = ns_mms(10.0)
    d, st = make(prob, n=2)
    s = random_state(d, rng, False)
    test_x, test_y = st.tx, st.vy0
    got = st.convection_load(s.v1, s.v2, test_x, test_y)

    # trilinear tensors N[i, j, k] = int T_i phi_j d phi_k on a dense 2D Gauss grid
    npts = 8
    t, w = np.polynomial.legendre.leggauss(npts)
    xs = np.concatenate([e / 2 + (t + 1) / 4 for e in range(2)])
    ws = np.tile(w / 4, 2)
    W = np.outer(ws, ws).ravel()

    def design(space, nu):
        b = BSpline(space.kv, np.eye(space.n_basis), space.degree)
        return (b(xs, nu) if nu else b(xs))[:, space.dofs]

    T = np.kron(design(test_x, 0), design(test_y, 0))
    phi = np.kron(design(d.vx, 0), design(d.vy, 0))
    phx = np.kron(design(d.vx, 1), design(d.vy, 0))
    phy = np.kron(design(d.vx, 0), design(d.vy, 1))
    nx_ = np.einsum("q,qi,qj,qk->ijk", W, T, phi, phx)
    ny_ = np.einsum("q,qi,qj,qk->ijk", W, T, phi, phy)
    u1, u2 = s.v1.ravel(), s.v2.ravel()
    for c, v in enumerate((s.v1, s.v2)):
        ref = (np.einsum("ijk,j,k->i", nx_, u1, v.ravel())
               + np.einsum("ijk,j,k->i", ny_, u2, v.ravel()))
        np.testing.assert_allclose(got[c].ravel(), ref, rtol=1e-11, atol=1e-12)


def test_galerkin_equals_igrm_with_equal_spaces():
    prob = stokes_mms()
    choice = SpaceChoice(vel_test=(3, 2))
    d, a = make(prob, n=5, mode="igrm", choice=choice)
    _, b = make(prob, n=5, mode="galerkin", choice=choice)
    s1 = s2 = project_initial(prob, d)
    for _ in range(4):
        s1, s2 = a.advance(s1), b.advance(s2)
        for name in ("v1", "v2", "p"):
            x, y = getattr(s1, name), getattr(s2, name)
            assert np.abs(x - y).max() <= 1e-10 * np.abs(y).max()
    assert a.max_residual_ratio <= 1e-10


def test_blowup_detected():
    prob = ns_mms(1000.0)
    d, st = make(prob, n=10, tau=0.25, blowup_bound=10.0)
    s = project_initial(prob, d)
    with pytest.raises(DivergenceError) as info:
        for _ in range(40):
            s = st.advance(s)
    assert info.value.step >= 1
    assert info.value.norm > info.value.bound or not np.isfinite(info.value.norm)


def test_non_finite_state_is_blowup():
    prob = stokes_mms()
    d, st = make(prob, n=4)
    s = project_initial(prob, d)
    s.v1[2, 2] = np.nan
    with pytest.raises(DivergenceError):
        st.advance(s)


def test_residual_orthogonality_tracked():
    prob = ns_mms(100.0)
    d, st = make(prob, n=6)
    s = project_initial(prob, d)
    for _ in range(3):
        s = st.advance(s)
    assert 0.0 <= st.max_orthogonality <= 1e-8
    assert st.max_residual_ratio > 0.0


def test_rotational_correction_changes_pressure():
    prob = stokes_mms()
    d, a = make(prob, n=5, chi=0.0)
    _, b = make(prob, n=5, chi=1.0)
    s = project_initial(prob, d)
    pa, pb = a.advance(s).p, b.advance(s).p
    assert np.abs(pa - pb).max() > 0
    np.testing.assert_array_equal(a.advance(s).v1, b.advance(s).v1)


def test_convection_of_constant_field_vanishes():
    prob = ns_mms(10.0)
    d, st = make(prob, n=3)
    c = np.ones(d.vel_shape)
    for load in st.convection_load(0.3 * c, -1.2 * c, st.tx, st.vy0):
        assert np.abs(load).max() < 1e-14
    for load in st.convection_load(0 * c, 0 * c, st.tx, st.vy0):
        assert not load.any()


def test_pressure_predictor_trace():
    from igrm.splitting import pressure_predictor
    prob = stokes_mms()
    d, st = make(prob, n=4)
    s0 = project_initial(prob, d)
    assert np.array_equal(pressure_predictor(s0), s0.p)
    s1 = st.advance(s0)
    # p^{1/2} = p_0 + phi^{1/2} (pinned), so the next predictor is p^{1/2} + phi^{1/2}
    p_half = s0.p + s1.phi
    np.testing.assert_allclose(s1.p, p_half - p_half[0, 0], atol=1e-14)
    np.testing.assert_allclose(pressure_predictor(s1), s1.p + s1.phi)


def test_rotational_term_vanishes_for_solenoidal_field():
    from igrm.fields import l2_project
    prob = stokes_mms()
    d, a = make(prob, n=4, chi=0.0)
    _, b = make(prob, n=4, chi=1.0)
    v1 = l2_project(d.vx, d.vy, lambda x, y: x + 0 * y)
    v2 = l2_project(d.vx, d.vy, lambda x, y: -y + 0 * x)
    s = project_initial(prob, d)
    phi = a.penalty_step(v1, v2)
    assert np.abs(phi).max() < 1e-10
    pa = a.pressure_update(s, phi, (v1, v2), (v1, v2))
    pb = b.pressure_update(s, phi, (v1, v2), (v1, v2))
    np.testing.assert_allclose(pa, pb, atol=1e-10)
