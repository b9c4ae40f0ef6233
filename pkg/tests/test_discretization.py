"""Mesh construction, basis evaluation, assembled operators."""

import numpy as np
import pytest

from thermoplast import Discretization, InvalidConfig, MaterialParams, build_mesh
from thermoplast import operators as ops
from thermoplast import state as st
from thermoplast.basis import gauss_rule, hermite1d


@pytest.fixture(scope="module")
def disc44():
    return Discretization(build_mesh(1.0, 1.0, 4, 4), MaterialParams())


def identity_P(n):
    return np.broadcast_to(np.eye(2), (n, 2, 2)).copy()


# -- mesh --------------------------------------------------------------------

def test_mesh_counts():
    m = build_mesh(1.0, 1.0, 2, 2)
    assert m.n_nodes == 9
    assert m.n_elems == 4
    assert len(m.boundary_nodes) == 8


def test_mesh_element_areas_partition():
    m = build_mesh(2.0, 3.0, 5, 4)
    assert m.n_elems * m.hx * m.hy == pytest.approx(6.0)


def test_mesh_boundary_normals_axis_aligned():
    m = build_mesh(1.0, 2.0, 3, 3)
    normals = [tuple(side.normal) for side in m.edges]
    assert set(normals) == {(0.0, -1.0), (0.0, 1.0), (-1.0, 0.0), (1.0, 0.0)}
    for side in m.edges:
        assert np.linalg.norm(side.normal) == 1.0


def test_mesh_rejects_bad_input():
    with pytest.raises(InvalidConfig):
        build_mesh(0.0, 1.0, 4, 4)
    with pytest.raises(InvalidConfig):
        build_mesh(1.0, 1.0, 1, 4)


# -- quadrature and 1-D Hermite table -----------------------------------------

def test_gauss_rule_weights():
    x, w = gauss_rule(4, 0.7)
    assert w.sum() == pytest.approx(0.7)
    assert np.all(w > 0.0)
    # degree-7 exactness
    assert (w @ x**7) == pytest.approx(0.7**8 / 8.0, rel=1e-13)


def test_hermite_nodal_values():
    val, d1, _ = hermite1d(np.array([0.0, 1.0]), 0.5)
    # value functions are 1 at their node, slope functions have unit slope
    assert np.allclose(val[0], [1.0, 0.0, 0.0, 0.0])
    assert np.allclose(val[1], [0.0, 0.0, 1.0, 0.0])
    assert np.allclose(d1[0], [0.0, 1.0, 0.0, 0.0])
    assert np.allclose(d1[1], [0.0, 0.0, 0.0, 1.0])


# -- deformation evaluation ----------------------------------------------------

def test_eval_affine_field(disc44):
    y = st.identity_deformation(disc44)
    _, grad, hess = disc44.eval_deformation(y)
    assert np.abs(grad - np.eye(2)).max() < 1e-14
    assert np.abs(hess).max() < 1e-12


def test_eval_quadratic_hessian_exact(disc44):
    # y1 = x^2 is bicubic, so its interpolant reproduces d2y1/dx2 = 2 exactly
    mesh = disc44.mesh
    y = np.zeros((mesh.n_nodes, 2, 4))
    y[:, 0, 0] = mesh.nodes[:, 0] ** 2
    y[:, 0, 1] = 2.0 * mesh.nodes[:, 0]
    _, _, hess = disc44.eval_deformation(y.ravel())
    assert np.abs(hess[:, :, 0, 0, 0] - 2.0).max() < 1e-11
    assert np.abs(hess[:, :, 0, 0, 1]).max() < 1e-11
    assert np.abs(hess[:, :, 1]).max() < 1e-11


def test_eval_matches_direct_shape_sum(disc44):
    # independent oracle: evaluate the shape expansion per element directly
    rng = np.random.default_rng(30)
    y = rng.standard_normal(disc44.n_ydof)
    elem = 7
    yv, grad, hess = disc44.eval_deformation(y)
    t = disc44.herm
    ye = y[disc44.ydof_idx[elem]]          # (2, 16)
    for q in range(16):
        ref = ye @ t.N[q]
        assert np.abs(yv[elem, q] - ref).max() < 1e-13
        refg = np.stack([ye @ t.Gx[q], ye @ t.Gy[q]], axis=-1)
        assert np.abs(grad[elem, q] - refg).max() < 1e-12


def test_c1_continuity_across_edges():
    # value and gradient agree when evaluated from both sides of an edge
    disc = Discretization(build_mesh(1.0, 1.0, 2, 2), MaterialParams())
    rng = np.random.default_rng(31)
    y = rng.standard_normal(disc.n_ydof)
    from thermoplast.basis import hermite_eval
    hx, hy = disc.mesh.hx, disc.mesh.hy
    pts_y = np.linspace(0.05, 0.45, 7)
    # shared vertical edge between elements 0 (left) and 1 (right) at x = hx
    left = hermite_eval(np.full(7, hx), pts_y, hx, hy)
    right = hermite_eval(np.zeros(7), pts_y, hx, hy)
    y0 = y[disc.ydof_idx[0]]               # (2, 16)
    y1 = y[disc.ydof_idx[1]]
    for tab_l, tab_r in zip(left[:3], right[:3]):   # N, Gx, Gy
        vl = y0 @ tab_l.T
        vr = y1 @ tab_r.T
        assert np.abs(vl - vr).max() < 1e-12


# -- constant operators ----------------------------------------------------------

def test_operator_symmetry(disc44):
    for mat in (disc44.ops.mass_y, disc44.ops.biharm, disc44.ops.spring):
        d = abs(mat - mat.T)
        assert d.max() <= 1e-14 * max(abs(mat).max(), 1.0)


def test_biharm_annihilates_affine(disc44):
    y = st.identity_deformation(disc44)
    assert np.abs(disc44.ops.biharm @ y).max() < 1e-12


def test_biharm_positive_on_non_affine(disc44):
    rng = np.random.default_rng(32)
    for _ in range(100):
        y = rng.standard_normal(disc44.n_ydof)
        val = y @ (disc44.ops.biharm @ y)
        assert val > 0.0


def test_mass_reproduces_density_volume(disc44):
    u = np.zeros((disc44.n_nodes, 2, 4))
    u[:, 0, 0] = 1.0
    u = u.ravel()
    assert u @ (disc44.ops.mass_y @ u) == pytest.approx(disc44.params.rho * 1.0)


def test_spring_energy_constant_displacement(disc44):
    c = np.array([1.5, -2.0])
    y = np.zeros((disc44.n_nodes, 2, 4))
    y[:, 0, 0] = c[0]
    y[:, 1, 0] = c[1]
    y = y.ravel()
    expected = 0.5 * disc44.params.boundary_spring * (c @ c) * 4.0  # perimeter 4
    assert 0.5 * y @ (disc44.ops.spring @ y) == pytest.approx(expected)


def test_lumped_mass_positive_sums_to_area(disc44):
    lump = disc44.ops.lumped_q1
    assert np.all(lump > 0.0)
    assert lump.sum() == pytest.approx(1.0)


def test_scalar_operators_match_full(disc44):
    rng = np.random.default_rng(33)
    y = rng.standard_normal(disc44.n_ydof)
    y2 = y.reshape(disc44.n_nodes, 2, 4)
    for full, scal in ((disc44.ops.mass_y, disc44.ops.mass_scalar),
                       (disc44.ops.biharm, disc44.ops.biharm_scalar),
                       (disc44.ops.spring, disc44.ops.spring_scalar)):
        ref = y @ (full @ y)
        got = sum(y2[:, c, :].ravel() @ (scal @ y2[:, c, :].ravel()) for c in range(2))
        assert got == pytest.approx(ref, rel=1e-12, abs=1e-12)


# -- plastic-gradient residual -----------------------------------------------------

def test_qlap_zero_for_constant_field(disc44):
    g = ops.plastic_gradient_residual(disc44, identity_P(disc44.n_nodes))
    assert np.abs(g).max() < 1e-14


def test_qlap_linear_profile_fluxes():
    # P12 = a x2 with q = 4: interior residual zero, boundary flux kappa1 a^3
    mesh = build_mesh(1.0, 1.0, 4, 4)
    params = MaterialParams(q=4.0, kappa1=0.7)
    disc = Discretization(mesh, params)
    a = 0.8
    P = identity_P(mesh.n_nodes)
    P[:, 0, 1] = a * mesh.nodes[:, 1]
    g = ops.plastic_gradient_residual(disc, P)
    assert np.abs(g[~mesh.boundary_mask]).max() < 1e-13
    top = mesh.nodes[:, 1] > 1.0 - 1e-12
    bottom = mesh.nodes[:, 1] < 1e-12
    assert g[top, 0, 1].sum() == pytest.approx(params.kappa1 * a**3, rel=1e-12)
    assert g[bottom, 0, 1].sum() == pytest.approx(-params.kappa1 * a**3, rel=1e-12)


def test_qlap_is_gradient_of_energy(disc44):
    rng = np.random.default_rng(34)
    P = identity_P(disc44.n_nodes) + 0.1 * rng.standard_normal((disc44.n_nodes, 2, 2))
    g = ops.plastic_gradient_residual(disc44, P)
    params = disc44.params

    def energy(Pd):
        _, gp = disc44.eval_plastic(Pd)
        n2 = np.sum(gp * gp, axis=(-3, -2, -1))
        return float(np.sum((params.kappa1 / params.q) * n2 ** (params.q / 2.0)
                            @ disc44.herm.qw))

    h = 1e-6
    for node in rng.choice(disc44.n_nodes, 5, replace=False):
        for a in range(2):
            for b in range(2):
                pp, pm = P.copy(), P.copy()
                pp[node, a, b] += h
                pm[node, a, b] -= h
                fd = (energy(pp) - energy(pm)) / (2.0 * h)
                assert g[node, a, b] == pytest.approx(fd, rel=1e-6, abs=1e-9)


def test_qlap_monotone(disc44):
    rng = np.random.default_rng(35)
    base = identity_P(disc44.n_nodes)
    for _ in range(20):
        p1 = base + 0.2 * rng.standard_normal(base.shape)
        p2 = base + 0.2 * rng.standard_normal(base.shape)
        g1 = ops.plastic_gradient_residual(disc44, p1)
        g2 = ops.plastic_gradient_residual(disc44, p2)
        gap = float(np.sum((g1 - g2) * (p1 - p2)))
        assert gap >= -1e-12


# -- heat system ---------------------------------------------------------------------

def test_heat_stiffness_identity_is_laplacian(disc44):
    params = disc44.params
    dt = 0.1
    n = disc44.n_nodes
    mat = ops.Discretization.assemble_heat_system(disc44, identity_P(n),
                                                  np.zeros(n), dt)
    # subtract the lumped-mass diagonal: the rest must match (k0/cv0) * Laplacian
    lap = (mat - __import__("scipy.sparse", fromlist=["sparse"]).diags(
        disc44.ops.lumped_q1 / dt)).toarray()
    # reference bilinear Laplacian stiffness assembled independently
    gq = np.stack([disc44.q1.Gx, disc44.q1.Gy], axis=-1)
    ke = np.einsum("q,qla,qma->lm", disc44.herm.qw, gq, gq) * params.k0 / params.cv0
    ref = np.zeros((n, n))
    for e in range(disc44.n_elems):
        idx = disc44.mesh.conn[e]
        ref[np.ix_(idx, idx)] += ke
    assert np.abs(lap - ref).max() < 1e-13


def test_heat_anisotropic_matches_scalar_coefficient_path():
    # uniform P = diag(2,1) must equal a diag(k0/2, 2k0)/cv0 coefficient assembly
    mesh = build_mesh(1.0, 1.0, 4, 4)
    params = MaterialParams(k0=0.8, cv0=2.0)
    disc = Discretization(mesh, params)
    n = mesh.n_nodes
    P = np.broadcast_to(np.diag([2.0, 1.0]), (n, 2, 2)).copy()
    dt = 0.05
    mat = disc.assemble_heat_system(P, np.zeros(n), dt)
    import scipy.sparse as sp
    got = (mat - sp.diags(disc.ops.lumped_q1 / dt)).toarray()
    c1 = params.k0 / 2.0 / params.cv0
    c2 = 2.0 * params.k0 / params.cv0
    kxx = np.einsum("q,ql,qm->lm", disc.herm.qw, disc.q1.Gx, disc.q1.Gx)
    kyy = np.einsum("q,ql,qm->lm", disc.herm.qw, disc.q1.Gy, disc.q1.Gy)
    ke = c1 * kxx + c2 * kyy
    ref = np.zeros((n, n))
    for e in range(mesh.n_elems):
        idx = mesh.conn[e]
        ref[np.ix_(idx, idx)] += ke
    assert np.abs(got - ref).max() < 1e-13


def test_heat_matrix_spd(disc44):
    rng = np.random.default_rng(36)
    n = disc44.n_nodes
    P = identity_P(n) + 0.1 * rng.standard_normal((n, 2, 2))
    mat = disc44.assemble_heat_system(P, np.zeros(n), 0.01).toarray()
    assert np.abs(mat - mat.T).max() < 1e-13
    assert np.linalg.eigvalsh(mat).min() > 0.0


def test_heat_degenerate_plastic_raises(disc44):
    from thermoplast import DegeneratePlasticState
    n = disc44.n_nodes
    P = identity_P(n)
    P[:, 0, 0] = 1e-9
    with pytest.raises(DegeneratePlasticState):
        disc44.assemble_heat_system(P, np.zeros(n), 0.01)


# -- stress-energy gradient consistency (assembled vs finite differences) -------------

def test_force_is_gradient_of_elastic_energy():
    mesh = build_mesh(1.0, 1.0, 4, 4)
    params = MaterialParams(lam=3.0, mu=2.0, kappa1=0.02, delta=0.05)
    disc = Discretization(mesh, params)
    rng = np.random.default_rng(37)
    y = st.identity_deformation(disc) + 0.05 * rng.standard_normal(disc.n_ydof)
    P = identity_P(mesh.n_nodes) + 0.15 * rng.standard_normal((mesh.n_nodes, 2, 2))

    def elastic(yd):
        return ops.energy_densities(disc, yd, P)["elastic"]

    f = ops.internal_force(disc, y, P)
    h = 1e-6
    for dof in rng.choice(disc.n_ydof, 20, replace=False):
        yp, ym = y.copy(), y.copy()
        yp[dof] += h
        ym[dof] -= h
        fd = (elastic(yp) - elastic(ym)) / (2.0 * h)
        assert f[dof] == pytest.approx(fd, rel=2e-5, abs=1e-8)


def test_driving_residual_is_gradient_of_stored_energy():
    mesh = build_mesh(1.0, 1.0, 4, 4)
    params = MaterialParams(lam=3.0, mu=2.0, kappa1=0.02, delta=0.05)
    disc = Discretization(mesh, params)
    rng = np.random.default_rng(38)
    y = st.identity_deformation(disc) + 0.05 * rng.standard_normal(disc.n_ydof)
    P = identity_P(mesh.n_nodes) + 0.15 * rng.standard_normal((mesh.n_nodes, 2, 2))

    def stored(Pd):
        d = ops.energy_densities(disc, y, Pd)
        return d["elastic"] + d["hardening"] + d["plast_grad"]

    g = ops.plastic_driving_residual(disc, y, P)
    h = 1e-6
    interior = np.flatnonzero(~mesh.boundary_mask)
    for node in rng.choice(interior, 5, replace=False):
        for a in range(2):
            for b in range(2):
                pp, pm = P.copy(), P.copy()
                pp[node, a, b] += h
                pm[node, a, b] -= h
                fd = (stored(pp) - stored(pm)) / (2.0 * h)
                assert g[node, a, b] == pytest.approx(fd, rel=2e-5, abs=1e-8)


def test_driving_residual_matches_fourth_order_tensor_route():
    # the assembled local term uses -P^{-T}(grad y^T S)P^{-T}; the derivative
    # of the inverse provides an independent route to the same contraction
    from thermoplast import tensor
    mesh = build_mesh(1.0, 1.0, 2, 2)
    params = MaterialParams(lam=3.0, mu=2.0)
    disc = Discretization(mesh, params)
    rng = np.random.default_rng(39)
    grad = np.eye(2) + 0.2 * rng.standard_normal((5, 2, 2))
    p = np.eye(2) + 0.2 * rng.standard_normal((5, 2, 2))
    pinv = tensor.inv(p)
    f_el = np.matmul(grad, pinv)
    s = np.array([__import__("thermoplast.materials", fromlist=["m"]).elastic_energy_deriv(params, f)
                  for f in f_el])
    closed = -np.matmul(np.swapaxes(pinv, -1, -2),
                        np.matmul(np.matmul(np.swapaxes(grad, -1, -2), s),
                                  np.swapaxes(pinv, -1, -2)))
    via_dinv = tensor.contract24(np.matmul(np.swapaxes(grad, -1, -2), s),
                                 tensor.dinv(p))
    assert np.abs(closed - via_dinv).max() < 1e-12
