"""Discretization: dof layout, quadrature evaluation, operator assembly.

The deformation uses 8 dofs per node (2 components x value, d/dx, d/dy,
d2/dxdy) stored flat as ``dof = node*8 + comp*4 + dtype``.  The plastic
tensor is nodal with shape (n_nodes, 2, 2) and the enthalpy nodal with shape
(n_nodes,).  All state-dependent assembly loops are vectorised over elements
and routed through :mod:`thermoplast.parallel` in fixed chunks so results do
not depend on the worker count.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import materials, parallel, tensor
from .basis import build_bilinear_tables, build_hermite_tables
from .errors import DegeneratePlasticState
from .materials import MaterialParams
from .mesh import Mesh

# Runtime positivity floor for det P (nodes and quadrature points).
DET_FLOOR = 1e-6


@dataclass
class ConstantOperators:
    """State-independent matrices: mass (with density), Hessian-energy
    operator (with kappa0), boundary spring (with N) and lumped Q1 masses.

    The *_scalar variants act on one deformation component (4 dofs/node);
    both components share them, which the time stepper exploits to halve the
    factorisation size.
    """

    mass_y: sp.csr_matrix
    biharm: sp.csr_matrix
    spring: sp.csr_matrix
    mass_scalar: sp.csr_matrix
    biharm_scalar: sp.csr_matrix
    spring_scalar: sp.csr_matrix
    lumped_q1: np.ndarray          # (n_nodes,) row-sum Q1 mass
    phi_integral: np.ndarray       # (n_ydof,) integral of each deformation shape fn


def _mm22(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """a @ b for stacked 2x2 matrices, via contiguous slice arithmetic
    (several times faster than np.matmul's batched small-matrix path)."""
    out = np.empty(np.broadcast_shapes(a.shape, b.shape))
    a00, a01, a10, a11 = a[..., 0, 0], a[..., 0, 1], a[..., 1, 0], a[..., 1, 1]
    b00, b01, b10, b11 = b[..., 0, 0], b[..., 0, 1], b[..., 1, 0], b[..., 1, 1]
    out[..., 0, 0] = a00 * b00 + a01 * b10
    out[..., 0, 1] = a00 * b01 + a01 * b11
    out[..., 1, 0] = a10 * b00 + a11 * b10
    out[..., 1, 1] = a10 * b01 + a11 * b11
    return out


def _mm22_nt(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """a @ b^T for stacked 2x2 matrices."""
    return _mm22(a, np.swapaxes(b, -1, -2))


def _mm22_tn(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """a^T @ b for stacked 2x2 matrices."""
    return _mm22(np.swapaxes(a, -1, -2), b)


class Discretization:
    """Mesh + basis tables + assembled constant operators for one run."""

    def __init__(self, mesh: Mesh, params: MaterialParams, n_gauss: int = 4):
        self.mesh = mesh
        self.params = params
        self.herm = build_hermite_tables(mesh.hx, mesh.hy, n_gauss)
        self.q1 = build_bilinear_tables(mesh.hx, mesh.hy, n_gauss)
        self.n_nodes = mesh.n_nodes
        self.n_elems = mesh.n_elems
        self.n_ydof = 8 * self.n_nodes

        conn = mesh.conn
        # deformation gather indices (n_elems, comp, 16)
        idx = np.empty((self.n_elems, 2, 16), dtype=np.int64)
        for c in range(2):
            for k in range(4):
                for t in range(4):
                    idx[:, c, 4 * k + t] = conn[:, k] * 8 + c * 4 + t
        self.ydof_idx = idx
        self.elem_origin = mesh.nodes[conn[:, 0]]
        # physical quadrature coordinates, (n_elems, nqp, 2)
        self.qp_coords = self.elem_origin[:, None, :] + self.herm.qp_xy[None, :, :]

        self._build_edge_data()
        self.ops = self._assemble_constant_ops()
        self._heat_pattern()

    # -- quadrature evaluation --------------------------------------------

    @staticmethod
    def _apply_table(tab: np.ndarray, ye: np.ndarray) -> np.ndarray:
        # tab (nq, 16), ye (ne, 2, 16) -> (ne, nq, 2) via one BLAS matmul
        ne = ye.shape[0]
        out = (tab @ ye.reshape(ne * 2, 16).T).T            # (ne*2, nq)
        return out.reshape(ne, 2, -1).transpose(0, 2, 1)

    def eval_deformation(self, y_dofs: np.ndarray, elems: slice | None = None,
                         hessians: bool = True):
        """Values, gradients and Hessians of the deformation at the
        quadrature points of the selected elements.

        Returns (y, grad, hess) with shapes (ne, nqp, 2), (ne, nqp, 2, 2) and
        (ne, nqp, 2, 2, 2); exact for bicubic fields.  ``hessians=False``
        skips the second-derivative tables and returns hess = None.
        """
        t = self.herm
        sel = self.ydof_idx if elems is None else self.ydof_idx[elems]
        ye = y_dofs[sel]                                     # (ne, 2, 16)
        y = self._apply_table(t.N, ye)
        grad = np.stack(
            [self._apply_table(t.Gx, ye), self._apply_table(t.Gy, ye)], axis=-1)
        if not hessians:
            return y, grad, None
        hxx = self._apply_table(t.Hxx, ye)
        hxy = self._apply_table(t.Hxy, ye)
        hyy = self._apply_table(t.Hyy, ye)
        hess = np.empty(hxx.shape + (2, 2))
        hess[..., 0, 0] = hxx
        hess[..., 0, 1] = hess[..., 1, 0] = hxy
        hess[..., 1, 1] = hyy
        return y, grad, hess

    def eval_plastic(self, P_dofs: np.ndarray, elems: slice | None = None,
                     gradients: bool = True):
        """Q1 interpolation of the plastic tensor: (P, grad P) at quadrature
        points, shapes (ne, nqp, 2, 2) and (ne, nqp, 2, 2, 2) (last = d/dx_k)."""
        conn = self.mesh.conn if elems is None else self.mesh.conn[elems]
        ne = conn.shape[0]
        pe = P_dofs[conn].reshape(ne, 4, 4)                  # (ne, l, comps)
        p = np.matmul(self.q1.N, pe).reshape(ne, -1, 2, 2)
        if not gradients:
            return p, None
        gp = np.stack(
            [np.matmul(self.q1.Gx, pe).reshape(ne, -1, 2, 2),
             np.matmul(self.q1.Gy, pe).reshape(ne, -1, 2, 2)],
            axis=-1,
        )
        return p, gp

    def eval_scalar(self, dofs: np.ndarray, elems: slice | None = None):
        """Q1 interpolation of a nodal scalar at the quadrature points."""
        conn = self.mesh.conn if elems is None else self.mesh.conn[elems]
        return dofs[conn] @ self.q1.N.T

    # -- constant operators -------------------------------------------------

    def _assemble_constant_ops(self) -> ConstantOperators:
        t, q1, mesh, params = self.herm, self.q1, self.mesh, self.params
        me = np.einsum("q,ql,qm->lm", t.qw, t.N, t.N)
        be = (
            np.einsum("q,ql,qm->lm", t.qw, t.Hxx, t.Hxx)
            + 2.0 * np.einsum("q,ql,qm->lm", t.qw, t.Hxy, t.Hxy)
            + np.einsum("q,ql,qm->lm", t.qw, t.Hyy, t.Hyy)
        )
        rows, cols, mvals, bvals = [], [], [], []
        for c in range(2):
            idx = self.ydof_idx[:, c, :]
            rows.append(np.repeat(idx, 16, axis=1).ravel())
            cols.append(np.tile(idx, (1, 16)).ravel())
            mvals.append(np.broadcast_to(params.rho * me, (self.n_elems, 16, 16)).ravel())
            bvals.append(np.broadcast_to(params.kappa0 * be, (self.n_elems, 16, 16)).ravel())
        rows = np.concatenate(rows)
        cols = np.concatenate(cols)
        shape = (self.n_ydof, self.n_ydof)
        mass = sp.coo_matrix((np.concatenate(mvals), (rows, cols)), shape=shape).tocsr()
        biharm = sp.coo_matrix((np.concatenate(bvals), (rows, cols)), shape=shape).tocsr()

        # one-component versions on the node*4+dtype layout
        conn = self.mesh.conn
        sidx = (conn[:, :, None] * 4 + np.arange(4)[None, None, :]).reshape(-1, 16)
        srows_s = np.repeat(sidx, 16, axis=1).ravel()
        scols_s = np.tile(sidx, (1, 16)).ravel()
        sshape = (4 * self.n_nodes, 4 * self.n_nodes)
        mass_s = sp.coo_matrix(
            (np.broadcast_to(params.rho * me, (self.n_elems, 16, 16)).ravel(),
             (srows_s, scols_s)), shape=sshape).tocsr()
        biharm_s = sp.coo_matrix(
            (np.broadcast_to(params.kappa0 * be, (self.n_elems, 16, 16)).ravel(),
             (srows_s, scols_s)), shape=sshape).tocsr()

        # boundary springs: 1-D Hermite trace mass on every boundary edge
        srows, scols, svals = [], [], []
        e_rows, e_cols, e_vals = [], [], []
        for side in self._edge_data:
            w, v = side["w"], side["vtab"]
            memb = params.boundary_spring * np.einsum("q,qa,qb->ab", w, v, v)
            idx = side["ydof"]                               # (nedge, 2, 4)
            for c in range(2):
                srows.append(np.repeat(idx[:, c, :], 4, axis=1).ravel())
                scols.append(np.tile(idx[:, c, :], (1, 4)).ravel())
                svals.append(np.broadcast_to(memb, (idx.shape[0], 4, 4)).ravel())
            sidx_e = side["sdof"]                            # (nedge, 4) scalar layout
            e_rows.append(np.repeat(sidx_e, 4, axis=1).ravel())
            e_cols.append(np.tile(sidx_e, (1, 4)).ravel())
            e_vals.append(np.broadcast_to(memb, (sidx_e.shape[0], 4, 4)).ravel())
        spring = sp.coo_matrix(
            (np.concatenate(svals), (np.concatenate(srows), np.concatenate(scols))),
            shape=shape,
        ).tocsr()
        spring_s = sp.coo_matrix(
            (np.concatenate(e_vals), (np.concatenate(e_rows), np.concatenate(e_cols))),
            shape=sshape,
        ).tocsr()

        lump_contrib = t.qw @ q1.N                           # (4,) per element
        lumped = np.bincount(
            mesh.conn.ravel(),
            weights=np.broadcast_to(lump_contrib, (self.n_elems, 4)).ravel(),
            minlength=self.n_nodes,
        )

        phi_e = t.qw @ t.N                                   # (16,)
        phi = np.zeros(self.n_ydof)
        for c in range(2):
            phi += np.bincount(
                self.ydof_idx[:, c, :].ravel(),
                weights=np.broadcast_to(phi_e, (self.n_elems, 16)).ravel(),
                minlength=self.n_ydof,
            )
        return ConstantOperators(mass, biharm, spring, mass_s, biharm_s, spring_s,
                                 lumped, phi)

    def _build_edge_data(self):
        mesh, t, q1 = self.mesh, self.herm, self.q1
        sides = []
        for side in mesh.edges:
            if side.axis == 0:
                qp, w, vtab = t.edge_x
                q1v = q1.edge_x[2]
                dtypes = (0, 1)
            else:
                qp, w, vtab = t.edge_y
                q1v = q1.edge_y[2]
                dtypes = (0, 2)
            nedge = len(side.n0)
            ydof = np.empty((nedge, 2, 4), dtype=np.int64)
            for c in range(2):
                ydof[:, c, 0] = side.n0 * 8 + c * 4 + dtypes[0]
                ydof[:, c, 1] = side.n0 * 8 + c * 4 + dtypes[1]
                ydof[:, c, 2] = side.n1 * 8 + c * 4 + dtypes[0]
                ydof[:, c, 3] = side.n1 * 8 + c * 4 + dtypes[1]
            sdof = np.empty((nedge, 4), dtype=np.int64)
            sdof[:, 0] = side.n0 * 4 + dtypes[0]
            sdof[:, 1] = side.n0 * 4 + dtypes[1]
            sdof[:, 2] = side.n1 * 4 + dtypes[0]
            sdof[:, 3] = side.n1 * 4 + dtypes[1]
            p0 = mesh.nodes[side.n0]
            pts = np.repeat(p0[:, None, :], len(qp), axis=1)
            pts[:, :, side.axis] += qp[None, :]
            sides.append({
                "axis": side.axis, "normal": side.normal, "w": w, "vtab": vtab,
                "q1v": q1v, "n0": side.n0, "n1": side.n1, "ydof": ydof,
                "sdof": sdof, "pts": pts,
            })
        self._edge_data = sides

    # -- boundary loads ------------------------------------------------------

    def spring_load(self, y_flat_fn, t: float) -> np.ndarray:
        """Assemble the elastic-support load: integral of N y_b(t) . phi over
        the boundary.  ``y_flat_fn(points, t)`` maps (..., 2) coords to
        support positions."""
        out = np.zeros(self.n_ydof)
        n_sp = self.params.boundary_spring
        if n_sp == 0.0:
            return out
        for side in self._edge_data:
            yb = y_flat_fn(side["pts"], t)                   # (nedge, nq, 2)
            contrib = n_sp * np.einsum("q,eqc,qa->eca", side["w"], yb, side["vtab"])
            np.add.at(out, side["ydof"].ravel(), contrib.ravel())
        return out

    def gravity_load(self, g) -> np.ndarray:
        """Dead bulk load: integral of g . phi (g a constant force density)."""
        out = np.zeros(self.n_ydof)
        view = out.reshape(self.n_nodes, 2, 4)
        phi = self.ops.phi_integral.reshape(self.n_nodes, 2, 4)
        view[:, 0, :] = g[0] * phi[:, 0, :]
        view[:, 1, :] = g[1] * phi[:, 1, :]
        return out

    # -- heat system -----------------------------------------------------------

    def _heat_pattern(self):
        conn = self.mesh.conn
        rows = [np.repeat(conn, 4, axis=1).ravel()]
        cols = [np.tile(conn, (1, 4)).ravel()]
        for side in self._edge_data:
            nn = np.stack([side["n0"], side["n1"]], axis=1)  # (nedge, 2)
            rows.append(np.repeat(nn, 2, axis=1).ravel())
            cols.append(np.tile(nn, (1, 2)).ravel())
        rows.append(np.arange(self.n_nodes))
        cols.append(np.arange(self.n_nodes))
        self._heat_rows = np.concatenate(rows)
        self._heat_cols = np.concatenate(cols)

    def assemble_heat_system(self, P_dofs, vartheta_dofs, dt: float,
                             det_floor: float = DET_FLOOR):
        """Implicit-Euler heat matrix LumpedMass/dt + Stiffness + RobinMass.

        The diffusion coefficient is the pulled-back conductivity divided by
        the heat capacity, evaluated at the quadrature points from the current
        plastic field.  Raises DegeneratePlasticState when det P drops to the
        floor at any quadrature point.
        """
        params = self.params
        n = self.n_nodes
        gq = np.stack([self.q1.Gx, self.q1.Gy], axis=-1)     # (nq, 4, 2)

        def chunk(sl):
            p, _ = self.eval_plastic(P_dofs, sl, gradients=False)
            jp = tensor.det(p)
            if np.any(jp <= det_floor):
                raise DegeneratePlasticState(
                    f"det P <= {det_floor:g} at a quadrature point")
            kq = materials.effective_conductivity(params, p) / params.cv0
            # ke[e,l,m] = sum_q w_q gradN[q,l,:] . K[e,q] . gradN[q,m,:]
            t1 = np.matmul(gq[None], kq * self.herm.qw[None, :, None, None])
            return np.matmul(t1, np.swapaxes(gq, -1, -2)[None]).sum(axis=1)

        ke = np.concatenate(parallel.map_chunks(chunk, self.n_elems), axis=0)
        vals = [ke.ravel()]
        kh = params.boundary_heat_transfer
        for side in self._edge_data:
            w, v = side["w"], side["q1v"]
            memb = (kh / params.cv0) * np.einsum("q,qa,qb->ab", w, v, v)
            vals.append(np.broadcast_to(memb, (len(side["n0"]), 2, 2)).ravel())
        vals.append(self.ops.lumped_q1 / dt)
        mat = sp.coo_matrix(
            (np.concatenate(vals), (self._heat_rows, self._heat_cols)), shape=(n, n)
        ).tocsr()
        return mat

    def robin_heat_load(self, theta_flat_fn, t: float, eps: float) -> np.ndarray:
        """Boundary heat load K theta_b/(1 + eps theta_b) integrated against
        the Q1 traces."""
        out = np.zeros(self.n_nodes)
        kh = self.params.boundary_heat_transfer
        if kh == 0.0:
            return out
        for side in self._edge_data:
            tb = np.asarray(theta_flat_fn(side["pts"], t), dtype=float)
            tb_eps = tb / (1.0 + eps * tb)
            contrib = kh * np.einsum("q,eq,qa->ea", side["w"], tb_eps, side["q1v"])
            nn = np.stack([side["n0"], side["n1"]], axis=1)
            np.add.at(out, nn.ravel(), contrib.ravel())
        return out

    def robin_heat_outflux(self, vartheta_dofs, theta_flat_fn, t: float, eps: float) -> float:
        """Integral of K (theta - theta_b_eps) over the boundary for the
        current enthalpy field (positive = heat leaving the body)."""
        kh = self.params.boundary_heat_transfer
        if kh == 0.0:
            return 0.0
        total = 0.0
        for side in self._edge_data:
            nn = np.stack([side["n0"], side["n1"]], axis=1)
            th_nodes = materials.enthalpy_inv(self.params, vartheta_dofs[nn])
            th_qp = np.einsum("qa,ea->eq", side["q1v"], th_nodes)
            tb = np.asarray(theta_flat_fn(side["pts"], t), dtype=float)
            tb_eps = tb / (1.0 + eps * tb)
            total += kh * float(np.einsum("q,eq->", side["w"], th_qp - tb_eps))
        return total


# ----------------------------------------------------------------------
# state-dependent assembly (deformation force and plastic driving residual)
# ----------------------------------------------------------------------

def _svk_stress(params: MaterialParams, f_el: np.ndarray) -> np.ndarray:
    """Derivative of the quadratic-strain elastic law on stacked 2x2 input."""
    e = _mm22_tn(f_el, f_el)
    e[..., 0, 0] -= 1.0
    e[..., 1, 1] -= 1.0
    e *= 0.5
    tr = e[..., 0, 0] + e[..., 1, 1]
    s2 = 2.0 * params.mu * e
    s2[..., 0, 0] += params.lam * tr
    s2[..., 1, 1] += params.lam * tr
    return _mm22(f_el, s2)


def internal_force(disc: Discretization, y_dofs, P_dofs) -> np.ndarray:
    """Variation of the elastic energy wrt the deformation dofs.

    Equals the assembled first Piola term S(F P^{-1}) P^{-T} : grad(phi); the
    Hessian (kappa0) and spring terms are linear and kept in matrices.
    """
    t = disc.herm
    params = disc.params
    out = np.zeros(disc.n_ydof)
    gxw = t.Gx * t.qw[:, None]                               # (nq, 16)
    gyw = t.Gy * t.qw[:, None]

    def chunk(sl):
        _, grad, _ = disc.eval_deformation(y_dofs, sl, hessians=False)
        p, _ = disc.eval_plastic(P_dofs, sl, gradients=False)
        pinv = tensor.inv(p)
        f_el = _mm22(grad, pinv)
        s = _svk_stress(params, f_el)
        piola = _mm22_nt(s, pinv)                            # S P^{-T}
        # f[e,c,l] = sum_q w_q (piola[e,q,c,0] Gx[q,l] + piola[e,q,c,1] Gy[q,l])
        fx = np.matmul(piola[..., 0].transpose(0, 2, 1), gxw)
        fy = np.matmul(piola[..., 1].transpose(0, 2, 1), gyw)
        return np.bincount(
            disc.ydof_idx[sl].ravel(), weights=(fx + fy).ravel(), minlength=disc.n_ydof
        )

    for part in parallel.map_chunks(chunk, disc.n_elems):
        out += part
    return out


def _gradient_flux(params, gp, kappa1=None, q=None):
    """kappa1 |grad P|^(q-2) grad P at the quadrature points."""
    kappa1 = params.kappa1 if kappa1 is None else kappa1
    q = params.q if q is None else q
    norm2 = np.sum(gp * gp, axis=(-3, -2, -1))
    if q == 2.0:
        coeff = np.full_like(norm2, kappa1)
    else:
        coeff = kappa1 * norm2 ** ((q - 2.0) / 2.0)
    return coeff[..., None, None, None] * gp


def _scatter_plastic(disc, sl, contrib):
    """Accumulate per-element (ne, 4 nodes, 2, 2) contributions nodally."""
    conn = disc.mesh.conn[sl]
    idx = (conn[:, :, None] * 4 + np.arange(4)[None, None, :]).ravel()
    return np.bincount(idx, weights=contrib.reshape(conn.shape[0], 4, 4).ravel(),
                       minlength=disc.n_nodes * 4)


def _flux_contrib(disc, flux):
    """contrib[e,l,ab] = sum_{q,k} w_q flux[e,q,ab,k] gradN[q,l,k]."""
    ne, nq = flux.shape[:2]
    # pack (ab, k) into one axis and contract with the packed gradient table
    fw = (flux * disc.herm.qw[None, :, None, None, None]).transpose(0, 2, 3, 1, 4)
    fw = fw.reshape(ne, 4, nq * 2)
    gt = np.stack([disc.q1.Gx, disc.q1.Gy], axis=-1).transpose(1, 0, 2)  # (l, q, k)
    gt = gt.reshape(4, nq * 2)
    return np.matmul(fw, gt.T).transpose(0, 2, 1)            # (ne, l, ab)


def plastic_gradient_residual(disc: Discretization, P_dofs,
                              kappa1: float | None = None,
                              q: float | None = None) -> np.ndarray:
    """Weak residual of the plastic-gradient term.

    G[i] = integral of kappa1 |grad P|^(q-2) grad P : grad(phi_i); zero for
    constant fields, monotone in P.  Returns shape (n_nodes, 2, 2).
    """
    out = np.zeros(disc.n_nodes * 4)

    def chunk(sl):
        _, gp = disc.eval_plastic(P_dofs, sl)
        flux = _gradient_flux(disc.params, gp, kappa1, q)
        return _scatter_plastic(disc, sl, _flux_contrib(disc, flux))

    for part in parallel.map_chunks(chunk, disc.n_elems):
        out += part
    return out.reshape(disc.n_nodes, 2, 2)


def plastic_driving_residual(disc: Discretization, y_dofs, P_dofs) -> np.ndarray:
    """Assembled variation of the stored energy wrt the plastic dofs.

    Local part: -P^{-T} (grad y)^T S P^{-T} + hardening derivative, tested
    against the Q1 values; gradient part as in plastic_gradient_residual.
    Returns shape (n_nodes, 2, 2); dividing by the lumped mass gives the
    nodal driving-stress representative.
    """
    params = disc.params
    out = np.zeros(disc.n_nodes * 4)
    nw = disc.q1.N * disc.herm.qw[:, None]                   # (nq, 4)

    def chunk(sl):
        _, grad, _ = disc.eval_deformation(y_dofs, sl, hessians=False)
        p, gp = disc.eval_plastic(P_dofs, sl)
        pinv = tensor.inv(p)
        f_el = _mm22(grad, pinv)
        s = _svk_stress(params, f_el)
        fts = _mm22_tn(grad, s)                              # (grad y)^T S
        w_loc = -_mm22_nt(_mm22_tn(pinv, fts), pinv)         # -P^{-T} fts P^{-T}
        w_loc += materials.hardening_energy_deriv(params, p)
        ne, nq = w_loc.shape[:2]
        # local term: contrib[e,l,ab] = sum_q w_q N[q,l] w_loc[e,q,ab]
        contrib = np.matmul(nw.T, w_loc.reshape(ne, nq, 4))
        contrib += _flux_contrib(disc, _gradient_flux(params, gp))
        return _scatter_plastic(disc, sl, contrib)

    for part in parallel.map_chunks(chunk, disc.n_elems):
        out += part
    return out.reshape(disc.n_nodes, 2, 2)


def energy_densities(disc: Discretization, y_dofs, P_dofs) -> dict:
    """Quadrature totals of the nonlinear stored-energy pieces."""
    params = disc.params
    qw = disc.herm.qw
    elastic = hardening = plast_grad = 0.0
    for sl in parallel.chunk_slices(disc.n_elems):
        _, grad, _ = disc.eval_deformation(y_dofs, sl, hessians=False)
        p, gp = disc.eval_plastic(P_dofs, sl)
        pinv = tensor.inv(p)
        f_el = _mm22(grad, pinv)
        elastic += float(np.sum(materials.elastic_energy(params, f_el) @ qw))
        hardening += float(np.sum(materials.hardening_energy(params, p) @ qw))
        norm2 = np.sum(gp * gp, axis=(-3, -2, -1))
        plast_grad += float(
            np.sum(((params.kappa1 / params.q) * norm2 ** (params.q / 2.0)) @ qw))
    return {"elastic": elastic, "hardening": hardening, "plast_grad": plast_grad}


def min_det_plastic(disc: Discretization, P_dofs) -> float:
    """Minimum of det P over nodes and quadrature points."""
    m = float(np.min(tensor.det(P_dofs)))
    for sl in parallel.chunk_slices(disc.n_elems):
        p, _ = disc.eval_plastic(P_dofs, sl, gradients=False)
        m = min(m, float(np.min(tensor.det(p))))
    return m
