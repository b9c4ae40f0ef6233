"""Simulation state, boundary data, initial conditions, field sampling."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import materials, operators, tensor
from .errors import InvalidConfig, NonfiniteState, OutOfDomain
from .operators import DET_FLOOR, Discretization


@dataclass
class SimState:
    """Degree-of-freedom vectors on the mesh at one time level.

    ``a_dofs`` carries the Newmark acceleration between steps; it is part of
    the marching state but not of the externally reported fields.
    """

    t: float
    step_index: int
    y_dofs: np.ndarray          # (8 * n_nodes,)
    v_dofs: np.ndarray
    a_dofs: np.ndarray
    P_dofs: np.ndarray          # (n_nodes, 2, 2)
    vartheta_dofs: np.ndarray   # (n_nodes,)

    def copy(self) -> "SimState":
        return SimState(self.t, self.step_index, self.y_dofs.copy(),
                        self.v_dofs.copy(), self.a_dofs.copy(),
                        self.P_dofs.copy(), self.vartheta_dofs.copy())


@dataclass(frozen=True)
class BoundaryData:
    """Closed-form boundary support motion and external temperature.

    ``kind`` selects the support expression:
      * ``identity``: y_b(x, t) = x (support at rest on the reference frame)
      * ``shear``: y_b = x + e1 * rate * min(t, t_hold) * s(x2) with the
        profile s = sign(x2 - center) (width == 0) or tanh((x2-center)/width);
        t_hold <= 0 means the ramp never stops.
    """

    kind: str = "identity"
    rate: float = 0.0
    t_hold: float = 0.0
    center: float = 0.5
    width: float = 0.0
    theta_flat: float = 0.0

    def _profile(self, x2: np.ndarray) -> np.ndarray:
        if self.width == 0.0:
            return np.sign(x2 - self.center)
        return np.tanh((x2 - self.center) / self.width)

    def _gamma(self, t: float) -> float:
        if self.kind == "identity":
            return 0.0
        tt = min(t, self.t_hold) if self.t_hold > 0.0 else t
        return self.rate * tt

    def _gamma_rate(self, t: float) -> float:
        if self.kind == "identity":
            return 0.0
        if self.t_hold > 0.0 and t >= self.t_hold:
            return 0.0
        return self.rate

    def y_flat(self, pts: np.ndarray, t: float) -> np.ndarray:
        """Support position at reference coordinates `pts` (..., 2)."""
        out = np.array(pts, dtype=float, copy=True)
        g = self._gamma(t)
        if g != 0.0:
            out[..., 0] += g * self._profile(pts[..., 1])
        return out

    def y_flat_rate(self, pts: np.ndarray, t: float) -> np.ndarray:
        """Time derivative of the support position."""
        out = np.zeros_like(np.asarray(pts, dtype=float))
        gr = self._gamma_rate(t)
        if gr != 0.0:
            out[..., 0] = gr * self._profile(pts[..., 1])
        return out

    def theta_flat_at(self, pts: np.ndarray, t: float) -> np.ndarray:
        return np.full(np.asarray(pts).shape[:-1], self.theta_flat, dtype=float)


@dataclass(frozen=True)
class InitialConditions:
    """Initial data; the deformation starts at the identity map and the
    plastic tensor at the identity unless stated otherwise."""

    theta0: float = 0.0
    v0: tuple = (0.0, 0.0)
    theta0_field: np.ndarray | None = field(default=None, compare=False)

    def validate(self) -> None:
        if self.theta0 < 0.0:
            raise InvalidConfig("theta0 must be nonnegative")
        if self.theta0_field is not None and np.any(self.theta0_field < 0.0):
            raise InvalidConfig("theta0 field must be nonnegative")


def identity_deformation(disc: Discretization) -> np.ndarray:
    """Dof vector interpolating y(x) = x (exact: affine fields are bicubic)."""
    y = np.zeros((disc.n_nodes, 2, 4))
    y[:, 0, 0] = disc.mesh.nodes[:, 0]
    y[:, 1, 0] = disc.mesh.nodes[:, 1]
    y[:, 0, 1] = 1.0   # d y1 / dx
    y[:, 1, 2] = 1.0   # d y2 / dy
    return y.ravel()


def constant_velocity(disc: Discretization, v) -> np.ndarray:
    out = np.zeros((disc.n_nodes, 2, 4))
    out[:, 0, 0] = v[0]
    out[:, 1, 0] = v[1]
    return out.ravel()


def init_state(disc: Discretization, ic: InitialConditions, eps: float) -> SimState:
    """Build the starting state; the enthalpy uses the regularised initial
    temperature theta0 / (1 + eps * theta0)."""
    ic.validate()
    n = disc.n_nodes
    theta0 = (np.full(n, ic.theta0, dtype=float)
              if ic.theta0_field is None else np.asarray(ic.theta0_field, dtype=float))
    theta0_eps = theta0 / (1.0 + eps * theta0)
    vartheta = materials.enthalpy(disc.params, theta0_eps)
    p = np.broadcast_to(np.eye(2), (n, 2, 2)).copy()
    return SimState(
        t=0.0, step_index=0,
        y_dofs=identity_deformation(disc),
        v_dofs=constant_velocity(disc, ic.v0),
        a_dofs=np.zeros(8 * n),
        P_dofs=p,
        vartheta_dofs=vartheta,
    )


def check_state(disc: Discretization, state: SimState, det_floor: float = DET_FLOOR,
                check_det: bool = True) -> None:
    """Raise if the state violates its runtime invariants.

    The det P sweep can be skipped when the caller has already verified the
    update (the plastic step guards every accepted state).
    """
    for name, arr in (("y", state.y_dofs), ("v", state.v_dofs),
                      ("P", state.P_dofs), ("vartheta", state.vartheta_dofs)):
        if not np.all(np.isfinite(arr)):
            raise NonfiniteState(f"nonfinite entries in {name} at t={state.t:g}")
    if np.min(state.vartheta_dofs) < 0.0:
        raise NonfiniteState("negative enthalpy entries survived a step")
    if check_det and operators.min_det_plastic(disc, state.P_dofs) <= det_floor:
        raise NonfiniteState("det P at or below the runtime floor")


_FIELDS = {"y1": 0, "y2": 1, "v1": 0, "v2": 1,
           "p11": (0, 0), "p12": (0, 1), "p21": (1, 0), "p22": (1, 1)}


def sample_line(disc: Discretization, state: SimState, field_id: str,
                axis: int, coordinate: float):
    """Nodal values of a field along a grid line.

    ``axis`` = 0 samples along x at height x2 = coordinate; ``axis`` = 1
    samples along y at x1 = coordinate.  Off-grid coordinates are linearly
    blended between the two adjacent node lines.
    """
    mesh = disc.mesh
    extent = mesh.Ly if axis == 0 else mesh.Lx
    if not (0.0 <= coordinate <= extent):
        raise OutOfDomain(f"coordinate {coordinate:g} outside [0, {extent:g}]")
    h = mesh.hy if axis == 0 else mesh.hx
    nmax = mesh.ny if axis == 0 else mesh.nx
    k = min(int(np.floor(coordinate / h)), nmax - 1)
    frac = coordinate / h - k

    if field_id in ("vartheta", "theta"):
        grid = state.vartheta_dofs.reshape(mesh.ny + 1, mesh.nx + 1)
        if field_id == "theta":
            grid = materials.enthalpy_inv(disc.params, grid)
    elif field_id in ("y1", "y2", "v1", "v2"):
        src = state.y_dofs if field_id.startswith("y") else state.v_dofs
        comp = _FIELDS[field_id]
        grid = src.reshape(mesh.ny + 1, mesh.nx + 1, 2, 4)[:, :, comp, 0]
    elif field_id in ("p11", "p12", "p21", "p22"):
        a, b = _FIELDS[field_id]
        grid = state.P_dofs.reshape(mesh.ny + 1, mesh.nx + 1, 2, 2)[:, :, a, b]
    else:
        raise OutOfDomain(f"unknown field id {field_id!r}")

    if axis == 0:
        line = (1.0 - frac) * grid[k, :] + frac * grid[k + 1, :]
        coords = np.linspace(0.0, mesh.Lx, mesh.nx + 1)
    else:
        line = (1.0 - frac) * grid[:, k] + frac * grid[:, k + 1]
        coords = np.linspace(0.0, mesh.Ly, mesh.ny + 1)
    return coords, line
