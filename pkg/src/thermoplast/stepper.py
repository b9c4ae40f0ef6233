"""Staggered semi-implicit time integration.

Each step runs three substeps: an implicit trapezoidal-Newmark momentum
update with the Hessian/spring operators implicit and the elastic first
Piola force explicit; a nodal plastic update obtained by inverting the
regularised flow rule in closed form against the lumped driving-stress
representative; and an implicit-Euler heat update with frozen coefficients.
Rejected steps (loss of det P positivity or negative enthalpy) are retried
with a halved time step.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import materials, operators, tensor
from .diagnostics import DiagnosticsRecord, StepAccounting, build_record
from .errors import (DegeneratePlasticState, InvalidConfig, LinearSolveFailure,
                     NegativeTemperature)
from .operators import DET_FLOOR, Discretization
from .state import BoundaryData, InitialConditions, SimState, check_state, init_state


@dataclass
class StepConfig:
    """Time-integration knobs.

    ``eps`` is the flow-rule regularisation width; it must stay positive.
    ``det_floor`` is the runtime positivity guard on det P.
    """

    dt: float = 1e-3
    t_end: float = 1.0
    eps: float = 1e-4
    newmark_beta: float = 0.25
    newmark_gamma: float = 0.5
    lin_tol: float = 1e-10
    max_iter: int = 2000
    det_floor: float = DET_FLOOR
    max_halvings: int = 10
    record_every: int = 1
    snapshot_every: int = 0

    def validate(self) -> None:
        if self.dt <= 0.0:
            raise InvalidConfig("dt must be positive")
        if self.t_end <= 0.0:
            raise InvalidConfig("t_end must be positive")
        if self.eps <= 0.0:
            raise InvalidConfig("eps must be positive")
        if not (0.0 < self.newmark_beta <= 0.5 and 0.0 < self.newmark_gamma <= 1.0):
            raise InvalidConfig("newmark parameters out of range")


@dataclass
class RunResult:
    state: SimState
    records: list
    snapshots: list = field(default_factory=list)
    history: list | None = None
    rate_history: list | None = None


class Stepper:
    """Bundles the factorised linear operators for one (mesh, material) pair."""

    def __init__(self, disc: Discretization, bdata: BoundaryData, cfg: StepConfig,
                 gravity=(0.0, 0.0)):
        cfg.validate()
        self.disc = disc
        self.bdata = bdata
        self.cfg = cfg
        self.gravity = np.asarray(gravity, dtype=float)
        ops = disc.ops
        self.a_lin = (ops.biharm + ops.spring).tocsr()
        # both deformation components share the scalar operators, so all
        # factorizations run at half the dof count with two right-hand sides
        self._a_lin_s = (ops.biharm_scalar + ops.spring_scalar).tocsr()
        self._mass_scale = 1.0 / np.sqrt(ops.mass_scalar.diagonal())
        self._mass_lu = spla.splu(self._equilibrated(ops.mass_scalar, self._mass_scale))
        self._newmark_lu = {}
        self._gravity_load = disc.gravity_load(self.gravity)

    @staticmethod
    def _equilibrated(mat, scale):
        # symmetric diagonal scaling: Hermite slope dofs carry tiny mass
        # entries, and an unscaled factorisation amplifies rhs round-off
        d = sp.diags(scale)
        return (d @ mat @ d).tocsc()

    # -- helpers ---------------------------------------------------------

    def _newmark_solver(self, dt: float):
        key = float(dt)
        if key not in self._newmark_lu:
            mat = (self.disc.ops.mass_scalar
                   + self.cfg.newmark_beta * dt * dt * self._a_lin_s).tocsr()
            scale = 1.0 / np.sqrt(mat.diagonal())
            lu = spla.splu(self._equilibrated(mat, scale))
            self._newmark_lu[key] = (lu, mat, scale)
        return self._newmark_lu[key]

    def _solve_components(self, lu, scale, rhs: np.ndarray) -> np.ndarray:
        """Solve the scalar operator against both components of an
        interleaved deformation vector."""
        n = self.disc.n_nodes
        r = rhs.reshape(n, 2, 4).transpose(1, 0, 2).reshape(2, 4 * n)
        sol = lu.solve((scale * r).T) * scale[:, None]
        return sol.T.reshape(2, n, 4).transpose(1, 0, 2).reshape(-1)

    def explicit_force(self, y_dofs: np.ndarray, P_dofs: np.ndarray,
                       t: float) -> np.ndarray:
        """Loads at time t minus the internal elastic force at (y, P)."""
        load = self._gravity_load + self.disc.spring_load(self.bdata.y_flat, t)
        return load - operators.internal_force(self.disc, y_dofs, P_dofs)

    def initial_acceleration(self, state: SimState) -> np.ndarray:
        rhs = (self.explicit_force(state.y_dofs, state.P_dofs, state.t)
               - self.a_lin @ state.y_dofs)
        return self._solve_components(self._mass_lu, self._mass_scale, rhs)

    # -- substeps --------------------------------------------------------

    def step_momentum(self, state: SimState, dt: float | None = None) -> SimState:
        """Newmark update of (y, v, a); returns a new state at t + dt.

        The nonlinear elastic force is evaluated at the Newmark predictor
        displacement (built from time-t_n data only) rather than at y_n: the
        fully lagged variant is weakly unstable for every time step, whereas
        the predictor form is conditionally stable up to the elastic CFL.
        """
        cfg = self.cfg
        dt = cfg.dt if dt is None else dt
        if state.step_index == 0:
            state.a_dofs = self.initial_acceleration(state)
        beta, gamma = cfg.newmark_beta, cfg.newmark_gamma
        y_pred = state.y_dofs + dt * state.v_dofs + dt * dt * (0.5 - beta) * state.a_dofs
        v_pred = state.v_dofs + dt * (1.0 - gamma) * state.a_dofs
        rhs = self.explicit_force(y_pred, state.P_dofs, state.t) - self.a_lin @ y_pred
        lu, mat, scale = self._newmark_solver(dt)
        a_new = self._solve_components(lu, scale, rhs)
        n = self.disc.n_nodes
        a2 = a_new.reshape(n, 2, 4).transpose(1, 0, 2).reshape(2, 4 * n)
        r2 = rhs.reshape(n, 2, 4).transpose(1, 0, 2).reshape(2, 4 * n)
        resid = np.linalg.norm(mat @ a2.T - r2.T)
        if not np.isfinite(resid) or resid > cfg.lin_tol * max(np.linalg.norm(rhs), 1.0):
            raise LinearSolveFailure(f"momentum solve residual {resid:.3e}")
        new = state.copy()
        new.t = state.t + dt
        new.step_index = state.step_index + 1
        new.y_dofs = y_pred + beta * dt * dt * a_new
        new.v_dofs = v_pred + gamma * dt * a_new
        new.a_dofs = a_new
        return new

    def step_plastic(self, state: SimState, dt: float | None = None):
        """Explicit nodal flow-rule update of P.

        Returns (P_new, rates, heat_rate, dissipation_rate); nodal rates are
        the plastification rates R solving the regularised flow rule against
        the lumped driving-stress representative; boundary nodes stay pinned
        at the identity.  Raises DegeneratePlasticState when the update would
        push det P to the floor.
        """
        disc, params, cfg = self.disc, self.disc.params, self.cfg
        dt = cfg.dt if dt is None else dt
        g_res = operators.plastic_driving_residual(disc, state.y_dofs, state.P_dofs)
        sigma_in = g_res / disc.ops.lumped_q1[:, None, None]
        target = -np.einsum("nij,nkj->nik", sigma_in, state.P_dofs)
        theta = materials.enthalpy_inv(params, state.vartheta_dofs)
        rates = materials.invert_flow(params, theta, target, cfg.eps)
        rates[disc.mesh.boundary_mask] = 0.0
        p_new = state.P_dofs + dt * np.matmul(rates, state.P_dofs)
        det_min = operators.min_det_plastic(disc, p_new)
        if det_min <= cfg.det_floor:
            raise DegeneratePlasticState("plastic update rejected: det P at floor")
        heat_rate = materials.heat_production(params, theta, rates, cfg.eps)
        s = tensor.frobenius(rates)
        sy = materials.yield_stress(params, theta)
        diss_rate = sy * np.minimum(s / cfg.eps, 1.0) * s + params.mu_v * s**2
        return p_new, rates, heat_rate, diss_rate, det_min

    def step_heat(self, state: SimState, heat_rate: np.ndarray,
                  dt: float | None = None) -> np.ndarray:
        """Implicit-Euler enthalpy update with coefficients frozen at the
        current plastic field; returns the new nodal enthalpy."""
        disc, cfg = self.disc, self.cfg
        dt = cfg.dt if dt is None else dt
        mat = disc.assemble_heat_system(state.P_dofs, state.vartheta_dofs, dt,
                                        det_floor=cfg.det_floor)
        lump = disc.ops.lumped_q1
        rhs = lump * (state.vartheta_dofs / dt + heat_rate)
        rhs += disc.robin_heat_load(self.bdata.theta_flat_at, state.t, cfg.eps)
        precond = sp.diags(1.0 / mat.diagonal())
        vt, info = spla.cg(mat, rhs, x0=state.vartheta_dofs, rtol=cfg.lin_tol,
                           atol=0.0, maxiter=cfg.max_iter, M=precond)
        if info != 0:
            raise LinearSolveFailure(f"heat solve did not converge (info={info})")
        vmax = float(np.max(vt, initial=0.0))
        if np.min(vt) < -1e-12 * max(vmax, 1.0):
            raise NegativeTemperature(
                f"enthalpy minimum {np.min(vt):.3e} beyond round-off")
        return np.maximum(vt, 0.0)

    # -- one full staggered step -----------------------------------------

    def advance(self, state: SimState, acct: StepAccounting, dt: float):
        """momentum -> plastic -> heat; returns (new state, plastic rates)
        and accumulates the step's work/dissipation/boundary-heat terms."""
        disc, cfg, bdata = self.disc, self.cfg, self.bdata
        new = self.step_momentum(state, dt)
        p_new, rates, heat_rate, diss_rate, det_min = self.step_plastic(new, dt)
        new.P_dofs = p_new
        new.vartheta_dofs = self.step_heat(new, heat_rate, dt)

        acct.min_detP = min(acct.min_detP, det_min)
        acct.dissipation += dt * float(disc.ops.lumped_q1 @ diss_rate)
        # boundary work via by-part accounting; bulk work against a dead load
        bulk = float(self._gravity_load @ (new.y_dofs - state.y_dofs))
        b_new = float(disc.spring_load(bdata.y_flat, new.t) @ new.y_dofs)
        b_old = float(disc.spring_load(bdata.y_flat, state.t) @ state.y_dofs)
        t_mid = 0.5 * (state.t + new.t)
        y_mid = 0.5 * (state.y_dofs + new.y_dofs)
        rate_term = float(disc.spring_load(bdata.y_flat_rate, t_mid) @ y_mid)
        acct.ext_power += bulk + (b_new - b_old) - dt * rate_term
        acct.heat_flux += dt * disc.robin_heat_outflux(
            new.vartheta_dofs, bdata.theta_flat_at, new.t, cfg.eps)
        return new, rates


def run(disc: Discretization, bdata: BoundaryData, cfg: StepConfig,
        ic: InitialConditions | None = None, state: SimState | None = None,
        gravity=(0.0, 0.0), record_sink=None, keep_history: bool = False,
        keep_rates: bool = False) -> RunResult:
    """March the coupled system to t_end.

    Steps rejected by the positivity guards are retried with halved dt (up to
    ``max_halvings``); diagnostics records are emitted every ``record_every``
    accepted steps and pushed to ``record_sink`` when given.  ``keep_history``
    retains a state copy per step (weak-residual diagnostics), ``keep_rates``
    the nodal plastification rates (convergence studies).
    """
    cfg.validate()
    stepper = Stepper(disc, bdata, cfg, gravity)
    if state is None:
        state = init_state(disc, ic or InitialConditions(), cfg.eps)
    acct = StepAccounting()
    records = [build_record(disc, state, acct, None)]
    if record_sink is not None:
        record_sink(records[0])
    snapshots = []
    history = [state.copy()] if keep_history else None
    rate_history = [] if keep_rates else None
    prev_record = records[0]

    while state.t < cfg.t_end - 1e-12 * cfg.t_end:
        dt = min(cfg.dt, cfg.t_end - state.t)
        accepted = rates = None
        for attempt in range(cfg.max_halvings + 1):
            try:
                accepted, rates = stepper.advance(state, acct, dt)
                break
            except (DegeneratePlasticState, NegativeTemperature):
                if attempt == cfg.max_halvings:
                    raise
                dt *= 0.5
        state = accepted
        check_state(disc, state, cfg.det_floor, check_det=False)
        if keep_history:
            history.append(state.copy())
        if keep_rates:
            rate_history.append(rates)
        if cfg.record_every and state.step_index % cfg.record_every == 0:
            rec = build_record(disc, state, acct, prev_record)
            records.append(rec)
            prev_record = rec
            acct.reset()
            if record_sink is not None:
                record_sink(rec)
        if cfg.snapshot_every and state.step_index % cfg.snapshot_every == 0:
            snapshots.append(state.copy())

    if cfg.record_every and records[-1].t < state.t:
        rec = build_record(disc, state, acct, prev_record)
        records.append(rec)
        if record_sink is not None:
            record_sink(rec)
    snapshots.append(state.copy())
    return RunResult(state=state, records=records, snapshots=snapshots,
                     history=history, rate_history=rate_history)
