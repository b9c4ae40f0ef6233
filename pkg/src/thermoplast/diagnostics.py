"""Energy, entropy and balance-residual bookkeeping.

Each record stores the instantaneous energy components plus the work,
dissipation and boundary-heat increments accumulated since the previous
record, so consecutive records can be checked against the discrete energy
balance without access to the trajectory.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from . import materials, operators
from .operators import Discretization
from .state import SimState

THETA_FLOOR = 1e-12  # floor under the logarithm in the entropy density


@dataclass
class DiagnosticsRecord:
    t: float
    kinetic: float
    elastic: float
    hardening: float
    hyper: float
    plast_grad: float
    boundary_spring: float
    enthalpy_total: float
    entropy_total: float
    dissipation_step: float
    ext_power_step: float
    heat_flux_step: float
    mech_balance_residual: float
    total_balance_residual: float
    min_detP: float
    min_vartheta: float

    @property
    def mechanical_total(self) -> float:
        return (self.kinetic + self.elastic + self.hardening + self.hyper
                + self.plast_grad + self.boundary_spring)

    @property
    def total_energy(self) -> float:
        return self.mechanical_total + self.enthalpy_total


RECORD_FIELDS = [f.name for f in fields(DiagnosticsRecord)]


@dataclass
class StepAccounting:
    """Work/dissipation/heat-flux increments accumulated between records,
    plus the minimum det P seen over the covered steps."""

    dissipation: float = 0.0
    ext_power: float = 0.0
    heat_flux: float = 0.0
    min_detP: float = np.inf

    def reset(self):
        self.dissipation = self.ext_power = self.heat_flux = 0.0
        self.min_detP = np.inf


def mechanical_energy(disc: Discretization, state: SimState) -> dict:
    """All mechanical energy components by quadrature / matrix evaluation."""
    ops = disc.ops
    kin = 0.5 * float(state.v_dofs @ (ops.mass_y @ state.v_dofs))
    hyper = 0.5 * float(state.y_dofs @ (ops.biharm @ state.y_dofs))
    spring = 0.5 * float(state.y_dofs @ (ops.spring @ state.y_dofs))
    dens = operators.energy_densities(disc, state.y_dofs, state.P_dofs)
    return {
        "kinetic": kin,
        "elastic": dens["elastic"],
        "hardening": dens["hardening"],
        "hyper": hyper,
        "plast_grad": dens["plast_grad"],
        "boundary_spring": spring,
    }


def enthalpy_total(disc: Discretization, state: SimState) -> float:
    return float(disc.ops.lumped_q1 @ state.vartheta_dofs)


def entropy_total(disc: Discretization, state: SimState) -> float:
    theta = materials.enthalpy_inv(disc.params, state.vartheta_dofs)
    theta = np.maximum(theta, THETA_FLOOR)
    return float(disc.ops.lumped_q1 @ (disc.params.cv0 * np.log(theta)))


def build_record(disc: Discretization, state: SimState, acct: StepAccounting,
                 prev: DiagnosticsRecord | None) -> DiagnosticsRecord:
    comp = mechanical_energy(disc, state)
    enth = enthalpy_total(disc, state)
    mech = sum(comp.values())
    total = mech + enth
    if prev is None:
        mech_res = total_res = 0.0
    else:
        norm = max(abs(total), 1.0)
        mech_res = abs((mech - prev.mechanical_total)
                       + acct.dissipation - acct.ext_power) / norm
        total_res = abs((total - prev.total_energy)
                        - acct.ext_power + acct.heat_flux) / norm
    return DiagnosticsRecord(
        t=state.t,
        enthalpy_total=enth,
        entropy_total=entropy_total(disc, state),
        dissipation_step=acct.dissipation,
        ext_power_step=acct.ext_power,
        heat_flux_step=acct.heat_flux,
        mech_balance_residual=mech_res,
        total_balance_residual=total_res,
        min_detP=(acct.min_detP if np.isfinite(acct.min_detP)
                  else operators.min_det_plastic(disc, state.P_dofs)),
        min_vartheta=float(np.min(state.vartheta_dofs)),
        **comp,
    )


def total_balance_residual(rec_a: DiagnosticsRecord, rec_b: DiagnosticsRecord) -> float:
    """Normalised defect of the discrete total-energy balance between two
    consecutive records (the increments stored in rec_b cover the interval)."""
    norm = max(abs(rec_b.total_energy), 1.0)
    return abs((rec_b.total_energy - rec_a.total_energy)
               - rec_b.ext_power_step + rec_b.heat_flux_step) / norm


def cumulative_balance_residual(records: list) -> float:
    """Defect of the integrated total-energy balance over a whole run,
    normalised by the peak total energy (at least 1)."""
    if len(records) < 2:
        return 0.0
    work = sum(r.ext_power_step - r.heat_flux_step for r in records[1:])
    drift = (records[-1].total_energy - records[0].total_energy) - work
    norm = max(max(abs(r.total_energy) for r in records), 1.0)
    return abs(drift) / norm


def entropy_check(records: list, heat_transfer: float, step_tol: float = 1e-8):
    """For a thermally isolated run (K = 0) the total entropy must not
    decrease; returns (passed, worst per-step change)."""
    if heat_transfer != 0.0:
        raise ValueError("entropy monotonicity is asserted for isolated runs only")
    worst = np.inf
    for a, b in zip(records[:-1], records[1:]):
        worst = min(worst, b.entropy_total - a.entropy_total)
    return bool(worst >= -step_tol), float(worst)


# ----------------------------------------------------------------------
# space-time weak residual of the momentum balance
# ----------------------------------------------------------------------

def momentum_weak_residual(disc: Discretization, bdata, history: list,
                           w: np.ndarray, zeta: np.ndarray,
                           gravity=(0.0, 0.0), mode: str = "trapezoid",
                           newmark_beta: float = 0.25) -> float:
    """Weak momentum residual against the space-time test function w(x) zeta(t).

    ``history`` is the list of per-step states (including the initial one);
    ``zeta`` holds nodal time weights with zeta[-1] == 0.  Mode "trapezoid"
    integrates the continuous-time weak form with the trapezoid rule (O(dt)
    for the staggered scheme); mode "scheme" reuses the integrator's own time
    levels, for which the residual collapses to linear-solver tolerance.
    """
    if abs(zeta[-1]) > 0.0:
        raise ValueError("test function must vanish at the final time")
    n_steps = len(history) - 1
    ops = disc.ops
    a_lin = ops.biharm + ops.spring
    g_load = disc.gravity_load(gravity)

    def out_of_balance(st: SimState) -> np.ndarray:
        f_int = operators.internal_force(disc, st.y_dofs, st.P_dofs)
        load = g_load + disc.spring_load(bdata.y_flat, st.t)
        return f_int + a_lin @ st.y_dofs - load

    if mode == "trapezoid":
        res = 0.0
        imb = [float(w @ out_of_balance(st)) for st in history]
        mv = [float(w @ (ops.mass_y @ st.v_dofs)) for st in history]
        for n in range(n_steps):
            dt = history[n + 1].t - history[n].t
            res += 0.5 * dt * (imb[n] * zeta[n] + imb[n + 1] * zeta[n + 1])
            res -= (zeta[n + 1] - zeta[n]) * 0.5 * (mv[n] + mv[n + 1])
        res -= zeta[0] * mv[0]
        return res

    if mode == "scheme":
        # Reconstruct the exact force levels the integrator used: explicit
        # internal force at the Newmark predictor, loads at t_n, implicit
        # linear operator at t_{n+1}.
        def q_interval(st_n: SimState, st_lin: SimState) -> float:
            dt = st_lin.t - st_n.t
            y_eval = st_n.y_dofs
            if dt > 0.0:
                y_eval = (st_n.y_dofs + dt * st_n.v_dofs
                          + dt * dt * (0.5 - newmark_beta) * st_n.a_dofs)
            f_int = operators.internal_force(disc, y_eval, st_n.P_dofs)
            load = g_load + disc.spring_load(bdata.y_flat, st_n.t)
            return float(w @ (f_int - load + a_lin @ st_lin.y_dofs))

        q = [q_interval(history[n], history[n + 1]) for n in range(n_steps)]
        q_prev = [q_interval(history[0], history[0])] + q[:-1]
        res = 0.0
        for n in range(n_steps):
            dt = history[n + 1].t - history[n].t
            zmid = 0.5 * (zeta[n] + zeta[n + 1])
            dv = float(w @ (ops.mass_y @ (history[n + 1].v_dofs - history[n].v_dofs)))
            res += zmid * (dv + 0.5 * dt * (q_prev[n] + q[n]))
        return res

    raise ValueError(f"unknown mode {mode!r}")
