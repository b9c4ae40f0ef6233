"""Scripted experiments: shear-band scaling, regularisation and mesh studies.

Each driver consumes a parsed RunConfig (the [bench] section carries the
sweep lists), runs deterministic scenarios and returns a result object with
the fitted exponents or Cauchy-difference tables plus the bookkeeping needed
by the acceptance suite.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import diagnostics, materials
from .config import RunConfig
from .errors import BenchFailure
from .mesh import build_mesh
from .operators import Discretization
from .state import sample_line
from .stepper import StepConfig, run

BAND_THRESHOLD = 0.05   # fraction of the peak |dP12/dx2| counted as in-band


# ----------------------------------------------------------------------
# shear band width scaling
# ----------------------------------------------------------------------

@dataclass
class ShearBandResult:
    kappa1_values: list
    t_samples: list
    widths: np.ndarray            # (n_kappa, n_times)
    alpha_t_per_kappa: list
    alpha_t: float
    alpha_kappa: float
    hyper_fraction: float         # hyperstress / plastic-gradient energy at end
    records: list


def band_width(disc, state, threshold: float = BAND_THRESHOLD) -> float:
    """Half-width of the region where |dP12/dx2| exceeds `threshold` times its
    peak, measured along the vertical centerline."""
    coords, prof = sample_line(disc, state, "p12", axis=1,
                               coordinate=0.5 * disc.mesh.Lx)
    grad = np.abs(np.gradient(prof, coords))
    gmax = float(grad.max())
    if gmax <= 0.0:
        raise BenchFailure("no plastic band formed")
    mask = grad > threshold * gmax
    idx = np.flatnonzero(mask)
    if idx.size < 5:
        raise BenchFailure(f"band unresolved: {idx.size} nodes above threshold")
    return 0.5 * float(coords[idx[-1]] - coords[idx[0]])


def _loglog_slope(x, y) -> float:
    return float(np.polyfit(np.log(np.asarray(x, float)),
                            np.log(np.asarray(y, float)), 1)[0])


def shear_band(cfg: RunConfig, kappa1_values=None, t_samples=None,
               threshold: float | None = None) -> ShearBandResult:
    """Measure the slip-band width against time and the gradient modulus.

    The benchmark pins q = 2 and a tiny hyperstress modulus regardless of the
    base material (the band profile analysis lives in the quadratic-gradient
    setting; kappa0 must stay positive for the momentum operator).
    """
    bench = cfg.bench
    kappa1_values = list(kappa1_values or bench.get("kappa1_values")
                         or [2e-5, 4e-5, 1e-4, 2e-4])
    t_samples = list(t_samples or bench.get("t_samples") or [0.3, 0.45, 0.6, 0.8, 1.0])
    threshold = threshold if threshold is not None else bench.get("band_threshold",
                                                                  BAND_THRESHOLD)
    if len(t_samples) < 5 or len(kappa1_values) < 4:
        raise BenchFailure("need >= 5 time samples and >= 4 kappa1 values")

    mesh = build_mesh(cfg.Lx, cfg.Ly, cfg.nx, cfg.ny)
    widths = np.zeros((len(kappa1_values), len(t_samples)))
    all_records = []
    hyper_fraction = 0.0
    for ik, k1 in enumerate(kappa1_values):
        mat = replace(cfg.material, kappa1=float(k1), q=2.0, kappa0=1e-6)
        disc = Discretization(mesh, mat)
        state = None
        records = []
        for it, t_k in enumerate(t_samples):
            seg = replace(cfg.step, t_end=float(t_k))
            result = run(disc, cfg.boundary, seg, ic=cfg.initial, state=state,
                         gravity=cfg.gravity)
            state = result.state
            records.extend(result.records if not records else result.records[1:])
            widths[ik, it] = band_width(disc, state, threshold)
        all_records.append(records)
        final = records[-1]
        if final.plast_grad > 0.0:
            hyper_fraction = max(hyper_fraction, final.hyper / final.plast_grad)

    alpha_t_per_kappa = [_loglog_slope(t_samples, widths[ik]) for ik in
                         range(len(kappa1_values))]
    alpha_t = float(np.mean(alpha_t_per_kappa))
    alpha_kappa = _loglog_slope(kappa1_values, widths[:, -1])
    return ShearBandResult(kappa1_values, t_samples, widths, alpha_t_per_kappa,
                           alpha_t, alpha_kappa, hyper_fraction, all_records)


# ----------------------------------------------------------------------
# Cauchy-sequence studies in the regularisation parameter and the mesh
# ----------------------------------------------------------------------

@dataclass
class ConvergenceStudy:
    labels: list                 # parameter value per level
    diffs: dict                  # field -> list of consecutive L2 differences
    ratios: dict                 # field -> list of consecutive ratios
    mech_energy_max: list        # per level
    dissipation_total: list      # per level
    records: list                # per level


_STATE_FIELDS = ("y", "P", "vartheta", "rate")


def _nodal_fields(disc, result):
    """Nodal value arrays used for inter-run L2 differences."""
    st = result.state
    y_val = st.y_dofs.reshape(disc.n_nodes, 2, 4)[:, :, 0]
    rates = np.array(result.rate_history)        # (n_steps, n_nodes, 2, 2)
    return {"y": y_val, "P": st.P_dofs, "vartheta": st.vartheta_dofs,
            "rate": rates}


def _l2_diff(weights, a, b, dt: float | None = None) -> float:
    """Lumped L2 (or space-time L2 when dt is given) difference norm."""
    d = a - b
    if d.ndim == 1:
        sq = d * d
    elif d.ndim == 2:
        sq = np.sum(d * d, axis=-1)
    else:
        sq = np.sum(d * d, axis=(-2, -1))
    if dt is None:
        return float(np.sqrt(sq @ weights))
    return float(np.sqrt(dt * np.sum(sq @ weights)))


def _study_tables(labels, per_level, weights_per_level, node_maps, dt):
    diffs = {f: [] for f in _STATE_FIELDS}
    for k in range(len(per_level) - 1):
        wa = weights_per_level[k]
        fa, fb = per_level[k], per_level[k + 1]
        sel = node_maps[k]
        for f in _STATE_FIELDS:
            a, b = fa[f], fb[f]
            if f == "rate":
                if a.shape[0] != b.shape[0]:
                    raise BenchFailure("rate histories misaligned between levels")
                a2 = a[:, sel] if sel is not None else a
                b2 = b[:, sel] if sel is not None else b
                diffs[f].append(_l2_diff(wa, a2, b2, dt=dt))
            else:
                a2 = a[sel] if sel is not None else a
                b2 = b[sel] if sel is not None else b
                diffs[f].append(_l2_diff(wa, a2, b2))
    ratios = {f: [d2 / d1 if d1 > 0 else np.inf
                  for d1, d2 in zip(v[:-1], v[1:])] for f, v in diffs.items()}
    return diffs, ratios


def yosida_limit(cfg: RunConfig, eps0: float | None = None,
                 n_levels: int | None = None) -> ConvergenceStudy:
    """Re-run a fixed scenario while halving the flow-rule regularisation and
    tabulate consecutive L2 state differences (a Cauchy proxy for the
    vanishing-regularisation limit)."""
    bench = cfg.bench
    eps0 = eps0 if eps0 is not None else bench.get("eps0", cfg.step.eps)
    n_levels = n_levels if n_levels is not None else int(bench.get("eps_levels", 4))
    if n_levels < 3:
        raise BenchFailure("need at least 3 regularisation levels")
    t_end = bench.get("t_end", cfg.step.t_end)

    mesh = build_mesh(cfg.Lx, cfg.Ly, cfg.nx, cfg.ny)
    disc = Discretization(mesh, cfg.material)
    labels, fields, energies, dissip, recs = [], [], [], [], []
    for k in range(n_levels):
        eps_k = eps0 / 2.0**k
        step = replace(cfg.step, eps=eps_k, t_end=t_end)
        result = run(disc, cfg.boundary, step, ic=cfg.initial,
                     gravity=cfg.gravity, keep_rates=True)
        labels.append(eps_k)
        fields.append(_nodal_fields(disc, result))
        energies.append(max(r.mechanical_total for r in result.records))
        dissip.append(sum(r.dissipation_step for r in result.records))
        recs.append(result.records)
    weights = [disc.ops.lumped_q1] * (n_levels - 1)
    maps = [None] * (n_levels - 1)
    diffs, ratios = _study_tables(labels, fields, weights, maps, cfg.step.dt)
    return ConvergenceStudy(labels, diffs, ratios, energies, dissip, recs)


def refinement_study(cfg: RunConfig, nx_values=None) -> ConvergenceStudy:
    """Re-run a fixed scenario on nested meshes (nx doubling) and tabulate
    consecutive L2 differences sampled at the shared coarse nodes."""
    nx_values = list(nx_values or cfg.bench.get("nx_values") or [8, 16, 32])
    if len(nx_values) < 3:
        raise BenchFailure("need at least 3 mesh levels")
    for a, b in zip(nx_values[:-1], nx_values[1:]):
        if b != 2 * a:
            raise BenchFailure("mesh levels must double: got "
                               f"{a} -> {b}")
    t_end = cfg.bench.get("t_end", cfg.step.t_end)

    discs, fields, energies, dissip, recs = [], [], [], [], []
    for nx in nx_values:
        mesh = build_mesh(cfg.Lx, cfg.Ly, nx, nx)
        disc = Discretization(mesh, cfg.material)
        step = replace(cfg.step, t_end=t_end)
        result = run(disc, cfg.boundary, step, ic=cfg.initial,
                     gravity=cfg.gravity, keep_rates=True)
        discs.append(disc)
        fields.append(_nodal_fields(disc, result))
        energies.append(max(r.mechanical_total for r in result.records))
        dissip.append(sum(r.dissipation_step for r in result.records))
        recs.append(result.records)

    weights, maps = [], []
    for k in range(len(nx_values) - 1):
        nxc, nxf = nx_values[k], nx_values[k + 1]
        jj, ii = np.meshgrid(np.arange(nxc + 1), np.arange(nxc + 1), indexing="ij")
        fine_ids = (2 * jj) * (nxf + 1) + 2 * ii
        weights.append(discs[k].ops.lumped_q1)
        maps.append(fine_ids.ravel())

    # restrict each fine level to the coarse nodes of the preceding level
    diffs = {f: [] for f in _STATE_FIELDS}
    for k in range(len(nx_values) - 1):
        sel = maps[k]
        for f in _STATE_FIELDS:
            a, b = fields[k][f], fields[k + 1][f]
            if f == "rate":
                if a.shape[0] != b.shape[0]:
                    raise BenchFailure("rate histories misaligned between levels")
                diffs[f].append(_l2_diff(weights[k], a, b[:, sel], dt=cfg.step.dt))
            else:
                diffs[f].append(_l2_diff(weights[k], a, b[sel]))
    ratios = {f: [d2 / d1 if d1 > 0 else np.inf
                  for d1, d2 in zip(v[:-1], v[1:])] for f, v in diffs.items()}
    return ConvergenceStudy(nx_values, diffs, ratios, energies, dissip, recs)


def study_invariants_ok(records: list, det_floor: float = 1e-6) -> bool:
    """Positivity / balance invariants every benchmark run must satisfy."""
    min_vt = min(r.min_vartheta for r in records)
    min_dp = min(r.min_detP for r in records)
    resid = diagnostics.cumulative_balance_residual(records)
    return (min_vt >= 0.0) and (min_dp > det_floor) and (resid < 5e-2)
