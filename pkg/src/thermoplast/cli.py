"""Command-line entry points.

Subcommands:
  run <config> --out DIR       full simulation with streamed diagnostics
  bench shear-band|yosida|refine <config> --out DIR
  check <config>               validate the configuration only

Exit codes: 0 success, 2 invalid configuration, 3 numerical failure (partial
outputs are flushed first), 4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import bench as bench_mod
from . import diagnostics, io, parallel
from .config import RunConfig, parse_config
from .errors import (BenchFailure, InvalidConfig, IoFailure, SimulationError)
from .mesh import build_mesh
from .operators import Discretization
from .stepper import run


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="thermoplast",
                                description="finite-strain thermo-plasticity solver")
    sub = p.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a full simulation")
    run_p.add_argument("config")
    run_p.add_argument("--out", required=True)
    run_p.add_argument("--workers", type=int, default=1)
    run_p.add_argument("--snapshot-every", type=int, default=None)

    bench_p = sub.add_parser("bench", help="run a scripted benchmark")
    bench_p.add_argument("kind", choices=["shear-band", "yosida", "refine"])
    bench_p.add_argument("config")
    bench_p.add_argument("--out", required=True)
    bench_p.add_argument("--workers", type=int, default=1)

    check_p = sub.add_parser("check", help="validate a configuration file")
    check_p.add_argument("config")
    return p


def _summary_lines(records, cfg: RunConfig) -> list[str]:
    final = records[-1]
    resid = diagnostics.cumulative_balance_residual(records)
    min_vt = min(r.min_vartheta for r in records)
    min_dp = min(r.min_detP for r in records)
    lines = [
        f"t_final {io.fmt(final.t)}",
        f"total_energy {io.fmt(final.total_energy)}",
        f"mechanical_energy {io.fmt(final.mechanical_total)}",
        f"enthalpy_total {io.fmt(final.enthalpy_total)}",
        f"entropy_total {io.fmt(final.entropy_total)}",
        f"cumulative_balance_residual {io.fmt(resid)}",
        f"min_detP {io.fmt(min_dp)}",
        f"min_vartheta {io.fmt(min_vt)}",
        f"pass_positivity {int(min_vt >= 0.0 and min_dp > cfg.step.det_floor)}",
        f"pass_balance {int(resid <= 1e-3)}",
    ]
    if cfg.material.boundary_heat_transfer == 0.0 and len(records) > 1:
        ok, worst = diagnostics.entropy_check(records, 0.0)
        lines.append(f"entropy_min_step_change {io.fmt(worst)}")
        lines.append(f"pass_entropy {int(ok)}")
    return lines


def _cmd_run(args) -> int:
    cfg = parse_config(args.config)
    if args.snapshot_every is not None:
        cfg.step.snapshot_every = args.snapshot_every
    parallel.set_num_workers(args.workers)
    mesh = build_mesh(cfg.Lx, cfg.Ly, cfg.nx, cfg.ny)
    disc = Discretization(mesh, cfg.material)
    try:
        os.makedirs(args.out, exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"cannot create output dir: {exc}") from exc
    csv_path = os.path.join(args.out, "diagnostics.csv")
    with io.DiagnosticsWriter(csv_path) as writer:
        try:
            result = run(disc, cfg.boundary, cfg.step, ic=cfg.initial,
                         gravity=cfg.gravity, record_sink=writer.write)
        except SimulationError as exc:
            io.write_summary(os.path.join(args.out, "summary.txt"),
                             [f"status failed", f"error {exc}"])
            raise
    for snap in result.snapshots:
        io.write_snapshot(os.path.join(args.out, f"snapshot_{snap.step_index}.grid"),
                          disc, snap)
    io.write_summary(os.path.join(args.out, "summary.txt"),
                     ["status ok"] + _summary_lines(result.records, cfg))
    return 0


def _write_study_csv(path: str, study) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("level,label," + ",".join(
            f"diff_{f}" for f in bench_mod._STATE_FIELDS) + "\n")
        for k in range(len(study.labels) - 1):
            row = [str(k), io.fmt(study.labels[k])]
            row += [io.fmt(study.diffs[f][k]) for f in bench_mod._STATE_FIELDS]
            fh.write(",".join(row) + "\n")


def _cmd_bench(args) -> int:
    cfg = parse_config(args.config)
    parallel.set_num_workers(args.workers)
    try:
        os.makedirs(args.out, exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"cannot create output dir: {exc}") from exc

    summary: dict = {"kind": args.kind}
    if args.kind == "shear-band":
        res = bench_mod.shear_band(cfg)
        with open(os.path.join(args.out, "shear_band.csv"), "w",
                  encoding="utf-8", newline="\n") as fh:
            fh.write("kappa1," + ",".join(f"width_t{io.fmt(t)}" for t in res.t_samples) + "\n")
            for ik, k1 in enumerate(res.kappa1_values):
                fh.write(io.fmt(k1) + "," +
                         ",".join(io.fmt(w) for w in res.widths[ik]) + "\n")
        summary.update({
            "alpha_t": res.alpha_t, "alpha_kappa": res.alpha_kappa,
            "alpha_t_tolerance": [2.0 / 3.0, 0.10],
            "alpha_kappa_tolerance": [1.0 / 3.0, 0.07],
            "pass_alpha_t": bool(abs(res.alpha_t - 2.0 / 3.0) <= 0.10),
            "pass_alpha_kappa": bool(abs(res.alpha_kappa - 1.0 / 3.0) <= 0.07),
            "hyper_fraction": res.hyper_fraction,
        })
    else:
        study = (bench_mod.yosida_limit(cfg) if args.kind == "yosida"
                 else bench_mod.refinement_study(cfg))
        _write_study_csv(os.path.join(args.out, f"{args.kind}_study.csv"), study)
        ok = all(r < 0.9 for f in bench_mod._STATE_FIELDS for r in study.ratios[f])
        summary.update({
            "labels": list(map(float, study.labels)),
            "diffs": {f: study.diffs[f] for f in bench_mod._STATE_FIELDS},
            "ratios": {f: study.ratios[f] for f in bench_mod._STATE_FIELDS},
            "ratio_tolerance": 0.9,
            "pass_decreasing": bool(ok),
            "mech_energy_max": study.mech_energy_max,
            "dissipation_total": study.dissipation_total,
        })
    with open(os.path.join(args.out, "bench_summary.json"), "w",
              encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "check":
            parse_config(args.config)
            print("config ok")
            return 0
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "bench":
            return _cmd_bench(args)
        return 2
    except InvalidConfig as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return 2
    except IoFailure as exc:
        print(f"io failure: {exc}", file=sys.stderr)
        return 4
    except (SimulationError,) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"io failure: {exc}", file=sys.stderr)
        return 4


def entry() -> None:
    raise SystemExit(main())
