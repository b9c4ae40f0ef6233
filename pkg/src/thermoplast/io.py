"""Deterministic text output: diagnostics CSV, grid snapshots, summary.

All floats are written with 17 significant digits so that reading a file
back reproduces the binary values exactly and identical runs produce
byte-identical artifacts.
"""

from __future__ import annotations

import os

import numpy as np

from .diagnostics import RECORD_FIELDS, DiagnosticsRecord
from .errors import IoFailure
from .operators import Discretization
from .state import SimState

_SNAPSHOT_FIELDS = (("y", 8), ("v", 8), ("a", 8), ("P", 4), ("vartheta", 1))


def fmt(x: float) -> str:
    return "%.17g" % x


class DiagnosticsWriter:
    """Streams diagnostics records to CSV, one row per record, flushed in
    step order so partial output survives aborted runs."""

    def __init__(self, path: str):
        try:
            self._fh = open(path, "w", encoding="utf-8", newline="\n")
            self._fh.write(",".join(RECORD_FIELDS) + "\n")
            self._fh.flush()
        except OSError as exc:
            raise IoFailure(f"cannot open {path!r}: {exc}") from exc

    def write(self, rec: DiagnosticsRecord) -> None:
        try:
            row = ",".join(fmt(getattr(rec, name)) for name in RECORD_FIELDS)
            self._fh.write(row + "\n")
            self._fh.flush()
        except OSError as exc:
            raise IoFailure(f"cannot write diagnostics row: {exc}") from exc

    def close(self) -> None:
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def write_diagnostics_csv(path: str, records: list) -> None:
    with DiagnosticsWriter(path) as w:
        for rec in records:
            w.write(rec)


def _state_blocks(state: SimState, n_nodes: int) -> dict:
    return {
        "y": state.y_dofs.reshape(n_nodes, 8),
        "v": state.v_dofs.reshape(n_nodes, 8),
        "a": state.a_dofs.reshape(n_nodes, 8),
        "P": state.P_dofs.reshape(n_nodes, 4),
        "vartheta": state.vartheta_dofs.reshape(n_nodes, 1),
    }


def write_snapshot(path: str, disc: Discretization, state: SimState) -> None:
    """Text snapshot: header (nx, ny, Lx, Ly, t, step, field list), then
    row-major nodal values per field."""
    mesh = disc.mesh
    blocks = _state_blocks(state, mesh.n_nodes)
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"nx {mesh.nx}\n")
            fh.write(f"ny {mesh.ny}\n")
            fh.write(f"Lx {fmt(mesh.Lx)}\n")
            fh.write(f"Ly {fmt(mesh.Ly)}\n")
            fh.write(f"t {fmt(state.t)}\n")
            fh.write(f"step {state.step_index}\n")
            fh.write("fields " + " ".join(f"{n}:{w}" for n, w in _SNAPSHOT_FIELDS) + "\n")
            for name, _ in _SNAPSHOT_FIELDS:
                for row in blocks[name]:
                    fh.write(" ".join(fmt(v) for v in row) + "\n")
    except OSError as exc:
        raise IoFailure(f"cannot write snapshot {path!r}: {exc}") from exc


def read_snapshot(path: str) -> SimState:
    """Inverse of write_snapshot; bit-exact for the dof vectors."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise IoFailure(f"cannot read snapshot {path!r}: {exc}") from exc
    try:
        nx = int(lines[0].split()[1])
        ny = int(lines[1].split()[1])
        t = float(lines[4].split()[1])
        step = int(lines[5].split()[1])
        n_nodes = (nx + 1) * (ny + 1)
        cursor = 7
        arrays = {}
        for name, width in _SNAPSHOT_FIELDS:
            rows = lines[cursor:cursor + n_nodes]
            cursor += n_nodes
            arrays[name] = np.array([[float(v) for v in r.split()] for r in rows])
            if arrays[name].shape != (n_nodes, width):
                raise ValueError(f"bad block shape for {name}")
    except (IndexError, ValueError) as exc:
        raise IoFailure(f"malformed snapshot {path!r}: {exc}") from exc
    return SimState(
        t=t, step_index=step,
        y_dofs=arrays["y"].ravel(), v_dofs=arrays["v"].ravel(),
        a_dofs=arrays["a"].ravel(),
        P_dofs=arrays["P"].reshape(n_nodes, 2, 2),
        vartheta_dofs=arrays["vartheta"].ravel(),
    )


def write_summary(path: str, lines: list) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for line in lines:
                fh.write(line + "\n")
    except OSError as exc:
        raise IoFailure(f"cannot write summary {path!r}: {exc}") from exc


def write_outputs(records: list, snapshots: list, out_dir: str,
                  disc: Discretization, summary_lines: list | None = None) -> None:
    """Write diagnostics.csv, snapshot_<step>.grid files and summary.txt."""
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"cannot create {out_dir!r}: {exc}") from exc
    write_diagnostics_csv(os.path.join(out_dir, "diagnostics.csv"), records)
    for snap in snapshots:
        write_snapshot(os.path.join(out_dir, f"snapshot_{snap.step_index}.grid"),
                       disc, snap)
    if summary_lines is not None:
        write_summary(os.path.join(out_dir, "summary.txt"), summary_lines)
