"""Run configuration: flat sectioned key = value files.

The format is INI-style with sections [mesh], [material], [bc], [ic],
[stepper], [output] and [bench]; every key is optional and falls back to the
library default.  Unknown sections or keys are rejected so typos cannot
silently change a run.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidConfig
from .materials import MaterialParams
from .state import BoundaryData, InitialConditions
from .stepper import StepConfig

_MESH_KEYS = {"lx": float, "ly": float, "nx": int, "ny": int}
_MATERIAL_KEYS = {k: float for k in (
    "rho", "lam", "mu", "kappa0", "kappa1", "q", "delta", "r", "sigma0",
    "theta_ref", "mu_v", "cv0", "k0", "boundary_spring", "boundary_heat_transfer")}
_BC_KEYS = {"y_flat": str, "rate": float, "t_hold": float, "center": float,
            "width": float, "theta_flat": float, "gravity": "vec2"}
_IC_KEYS = {"theta0": float, "v0": "vec2"}
_STEPPER_KEYS = {"dt": float, "t_end": float, "eps": float,
                 "newmark_beta": float, "newmark_gamma": float,
                 "lin_tol": float, "max_iter": int, "det_floor": float,
                 "max_halvings": int}
_OUTPUT_KEYS = {"record_every": int, "snapshot_every": int}
_BENCH_KEYS = {"t_samples": "vec", "kappa1_values": "vec", "eps0": float,
               "eps_levels": int, "nx_values": "ivec", "band_threshold": float,
               "t_end": float}


@dataclass
class RunConfig:
    Lx: float = 1.0
    Ly: float = 1.0
    nx: int = 16
    ny: int = 16
    material: MaterialParams = field(default_factory=MaterialParams)
    boundary: BoundaryData = field(default_factory=BoundaryData)
    initial: InitialConditions = field(default_factory=InitialConditions)
    step: StepConfig = field(default_factory=StepConfig)
    gravity: tuple = (0.0, 0.0)
    bench: dict = field(default_factory=dict)


def _convert(section: str, key: str, raw: str, kind):
    try:
        if kind is float:
            return float(raw)
        if kind is int:
            return int(raw)
        if kind is str:
            return raw.strip()
        if kind == "vec2":
            parts = [float(p) for p in raw.split()]
            if len(parts) != 2:
                raise ValueError("expected two numbers")
            return tuple(parts)
        if kind == "vec":
            return [float(p) for p in raw.split()]
        if kind == "ivec":
            return [int(p) for p in raw.split()]
    except ValueError as exc:
        raise InvalidConfig(f"[{section}] {key} = {raw!r}: {exc}") from exc
    raise InvalidConfig(f"[{section}] {key}: unsupported kind {kind!r}")


def _read_section(parser, section: str, keys: dict) -> dict:
    if not parser.has_section(section):
        return {}
    out = {}
    for key, raw in parser.items(section):
        if key not in keys:
            raise InvalidConfig(f"[{section}] unknown key {key!r}")
        out[key] = _convert(section, key, raw, keys[key])
    return out


def parse_config(path: str) -> RunConfig:
    """Read and validate a run configuration file."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise InvalidConfig(f"cannot read config {path!r}: {exc}") from exc
    except configparser.Error as exc:
        raise InvalidConfig(f"malformed config {path!r}: {exc}") from exc

    known = {"mesh", "material", "bc", "ic", "stepper", "output", "bench"}
    for section in parser.sections():
        if section not in known:
            raise InvalidConfig(f"unknown section [{section}]")

    cfg = RunConfig()
    mesh = _read_section(parser, "mesh", _MESH_KEYS)
    cfg.Lx = mesh.get("lx", cfg.Lx)
    cfg.Ly = mesh.get("ly", cfg.Ly)
    cfg.nx = mesh.get("nx", cfg.nx)
    cfg.ny = mesh.get("ny", cfg.ny)
    if cfg.Lx <= 0 or cfg.Ly <= 0:
        raise InvalidConfig("[mesh] extents must be positive")
    if cfg.nx < 2 or cfg.ny < 2:
        raise InvalidConfig("[mesh] nx and ny must be at least 2")

    mat = _read_section(parser, "material", _MATERIAL_KEYS)
    cfg.material = replace(MaterialParams(), **mat)
    try:
        cfg.material.validate(dim=2)
    except InvalidConfig as exc:
        raise InvalidConfig(f"[material] {exc}") from exc

    bc = _read_section(parser, "bc", _BC_KEYS)
    cfg.gravity = bc.pop("gravity", cfg.gravity)
    kind = bc.pop("y_flat", "identity")
    if kind not in ("identity", "shear"):
        raise InvalidConfig(f"[bc] y_flat = {kind!r}: must be 'identity' or 'shear'")
    cfg.boundary = BoundaryData(kind=kind, **bc)
    if cfg.boundary.theta_flat < 0.0:
        raise InvalidConfig("[bc] theta_flat must be nonnegative")

    ic = _read_section(parser, "ic", _IC_KEYS)
    cfg.initial = InitialConditions(**ic)
    try:
        cfg.initial.validate()
    except InvalidConfig as exc:
        raise InvalidConfig(f"[ic] {exc}") from exc

    st = _read_section(parser, "stepper", _STEPPER_KEYS)
    out = _read_section(parser, "output", _OUTPUT_KEYS)
    cfg.step = replace(StepConfig(), **st, **out)
    try:
        cfg.step.validate()
    except InvalidConfig as exc:
        raise InvalidConfig(f"[stepper] {exc}") from exc

    cfg.bench = _read_section(parser, "bench", _BENCH_KEYS)
    if not np.isfinite([cfg.Lx, cfg.Ly]).all():
        raise InvalidConfig("[mesh] extents must be finite")
    return cfg
