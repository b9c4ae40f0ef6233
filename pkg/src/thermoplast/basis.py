"""Shape-function tables for the two finite-element spaces.

Deformation components live in the C1-conforming bicubic Hermite space on
rectangles (value, d/dx, d/dy, d2/dxdy at each node, i.e. 4 dofs per node and
scalar component); the plastic tensor and the enthalpy live in the bilinear
nodal space.  The mesh is uniform, so a single table per space evaluated at
the reference quadrature points serves every element.

Local dof ordering inside an element follows the connectivity corner order
(0,0),(1,0),(0,1),(1,1) with the 4 Hermite dof types innermost:
``loc = corner * 4 + dtype`` and dtype 0=value, 1=d/dx, 2=d/dy, 3=d2/dxdy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def gauss_rule(n: int, h: float) -> tuple[np.ndarray, np.ndarray]:
    """n-point Gauss rule on [0, h]; weights sum to h."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * h * (x + 1.0), 0.5 * h * w


def hermite1d(xi: np.ndarray, h: float):
    """Cubic Hermite values/derivatives on [0, h] at xi = x/h in [0, 1].

    Returns three (npts, 4) arrays (value, first, second derivative) for the
    basis ordered [value@0, slope@0, value@1, slope@1]; slope shapes carry the
    physical scaling h so their derivative dof is exactly 1.
    """
    xi = np.asarray(xi, dtype=float)
    val = np.stack(
        [
            1.0 - 3.0 * xi**2 + 2.0 * xi**3,
            h * (xi - 2.0 * xi**2 + xi**3),
            3.0 * xi**2 - 2.0 * xi**3,
            h * (-(xi**2) + xi**3),
        ],
        axis=-1,
    )
    d1 = np.stack(
        [
            (-6.0 * xi + 6.0 * xi**2) / h,
            1.0 - 4.0 * xi + 3.0 * xi**2,
            (6.0 * xi - 6.0 * xi**2) / h,
            -2.0 * xi + 3.0 * xi**2,
        ],
        axis=-1,
    )
    d2 = np.stack(
        [
            (-6.0 + 12.0 * xi) / h**2,
            (-4.0 + 6.0 * xi) / h,
            (6.0 - 12.0 * xi) / h**2,
            (-2.0 + 6.0 * xi) / h,
        ],
        axis=-1,
    )
    return val, d1, d2


def bilinear1d(xi: np.ndarray, h: float):
    """Linear hat values/derivatives on [0, h], basis [value@0, value@1]."""
    xi = np.asarray(xi, dtype=float)
    val = np.stack([1.0 - xi, xi], axis=-1)
    d1 = np.stack([-np.ones_like(xi), np.ones_like(xi)], axis=-1) / h
    return val, d1


_CORNERS = ((0, 0), (1, 0), (0, 1), (1, 1))
_DTYPES = ((0, 0), (1, 0), (0, 1), (1, 1))  # (x-slope?, y-slope?)


@dataclass(frozen=True)
class HermiteTables:
    """Bicubic Hermite tables at the volume quadrature points.

    N, Gx, Gy, Hxx, Hxy, Hyy have shape (nqp, 16); qw holds the physical
    quadrature weights (including the element area factor); qp_xy the
    in-element coordinates of the points.
    """

    qp_xy: np.ndarray
    qw: np.ndarray
    N: np.ndarray
    Gx: np.ndarray
    Gy: np.ndarray
    Hxx: np.ndarray
    Hxy: np.ndarray
    Hyy: np.ndarray
    # 1-D trace tables for boundary edges, per axis: (qp, weights, N (nq,4))
    edge_x: tuple
    edge_y: tuple


def hermite_eval(pts_x: np.ndarray, pts_y: np.ndarray, hx: float, hy: float):
    """Evaluate the 16-function tensor Hermite basis at (pts_x, pts_y)/h."""
    xv, xd1, xd2 = hermite1d(pts_x / hx, hx)
    yv, yd1, yd2 = hermite1d(pts_y / hy, hy)
    npts = len(pts_x)
    N = np.empty((npts, 16))
    Gx = np.empty((npts, 16))
    Gy = np.empty((npts, 16))
    Hxx = np.empty((npts, 16))
    Hxy = np.empty((npts, 16))
    Hyy = np.empty((npts, 16))
    for c, (a, b) in enumerate(_CORNERS):
        for t, (sx, sy) in enumerate(_DTYPES):
            loc = c * 4 + t
            ix, iy = 2 * a + sx, 2 * b + sy
            N[:, loc] = xv[:, ix] * yv[:, iy]
            Gx[:, loc] = xd1[:, ix] * yv[:, iy]
            Gy[:, loc] = xv[:, ix] * yd1[:, iy]
            Hxx[:, loc] = xd2[:, ix] * yv[:, iy]
            Hxy[:, loc] = xd1[:, ix] * yd1[:, iy]
            Hyy[:, loc] = xv[:, ix] * yd2[:, iy]
    return N, Gx, Gy, Hxx, Hxy, Hyy


def build_hermite_tables(hx: float, hy: float, n_gauss: int = 4) -> HermiteTables:
    gx, wx = gauss_rule(n_gauss, hx)
    gy, wy = gauss_rule(n_gauss, hy)
    PX, PY = np.meshgrid(gx, gy, indexing="xy")
    WX, WY = np.meshgrid(wx, wy, indexing="xy")
    px, py = PX.ravel(), PY.ravel()
    qw = (WX * WY).ravel()
    N, Gx, Gy, Hxx, Hxy, Hyy = hermite_eval(px, py, hx, hy)

    def edge_tables(h):
        ex, ew = gauss_rule(n_gauss, h)
        v, _, _ = hermite1d(ex / h, h)
        return ex, ew, v

    return HermiteTables(
        qp_xy=np.column_stack([px, py]), qw=qw,
        N=N, Gx=Gx, Gy=Gy, Hxx=Hxx, Hxy=Hxy, Hyy=Hyy,
        edge_x=edge_tables(hx), edge_y=edge_tables(hy),
    )


@dataclass(frozen=True)
class BilinearTables:
    """Bilinear (Q1) tables at the same volume quadrature points."""

    N: np.ndarray     # (nqp, 4)
    Gx: np.ndarray
    Gy: np.ndarray
    qw: np.ndarray
    edge_x: tuple     # (qp, weights, N (nq,2)) on an x-aligned edge
    edge_y: tuple


def build_bilinear_tables(hx: float, hy: float, n_gauss: int = 4) -> BilinearTables:
    gx, wx = gauss_rule(n_gauss, hx)
    gy, wy = gauss_rule(n_gauss, hy)
    PX, PY = np.meshgrid(gx, gy, indexing="xy")
    WX, WY = np.meshgrid(wx, wy, indexing="xy")
    px, py = PX.ravel(), PY.ravel()
    qw = (WX * WY).ravel()
    xv, xd = bilinear1d(px / hx, hx)
    yv, yd = bilinear1d(py / hy, hy)
    N = np.empty((len(px), 4))
    Gx = np.empty_like(N)
    Gy = np.empty_like(N)
    for c, (a, b) in enumerate(_CORNERS):
        N[:, c] = xv[:, a] * yv[:, b]
        Gx[:, c] = xd[:, a] * yv[:, b]
        Gy[:, c] = xv[:, a] * yd[:, b]

    def edge_tables(h):
        ex, ew = gauss_rule(n_gauss, h)
        v, _ = bilinear1d(ex / h, h)
        return ex, ew, v

    return BilinearTables(N=N, Gx=Gx, Gy=Gy, qw=qw,
                          edge_x=edge_tables(hx), edge_y=edge_tables(hy))
