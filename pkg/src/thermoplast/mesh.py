"""Structured rectangle mesh with boundary classification."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidConfig


@dataclass(frozen=True)
class BoundaryEdges:
    """Element edges lying on one side of the rectangle.

    ``n0``/``n1`` are the node ids of each edge endpoint ordered along the
    coordinate axis; ``axis`` is 0 for edges running along x and 1 for edges
    running along y; ``normal`` is the outward unit normal shared by the side.
    """

    n0: np.ndarray
    n1: np.ndarray
    axis: int
    normal: np.ndarray
    length: float


@dataclass(frozen=True)
class Mesh:
    Lx: float
    Ly: float
    nx: int
    ny: int
    hx: float
    hy: float
    nodes: np.ndarray            # (n_nodes, 2) coordinates
    conn: np.ndarray             # (n_elems, 4) node ids, corners (0,0),(1,0),(0,1),(1,1)
    boundary_nodes: np.ndarray   # sorted ids of nodes on the boundary
    boundary_mask: np.ndarray    # (n_nodes,) bool
    edges: tuple = field(default_factory=tuple)  # BoundaryEdges per side

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def n_elems(self) -> int:
        return self.conn.shape[0]

    def node_id(self, i: int, j: int) -> int:
        return j * (self.nx + 1) + i


def build_mesh(Lx: float, Ly: float, nx: int, ny: int) -> Mesh:
    """Uniform nx-by-ny quad mesh of [0,Lx] x [0,Ly].

    Nodes are numbered lexicographically (x fastest); element corners are
    listed in tensor-product order so basis tables line up with connectivity.
    """
    if Lx <= 0 or Ly <= 0:
        raise InvalidConfig("mesh extents must be positive")
    if nx < 2 or ny < 2:
        raise InvalidConfig("element counts must be at least 2 per direction")
    xs = np.linspace(0.0, Lx, nx + 1)
    ys = np.linspace(0.0, Ly, ny + 1)
    X, Y = np.meshgrid(xs, ys, indexing="xy")
    nodes = np.column_stack([X.ravel(), Y.ravel()])

    def nid(i, j):
        return j * (nx + 1) + i

    conn = np.empty((nx * ny, 4), dtype=np.int64)
    e = 0
    for j in range(ny):
        for i in range(nx):
            conn[e] = (nid(i, j), nid(i + 1, j), nid(i, j + 1), nid(i + 1, j + 1))
            e += 1

    ii, jj = np.meshgrid(np.arange(nx + 1), np.arange(ny + 1), indexing="xy")
    on_bd = (ii == 0) | (ii == nx) | (jj == 0) | (jj == ny)
    boundary_mask = on_bd.ravel()
    boundary_nodes = np.flatnonzero(boundary_mask)

    hx, hy = Lx / nx, Ly / ny
    i_range = np.arange(nx)
    j_range = np.arange(ny)
    edges = (
        BoundaryEdges(  # bottom
            n0=np.array([nid(i, 0) for i in i_range]),
            n1=np.array([nid(i + 1, 0) for i in i_range]),
            axis=0, normal=np.array([0.0, -1.0]), length=hx,
        ),
        BoundaryEdges(  # top
            n0=np.array([nid(i, ny) for i in i_range]),
            n1=np.array([nid(i + 1, ny) for i in i_range]),
            axis=0, normal=np.array([0.0, 1.0]), length=hx,
        ),
        BoundaryEdges(  # left
            n0=np.array([nid(0, j) for j in j_range]),
            n1=np.array([nid(0, j + 1) for j in j_range]),
            axis=1, normal=np.array([-1.0, 0.0]), length=hy,
        ),
        BoundaryEdges(  # right
            n0=np.array([nid(nx, j) for j in j_range]),
            n1=np.array([nid(nx, j + 1) for j in j_range]),
            axis=1, normal=np.array([1.0, 0.0]), length=hy,
        ),
    )
    return Mesh(Lx, Ly, nx, ny, hx, hy, nodes, conn, boundary_nodes, boundary_mask, edges)
