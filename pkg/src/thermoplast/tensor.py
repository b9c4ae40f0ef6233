"""Exact algebra for small square matrices (d = 2 or 3).

Matrices are plain numpy arrays of shape ``(..., d, d)``; every routine
broadcasts over the leading axes so that fields of matrices (one per node or
quadrature point) are handled in one call.  Determinants, cofactors and
inverses use the closed-form minor expansions, not LU factorisations, so the
results are exact up to rounding and cheap for stacked input.

Fourth-order tensors are arrays of shape ``(..., d, d, d, d)``.  The main one
produced here is the derivative of the matrix inverse, ``dinv``, with the
index convention

    dinv(P)[..., a, j, k, l] = d(P^{-1})_{aj} / dP_{kl}

so that contracting the *last* two indices with a direction H gives the
directional derivative -P^{-1} H P^{-1}.
"""

from __future__ import annotations

import numpy as np

from .errors import SingularMatrix

# Scale-aware singularity guard: |det A| must exceed SINGULAR_RTOL * ||A||_F^d.
SINGULAR_RTOL = 1e-12

_EPS2 = np.array([[0.0, 1.0], [-1.0, 0.0]])


def _dim(a: np.ndarray) -> int:
    d = a.shape[-1]
    if a.shape[-2] != d or d not in (2, 3):
        raise ValueError(f"expected (..., d, d) with d in (2, 3), got {a.shape}")
    return d


def frobenius(a: np.ndarray) -> np.ndarray:
    """Frobenius norm over the trailing matrix axes."""
    return np.sqrt(np.sum(np.square(a), axis=(-2, -1)))


def identity(d: int, like: np.ndarray | None = None) -> np.ndarray:
    """d x d identity, broadcast to the leading shape of `like` if given."""
    eye = np.eye(d)
    if like is None:
        return eye
    return np.broadcast_to(eye, like.shape[:-2] + (d, d)).copy()


def det(a: np.ndarray) -> np.ndarray:
    """Closed-form determinant."""
    d = _dim(a)
    if d == 2:
        return a[..., 0, 0] * a[..., 1, 1] - a[..., 0, 1] * a[..., 1, 0]
    return (
        a[..., 0, 0] * (a[..., 1, 1] * a[..., 2, 2] - a[..., 1, 2] * a[..., 2, 1])
        - a[..., 0, 1] * (a[..., 1, 0] * a[..., 2, 2] - a[..., 1, 2] * a[..., 2, 0])
        + a[..., 0, 2] * (a[..., 1, 0] * a[..., 2, 1] - a[..., 1, 1] * a[..., 2, 0])
    )


def cof(a: np.ndarray) -> np.ndarray:
    """Cofactor matrix (signed minors); equals det(A) A^{-T} for invertible A.

    Polynomial in the entries, hence defined for singular A as well.
    """
    d = _dim(a)
    c = np.empty_like(a)
    if d == 2:
        c[..., 0, 0] = a[..., 1, 1]
        c[..., 0, 1] = -a[..., 1, 0]
        c[..., 1, 0] = -a[..., 0, 1]
        c[..., 1, 1] = a[..., 0, 0]
        return c
    for i in range(3):
        for j in range(3):
            r = [k for k in range(3) if k != i]
            s = [k for k in range(3) if k != j]
            minor = (
                a[..., r[0], s[0]] * a[..., r[1], s[1]]
                - a[..., r[0], s[1]] * a[..., r[1], s[0]]
            )
            c[..., i, j] = ((-1.0) ** (i + j)) * minor
    return c


def singular_tol(a: np.ndarray) -> np.ndarray:
    """Determinant threshold below which `a` is treated as singular."""
    return SINGULAR_RTOL * frobenius(a) ** _dim(a)


def inv(a: np.ndarray) -> np.ndarray:
    """Closed-form inverse; raises SingularMatrix on near-singular input."""
    j = det(a)
    if np.any(np.abs(j) <= singular_tol(a)):
        raise SingularMatrix("matrix determinant below the scale-aware tolerance")
    return np.swapaxes(cof(a), -2, -1) / j[..., None, None]


def dcof(p: np.ndarray) -> np.ndarray:
    """Derivative of the cofactor map, dcof[..., i, j, k, l] = dCof_{ij}/dP_{kl}.

    For d = 2 the map is linear (constant tensor); for d = 3 it follows from
    Cof_{ij} = 1/2 eps_{iab} eps_{jcd} P_{ac} P_{bd}.
    """
    d = _dim(p)
    if d == 2:
        t = np.einsum("ik,jl->ijkl", _EPS2, _EPS2)
        return np.broadcast_to(t, p.shape[:-2] + (2, 2, 2, 2)).copy()
    eps = np.zeros((3, 3, 3))
    for i, j, k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
        eps[i, j, k] = 1.0
        eps[i, k, j] = -1.0
    return np.einsum("ikb,jld,...bd->...ijkl", eps, eps, p)


def dinv(p: np.ndarray) -> np.ndarray:
    """Derivative of P -> P^{-1} as a 4th-order tensor.

    Contracting the last two indices with H yields -P^{-1} H P^{-1}.
    Raises SingularMatrix when det P is below the tolerance.
    """
    pi = inv(p)
    return -np.einsum("...ak,...lj->...ajkl", pi, pi)


def contract2(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Frobenius inner product A:B over the trailing matrix axes."""
    return np.sum(a * b, axis=(-2, -1))


def contract42(t: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Contract a 4th-order tensor with a matrix over the last two indices."""
    return np.einsum("...ijkl,...kl->...ij", t, h)


def contract24(a: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Contract a matrix with the first two indices of a 4th-order tensor."""
    return np.einsum("...ij,...ijkl->...kl", a, t)
