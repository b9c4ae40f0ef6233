"""Small-matrix algebra: closed forms vs independent oracles."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from thermoplast import SingularMatrix, tensor


def laplace_det(a):
    """Independent determinant oracle: recursive Laplace expansion."""
    n = a.shape[0]
    if n == 1:
        return a[0, 0]
    total = 0.0
    for j in range(n):
        minor = np.delete(np.delete(a, 0, axis=0), j, axis=1)
        total += (-1.0) ** j * a[0, j] * laplace_det(minor)
    return total


def rand_mats(seed, n, d, scale=1.0):
    rng = np.random.default_rng(seed)
    return rng.standard_normal((n, d, d)) * scale


def well_conditioned(seed, n, d):
    """Random matrices biased toward identity so conditioning stays mild."""
    rng = np.random.default_rng(seed)
    return np.eye(d) + 0.3 * rng.standard_normal((n, d, d))


# -- det -----------------------------------------------------------------

def test_det_identity():
    assert tensor.det(np.eye(2)) == 1.0
    assert tensor.det(np.eye(3)) == 1.0


def test_det_diagonal():
    assert tensor.det(np.diag([2.0, 3.0])) == 6.0


@pytest.mark.parametrize("d", [2, 3])
def test_det_matches_laplace_expansion(d):
    mats = rand_mats(0, 50, d)
    dets = tensor.det(mats)
    for a, val in zip(mats, dets):
        assert val == pytest.approx(laplace_det(a), rel=1e-12, abs=1e-14)


# -- cof -----------------------------------------------------------------

def test_cof_identity():
    assert np.allclose(tensor.cof(np.eye(2)), np.eye(2))


def test_cof_2x2_minor_formula():
    a, b, c, d = 1.3, -0.4, 2.2, 0.7
    expected = np.array([[d, -c], [-b, a]])
    assert np.allclose(tensor.cof(np.array([[a, b], [c, d]])), expected)


def test_cof_3x3_diagonal():
    got = tensor.cof(np.diag([2.0, 3.0, 4.0]))
    assert np.allclose(got, np.diag([12.0, 8.0, 6.0]))


@pytest.mark.parametrize("d", [2, 3])
def test_cof_equals_det_times_inv_transpose(d):
    mats = well_conditioned(1, 200, d)
    cofs = tensor.cof(mats)
    ref = tensor.det(mats)[:, None, None] * np.swapaxes(tensor.inv(mats), -1, -2)
    scale = np.sqrt(np.sum(cofs**2, axis=(-2, -1)))[:, None, None]
    assert np.all(np.abs(cofs - ref) <= 1e-12 * scale)


# -- inv -----------------------------------------------------------------

def test_inv_identity_and_diagonal():
    assert np.allclose(tensor.inv(np.eye(3)), np.eye(3))
    assert np.allclose(tensor.inv(np.diag([2.0, 4.0])), np.diag([0.5, 0.25]))


@pytest.mark.parametrize("d", [2, 3])
def test_inv_residual_batch(d):
    mats = well_conditioned(2, 1000, d)
    prod = np.matmul(tensor.inv(mats), mats)
    assert np.abs(prod - np.eye(d)).max() < 1e-13


def test_inv_singular_raises():
    with pytest.raises(SingularMatrix):
        tensor.inv(np.array([[1.0, 2.0], [2.0, 4.0]]))
    with pytest.raises(SingularMatrix):
        tensor.inv(np.zeros((2, 2)))


# -- dinv ----------------------------------------------------------------

def test_dinv_identity_direction():
    rng = np.random.default_rng(3)
    h = rng.standard_normal((2, 2))
    got = tensor.contract42(tensor.dinv(np.eye(2)), h)
    assert np.allclose(got, -h)


def test_dinv_diagonal_example():
    e11 = np.zeros((2, 2))
    e11[0, 0] = 1.0
    got = tensor.contract42(tensor.dinv(np.diag([2.0, 1.0])), e11)
    assert np.allclose(got, -0.25 * e11)


@pytest.mark.parametrize("d", [2, 3])
def test_dinv_matches_finite_differences(d):
    rng = np.random.default_rng(4)
    delta = 1e-6
    for _ in range(20):
        p = np.eye(d) + 0.3 * rng.standard_normal((d, d))
        h = rng.standard_normal((d, d))
        fd = (tensor.inv(p + delta * h) - tensor.inv(p - delta * h)) / (2 * delta)
        got = tensor.contract42(tensor.dinv(p), h)
        assert np.abs(got - fd).max() <= 1e-5 * max(np.abs(fd).max(), 1.0)


@pytest.mark.parametrize("d", [2, 3])
def test_dinv_cofactor_identity(d):
    # dinv must equal dcof^T / det - cof^T x cof / det^2
    rng = np.random.default_rng(5)
    for _ in range(20):
        p = np.eye(d) + 0.3 * rng.standard_normal((d, d))
        j = tensor.det(p)
        c = tensor.cof(p)
        dc = tensor.dcof(p)
        via_cof = (np.swapaxes(dc, 0, 1) / j
                   - np.einsum("ji,kl->ijkl", c, c) / j**2)
        assert np.allclose(tensor.dinv(p), via_cof, atol=1e-12)


def test_dinv_singular_raises():
    with pytest.raises(SingularMatrix):
        tensor.dinv(np.zeros((2, 2)))


# -- contractions ----------------------------------------------------------

def test_contract2_identity():
    assert tensor.contract2(np.eye(2), np.eye(2)) == 2.0
    assert tensor.contract2(np.eye(3), np.eye(3)) == 3.0


@pytest.mark.parametrize("d", [2, 3])
def test_contract2_trace_oracle(d):
    a = rand_mats(6, 30, d)
    b = rand_mats(7, 30, d)
    got = tensor.contract2(a, b)
    ref = np.trace(np.matmul(np.swapaxes(a, -1, -2), b), axis1=-2, axis2=-1)
    assert np.allclose(got, ref, atol=1e-13)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([2, 3]))
def test_product_contraction_identity(seed, d):
    # (AB):C == A:(C B^T), the rearrangement the flow-rule test relies on
    rng = np.random.default_rng(seed)
    a, b, c = rng.standard_normal((3, d, d))
    lhs = tensor.contract2(a @ b, c)
    rhs = tensor.contract2(a, c @ b.T)
    scale = np.linalg.norm(a) * np.linalg.norm(b) * np.linalg.norm(c)
    assert abs(lhs - rhs) <= 1e-12 * max(scale, 1.0)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_cof_inv_consistency_property(seed):
    rng = np.random.default_rng(seed)
    a = np.eye(2) + 0.4 * rng.standard_normal((2, 2))
    if abs(tensor.det(a)) < 1e-3:
        return
    c = tensor.cof(a)
    ref = tensor.det(a) * tensor.inv(a).T
    assert np.abs(c - ref).max() <= 1e-12 * max(np.abs(c).max(), 1.0)
