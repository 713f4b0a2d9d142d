import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from qadapose.errors import ContractError, DegeneracyError
from qadapose.geometry import rot_from_euler
from qadapose.numerics import (
    lstsq, null_vector, poly_from_roots, procrustes, real_poly_roots, svd, svd3, sym_eig,
)


def _rz(deg):
    return rot_from_euler(0.0, 0.0, np.radians(deg))


# -- symmetric eigen-decomposition -----------------------------------------

def test_sym_eig_identity(backend):
    w, v = sym_eig(np.eye(3))
    np.testing.assert_allclose(w, [1, 1, 1])
    np.testing.assert_allclose(v.T @ v, np.eye(3), atol=1e-14)


def test_sym_eig_diagonal_permutes_axes(backend):
    w, v = sym_eig(np.diag([2.0, -1.0, 5.0]))
    np.testing.assert_allclose(w, [-1, 2, 5])
    np.testing.assert_allclose(np.abs(v), [[0, 1, 0], [1, 0, 0], [0, 0, 1]], atol=1e-14)


def test_sym_eig_random_12x12_reconstructs(backend, rng):
    a = rng.standard_normal((12, 12))
    a = a + a.T
    w, v = sym_eig(a)
    assert np.all(np.diff(w) >= 0)
    assert np.linalg.norm(v @ np.diag(w) @ v.T - a) / np.linalg.norm(a) < 1e-10
    np.testing.assert_allclose(v.T @ v, np.eye(12), atol=1e-12)


@pytest.mark.parametrize("bad", [np.ones((2, 3)), np.array([[1.0, 2.0], [0.0, 1.0]])])
def test_sym_eig_rejects_non_symmetric(bad):
    with pytest.raises(ContractError):
        sym_eig(bad)


def test_backends_agree(rng):
    from qadapose._backend import available_backends

    mods = available_backends()
    if len(mods) < 2:
        pytest.skip("compiled backend not built")
    a = rng.standard_normal((9, 9))
    a = a @ a.T
    wp = mods["python"].jacobi_eigh(a, 1e-15, 60)[0]
    wc = mods["cython"].jacobi_eigh(a, 1e-15, 60)[0]
    np.testing.assert_allclose(np.sort(wp), np.sort(wc), rtol=1e-12, atol=1e-12)
    b = rng.standard_normal((8, 5))
    sp = np.sort(mods["python"].jacobi_svd(b, 1e-15, 60)[1])
    sc = np.sort(mods["cython"].jacobi_svd(b, 1e-15, 60)[1])
    np.testing.assert_allclose(sp, sc, rtol=1e-12)


# -- SVD ---------------------------------------------------------------------

def test_svd3_identity():
    u, s, v = svd3(np.eye(3))
    np.testing.assert_allclose(s, [1, 1, 1])
    np.testing.assert_allclose(u @ np.diag(s) @ v.T, np.eye(3), atol=1e-15)


def test_svd3_rank_one():
    a, b = np.array([1.0, 2.0, 2.0]), np.array([0.0, 3.0, 4.0])
    _, s, _ = svd3(np.outer(a, b))
    np.testing.assert_allclose(s, [np.linalg.norm(a) * np.linalg.norm(b), 0, 0], atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, (3, 3), elements=st.floats(-10, 10)))
def test_svd3_reconstructs(m):
    u, s, v = svd3(m)
    assert np.all(s[:-1] >= s[1:]) and np.all(s >= 0)
    assert np.max(np.abs(u @ np.diag(s) @ v.T - m)) < 1e-12 * max(1.0, np.abs(m).max())


@pytest.mark.parametrize("shape", [(8, 5), (5, 8), (20, 9)])
def test_jacobi_svd_reconstructs(backend, rng, shape):
    a = rng.standard_normal(shape)
    u, s, v = svd(a)
    k = min(shape)
    np.testing.assert_allclose(u[:, :k] @ np.diag(s[:k]) @ v[:, :k].T, a, atol=1e-12)
    np.testing.assert_allclose(s[:k], np.linalg.svd(a, compute_uv=False), rtol=1e-12)


def test_null_vector(backend):
    a = np.array([[1.0, 0.0, -1.0], [0.0, 1.0, -1.0]])
    x = null_vector(a)
    np.testing.assert_allclose(a @ x, 0.0, atol=1e-14)
    assert np.isclose(np.linalg.norm(x), 1.0)


# -- least squares -----------------------------------------------------------

def test_lstsq_identity():
    b = np.array([1.0, -2.0, 3.0])
    np.testing.assert_allclose(lstsq(np.eye(3), b), b)


def test_lstsq_consistent_overdetermined(rng):
    a = rng.standard_normal((10, 3))
    x = np.array([0.5, -1.0, 2.0])
    got = lstsq(a, a @ x)
    np.testing.assert_allclose(got, x, atol=1e-12)
    np.testing.assert_allclose(a @ got, a @ x, atol=1e-12)


def test_lstsq_rank_deficient_matches_pseudo_inverse():
    a = np.array([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]])
    b = np.array([1.0, 0.0, 2.0])
    # pseudo-inverse oracle from the normal equations' 2x2 eigen-decomposition
    n = np.zeros((3, 3))
    n[:2, :2] = a.T @ a
    u, s, _ = svd3(n)
    keep = s > 1e-9 * s[0]
    pinv_n = (u[:, keep] / s[keep]) @ u[:, keep].T
    expected = (pinv_n[:2, :2] @ a.T @ b)
    np.testing.assert_allclose(lstsq(a, b), expected, atol=1e-12)


def test_lstsq_row_mismatch():
    with pytest.raises(ContractError):
        lstsq(np.eye(3), np.ones(2))


# -- Procrustes --------------------------------------------------------------

@pytest.fixture
def cloud(rng):
    return rng.standard_normal((6, 3))


def test_procrustes_identity(cloud):
    r, t = procrustes(cloud, cloud)
    np.testing.assert_allclose(r, np.eye(3), atol=1e-12)
    np.testing.assert_allclose(t, 0.0, atol=1e-12)


def test_procrustes_recovers_rigid_motion(cloud):
    rz = _rz(30.0)
    q = cloud @ rz.T + [1.0, 2.0, 3.0]
    r, t = procrustes(cloud, q)
    np.testing.assert_allclose(r, rz, atol=1e-12)
    np.testing.assert_allclose(t, [1, 2, 3], atol=1e-12)


def test_procrustes_beats_random_rotations(cloud, rng):
    q = cloud @ _rz(40.0).T + 0.05 * rng.standard_normal(cloud.shape)
    r, t = procrustes(cloud, q)
    best = np.sum((cloud @ r.T + t - q) ** 2)
    for _ in range(1000):
        a, b, g = rng.uniform(-np.pi, np.pi, 3)
        rr = rot_from_euler(a, b, g)
        tt = q.mean(axis=0) - rr @ cloud.mean(axis=0)  # optimal t for this R
        assert np.sum((cloud @ rr.T + tt - q) ** 2) >= best - 1e-12


def test_procrustes_never_reflects(cloud):
    flip = np.diag([1.0, 1.0, -1.0])
    r, _ = procrustes(cloud, cloud @ flip)
    assert np.isclose(np.linalg.det(r), 1.0)


def test_procrustes_collinear():
    p = np.outer(np.arange(5.0), [1.0, 2.0, 3.0])
    with pytest.raises(DegeneracyError):
        procrustes(p, p)


# -- polynomial roots ---------------------------------------------------------

@pytest.mark.parametrize(
    "roots, expected",
    [
        ([-1.0, 1.0], [-1.0, 1.0]),
        ([2.0, 2.0, 2.0], [2.0]),
        ([1.0, 1.0, 1.0, 1.0], [1.0]),
    ],
    ids=["x2-1", "triple", "quadruple"],
)
def test_real_roots_simple(roots, expected):
    np.testing.assert_allclose(real_poly_roots(poly_from_roots(roots)), expected, atol=1e-5)


def test_real_roots_degree_seven_with_complex_factors():
    p = poly_from_roots([1.0, -3.0, 0.5])
    p = np.convolve(p, [1.0, 0.0, 1.0])  # x^2 + 1
    p = np.convolve(p, [4.0, 0.0, 1.0])  # x^2 + 4
    got = real_poly_roots(p)
    np.testing.assert_allclose(got, [-3.0, 0.5, 1.0], atol=1e-10)


def test_real_roots_keeps_close_distinct_roots():
    roots = [0.11698, 0.11707, 0.11715]
    got = real_poly_roots(poly_from_roots(roots))
    np.testing.assert_allclose(got, roots, atol=1e-8)


def test_real_roots_zero_polynomial():
    with pytest.raises(ContractError):
        real_poly_roots([0.0, 0.0])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=1, max_size=6, unique=True).filter(
    lambda r: min(abs(a - b) for a in r for b in r if a != b) > 0.05 if len(r) > 1 else True))
def test_real_roots_of_constructed_polynomial(roots):
    got = real_poly_roots(poly_from_roots(roots))
    np.testing.assert_allclose(got, sorted(roots), atol=1e-6)
