import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import circulant_matrix, decimation_matrix, dft_matrix, gradient_matrices
from whitesr.grid import KernelSpec, build_kernel, dft2, idft2
from whitesr.operators import (
    Decimator,
    alias_permutation,
    build_regularizer,
    decimate,
    group_base,
    permutation_matrix,
    zero_interpolate,
)


def test_decimate_d1_identity():
    x = np.random.default_rng(0).standard_normal((5, 6))
    np.testing.assert_array_equal(decimate(x, Decimator(1, 1)), x)


def test_decimate_ramp():
    i, j = np.mgrid[0:4, 0:4]
    np.testing.assert_array_equal(decimate(4 * i + j, Decimator(2, 2)), [[0, 2], [8, 10]])


def test_decimate_after_zero_interpolate_is_identity():
    b = np.random.default_rng(1).standard_normal((4, 4))
    dec = Decimator(2, 2)
    np.testing.assert_array_equal(decimate(zero_interpolate(b, dec), dec), b)


def test_decimate_rejects_indivisible_shape():
    with pytest.raises(ValueError):
        decimate(np.zeros((5, 4)), Decimator(2, 2))


def test_zero_interpolate_examples():
    np.testing.assert_array_equal(zero_interpolate([[1.0]], Decimator(2, 2)), [[1, 0], [0, 0]])
    assert not np.any(zero_interpolate(np.zeros((3, 2)), Decimator(2, 3)))
    b = np.random.default_rng(2).standard_normal((3, 2))
    assert np.linalg.norm(zero_interpolate(b, Decimator(2, 3))) == pytest.approx(np.linalg.norm(b))
    with pytest.raises(ValueError):
        zero_interpolate(b, Decimator(2, 2), hr_shape=(5, 4))


def test_zero_interpolation_replicates_spectrum():
    b = np.random.default_rng(3).standard_normal((2, 2))
    big = dft2(zero_interpolate(b, Decimator(2, 2)))
    small = dft2(b)
    for p in range(2):
        for q in range(2):
            np.testing.assert_allclose(big[2 * p : 2 * p + 2, 2 * q : 2 * q + 2], small, atol=1e-12)


def test_decimator_parse_and_validation():
    assert Decimator.parse("4x2") == Decimator(4, 2)
    assert str(Decimator(3, 1)) == "3x1"
    assert Decimator(2, 3).d == 6
    with pytest.raises(ValueError):
        Decimator(0, 2)


def lemma1_matrix(nr, nc, dr, dc):
    J = lambda m: np.ones((m, m))  # noqa: E731
    return np.kron(np.kron(J(dr), np.eye(nr)), np.kron(J(dc), np.eye(nc))) / (dr * dc)


@pytest.mark.parametrize("nr,nc,dr,dc", [(a, b, c, e) for a in (1, 2, 3) for b in (1, 3) for c in (1, 2) for e in (1, 2)])
def test_lemma1_dense(nr, nc, dr, dc):
    rows, cols = nr * dr, nc * dc
    F = dft_matrix(rows, cols)
    S = decimation_matrix(rows, cols, dr, dc)
    M = F @ S.T @ S @ np.linalg.inv(F)
    np.testing.assert_allclose(M, lemma1_matrix(nr, nc, dr, dc), atol=1e-10)


@pytest.mark.parametrize("nr,nc,dr,dc", [(3, 3, 2, 2), (2, 3, 2, 1), (1, 2, 1, 2), (3, 2, 2, 2)])
def test_alias_permutation_blocks_lemma1(nr, nc, dr, dc):
    groups = alias_permutation(nr, nc, dr, dc)
    P = permutation_matrix(groups)
    d = dr * dc
    blocked = P @ (d * lemma1_matrix(nr, nc, dr, dc)) @ P.T
    np.testing.assert_array_equal(blocked, np.kron(np.eye(nr * nc), np.ones((d, d))))


def test_alias_permutation_explicit_formula():
    nr, nc, dr, dc = 3, 2, 2, 3
    perm = alias_permutation(nr, nc, dr, dc).perm
    cols = nc * dc
    for u in range(nr * dr):
        for v in range(cols):
            g = (u % nr) * nc + v % nc
            o = (u // nr) * dc + v // nc
            assert perm[u * cols + v] == g * dr * dc + o


def test_alias_permutation_identity_and_bijection():
    np.testing.assert_array_equal(alias_permutation(3, 4, 1, 1).perm, np.arange(12))
    perm = alias_permutation(3, 5, 2, 4).perm
    np.testing.assert_array_equal(np.sort(perm), np.arange(perm.size))
    with pytest.raises(ValueError):
        alias_permutation(0, 2, 1, 1)


@given(st.integers(1, 4), st.integers(1, 4), st.integers(1, 3), st.integers(1, 3))
def test_group_ungroup_roundtrip(nr, nc, dr, dc):
    groups = alias_permutation(nr, nc, dr, dc)
    spec = np.arange(groups.N).reshape(nr * dr, nc * dc)
    np.testing.assert_array_equal(groups.ungroup(groups.group(spec)), spec)
    np.testing.assert_array_equal(groups.group(spec).reshape(-1)[groups.perm], spec.reshape(-1))


def test_group_base_examples():
    assert group_base(3, 4) == 1
    assert group_base(5, 4) == 5
    assert group_base(8, 4) == 5
    with pytest.raises(ValueError):
        group_base(0, 4)


def test_gradient_of_constant_is_zero():
    reg = build_regularizer("gradient", 5, 4)
    assert not np.any(reg.apply(np.full((5, 4), 3.0)))
    for g in reg.diagonals:
        assert abs(g[0, 0]) == 0


def test_identity_regulariser():
    reg = build_regularizer("identity", 3, 3)
    assert reg.s == 1
    np.testing.assert_array_equal(reg.diagonals[0], np.ones((3, 3)))
    with pytest.raises(ValueError):
        build_regularizer("laplacian", 3, 3)


def test_gradient_stencil_and_fft_agree():
    x = np.random.default_rng(4).standard_normal((4, 4))
    reg = build_regularizer("gradient", 4, 4)
    expected_h = np.roll(x, -1, axis=1) - x
    for i in range(4):
        for j in range(4):
            assert reg.apply(x)[0, i, j] == pytest.approx(x[i, (j + 1) % 4] - x[i, j])
    np.testing.assert_allclose(idft2(dft2(x) * reg.diagonals[0]), expected_h, atol=1e-12)
    np.testing.assert_allclose(idft2(dft2(x) * reg.diagonals[1]), reg.apply(x)[1], atol=1e-12)


def test_gradient_adjoint_matches_dense_transpose():
    rng = np.random.default_rng(5)
    t = rng.standard_normal((2, 3, 5))
    Dh, Dv = gradient_matrices(3, 5)
    dense = Dh.T @ t[0].reshape(-1) + Dv.T @ t[1].reshape(-1)
    np.testing.assert_allclose(build_regularizer("gradient", 3, 5).adjoint(t).reshape(-1), dense, atol=1e-12)


@pytest.mark.parametrize("band,sigma,d", [(3, 0.8, 2), (5, 1.0, 2), (5, 2.0, 4), (7, 1.5, 1)])
def test_stacked_operator_has_trivial_null_space(band, sigma, d):
    rows = cols = 8
    k = build_kernel(KernelSpec("gaussian", band, sigma))
    A = decimation_matrix(rows, cols, d, d) @ circulant_matrix(k, rows, cols)
    Dh, Dv = gradient_matrices(rows, cols)
    smin = np.linalg.svd(np.vstack([A, Dh, Dv]), compute_uv=False).min()
    assert smin > 1e-6
