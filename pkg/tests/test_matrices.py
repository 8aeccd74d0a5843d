import math

import numpy as np
import pytest

from cocycle_lab.matrices import (HalfPlanePoint, as_matrix, mat_mul,
                                  operator_norm, projective_apply, qr_positive)

SQRT6 = math.sqrt(6.0)
B = np.array([[2.0, 2.0], [0.0, 3.0]]) / SQRT6
P2 = np.array([[0.0, 1.0], [1.0, 0.0]])


def test_mat_mul_identity():
    m = np.array([[1.5, -0.3], [0.2, 0.9]])
    assert np.array_equal(mat_mul(np.eye(2), m), m)


def test_mat_mul_inverse_roundtrip():
    rng = np.random.default_rng(1)
    for _ in range(20):
        m = rng.normal(size=(3, 3)) + 3.0 * np.eye(3)
        assert np.allclose(mat_mul(m, np.linalg.inv(m)), np.eye(3), atol=1e-12)


def test_mat_mul_b_times_p2():
    expected = np.array([[2.0, 2.0], [3.0, 0.0]]) / SQRT6
    assert np.allclose(mat_mul(B, P2), expected, atol=1e-15)


def test_mat_mul_dimension_mismatch():
    with pytest.raises(ValueError):
        mat_mul(np.eye(2), np.eye(3))


def test_as_matrix_rejects_nonfinite():
    with pytest.raises(ValueError):
        as_matrix([[1.0, float("nan")], [0.0, 1.0]])


def test_as_matrix_rejects_oversized():
    with pytest.raises(ValueError):
        as_matrix(np.eye(17))
    as_matrix(np.eye(16))  # the supported ceiling


def test_qr_identity():
    q, r = qr_positive(np.eye(3))
    assert np.allclose(q, np.eye(3))
    assert np.allclose(r, np.eye(3))


def test_qr_diagonal():
    m = np.diag([2.0, 0.5])
    q, r = qr_positive(m)
    assert np.allclose(q, np.eye(2))
    assert np.allclose(r, m)


def test_qr_swap_matrix():
    q, r = qr_positive(P2)
    assert np.allclose(q, P2)
    assert np.allclose(r, np.eye(2))


@pytest.mark.parametrize("dim", [2, 3, 5])
def test_qr_reconstruction_random(dim):
    rng = np.random.default_rng(dim)
    for _ in range(50):
        m = rng.normal(size=(dim, dim))
        q, r = qr_positive(m)
        scale = max(operator_norm(m), 1e-30)
        assert np.linalg.norm(q @ r - m) <= 1e-10 * scale
        assert np.linalg.norm(q.T @ q - np.eye(dim)) <= 1e-10
        assert np.all(np.diag(r) >= 0.0)
        assert np.allclose(np.tril(r, -1), 0.0, atol=1e-12)


def test_qr_rank_deficient_reports_zero_diagonal():
    m = np.array([[1.0, 2.0], [2.0, 4.0]])
    _, r = qr_positive(m)
    assert np.min(np.diag(r)) <= 1e-12  # reported, not raised


def test_operator_norm_basics():
    assert operator_norm(np.eye(4)) == pytest.approx(1.0, abs=1e-15)
    assert operator_norm(np.diag([3.0, 1 / 3.0])) == pytest.approx(3.0, abs=1e-15)


def test_operator_norm_cat_matrix():
    lam = (3.0 + math.sqrt(5.0)) / 2.0
    assert operator_norm([[2.0, 1.0], [1.0, 1.0]]) == pytest.approx(lam, abs=1e-12)


def test_operator_norm_matches_svd_and_transpose():
    rng = np.random.default_rng(7)
    for _ in range(100):
        m = rng.normal(size=(2, 2)) * rng.choice([1e-3, 1.0, 1e3])
        ref = np.linalg.svd(m, compute_uv=False)[0]
        got = operator_norm(m)
        assert got == pytest.approx(ref, rel=1e-12)
        assert got == pytest.approx(operator_norm(m.T), rel=1e-12)


def test_operator_norm_submultiplicative():
    rng = np.random.default_rng(11)
    for _ in range(100):
        a = rng.normal(size=(2, 2))
        b = rng.normal(size=(2, 2))
        assert operator_norm(a @ b) <= operator_norm(a) * operator_norm(b) * (1 + 1e-12)


def test_halfplane_point_rejects_boundary():
    with pytest.raises(ValueError):
        HalfPlanePoint(0.5, 0.0)
    with pytest.raises(ValueError):
        HalfPlanePoint(0.5, -1.0)


def test_projective_apply_b_on_i():
    p = projective_apply(B, HalfPlanePoint(0.0, 1.0))
    assert p.re == pytest.approx(2.0 / 3.0, abs=1e-14)
    assert p.im == pytest.approx(2.0 / 3.0, abs=1e-14)


def test_projective_apply_identity():
    p = HalfPlanePoint(0.3, 1.7)
    q = projective_apply(np.eye(2), p)
    assert (q.re, q.im) == (p.re, p.im)


def test_projective_apply_antimobius():
    # det(P2) = -1 acts through the conjugate: 2i -> 1/conj(2i) = i/2
    q = projective_apply(P2, HalfPlanePoint(0.0, 2.0))
    assert q.re == pytest.approx(0.0, abs=1e-15)
    assert q.im == pytest.approx(0.5, abs=1e-15)


def test_projective_apply_rejects_singular():
    with pytest.raises(ValueError):
        projective_apply([[1.0, 2.0], [2.0, 4.0]], HalfPlanePoint(0.0, 1.0))


def test_projective_composition_barycentric_generators():
    # applying m1 after m2 equals applying the matrix product: conjugation
    # commutes with real Moebius maps, so the det-sign rule composes
    from cocycle_lab.cocycles import barycentric_generators

    gens = barycentric_generators()
    rng = np.random.default_rng(3)
    for _ in range(50):
        i, j = rng.integers(0, 6, size=2)
        z = HalfPlanePoint(rng.normal(), rng.uniform(0.1, 3.0))
        two_step = projective_apply(gens[i], projective_apply(gens[j], z))
        one_step = projective_apply(gens[i] @ gens[j], z)
        assert two_step.re == pytest.approx(one_step.re, abs=1e-10)
        assert two_step.im == pytest.approx(one_step.im, abs=1e-10)
