import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vpadjoint.errors import RankDeficient
from vpadjoint.matcore import (
    as_matrix,
    cgs_orthonormalize,
    mgs_orthonormalize,
    mgs_qr,
    objective_value,
    orthogonality_defect,
    projection_residual,
    recover_c,
)
from vpadjoint.rng import XorShift64Star


def test_mgs_orthonormal_and_spans_b(complex_pair):
    _, b = complex_pair(20, 1, 5, seed=1)
    q, t = mgs_orthonormalize(b)
    assert orthogonality_defect(q) < 1e-14
    qq, rr = mgs_qr(b)
    np.testing.assert_allclose(qq @ rr, b, atol=1e-13)
    np.testing.assert_allclose(qq, q, atol=1e-15)
    np.testing.assert_allclose(np.abs(np.diag(rr)), t, rtol=1e-14)
    assert np.allclose(np.triu(rr), rr)


def test_objective_matches_residual_oracle(complex_pair):
    a, b = complex_pair(20, 10, 4, seed=2)
    q = mgs_orthonormalize(b).q
    f = objective_value(a, q)
    assert abs(f - projection_residual(a, q)) <= 1e-10 * np.linalg.norm(a)
    assert 0 < f < np.linalg.norm(a)


def test_span_invariance(complex_pair):
    a, b = complex_pair(15, 6, 3, seed=3)
    t = np.array([[2.0, 0.3j, 0.1], [0.0, 1.5, -0.2], [0.4, 0.0, 1.0 + 0.5j]])
    f0 = objective_value(a, mgs_orthonormalize(b).q)
    f1 = objective_value(a, mgs_orthonormalize(b @ t).q)
    assert abs(f1 - f0) <= 1e-10 * f0


def test_recover_c_pythagoras_and_lstsq(complex_pair):
    a, b = complex_pair(12, 5, 3, seed=4)
    c = recover_c(a, b)
    q = mgs_orthonormalize(b).q
    lhs = np.linalg.norm(a - b @ c.conj().T) ** 2 + np.linalg.norm(a.conj().T @ q) ** 2
    assert abs(lhs - np.linalg.norm(a) ** 2) <= 1e-10 * np.linalg.norm(a) ** 2
    ch = np.linalg.lstsq(b, a, rcond=None)[0]
    np.testing.assert_allclose(c, ch.conj().T, atol=1e-12)


def test_exact_fit_clamps_to_zero(complex_pair):
    _, b = complex_pair(8, 1, 3, seed=5)
    a = b @ np.array([[1.0, 2.0], [0.5j, 0.0], [0.0, -1.0]])
    assert objective_value(a, mgs_orthonormalize(b).q) < 1e-7 * np.linalg.norm(a)
    assert projection_residual(a, mgs_orthonormalize(b).q) < 1e-14 * np.linalg.norm(a)


def test_rank_deficient_reports_column(complex_pair):
    _, b = complex_pair(6, 1, 3, seed=6)
    b[:, 2] = 2 * b[:, 0] - 1j * b[:, 1]
    with pytest.raises(RankDeficient) as err:
        mgs_orthonormalize(b)
    assert err.value.column == 2
    with pytest.raises(RankDeficient):
        mgs_qr(b)
    with pytest.raises(RankDeficient):
        cgs_orthonormalize(b)


def test_input_validation():
    with pytest.raises(ValueError):
        mgs_orthonormalize(np.ones((2, 3)))
    with pytest.raises(ValueError):
        as_matrix(np.array([1.0, np.nan])[:, None])
    with pytest.raises(ValueError):
        as_matrix(np.ones(3))
    with pytest.raises(ValueError):
        objective_value(np.ones((3, 2)), np.eye(4)[:, :2])


def test_stacked_evaluation_matches_loop(complex_pair):
    a, _ = complex_pair(9, 4, 1, seed=7)
    rng = XorShift64Star(8)
    stack = np.stack([rng.complex_matrix(9, 3) for _ in range(5)])
    q = mgs_orthonormalize(stack).q
    vals = objective_value(a, q)
    for k in range(5):
        assert vals[k] == pytest.approx(objective_value(a, mgs_orthonormalize(stack[k]).q), rel=1e-14)
    np.testing.assert_allclose(projection_residual(a, q), vals, rtol=1e-10)


def test_projection_residual_empty_basis():
    a = np.arange(6.0).reshape(3, 2)
    assert projection_residual(a, np.zeros((3, 0))) == pytest.approx(np.linalg.norm(a))


def test_cgs_matches_mgs_when_well_conditioned(complex_pair):
    _, b = complex_pair(30, 1, 6, seed=9)
    np.testing.assert_allclose(cgs_orthonormalize(b).q, mgs_orthonormalize(b).q, atol=1e-13)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32), m=st.integers(2, 12), n=st.integers(1, 6), data=st.data())
def test_objective_bounds_and_unitary_mixing(seed, m, n, data):
    r = data.draw(st.integers(1, m - 1))
    rng = XorShift64Star(seed)
    a, b = rng.complex_matrix(m, n), rng.complex_matrix(m, r)
    f = objective_value(a, mgs_orthonormalize(b).q)
    assert 0.0 <= f <= np.linalg.norm(a) * (1 + 1e-12)
    u = np.linalg.qr(rng.complex_matrix(r, r))[0]
    g = objective_value(a, mgs_orthonormalize(b @ u).q)
    # compare squares: the square root amplifies rounding near f = 0
    assert abs(f * f - g * g) <= 1e-12 * np.linalg.norm(a) ** 2
