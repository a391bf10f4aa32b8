import numpy as np
import pytest

from conftest import rel
from vpadjoint.adjoint import gradient_amgs
from vpadjoint.blocksystem import assemble, back_substitute, block_pattern, gradient_blocksystem
from vpadjoint.errors import ObjectiveNearZero, RankDeficient, SizeCap
from vpadjoint.rng import XorShift64Star

# nonzero blocks of [F, L] for four columns, row by row
PATTERN = {
    "q1": ["b1", "q1"],
    "u12": ["b2", "q1", "u12"],
    "q2": ["u12", "q2"],
    "u13": ["b3", "q1", "u13"],
    "u23": ["q2", "u13", "u23"],
    "q3": ["u23", "q3"],
    "u14": ["b4", "q1", "u14"],
    "u24": ["q2", "u14", "u24"],
    "u34": ["q3", "u24", "u34"],
    "q4": ["u34", "q4"],
}


def test_pattern_matches_four_column_pattern():
    rows, cols, mask = block_pattern(5, 4)
    assert rows == list(PATTERN)
    assert cols == ["b1", "b2", "b3", "b4"] + rows
    for k, row in enumerate(rows):
        assert sorted(np.array(cols)[mask[k]]) == sorted(PATTERN[row])
    assert mask.sum(axis=1).max() <= 3


def test_assembled_structure(complex_pair):
    a, b = complex_pair(5, 2, 3, seed=1)
    parts = assemble(a, b)
    L, w = parts["L"], 2 * 5
    nblk = L.shape[0] // w
    assert nblk == 3 * 4 // 2
    for k in range(nblk):
        np.testing.assert_array_equal(L[k * w:(k + 1) * w, k * w:(k + 1) * w], np.eye(w))
        assert not L[k * w:(k + 1) * w, (k + 1) * w:].any()
    x = back_substitute(L, parts["h"], w)
    np.testing.assert_allclose(x, np.linalg.solve(L.T, parts["h"]), atol=1e-12)


def test_real_blocks():
    # real B: the [Re; Re] corner of each block reduces to the real formulas
    rng = XorShift64Star(2)
    a, b = rng.real_matrix(4, 2), rng.real_matrix(4, 2)
    parts = assemble(a, b)
    FL = np.hstack([parts["F"], parts["L"]])
    w, m = 8, 4
    q1 = b[:, 0] / np.linalg.norm(b[:, 0])
    z = q1 @ b[:, 1]
    u12 = b[:, 1] - z * q1
    rho = np.linalg.norm(u12)
    q2 = u12 / rho

    def blk(row, col):
        return FL[row * w:row * w + m, col * w:col * w + m]

    # rows q1, u12, q2; columns b1, b2, q1, u12, q2
    np.testing.assert_allclose(blk(1, 1), q1[:, None] * q1 - np.eye(m), atol=1e-14)          # W
    np.testing.assert_allclose(blk(1, 2), z * np.eye(m) + np.outer(q1, b[:, 1]), atol=1e-14)  # V
    np.testing.assert_allclose(blk(2, 3), -(np.eye(m) - np.outer(q2, q2)) / rho, atol=1e-13)  # S


@pytest.mark.parametrize("m,n,r", [(2, 1, 1), (4, 3, 2), (6, 2, 3), (8, 5, 4)])
def test_matches_amgs(complex_pair, m, n, r):
    a, b = complex_pair(m, n, r, seed=m * r)
    assert rel(gradient_blocksystem(a, b), gradient_amgs(a, b).g) < 1e-10


def test_size_cap_and_errors(complex_pair):
    a, b = complex_pair(9, 2, 2)
    with pytest.raises(SizeCap):
        gradient_blocksystem(a, b)
    a, b = complex_pair(6, 2, 5)
    with pytest.raises(SizeCap):
        gradient_blocksystem(a, b)
    _, b = complex_pair(5, 1, 2, seed=3)
    with pytest.raises(ObjectiveNearZero):
        gradient_blocksystem(b @ np.ones((2, 3)), b)
    b[:, 1] = b[:, 0]
    with pytest.raises(RankDeficient):
        gradient_blocksystem(np.ones((5, 1)), b)
