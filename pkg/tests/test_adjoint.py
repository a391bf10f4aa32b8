import numpy as np
import pytest

from conftest import rel
from vpadjoint.adjoint import (
    account_words,
    central_difference,
    evaluate_mgs,
    fd_complex,
    gradient_ags,
    gradient_amgs,
    gradient_fd,
    model_flops,
)
from vpadjoint.errors import ObjectiveNearZero, RankDeficient
from vpadjoint.instrument import FlopCounter, Workspace
from vpadjoint.blocksystem import gradient_blocksystem
from vpadjoint.matcore import mgs_orthonormalize, objective_value, projection_residual


def test_hand_computed_case():
    # A = e1, b = (1, 1): Q = b / sqrt2, f^2 = 1 - 1/2
    a = np.array([[1.0], [0.0]])
    b = np.array([[1.0], [1.0]])
    h = np.sqrt(2) / 4
    for route in (gradient_amgs, gradient_ags):
        res = route(a, b)
        assert res.f == pytest.approx(1 / np.sqrt(2), rel=1e-15)
        np.testing.assert_allclose(res.g[:, 0], [-h, h], atol=1e-15)
    np.testing.assert_allclose(fd_complex(gradient_fd(a, b))[:, 0], [-h, h], atol=1e-9)


@pytest.mark.parametrize("m,n,r", [(5, 3, 1), (12, 4, 3), (30, 10, 6), (9, 20, 8)])
def test_amgs_and_ags_match_fd(complex_pair, m, n, r):
    a, b = complex_pair(m, n, r, seed=m + r)
    g = gradient_amgs(a, b).g
    fd = fd_complex(gradient_fd(a, b))
    assert rel(g, fd) < 1e-7
    assert rel(gradient_ags(a, b).g, g) < 1e-12


def test_single_column_routes_identical(complex_pair):
    a, b = complex_pair(10, 4, 1, seed=3)
    assert np.array_equal(gradient_amgs(a, b).g, gradient_ags(a, b).g)


def test_gradient_orthogonal_to_column_scaling(complex_pair):
    a, b = complex_pair(25, 7, 5, seed=11)
    g = gradient_amgs(a, b).g
    dots = np.real(np.sum(b.conj() * g, axis=0))
    assert np.all(np.abs(dots) <= 1e-10 * np.linalg.norm(b, axis=0) * np.linalg.norm(g, axis=0))


def test_directional_derivative(complex_pair):
    a, b = complex_pair(9, 5, 3, seed=12)
    _, d = complex_pair(9, 1, 3, seed=13)
    g = gradient_amgs(a, b).g

    def f(t):
        return objective_value(a, mgs_orthonormalize(b + t[0] * d).q)

    slope = central_difference(f, np.zeros(1))[0]
    assert np.real(np.sum(np.conj(g) * d)) == pytest.approx(slope, rel=1e-7)


def test_squared_gradient(complex_pair):
    a, b = complex_pair(10, 3, 2, seed=14)
    res = gradient_amgs(a, b)
    for route in (gradient_amgs, gradient_ags):
        sq = route(a, b, squared=True)
        np.testing.assert_allclose(sq.g, res.f * res.g, rtol=1e-12, atol=1e-14)


def test_exact_fit_raises_unless_squared(complex_pair):
    _, b = complex_pair(6, 1, 2, seed=15)
    a = b @ np.array([[1.0, 0.5], [2.0j, 0.0]])
    for route in (gradient_amgs, gradient_ags):
        with pytest.raises(ObjectiveNearZero):
            route(a, b)
        assert np.max(np.abs(route(a, b, squared=True).g)) < 1e-12


def test_rank_deficient_propagates(complex_pair):
    a, b = complex_pair(6, 2, 3, seed=16)
    b[:, 1] = 3j * b[:, 0]
    for route in (gradient_amgs, gradient_ags):
        with pytest.raises(RankDeficient) as err:
            route(a, b)
        assert err.value.column == 1


def test_shape_errors(complex_pair):
    a, b = complex_pair(6, 2, 3)
    with pytest.raises(ValueError):
        gradient_amgs(a, b[:5])
    with pytest.raises(ValueError):
        gradient_amgs(a[:2], b[:2])
    with pytest.raises(ValueError):
        gradient_fd(a, b, h=0)


def test_words_match_accounting(complex_pair):
    for m, n, r in [(7, 3, 2), (40, 9, 5)]:
        a, b = complex_pair(m, n, r)
        assert gradient_amgs(a, b).words == account_words("amgs", m, n, r) == 4 * m * r + r
        assert gradient_ags(a, b).words == account_words("ags", m, n, r) == 3 * m * r + r * (r + 1) // 2
        assert evaluate_mgs(a, b)[1] + 1 == account_words("fd", m, n, r)


def test_account_words_n_independent_and_validated():
    assert account_words("amgs", 1000, 100, 100) == account_words("amgs", 1000, 10, 100) == 400_100
    assert account_words("blocksys", 4, 2, 3) == 4 * 4 * 6
    with pytest.raises(ValueError):
        account_words("qr", 3, 3, 3)
    with pytest.raises(ValueError):
        account_words("amgs", 0, 3, 3)
    with pytest.raises(ValueError):
        model_flops("fd", 3, 3, 3)


def test_flop_counts_are_deterministic_and_near_model(complex_pair):
    m, n, r = 200, 32, 16
    a, b = complex_pair(m, n, r)
    a2 = float(np.sum(np.abs(a) ** 2))
    f1, f2 = gradient_amgs(a, b, a_norm2=a2).flops, gradient_amgs(a, b, a_norm2=a2).flops
    assert f1 == f2
    assert abs(f1 / model_flops("amgs", m, n, r) - 1) < 0.1
    fm = FlopCounter()
    f, _ = evaluate_mgs(a, b, a_norm2=a2, counter=fm)
    assert f == pytest.approx(objective_value(a, mgs_orthonormalize(b).q), rel=1e-12)
    assert abs(fm.total / model_flops("mgs", m, n, r) - 1) < 0.1
    assert f1 / fm.total < 4.5
    ags = gradient_ags(a, b, a_norm2=a2).flops
    assert abs(ags / model_flops("ags", m, n, r) - 1) < 0.1


def test_counter_accumulates_and_resets():
    fc = FlopCounter()
    fc.dot(4)
    fc.axpy(4)
    assert (fc.muls, fc.adds) == (8, 7)
    assert fc.real_flops == 6 * 8 + 2 * 7
    fc.reset()
    assert fc.total == 0


def test_workspace_tracks_peak():
    ws = Workspace()
    ws.panel("X", 3, 2)
    ws.vector("z", 4)
    ws.release("X")
    assert (ws.words, ws.peak) == (4, 10)
    assert ws.layout() == {"z": (4,)}
    with pytest.raises(KeyError):
        ws.vector("z", 1)


def test_near_exact_fit_uses_residual(complex_pair):
    # f ~ 1e-7 |A|: the difference of squares alone is only good to ~1e-8 |A|
    a0, b = complex_pair(8, 3, 2, seed=17)
    _, e = complex_pair(8, 3, 1, seed=18)
    a = b @ np.array([[1.0, 0.5, 0.0], [2.0j, 0.0, 1.0]]) + 1e-7 * e
    q = mgs_orthonormalize(b).q
    f_true = projection_residual(a, q)
    res = gradient_amgs(a, b)
    assert res.f == pytest.approx(f_true, rel=1e-8)
    assert res.words == account_words("amgs", 8, 3, 2)
    ags = gradient_ags(a, b)
    assert ags.f == pytest.approx(f_true, rel=1e-8)
    assert ags.words == account_words("ags", 8, 3, 2) + 8
    assert rel(ags.g, res.g) < 1e-6
    assert rel(gradient_blocksystem(a, b), res.g) < 1e-6
