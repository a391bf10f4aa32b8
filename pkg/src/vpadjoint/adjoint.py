"""Gradient of the projected objective with respect to every entry of B.

Convention: f is real and B complex, so the gradient panel stores both real
partials in one complex number,

    G[i, j] = df/dRe(b_ij) + 1j * df/dIm(b_ij),

which makes df = Re(sum(conj(G) * dB)).  Under this pairing the reverse
recurrences for modified Gram-Schmidt come out exactly as

    g_i   <- (g_i - q_i q_i^H g_i) / ||t_i||
    alpha  = q_j^H g_i
    g_j   <- g_j - conj(z_j) g_i - conj(alpha) t_j
    g_i   <- g_i - alpha q_j

seeded with G = -(1/f) A (A^H Q); no extra factor of 2 or conjugation
appears (checked against central differences in the test-suite).

``gradient_amgs`` and ``gradient_ags`` run on a ``Workspace`` holding only
the arrays listed in ``account_words`` and use in-place BLAS level-1/2
kernels, so the reported ``words`` is the true auxiliary footprint.
"""
from dataclasses import dataclass, field
from math import sqrt

import numpy as np
from scipy.linalg import blas

from .errors import ObjectiveNearZero, RankDeficient
from .instrument import FlopCounter, Workspace
from .matcore import RANK_TOL, as_matrix, mgs_orthonormalize, objective_value

GRAD_TOL_F = 1e-10
# below this fraction of ||A|| the difference of squares has lost half its
# digits and f is recomputed from the explicit residual
REFINE_BELOW = 1e-4

_dotc = blas.zdotc
_axpy = blas.zaxpy
_nrm2 = blas.dznrm2
_scal = blas.zscal
_gemv = blas.zgemv


@dataclass
class GradientResult:
    f: float
    g: np.ndarray
    flops: int
    words: int
    counter: FlopCounter = field(default_factory=FlopCounter, repr=False)


def _fortran(x, name):
    return np.asfortranarray(as_matrix(x, name))


def _check_shapes(a, b):
    m, _ = a.shape
    if b.ndim != 2 or b.shape[0] != m:
        raise ValueError(f"b must be {m} x r, got {b.shape}")
    if b.shape[1] > m:
        raise ValueError(f"need r <= m, got m={m}, r={b.shape[1]}")


def frobenius2(a, fc=None):
    """||A||_F^2 by columns.  A per-problem constant: callers that evaluate
    many factors against one A compute it once and pass it as ``a_norm2``."""
    total = 0.0
    for k in range(a.shape[1]):
        total += _nrm2(a[:, k]) ** 2
    if fc is not None:
        fc.dot(a.shape[0] * a.shape[1])
    return total


def _objective_and_seed(a, Q, G, a_norm2, fc):
    """One sweep over the columns of A: accumulates ||A^H Q||^2 and, if G is
    given, G += A (A^H Q).  Uses O(1) scratch."""
    m, n = a.shape
    r = Q.shape[1]
    acc = 0.0
    for k in range(n):
        ak = a[:, k]
        for i in range(r):
            s = _dotc(Q[:, i], ak)  # q_i^H a_k
            acc += s.real * s.real + s.imag * s.imag
            if G is not None:
                _axpy(ak, G[:, i], a=s.conjugate())
    fc.dot(m * n * r)
    fc.muls += n * r
    fc.adds += n * r
    if G is not None:
        fc.axpy(m * n * r)
    fc.adds += 1
    fc.sqrts += 1
    return sqrt(max(a_norm2 - acc, 0.0))


def _residual_norm(a, Q, s, fc):
    """||A - Q Q^H A||_F one column of A at a time, with ``s`` (length m)
    as the only scratch."""
    m, n = a.shape
    r = Q.shape[1]
    acc = 0.0
    for k in range(n):
        np.copyto(s, a[:, k])
        for i in range(r):
            _axpy(Q[:, i], s, a=-_dotc(Q[:, i], s))
        acc += _nrm2(s) ** 2
    fc.dot(m * n * r)
    fc.axpy(m * n * r)
    fc.nrm2(m * n)
    fc.adds += n
    return sqrt(acc)


def _mgs_forward(B, Q, Z, fc, rank_tol):
    m, r = B.shape
    for i in range(r):
        u = Q[:, i]
        np.copyto(u, B[:, i])
        zz = 0.0
        for j in range(i):
            z = _dotc(Q[:, j], u)
            _axpy(Q[:, j], u, a=-z)
            zz += z.real * z.real + z.imag * z.imag
        fc.dot(m * i)
        fc.axpy(m * i)
        rho = _nrm2(u)
        fc.nrm2(m)
        # ||b_i||^2 = rho^2 + sum |z_j|^2 for an orthonormal prefix
        fc.muls += i + 1
        fc.adds += i + 1
        b_norm = sqrt(rho * rho + zz)
        if rho <= rank_tol * b_norm:
            raise RankDeficient(i, rho / b_norm if b_norm else 0.0)
        _scal(1.0 / rho, u)
        fc.divs += 1
        fc.scal(m)


def _threshold(a_norm2, grad_tol_f):
    if grad_tol_f is None:
        return GRAD_TOL_F * sqrt(a_norm2)
    return grad_tol_f


def _scale_seed(G, f, a_norm2, grad_tol_f, squared, fc):
    if squared:
        # gradient of f^2 / 2: no division, so fine at an exact fit
        G *= -1.0
        fc.scal(G.size)
        return
    thr = _threshold(a_norm2, grad_tol_f)
    if f <= thr:
        raise ObjectiveNearZero(f, thr)
    G *= -1.0 / f
    fc.divs += 1
    fc.scal(G.size)


def evaluate_mgs(a, b, *, a_norm2=None, rank_tol=RANK_TOL, counter=None):
    """Objective only, on the same kernels and counting as ``gradient_amgs``.

    Returns ``(f, words)``; the only auxiliary panel is Q.
    """
    a = _fortran(a, "a")
    b = _fortran(b, "b")
    _check_shapes(a, b)
    m, r = b.shape
    fc = counter if counter is not None else FlopCounter()
    ws = Workspace()
    Q = ws.panel("Q", m, r)
    if a_norm2 is None:
        a_norm2 = frobenius2(a, fc)
    for i in range(r):
        u = Q[:, i]
        np.copyto(u, b[:, i])
        for j in range(i):
            z = _dotc(Q[:, j], u)
            _axpy(Q[:, j], u, a=-z)
        fc.dot(m * i)
        fc.axpy(m * i)
        rho = _nrm2(u)
        fc.nrm2(m)
        b_norm = _nrm2(b[:, i])
        if rho <= rank_tol * b_norm:
            raise RankDeficient(i, rho / b_norm if b_norm else 0.0)
        _scal(1.0 / rho, u)
        fc.divs += 1
        fc.scal(m)
    f = _objective_and_seed(a, Q, None, a_norm2, fc)
    return f, ws.peak


def gradient_amgs(a, b, *, a_norm2=None, grad_tol_f=None, rank_tol=RANK_TOL, counter=None, squared=False):
    """Gradient of f over B by the reverse MGS sweep with recomputation.

    Workspace is B, Q, T, G (m x r each) and Z (r): the deflation
    trajectory t_1..t_i of column i is rebuilt in T from B and Q at each
    reverse step instead of being stored for all columns.

    Near an exact fit f is recomputed from the explicit residual, using a
    column of T as scratch.  Raises ``ObjectiveNearZero`` when f is at
    exact-fit level (the gradient
    of the square root is singular there) and ``RankDeficient`` from the
    forward pass.  ``squared=True`` returns the gradient of f^2 / 2 instead,
    which never raises the former.
    """
    a = _fortran(a, "a")
    b = as_matrix(b, "b")
    _check_shapes(a, b)
    m, r = b.shape
    fc = counter if counter is not None else FlopCounter()
    ws = Workspace()
    B = ws.panel("B", m, r)
    Q = ws.panel("Q", m, r)
    T = ws.panel("T", m, r)
    G = ws.panel("G", m, r)
    Z = ws.vector("Z", r)
    np.copyto(B, b)
    if a_norm2 is None:
        a_norm2 = frobenius2(a, fc)

    _mgs_forward(B, Q, Z, fc, rank_tol)
    f = _objective_and_seed(a, Q, G, a_norm2, fc)
    if f <= REFINE_BELOW * sqrt(a_norm2):
        f = _residual_norm(a, Q, T[:, 0], fc)  # T is idle until the sweep
    _scale_seed(G, f, a_norm2, grad_tol_f, squared, fc)

    for i in range(r - 1, -1, -1):
        # rebuild t_1..t_i for column i
        np.copyto(T[:, 0], B[:, i])
        for j in range(i):
            Z[j] = _dotc(Q[:, j], T[:, j])
            np.copyto(T[:, j + 1], T[:, j])
            _axpy(Q[:, j], T[:, j + 1], a=-Z[j])
        fc.dot(m * i)
        fc.axpy(m * i)
        rho = _nrm2(T[:, i])
        fc.nrm2(m)

        gi = G[:, i]
        qi = Q[:, i]
        s = _dotc(qi, gi)
        _axpy(qi, gi, a=-s)
        _scal(1.0 / rho, gi)
        fc.dot(m)
        fc.axpy(m)
        fc.divs += 1
        fc.scal(m)
        for j in range(i - 1, -1, -1):
            qj = Q[:, j]
            gj = G[:, j]
            alpha = _dotc(qj, gi)
            _axpy(gi, gj, a=-Z[j].conjugate())
            _axpy(T[:, j], gj, a=-alpha.conjugate())
            _axpy(qj, gi, a=-alpha)
        fc.dot(m * i)
        fc.axpy(3 * m * i)

    return GradientResult(f, G, fc.total, ws.peak, fc)


def gradient_ags(a, b, *, a_norm2=None, grad_tol_f=None, rank_tol=RANK_TOL, counter=None, squared=False):
    """Gradient of f over B through classical Gram-Schmidt.

    The projection coefficients of every column are kept in a packed upper
    triangle R of r(r+1)/2 words, so no recomputation is needed; workspace is
    B, Q, G and R.  Numerically inferior to ``gradient_amgs`` once B is
    ill-conditioned.  ``squared`` as in ``gradient_amgs``.
    """
    a = _fortran(a, "a")
    b = as_matrix(b, "b")
    _check_shapes(a, b)
    m, r = b.shape
    fc = counter if counter is not None else FlopCounter()
    ws = Workspace()
    B = ws.panel("B", m, r)
    Q = ws.panel("Q", m, r)
    G = ws.panel("G", m, r)
    R = ws.vector("R", r * (r + 1) // 2)
    np.copyto(B, b)
    if a_norm2 is None:
        a_norm2 = frobenius2(a, fc)

    for i in range(r):
        off = i * (i + 1) // 2
        u = Q[:, i]
        np.copyto(u, B[:, i])
        if i:
            _gemv(1.0, Q[:, :i], B[:, i], beta=0.0, y=R[off:off + i], trans=2, overwrite_y=1)
            _gemv(-1.0, Q[:, :i], R[off:off + i], beta=1.0, y=u, overwrite_y=1)
            fc.gemv(m, i)
            fc.ger(m, i)
        rho = _nrm2(u)
        b_norm = _nrm2(B[:, i])
        fc.nrm2(m)
        fc.nrm2(m)
        if rho <= rank_tol * b_norm:
            raise RankDeficient(i, rho / b_norm if b_norm else 0.0)
        R[off + i] = rho
        _scal(1.0 / rho, u)
        fc.divs += 1
        fc.scal(m)

    f = _objective_and_seed(a, Q, G, a_norm2, fc)
    if f <= REFINE_BELOW * sqrt(a_norm2):
        # no idle panel here: near an exact fit AGS needs m more words
        f = _residual_norm(a, Q, ws.vector("S", m), fc)
    _scale_seed(G, f, a_norm2, grad_tol_f, squared, fc)

    for i in range(r - 1, -1, -1):
        off = i * (i + 1) // 2
        rho = R[off + i].real
        gi = G[:, i]
        qi = Q[:, i]
        s = _dotc(qi, gi)
        _axpy(qi, gi, a=-s)
        _scal(1.0 / rho, gi)
        fc.dot(m)
        fc.axpy(m)
        fc.divs += 1
        fc.scal(m)
        if not i:
            continue
        # gi now holds the adjoint of the deflated column; it must stay fixed
        # while the coefficient adjoints are formed, so they go into R.
        for j in range(i):
            alpha = _dotc(Q[:, j], gi)
            gj = G[:, j]
            _axpy(gi, gj, a=-R[off + j].conjugate())
            _axpy(B[:, i], gj, a=-alpha.conjugate())
            R[off + j] = alpha
        _gemv(-1.0, Q[:, :i], R[off:off + i], beta=1.0, y=gi, overwrite_y=1)
        fc.dot(m * i)
        fc.axpy(2 * m * i)
        fc.ger(m, i)

    return GradientResult(f, G, fc.total, ws.peak, fc)


def central_difference(fun, x, rel_step=1e-6):
    """Central-difference gradient of a scalar function of a real vector,
    step ``rel_step * (1 + |x_l|)`` per coordinate."""
    x = np.array(x, dtype=float)
    grad = np.empty_like(x)
    for l in range(x.size):
        h = rel_step * (1.0 + abs(x[l]))
        old = x[l]
        x[l] = old + h
        fp = fun(x)
        x[l] = old - h
        fm = fun(x)
        x[l] = old
        grad[l] = (fp - fm) / (2.0 * h)
    return grad


def gradient_fd(a, b, h=1e-6, *, rank_tol=RANK_TOL, batch=4096):
    """Central differences of the objective over each real coordinate of B.

    Returns an (m, r, 2) array of (df/dRe b_ij, df/dIm b_ij).  The step is
    ``h * (1 + |b_ij|)``.  Perturbed factors are evaluated in stacks of at
    most ``batch`` copies.
    """
    if h <= 0:
        raise ValueError("h must be positive")
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    _check_shapes(a, b)
    m, r = b.shape
    a_norm2 = float(np.sum(np.abs(a) ** 2))
    steps = h * (1.0 + np.abs(b))
    # coordinate c = 2*(i*r + j) + part
    coords = [(i, j, p) for i in range(m) for j in range(r) for p in (0, 1)]
    out = np.empty((m, r, 2))
    for start in range(0, len(coords), max(batch // 2, 1)):
        chunk = coords[start:start + max(batch // 2, 1)]
        stack = np.repeat(b[None], 2 * len(chunk), axis=0)
        for c, (i, j, p) in enumerate(chunk):
            d = steps[i, j] * (1j if p else 1.0)
            stack[2 * c, i, j] += d
            stack[2 * c + 1, i, j] -= d
        q = mgs_orthonormalize(stack, rank_tol).q
        vals = objective_value(a, q, a_norm2)
        for c, (i, j, p) in enumerate(chunk):
            out[i, j, p] = (vals[2 * c] - vals[2 * c + 1]) / (2.0 * steps[i, j])
    return out


def fd_complex(d):
    """Pack an (m, r, 2) FD result into the complex gradient convention."""
    return d[..., 0] + 1j * d[..., 1]


METHODS = ("fd", "ags", "amgs", "blocksys")


def account_words(method, m, n, r):
    """Analytic peak auxiliary words (complex) for a gradient method.

    amgs      4mr + r       panels B, Q, T, G and the r-vector Z
    ags       3mr + r(r+1)/2  panels B, Q, G and the packed coefficients
                            (plus m when f < REFINE_BELOW ||A||)
    fd        mr + 1        Q of one forward pass and the saved entry
    blocksys  m * mr(r+1)/2 one m-block row per intermediate vector
    None of them depend on n.
    """
    method = method.lower()
    if min(m, n, r) <= 0:
        raise ValueError("dimensions must be positive")
    if method == "amgs":
        return 4 * m * r + r
    if method == "ags":
        return 3 * m * r + r * (r + 1) // 2
    if method == "fd":
        return m * r + 1
    if method == "blocksys":
        return m * (m * r * (r + 1) // 2)
    raise ValueError(f"unknown method {method!r}")


def model_flops(method, m, n, r):
    """Leading-order operation counts: 4mr(2r+n) for amgs, 2mr(3r+2n) for
    ags and 2mr(r+n) for the forward evaluation ("mgs")."""
    method = method.lower()
    if method == "amgs":
        return 4 * m * r * (2 * r + n)
    if method == "ags":
        return 2 * m * r * (3 * r + 2 * n)
    if method == "mgs":
        return 2 * m * r * (r + n)
    raise ValueError(f"no flop model for {method!r}")
