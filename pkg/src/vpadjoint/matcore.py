"""Dense complex matrix kernels: MGS orthonormalization, the projected
objective and recovery of the eliminated linear factor.

Matrices are plain numpy arrays.  ``mgs_orthonormalize``, ``objective_value``
and ``projection_residual`` also accept stacks of shape ``(..., m, r)`` so a
batch of perturbed factors can be evaluated at once.
"""
from typing import NamedTuple

import numpy as np
import scipy.linalg

from .errors import RankDeficient

RANK_TOL = 1e-12


class OrthoResult(NamedTuple):
    q: np.ndarray
    t_norms: np.ndarray


def as_matrix(x, name="matrix"):
    """Return ``x`` as a finite complex128 array with at least two dims."""
    arr = np.asarray(x)
    if arr.ndim < 2:
        raise ValueError(f"{name} must be at least 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr.astype(np.complex128, copy=False)


def mgs_orthonormalize(b, rank_tol=RANK_TOL):
    """Orthonormalize the columns of ``b`` with modified Gram-Schmidt.

    Column i is deflated against q_0..q_{i-1} one at a time and then
    normalized; ``t_norms[..., i]`` is the norm of the deflated column just
    before normalization.

    Raises
    ------
    RankDeficient
        If a deflated column has norm ``<= rank_tol`` times its original norm.
    """
    b = as_matrix(b, "b")
    m, r = b.shape[-2:]
    if r > m:
        raise ValueError(f"need r <= m, got m={m}, r={r}")
    q = np.array(b, dtype=np.complex128, copy=True)
    t_norms = np.empty(b.shape[:-2] + (r,))
    for i in range(r):
        u = q[..., :, i]
        b_norm = np.linalg.norm(u, axis=-1)
        for j in range(i):
            qj = q[..., :, j]
            z = np.sum(qj.conj() * u, axis=-1)
            u -= qj * z[..., None]
        rho = np.linalg.norm(u, axis=-1)
        bad = rho <= rank_tol * b_norm
        if np.any(bad):
            ratio = np.min(np.where(b_norm > 0, rho / np.where(b_norm > 0, b_norm, 1), 0.0))
            raise RankDeficient(i, float(ratio))
        u /= rho[..., None]
        t_norms[..., i] = rho
    return OrthoResult(q, t_norms)


def cgs_orthonormalize(b, rank_tol=RANK_TOL):
    """Classical Gram-Schmidt: every projection coefficient of column i is
    taken against the original b_i in one block.  Kept for comparison only;
    it loses orthogonality roughly with the square of the condition number."""
    b = as_matrix(b, "b")
    m, r = b.shape[-2:]
    if r > m:
        raise ValueError(f"need r <= m, got m={m}, r={r}")
    q = np.empty_like(b)
    t_norms = np.empty(b.shape[:-2] + (r,))
    for i in range(r):
        bi = b[..., :, i]
        qp = q[..., :, :i]
        z = np.einsum("...mj,...m->...j", qp.conj(), bi)
        u = bi - np.einsum("...mj,...j->...m", qp, z)
        rho = np.linalg.norm(u, axis=-1)
        b_norm = np.linalg.norm(bi, axis=-1)
        if np.any(rho <= rank_tol * b_norm):
            raise RankDeficient(i)
        q[..., :, i] = u / rho[..., None]
        t_norms[..., i] = rho
    return OrthoResult(q, t_norms)


def orthogonality_defect(q):
    """max |Q^H Q - I| entrywise."""
    r = q.shape[-1]
    return float(np.max(np.abs(q.conj().swapaxes(-1, -2) @ q - np.eye(r))))


def objective_value(a, q, a_norm2=None):
    """sqrt(max(0, ||A||_F^2 - ||A^H Q||_F^2)) for orthonormal ``q``.

    Returns a float, or an array for stacked ``q``.
    """
    a = as_matrix(a, "a")
    if a.shape[-2] != q.shape[-2]:
        raise ValueError(f"row mismatch: a has {a.shape[-2]}, q has {q.shape[-2]}")
    if a_norm2 is None:
        a_norm2 = np.sum(np.abs(a) ** 2, axis=(-2, -1))
    w = a.conj().swapaxes(-1, -2) @ q
    f2 = a_norm2 - np.sum(w.real**2 + w.imag**2, axis=(-2, -1))
    f = np.sqrt(np.maximum(f2, 0.0))
    return float(f) if np.ndim(f) == 0 else f


def projection_residual(a, q):
    """||A - Q (Q^H A)||_F computed from the explicit residual matrix."""
    a = np.asarray(a, dtype=np.complex128)
    q = np.asarray(q, dtype=np.complex128)
    if q.shape[-1] == 0:
        return float(np.linalg.norm(a))
    if a.shape[-2] != q.shape[-2]:
        raise ValueError(f"row mismatch: a has {a.shape[-2]}, q has {q.shape[-2]}")
    res = a - q @ (q.conj().swapaxes(-1, -2) @ a)
    f = np.sqrt(np.sum(np.abs(res) ** 2, axis=(-2, -1)))
    return float(f) if np.ndim(f) == 0 else f


def mgs_qr(b, rank_tol=RANK_TOL):
    """Thin QR by modified Gram-Schmidt; returns (Q, R) with B = Q R."""
    b = as_matrix(b, "b")
    m, r = b.shape
    if r > m:
        raise ValueError(f"need r <= m, got m={m}, r={r}")
    q = b.copy()
    rr = np.zeros((r, r), dtype=np.complex128)
    for i in range(r):
        u = q[:, i]
        b_norm = np.linalg.norm(u)
        for j in range(i):
            rr[j, i] = np.vdot(q[:, j], u)
            u -= rr[j, i] * q[:, j]
        rho = np.linalg.norm(u)
        if rho <= rank_tol * b_norm:
            raise RankDeficient(i, rho / b_norm if b_norm else 0.0)
        rr[i, i] = rho
        u /= rho
    return q, rr


def recover_c(a, b, rank_tol=RANK_TOL):
    """Minimizer C of ||A - B C^H||_F for fixed full-rank B.

    With B = Q R, C^H = R^{-1} Q^H A, i.e. C = (Q^H A)^H R^{-H}; the normal
    equations are never formed.
    """
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    if a.shape[0] != b.shape[0]:
        raise ValueError(f"row mismatch: a has {a.shape[0]}, b has {b.shape[0]}")
    q, rr = mgs_qr(b, rank_tol)
    ch = scipy.linalg.solve_triangular(rr, q.conj().T @ a, lower=False)
    return ch.conj().T
