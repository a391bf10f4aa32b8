"""Gradient by explicit assembly of the linearized MGS recurrence.

Every intermediate vector of the forward pass (the partially deflated
columns u_{ji} and the orthonormal q_i) gets one block row.  Row y reads

    dy - sum_x J_{y,x} dx = 0

where x runs over at most three earlier vectors.  Stacked, the rows form
[F, L] with L block lower triangular and identity on the diagonal; the
gradient is then  g = -F^T L^{-T} h  with h the sensitivity of f to the q_i.
The transposed system is solved by block back-substitution.

Complex vectors are carried as real 2m-vectors [Re; Im] so that the
conjugate-linear parts of the derivatives (the q^H terms) are represented
exactly.  Meant for tiny sizes only.
"""
import numpy as np

from .errors import ObjectiveNearZero, RankDeficient, SizeCap
from .adjoint import REFINE_BELOW
from .matcore import RANK_TOL, as_matrix, projection_residual

MAX_M = 8
MAX_R = 4


def _lin(M):
    """Real form of x -> M x."""
    return np.block([[M.real, -M.imag], [M.imag, M.real]])


def _antilin(N):
    """Real form of x -> N conj(x)."""
    return np.block([[N.real, N.imag], [N.imag, -N.real]])


def _labels(r):
    """Names of the intermediate vectors in forward order (1-based, as
    u_{j,i} = column i after deflation against q_j)."""
    out = []
    for i in range(1, r + 1):
        out += [f"u{j}{i}" for j in range(1, i)]
        out.append(f"q{i}")
    return out


def block_pattern(m, r):
    """Block nonzero pattern of [F, L].

    Returns (row_labels, col_labels, mask) where the columns are
    b_1..b_r followed by the intermediates and ``mask[k, l]`` marks a
    nonzero m x m block.
    """
    rows = _labels(r)
    cols = [f"b{i}" for i in range(1, r + 1)] + rows
    mask = np.zeros((len(rows), len(cols)), dtype=bool)
    col = {name: k for k, name in enumerate(cols)}
    for k, (_, deps) in enumerate(_dependencies(r)):
        for d in deps:
            mask[k, col[d]] = True
        mask[k, col[rows[k]]] = True
    return rows, cols, mask


def _dependencies(r):
    """(name, [inputs]) for every intermediate, in forward order."""
    deps = []
    for i in range(1, r + 1):
        prev = f"b{i}"
        for j in range(1, i):
            name = f"u{j}{i}"
            deps.append((name, [prev, f"q{j}"]))
            prev = name
        deps.append((f"q{i}", [prev]))
    return deps


def assemble(a, b, rank_tol=RANK_TOL):
    """Build the real block matrix [F, L], the right-hand side h and f.

    Returns a dict with keys ``F``, ``L``, ``h``, ``f``, ``rows``.
    """
    a = as_matrix(a, "a")
    b = as_matrix(b, "b")
    m, r = b.shape
    if m > MAX_M or r > MAX_R:
        raise SizeCap(f"block system limited to m <= {MAX_M}, r <= {MAX_R}; got m={m}, r={r}")
    if a.shape[0] != m:
        raise ValueError(f"row mismatch: a has {a.shape[0]}, b has {m}")

    # forward pass, keeping every intermediate vector
    vec = {f"b{i + 1}": b[:, i].copy() for i in range(r)}
    jac = {}  # (y, x) -> 2m x 2m real block of dy/dx
    eye = np.eye(m)
    for i in range(1, r + 1):
        u = vec[f"b{i}"]
        prev = f"b{i}"
        b_norm = np.linalg.norm(u)
        for j in range(1, i):
            q = vec[f"q{j}"]
            z = np.vdot(q, u)
            new = u - q * z
            name = f"u{j}{i}"
            jac[name, prev] = _lin(eye - np.outer(q, q.conj()))
            jac[name, f"q{j}"] = _lin(-z * eye) + _antilin(-np.outer(q, u))
            vec[name] = new
            u, prev = new, name
        rho = np.linalg.norm(u)
        if rho <= rank_tol * b_norm:
            raise RankDeficient(i - 1, rho / b_norm if b_norm else 0.0)
        q = u / rho
        jac[f"q{i}", prev] = _lin(eye / rho - np.outer(q, q.conj()) / (2 * rho)) + _antilin(
            -np.outer(q, q) / (2 * rho)
        )
        vec[f"q{i}"] = q

    Q = np.column_stack([vec[f"q{i}"] for i in range(1, r + 1)])
    W = a.conj().T @ Q
    f2 = np.sum(np.abs(a) ** 2) - np.sum(np.abs(W) ** 2)
    f = float(np.sqrt(max(f2, 0.0)))
    if f <= REFINE_BELOW * np.linalg.norm(a):
        f = projection_residual(a, Q)

    rows = _labels(r)
    cols = [f"b{i}" for i in range(1, r + 1)] + rows
    col = {name: k for k, name in enumerate(cols)}
    nr, nb = len(rows), r
    w = 2 * m
    FL = np.zeros((nr * w, len(cols) * w))
    for k, name in enumerate(rows):
        FL[k * w:(k + 1) * w, col[name] * w:(col[name] + 1) * w] = np.eye(w)
    for (y, x), blk in jac.items():
        k = rows.index(y)
        FL[k * w:(k + 1) * w, col[x] * w:(col[x] + 1) * w] = -blk

    h = np.zeros(nr * w)
    if f > 0:
        gq = -(a @ W) / f
        for i in range(1, r + 1):
            k = rows.index(f"q{i}")
            h[k * w:(k + 1) * w] = np.concatenate([gq[:, i - 1].real, gq[:, i - 1].imag])
    return {"F": FL[:, : nb * w], "L": FL[:, nb * w:], "h": h, "f": f, "rows": rows, "m": m, "r": r}


def back_substitute(L, h, block):
    """Solve L^T x = h for block lower triangular L with identity diagonal
    blocks, walking the block rows from the last one up."""
    nblk = L.shape[0] // block
    x = h.astype(float).copy()
    for k in range(nblk - 1, -1, -1):
        sk = slice(k * block, (k + 1) * block)
        for l in range(k + 1, nblk):
            sl = slice(l * block, (l + 1) * block)
            blk = L[sl, sk]
            if blk.any():
                x[sk] -= blk.T @ x[sl]
    return x


def gradient_blocksystem(a, b, *, grad_tol_f=None, rank_tol=RANK_TOL):
    """Gradient panel G (m x r, complex convention of ``adjoint``) from the
    explicitly assembled system."""
    parts = assemble(a, b, rank_tol)
    a = as_matrix(a, "a")
    thr = grad_tol_f if grad_tol_f is not None else 1e-10 * np.linalg.norm(a)
    if parts["f"] <= thr:
        raise ObjectiveNearZero(parts["f"], thr)
    m, r = parts["m"], parts["r"]
    lam = back_substitute(parts["L"], parts["h"], 2 * m)
    g = -parts["F"].T @ lam
    g = g.reshape(r, 2, m)
    return (g[:, 0, :] + 1j * g[:, 1, :]).T
