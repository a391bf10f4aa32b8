"""Objective and gradient of a projected low-rank fit, checked three ways.

We fit A (m x n) by B C^H.  For fixed B the best C is a least-squares
solve, so the fit quality is a function of B alone:

    f(B) = ||A - Q Q^H A||_F,   Q = orthonormal basis of span(B)

Run:  python3 demos/01_gradient_walkthrough.py
"""
import numpy as np

from vpadjoint import (
    gradient_amgs,
    gradient_blocksystem,
    gradient_fd,
    mgs_orthonormalize,
    objective_value,
    projection_residual,
    recover_c,
)
from vpadjoint.adjoint import fd_complex
from vpadjoint.rng import XorShift64Star

rng = XorShift64Star(2024)
m, n, r = 30, 8, 4
A = rng.complex_matrix(m, n)
B = rng.complex_matrix(m, r)

# the objective through the cheap identity and through the residual matrix
Q = mgs_orthonormalize(B).q
print("f (difference of squares) :", objective_value(A, Q))
print("f (explicit residual)     :", projection_residual(A, Q))

# the eliminated factor reproduces the same residual
C = recover_c(A, B)
print("||A - B C^H||_F           :", np.linalg.norm(A - B @ C.conj().T))

# %% reverse sweep vs central differences
# G[i, j] = df/dRe(b_ij) + 1j df/dIm(b_ij)
res = gradient_amgs(A, B)
G_fd = fd_complex(gradient_fd(A, B))
err = np.max(np.abs(res.g - G_fd)) / np.max(np.abs(G_fd))
print(f"\nreverse sweep vs FD      : max rel err {err:.1e}")
print(f"operations, words        : {res.flops} ops, {res.words} words (4mr + r = {4 * m * r + r})")

# rescaling a column does not move the span, so f is flat along b_i
dots = np.real(np.sum(B.conj() * res.g, axis=0))
print("Re<b_i, g_i>             :", np.array2string(dots, precision=1))

# %% tiny case: the explicitly assembled linear system gives the same numbers
A_s, B_s = A[:5, :3], B[:5, :2]
g1 = gradient_amgs(A_s, B_s).g
g2 = gradient_blocksystem(A_s, B_s)
print(f"\nblock system vs sweep (5x2): {np.max(np.abs(g1 - g2)):.1e}")
