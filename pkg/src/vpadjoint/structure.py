"""Structured factors B(sigma) and the pull-back of the B-gradient to sigma.

A model maps k real parameters to an m x r complex factor.  ``adjoint``
takes a gradient panel G in the complex convention of ``adjoint.py``
(G = df/dRe B + 1j df/dIm B) and returns df/dsigma, i.e. it is the transpose
of ``jvp`` under the pairing <X, G> = Re sum(conj(G) * X).
"""
from abc import ABC, abstractmethod

import numpy as np

from .adjoint import central_difference, gradient_ags, gradient_amgs
from .errors import ObjectiveNearZero
from .matcore import as_matrix, mgs_orthonormalize, objective_value, projection_residual


def _sigma(sigma, k):
    s = np.asarray(sigma, dtype=float)
    if s.shape != (k,):
        raise ValueError(f"expected {k} parameters, got shape {s.shape}")
    if not np.all(np.isfinite(s)):
        raise ValueError("parameters must be finite")
    return s


def _panel(g, m, r):
    g = np.asarray(g)
    if g.shape != (m, r):
        raise ValueError(f"expected a {m} x {r} panel, got {g.shape}")
    return g


class ParamModel(ABC):
    """Contract for a structured factor with ``k`` real parameters."""

    k: int
    m: int
    r: int
    kind: str

    @abstractmethod
    def build(self, sigma): ...

    @abstractmethod
    def jvp(self, sigma, v):
        """Directional derivative of ``build`` at sigma along v."""

    @abstractmethod
    def adjoint(self, sigma, g): ...

    @abstractmethod
    def describe(self):
        """Dimensions as a plain dict (used by the problem files)."""


class FreeModel(ParamModel):
    """Unstructured B: sigma = [Re(B).ravel(), Im(B).ravel()]."""

    kind = "free"

    def __init__(self, m, r):
        self.m, self.r = m, r
        self.k = 2 * m * r

    def build(self, sigma):
        s = _sigma(sigma, self.k)
        half = self.m * self.r
        return (s[:half] + 1j * s[half:]).reshape(self.m, self.r)

    @staticmethod
    def flatten(b):
        b = np.asarray(b)
        return np.concatenate([b.real.ravel(), b.imag.ravel()])

    def jvp(self, sigma, v):
        return self.build(v)

    def adjoint(self, sigma, g):
        return self.flatten(_panel(g, self.m, self.r))

    def describe(self):
        return {"m": self.m, "r": self.r}


class KroneckerModel(ParamModel):
    """Columns b_i = p_i (x) q_i with p_i, q_i in R^n.

    sigma = [p_1, q_1, ..., p_R, q_R]; m = n^2, r = R.  Element
    a*n + beta of p (x) q is p[a] * q[beta], which is ``np.kron`` and also
    the C-order reshape of the column to an n x n panel.
    """

    kind = "kronecker"

    def __init__(self, n, R):
        self.n, self.R = n, R
        self.m, self.r, self.k = n * n, R, 2 * n * R

    def factors(self, sigma):
        s = _sigma(sigma, self.k).reshape(self.R, 2, self.n)
        return s[:, 0, :], s[:, 1, :]

    def build(self, sigma):
        p, q = self.factors(sigma)
        return np.einsum("ia,ib->abi", p, q).reshape(self.m, self.r).astype(np.complex128)

    def jvp(self, sigma, v):
        p, q = self.factors(sigma)
        vp, vq = self.factors(v)
        d = np.einsum("ia,ib->abi", vp, q) + np.einsum("ia,ib->abi", p, vq)
        return d.reshape(self.m, self.r).astype(np.complex128)

    def adjoint(self, sigma, g):
        p, q = self.factors(sigma)
        M = _panel(g, self.m, self.r).real.T.reshape(self.R, self.n, self.n)
        dp = np.einsum("iab,ib->ia", M, q)
        dq = np.einsum("iab,ia->ib", M, p)
        return np.stack([dp, dq], axis=1).ravel()

    def describe(self):
        return {"n": self.n, "R": self.R}


class ExponentialModel(ParamModel):
    """Factor with entries exp(1j * sigma_kl), sigma stored row-major K x L.

    For data a_jk ~ sum_l c_jl exp(1j sigma_kl) the exponential factor is on
    the right.  Fitting the transpose, A^T ~ E conj(C)^H with
    E = exp(1j sigma), puts it in the structured slot; ``orient`` does that
    transpose.  The phases are independent per entry.
    """

    kind = "exponential"

    def __init__(self, K, L):
        self.K, self.L = K, L
        self.m, self.r, self.k = K, L, K * L

    @staticmethod
    def orient(data):
        """J x K data matrix -> the K x J matrix the framework fits."""
        return np.asarray(data).T

    def build(self, sigma):
        return np.exp(1j * _sigma(sigma, self.k).reshape(self.K, self.L))

    def jvp(self, sigma, v):
        e = self.build(sigma)
        return 1j * e * np.asarray(v, dtype=float).reshape(self.K, self.L)

    def adjoint(self, sigma, g):
        e = self.build(sigma)
        return np.real(np.conj(_panel(g, self.m, self.r)) * 1j * e).ravel()

    def describe(self):
        return {"K": self.K, "L": self.L}


def make_model(kind, **dims):
    kind = kind.lower()
    if kind == "free":
        return FreeModel(dims["m"], dims["r"])
    if kind == "kronecker":
        return KroneckerModel(dims["n"], dims["R"])
    if kind == "exponential":
        return ExponentialModel(dims["K"], dims["L"])
    raise ValueError(f"unknown model kind {kind!r}")


def build(model, sigma):
    return model.build(sigma)


def adjoint_sigma(model, sigma, g):
    return model.adjoint(sigma, g)


def objective(model, a, sigma, a_norm2=None):
    """f(sigma) through the plain forward pass."""
    q = mgs_orthonormalize(model.build(sigma)).q
    return objective_value(a, q, a_norm2)


def residual(model, a, sigma):
    """f(sigma) from the explicit residual ||A - Q Q^H A||_F."""
    return projection_residual(a, mgs_orthonormalize(model.build(sigma)).q)


def value_and_gradient(model, a, sigma, method="amgs", *, a_norm2=None, grad_tol_f=None, squared=False):
    """f(sigma) and df/dsigma.

    ``method`` picks the B-gradient route: "amgs" or "ags" followed by the
    model adjoint, or "fd" for central differences directly over sigma.
    With ``squared=True`` the second value is the gradient of f^2 / 2, which
    stays accurate at an exact fit and never raises ObjectiveNearZero.
    """
    a = as_matrix(a, "a")
    if a.shape[0] != model.m:
        raise ValueError(f"model has m={model.m} rows, data has {a.shape[0]}")
    if a_norm2 is None:
        a_norm2 = float(np.sum(np.abs(a) ** 2))
    sigma = _sigma(sigma, model.k)
    if method == "fd":
        # difference the explicit residual: ||A||^2 - ||A^H Q||^2 loses all
        # accuracy below ~sqrt(eps) ||A||, and f has a kink at 0
        f = residual(model, a, sigma)
        d2 = central_difference(lambda s: 0.5 * residual(model, a, s) ** 2, sigma)
        if squared:
            return f, d2
        thr = grad_tol_f if grad_tol_f is not None else 1e-10 * np.sqrt(a_norm2)
        if f <= thr:
            raise ObjectiveNearZero(f, thr)
        return f, d2 / f
    route = {"amgs": gradient_amgs, "ags": gradient_ags}.get(method)
    if route is None:
        raise ValueError(f"unknown gradient method {method!r}")
    res = route(a, model.build(sigma), a_norm2=a_norm2, grad_tol_f=grad_tol_f, squared=squared)
    return res.f, model.adjoint(sigma, res.g)
