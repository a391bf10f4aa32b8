"""Broyden quasi-Newton minimization over the structure parameters.

The iteration runs on a merit function of sigma.  By default this is

    phi(sigma) = f(sigma)^2 / (2 ||A||_F^2),   grad phi = f * df/dsigma / ||A||_F^2

which has the same minimizers as f but stays smooth at an exact fit, where f
itself has a cone-shaped minimum and df/dsigma does not vanish.  ``merit="f"``
runs on f directly.

A matrix H approximating the Jacobian of the merit gradient receives
Broyden's rank-one secant update

    H <- H + (y - H s) s^T / (s^T s)

after every accepted step; directions solve H d = -g and are globalized by
Armijo backtracking.  H starts as ||g_0|| * I, so the first step is a
unit-length steepest-descent step.
"""
from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np

from .adjoint import GRAD_TOL_F
from .errors import ObjectiveNearZero, RankDeficient
from .matcore import as_matrix
from .structure import residual, value_and_gradient


class Termination(str, Enum):
    GRAD_TOL = "GradTol"
    STEP_TOL = "StepTol"
    ITER_CAP = "IterCap"
    OBJECTIVE_NEAR_ZERO = "ObjectiveNearZero"
    RANK_DEFICIENT = "RankDeficient"

    @property
    def success(self):
        return self in (Termination.GRAD_TOL, Termination.OBJECTIVE_NEAR_ZERO)


@dataclass
class SolveOptions:
    max_iters: int = 5000
    grad_tol: float = 1e-8
    step_tol: float = 1e-12
    backtrack: float = 0.5
    armijo: float = 1e-4
    max_backtracks: int = 30
    method: str = "amgs"
    merit: str = "f2"
    grad_tol_f: float | None = None
    denom_tol: float = 1e-12
    min_cos: float = 1e-6
    curvature_reset: bool = False
    initial_step: float = 1.0
    value: str = "residual"

    def __post_init__(self):
        for name in ("max_iters", "grad_tol", "step_tol", "backtrack", "armijo", "max_backtracks", "denom_tol"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.backtrack < 1:
            raise ValueError("backtrack must be < 1")
        if self.merit not in ("f", "f2"):
            raise ValueError(f"merit must be 'f' or 'f2', not {self.merit!r}")
        if self.value not in ("residual", "formula"):
            raise ValueError(f"value must be 'residual' or 'formula', not {self.value!r}")
        if self.method not in ("amgs", "ags", "fd"):
            raise ValueError(f"unknown gradient method {self.method!r}")


@dataclass
class SolveReport:
    iterations: int
    termination: Termination
    f_history: list
    final_sigma: np.ndarray
    final_grad_norm: float
    restarts: int = 0
    # merit values and, per accepted step, (alpha, g.d) for auditing the
    # Armijo condition merit[t+1] <= merit[t] + c * alpha * g.d
    merit_history: list = field(default_factory=list)
    steps: list = field(default_factory=list)
    error: str | None = None
    options: dict = field(default_factory=dict)

    @property
    def final_f(self):
        return self.f_history[-1] if self.f_history else float("nan")

    def to_dict(self):
        d = asdict(self)
        d["termination"] = self.termination.value
        d["final_sigma"] = [float(x) for x in self.final_sigma]
        d["f_history"] = [float(x) for x in self.f_history]
        d["merit_history"] = [float(x) for x in self.merit_history]
        d["steps"] = [[float(a), float(s)] for a, s in self.steps]
        d["final_grad_norm"] = float(self.final_grad_norm)
        return d


@dataclass
class BroydenState:
    sigma: np.ndarray
    g: np.ndarray
    H: np.ndarray
    restarts: int = 0
    # inputs inspected by restart_policy
    step: np.ndarray | None = None
    dgrad: np.ndarray | None = None
    direction: np.ndarray | None = None
    denom_tol: float = 1e-12
    min_cos: float = 0.0
    curvature_reset: bool = False
    initial_step: float = 1.0
    value: str = "residual"
    reset: bool = False


def scaled_identity(g, step=1.0):
    scale = float(np.linalg.norm(g)) / step
    if not np.isfinite(scale) or scale == 0.0:
        scale = 1.0
    return scale * np.eye(g.size)


def _reset_matrix(state):
    s, y = state.step, state.dgrad
    if state.curvature_reset and s is not None and y is not None:
        sy = abs(float(s @ y))
        if sy > 0:
            scale = float(y @ y) / sy
            if np.isfinite(scale) and scale > 0:
                return scale * np.eye(state.g.size)
    return scaled_identity(state.g, state.initial_step)


def restart_policy(state):
    """Reset H to a scaled identity when the pending secant pair is
    degenerate or the pending direction fails the descent test.

    The pair (s, y) is degenerate when s^T s <= (denom_tol (1 + |sigma|))^2.
    A direction d fails when g.d >= -min_cos |g| |d| or is not finite; it is
    then replaced by the steepest-descent step of the reset matrix.  With
    ``curvature_reset`` the reset scale is y^T y / |s^T y| from the last
    pair when one is available, else |g|.
    """
    state.reset = False
    if state.step is not None:
        ss = float(state.step @ state.step)
        floor = (state.denom_tol * (1.0 + np.linalg.norm(state.sigma))) ** 2
        if not np.isfinite(ss) or ss <= floor:
            state.reset = True
            state.step = state.dgrad = None
    if state.direction is not None:
        d = state.direction
        ok = np.all(np.isfinite(d))
        if ok:
            slope = float(state.g @ d)
            ok = slope < -state.min_cos * np.linalg.norm(state.g) * np.linalg.norm(d)
        if not ok:
            state.reset = True
    if state.reset:
        state.H = _reset_matrix(state)
        state.restarts += 1
        if state.direction is not None:
            state.direction = -state.g / state.H[0, 0]
    return state


def _direction(H, g):
    try:
        return np.linalg.solve(H, -g)
    except np.linalg.LinAlgError:
        return np.full_like(g, np.nan)


def broyden_minimize(model, a, sigma0, opts=None, *, gradient=None):
    """Minimize the projected objective over sigma from ``sigma0``.

    ``gradient`` overrides the sigma -> (f, gradient of f^2 / 2) callable
    (default: ``value_and_gradient`` with ``opts.method``).  ``f_history`` records f at
    the start and after every accepted step.  Reaching exact-fit level
    (ObjectiveNearZero) is a success; a rank-deficient start ends the run
    with termination RankDeficient.  ``final_grad_norm`` is the max-norm of
    df/dsigma, the quantity ``grad_tol`` is tested on.
    """
    opts = opts or SolveOptions()
    a = as_matrix(a, "a")
    a_norm2 = float(np.sum(np.abs(a) ** 2))
    thr = opts.grad_tol_f if opts.grad_tol_f is not None else GRAD_TOL_F * np.sqrt(a_norm2)
    if gradient is None:
        def gradient(s):
            return value_and_gradient(model, a, s, opts.method, a_norm2=a_norm2, squared=True)

    def merit(s):
        f, h = gradient(s)
        if opts.value == "residual":
            # ||A||^2 - ||A^H Q||^2 is only good to ~eps ||A||^2, which stalls
            # the line search long before grad_tol is met
            f = residual(model, a, s)
        if f <= thr:
            raise ObjectiveNearZero(f, thr)
        df = h / f
        if opts.merit == "f2":
            return f, 0.5 * f * f / a_norm2, h / a_norm2, df
        return f, f, df, df

    sigma = np.array(sigma0, dtype=float)
    if not np.all(np.isfinite(sigma)):
        raise ValueError("sigma0 must be finite")
    meta = asdict(opts)
    f_hist, m_hist, steps = [], [], []

    def report(it, term, sig, gnorm, restarts=0, error=None):
        return SolveReport(it, term, f_hist, np.array(sig), gnorm, restarts, m_hist, steps, error, meta)

    try:
        f, phi, g, df = merit(sigma)
    except ObjectiveNearZero as exc:
        f_hist.append(exc.f)
        return report(0, Termination.OBJECTIVE_NEAR_ZERO, sigma, float("nan"))
    except RankDeficient as exc:
        return report(0, Termination.RANK_DEFICIENT, sigma, float("nan"), error=str(exc))
    f_hist.append(f)
    m_hist.append(phi)

    state = BroydenState(sigma, g, scaled_identity(g, opts.initial_step), denom_tol=opts.denom_tol,
                         min_cos=opts.min_cos, curvature_reset=opts.curvature_reset,
                         initial_step=opts.initial_step)
    it = 0
    while True:
        gnorm = float(np.max(np.abs(df)))
        if gnorm <= opts.grad_tol:
            term = Termination.GRAD_TOL
            break
        if it >= opts.max_iters:
            term = Termination.ITER_CAP
            break
        it += 1

        state.direction = _direction(state.H, state.g)
        restart_policy(state)
        fresh = state.reset
        while True:
            d = state.direction
            slope = float(state.g @ d)
            alpha = 1.0
            accepted = None
            for _ in range(opts.max_backtracks + 1):
                trial = state.sigma + alpha * d
                try:
                    f_new, phi_new, g_new, df_new = merit(trial)
                except ObjectiveNearZero as exc:
                    accepted = (trial, exc.f, None, None, None)
                    break
                except RankDeficient:
                    pass
                else:
                    if phi_new <= phi + opts.armijo * alpha * slope:
                        accepted = (trial, f_new, phi_new, g_new, df_new)
                        break
                alpha *= opts.backtrack
            if accepted is not None or fresh:
                break
            # the secant direction failed: fall back to steepest descent once
            state.H = _reset_matrix(state)
            state.restarts += 1
            state.direction = -state.g / state.H[0, 0]
            fresh = True

        if accepted is None:
            term = Termination.STEP_TOL
            break
        trial, f_new, phi_new, g_new, df = accepted
        f_hist.append(f_new)
        if g_new is None:
            state.sigma = trial
            term = Termination.OBJECTIVE_NEAR_ZERO
            break
        steps.append((alpha, slope))
        m_hist.append(phi_new)

        s = trial - state.sigma
        y = g_new - state.g
        state.sigma, state.g, phi = trial, g_new, phi_new
        state.step, state.dgrad, state.direction = s, y, None
        restart_policy(state)
        if not state.reset:
            state.H += np.outer(y - state.H @ s, s) / float(s @ s)
        if np.linalg.norm(s) <= opts.step_tol * (1.0 + np.linalg.norm(trial)):
            term = Termination.STEP_TOL
            break

    gnorm = float("nan") if term == Termination.OBJECTIVE_NEAR_ZERO else float(np.max(np.abs(df)))
    return report(it, term, state.sigma, gnorm, state.restarts)
