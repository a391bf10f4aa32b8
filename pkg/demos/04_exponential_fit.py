"""Fitting data with a factor of unit-modulus entries exp(1j sigma).

The data are a_jk = sum_l c_jl exp(1j sigma_kl).  The exponential factor
sits on the right, so we fit the transpose, which puts it in the slot the
solver differentiates through.  Phases are only identifiable up to 2 pi
and, per column, up to the common phase absorbed by C.

Run:  python3 demos/04_exponential_fit.py
"""
import numpy as np

from vpadjoint import ProblemSpec, SolveOptions, broyden_minimize, generate, start_point
from vpadjoint.structure import residual

def fit(K, L, seed):
    spec = ProblemSpec("exponential", K=K, L=L, n=8, seed=seed)
    inst = generate(spec)
    model = spec.make_model()
    rep = broyden_minimize(model, inst.a, start_point(spec, model), SolveOptions(max_iters=500))
    return inst, model, rep, residual(model, inst.a, rep.final_sigma) / np.linalg.norm(inst.a)


stuck = None
for K, L in [(6, 2), (12, 3)]:
    f = np.array([fit(K, L, seed)[3] for seed in range(10)])
    print(f"K={K:>2} L={L}: exact fit (f/|A| <= 1e-8) on {np.sum(f <= 1e-8)}/10 seeds, "
          f"median f/|A| {np.median(f):.1e}")
    if f.max() > 1e-8:
        stuck = (K, L, int(np.argmax(f)))

# %% a failed start: the phases are periodic, so the landscape has many
# non-global basins and some starts never leave theirs
if stuck:
    inst, model, rep, f = fit(*stuck)
    print(f"\nK={stuck[0]} L={stuck[1]} seed {stuck[2]}: {rep.termination.value} after {rep.iterations} its, "
          f"|df/dsigma|_inf {rep.final_grad_norm:.1e}, f/|A| {f:.2e}")

# %% phases of a successful fit, relative to the first row so the per-column
# phase that C absorbs cancels; rows are sorted because columns may permute
inst, model, rep, f = fit(6, 2, 0)
d_fit = np.angle(model.build(rep.final_sigma)[1:] / model.build(rep.final_sigma)[:1])
d_true = np.angle(model.build(inst.sigma_star)[1:] / model.build(inst.sigma_star)[:1])
print(f"\nK=6 L=2 seed 0, f/|A| {f:.1e}")
print("relative phases, fitted:\n", np.round(np.sort(d_fit, axis=1), 3))
print("relative phases, planted:\n", np.round(np.sort(d_true, axis=1), 3))
