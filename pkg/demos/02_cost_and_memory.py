"""Operation counts, workspace and timing per gradient method, and why
classical Gram-Schmidt is avoided.

Sizes are the standard benchmark grid.  FD at the large
sizes is timed as one forward pass times 4mr.

Run:  python3 demos/02_cost_and_memory.py
"""
import numpy as np

from vpadjoint import cgs_orthonormalize, mgs_orthonormalize, model_flops, orthogonality_defect
from vpadjoint.bench import DEFAULT_GRID, run_bench
from vpadjoint.problems import conditioned_factor

records = run_bench(DEFAULT_GRID, ("fd", "ags", "amgs", "blocksys"), repeats=3)

print(f"{'m':>5} {'n':>4} {'r':>4} {'method':>9} {'words':>12} {'ops':>14} {'time':>12}")
for rec in records:
    t = "-" if rec.elapsed_ns is None else f"{rec.elapsed_ns / 1e9:.3g}s" + ("*" if rec.extrapolated else "")
    ops = "-" if rec.flops is None else f"{rec.flops:.3g}"
    print(f"{rec.m:>5} {rec.n:>4} {rec.r:>4} {rec.method:>9} {rec.words:>12} {ops:>14} {t:>12}")
print("* extrapolated from one forward pass")

# %% how close the reverse sweep is to its leading-order count
for rec in records:
    if rec.method == "amgs":
        ratio = rec.flops / model_flops("amgs", rec.m, rec.n, rec.r)
        print(f"amgs {rec.m}x{rec.n}x{rec.r}: counted / 4mr(2r+n) = {ratio:.3f}")

amgs = {(r.m, r.n, r.r): r for r in records if r.method == "amgs"}
fd = {(r.m, r.n, r.r): r for r in records if r.method == "fd"}
cell = (1000, 100, 100)
print(f"\nFD / AMGS time at {cell}: {fd[cell].elapsed_ns / amgs[cell].elapsed_ns:.1e}")

# %% loss of orthogonality on a nearly collinear factor (condition 1e8)
ratios = []
for seed in range(10):
    b = conditioned_factor(100, 10, 1e8, seed)
    dc = orthogonality_defect(cgs_orthonormalize(b).q)
    dm = orthogonality_defect(mgs_orthonormalize(b).q)
    ratios.append(dc / dm)
print(f"\nCGS / MGS orthogonality defect, 10 seeds: median {np.median(ratios):.1e}")
