"""Benchmark harness: operation counts, workspace words and timings per
gradient method over a grid of (m, n, r), plus solve benches that record
iteration counts.

Times are medians of ``repeats`` runs on ``time.perf_counter_ns``.  FD above
``fd_cutoff`` real coordinates is not run in full: one forward pass is timed
and multiplied by 4mr (two evaluations per real coordinate), and the record
is flagged ``extrapolated``.
"""
import csv
import io
import json
import statistics
import time
from dataclasses import asdict, dataclass, fields

import numpy as np

from .adjoint import account_words, evaluate_mgs, gradient_ags, gradient_amgs, gradient_fd
from .blocksystem import MAX_M, MAX_R, gradient_blocksystem
from .errors import VarproError
from .instrument import FlopCounter
from .problems import generate, start_point
from .rng import XorShift64Star
from .solve import SolveOptions, broyden_minimize

# standard memory/timing grid
DEFAULT_GRID = [(10, 2, 2), (100, 10, 10), (1000, 100, 100), (1000, 100, 10), (1000, 10, 100)]
FD_CUTOFF = 2000


@dataclass
class BenchRecord:
    method: str
    m: int
    n: int
    r: int
    flops: int | None = None
    words: int | None = None
    words_measured: int | None = None
    elapsed_ns: int | None = None
    repeats: int = 0
    extrapolated: bool = False
    iterations: int | None = None
    termination: str | None = None
    status: str = "ok"
    note: str = ""


def bench_instance(m, n, r, seed=0):
    """Random complex A (m x n) and B (m x r) from one stream."""
    rng = XorShift64Star(seed)
    return rng.complex_matrix(m, n), rng.complex_matrix(m, r)


def _median_ns(fun, repeats):
    times = []
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter_ns()
        out = fun()
        times.append(time.perf_counter_ns() - t0)
    return int(statistics.median(times)), out


def bench_cell(method, a, b, repeats=3, fd_cutoff=FD_CUTOFF):
    m, n = a.shape
    r = b.shape[1]
    rec = BenchRecord(method, m, n, r, words=account_words(method, m, n, r), repeats=repeats)
    try:
        if method in ("amgs", "ags"):
            route = gradient_amgs if method == "amgs" else gradient_ags
            rec.elapsed_ns, res = _median_ns(lambda: route(a, b), repeats)
            rec.flops, rec.words_measured = res.flops, res.words
        elif method == "fd":
            fc = FlopCounter()
            _, peak = evaluate_mgs(a, b, counter=fc)
            evals = 4 * m * r
            rec.flops = fc.total * evals
            rec.words_measured = peak + 1
            if 2 * m * r <= fd_cutoff:
                rec.elapsed_ns, _ = _median_ns(lambda: gradient_fd(a, b), repeats)
            else:
                t, _ = _median_ns(lambda: evaluate_mgs(a, b), repeats)
                rec.elapsed_ns = t * evals
                rec.extrapolated = True
                rec.note = f"one forward pass x {evals}"
        elif method == "blocksys":
            if m > MAX_M or r > MAX_R:
                rec.status = "skipped"
                rec.note = f"explicit system needs {rec.words} words; capped at m<={MAX_M}, r<={MAX_R}"
                rec.repeats = 0
            else:
                rec.elapsed_ns, _ = _median_ns(lambda: gradient_blocksystem(a, b), repeats)
        else:
            raise ValueError(f"unknown method {method!r}")
    except (VarproError, np.linalg.LinAlgError) as exc:
        rec.status = "error"
        rec.note = f"{type(exc).__name__}: {exc}"
    return rec


def run_bench(grid=None, methods=("fd", "ags", "amgs", "blocksys"), repeats=3, seed=0, fd_cutoff=FD_CUTOFF):
    """One record per (cell, method); failures are recorded, not raised."""
    records = []
    for m, n, r in grid or DEFAULT_GRID:
        a, b = bench_instance(m, n, r, seed)
        for method in methods:
            records.append(bench_cell(method, a, b, repeats, fd_cutoff))
    return records


def run_solve_bench(specs, methods=("fd", "ags", "amgs"), opts=None):
    """Iteration counts and termination of one solve per spec and
    gradient route, from the spec's seeded start."""
    opts = opts or SolveOptions()
    records = []
    for spec in specs:
        inst = generate(spec)
        model = spec.make_model()
        sigma0 = start_point(spec, model)
        m, n, r = model.m, inst.a.shape[1], model.r
        for method in methods:
            run_opts = SolveOptions(**{**asdict(opts), "method": method})
            t0 = time.perf_counter_ns()
            rep = broyden_minimize(model, inst.a, sigma0, run_opts)
            rec = BenchRecord(method, m, n, r, words=account_words(method, m, n, r),
                              elapsed_ns=time.perf_counter_ns() - t0, repeats=1,
                              iterations=rep.iterations, termination=rep.termination.value)
            if rep.error:
                rec.status, rec.note = "error", rep.error
            records.append(rec)
    return records


def format_records(records, fmt="csv"):
    if fmt == "json":
        return json.dumps([asdict(r) for r in records], indent=1) + "\n"
    if fmt != "csv":
        raise ValueError(f"format must be csv or json, not {fmt!r}")
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=[f.name for f in fields(BenchRecord)], lineterminator="\n")
    w.writeheader()
    for rec in records:
        w.writerow({k: ("" if v is None else v) for k, v in asdict(rec).items()})
    return buf.getvalue()
