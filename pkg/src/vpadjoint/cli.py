"""Command-line entry point: ``gen``, ``gradcheck``, ``bench`` and ``solve``.

Exit codes: 0 on success, 1 on a tolerance breach (gradcheck) or a failed
solve under ``--strict``, 2 on bad input, shape errors and rank-deficient
factors.
"""
import argparse
import json
import shutil
import sys
from pathlib import Path

import numpy as np

from .adjoint import fd_complex, gradient_ags, gradient_amgs, gradient_fd
from .bench import DEFAULT_GRID, format_records, run_bench, run_solve_bench
from .blocksystem import gradient_blocksystem
from .errors import ObjectiveNearZero, RankDeficient, SizeCap
from .matfile import MatrixFormatError, write_matrix
from .problems import ProblemSpec, generate, load_spec, start_point
from .solve import SolveOptions, broyden_minimize
from .structure import residual

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


def _u64(text):
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def _methods(text):
    out = [t.strip().lower() for t in text.split(",") if t.strip()]
    bad = [t for t in out if t not in ("fd", "ags", "amgs", "blocksys")]
    if bad or not out:
        raise argparse.ArgumentTypeError(f"unknown method(s): {', '.join(bad) or text!r}")
    return out


def _grid(text):
    cells = []
    for part in text.split(";"):
        try:
            m, n, r = (int(v) for v in part.split(","))
        except ValueError:
            raise argparse.ArgumentTypeError(f"grid cell {part!r} is not m,n,r") from None
        if min(m, n, r) <= 0:
            raise argparse.ArgumentTypeError(f"grid cell {part!r} has a nonpositive size")
        cells.append((m, n, r))
    return cells


def _common(p):
    g = p.add_argument_group("problem")
    g.add_argument("--spec", type=Path, help="problem.json written by gen (overrides the flags below)")
    g.add_argument("--model", choices=("free", "kronecker", "exponential"), default="free")
    g.add_argument("--seed", type=_u64, default=0)
    g.add_argument("--m", type=int)
    g.add_argument("--n", type=int)
    g.add_argument("--r", type=int)
    g.add_argument("--base-n", dest="base_n", type=int)
    g.add_argument("--R", dest="R", type=int)
    g.add_argument("--K", dest="K", type=int)
    g.add_argument("--L", dest="L", type=int)
    g.add_argument("--noise", type=float, default=0.0)
    g.add_argument("--a-path", dest="a_path", help="explicit A matrix file")
    p.add_argument("--out", type=Path)
    p.add_argument("--format", choices=("csv", "json"), default="json")
    p.add_argument("--strict", action="store_true")


def build_parser():
    parser = argparse.ArgumentParser(prog="vpadjoint", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write A, the planted sigma and problem.json")
    _common(p)

    p = sub.add_parser("gradcheck", help="compare gradient methods at the seeded start")
    _common(p)
    p.add_argument("--method", type=_methods, default=["amgs", "ags"], help="comma list")
    p.add_argument("--reference", choices=("fd", "ags", "amgs", "blocksys"), default="fd")
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--corrupt", type=float, default=0.0, help=argparse.SUPPRESS)

    p = sub.add_parser("bench", help="flops, words and timings per method")
    _common(p)
    p.add_argument("--method", type=_methods, default=["fd", "ags", "amgs", "blocksys"])
    p.add_argument("--grid", type=_grid, help="cells 'm,n,r;m,n,r'; default: --m/--n/--r or the standard grid")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--solve", action="store_true", help="iteration counts of solves instead of gradient timings")
    p.add_argument("--seeds", type=int, default=1, help="solve bench: consecutive seeds from --seed")
    p.add_argument("--max-iters", dest="max_iters", type=int, default=5000)
    p.add_argument("--tol", type=float, default=1e-8)

    p = sub.add_parser("solve", help="Broyden minimization over sigma")
    _common(p)
    p.add_argument("--method", choices=("fd", "ags", "amgs"), default="amgs")
    p.add_argument("--max-iters", dest="max_iters", type=int, default=5000)
    p.add_argument("--tol", type=float, default=1e-8, help="grad_tol on max |df/dsigma|")
    return parser


def spec_from_args(args, seed=None):
    if args.spec is not None:
        spec = load_spec(args.spec)
        if seed is not None:
            spec.seed = seed
        return spec
    dims = {k: getattr(args, k) for k in ("m", "n", "r", "base_n", "R", "K", "L")}
    return ProblemSpec(args.model, seed=args.seed if seed is None else seed, noise=args.noise,
                       a_path=args.a_path, **dims)


def _emit(text, out):
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def cmd_gen(args):
    spec = spec_from_args(args)
    out = args.out or Path("problem")
    inst = generate(spec)
    out.mkdir(parents=True, exist_ok=True)
    if spec.a_path is not None:
        # generate() already parsed and shape-checked it
        shutil.copyfile(spec.a_path, out / "A.txt")
    else:
        write_matrix(out / "A.txt", inst.a)
    if inst.sigma_star is not None:
        write_matrix(out / "sigma.txt", inst.sigma_star, "real")
    (out / "problem.json").write_text(spec.to_json() + "\n")
    print(f"wrote {out}")
    return EXIT_OK


def _rel(x, ref):
    return float(np.max(np.abs(x - ref)) / max(np.max(np.abs(ref)), np.finfo(float).tiny))


def cmd_gradcheck(args):
    spec = spec_from_args(args)
    inst = generate(spec)
    model = spec.make_model()
    b = model.build(start_point(spec, model))
    routes = {
        "fd": lambda: fd_complex(gradient_fd(inst.a, b)),
        "amgs": lambda: gradient_amgs(inst.a, b).g,
        "ags": lambda: gradient_ags(inst.a, b).g,
        "blocksys": lambda: gradient_blocksystem(inst.a, b),
    }
    names = list(dict.fromkeys([args.reference] + args.method))
    grads = {}
    for name in names:
        grads[name] = np.array(routes[name]())
        if name != args.reference and args.corrupt:
            grads[name] *= 1.0 + args.corrupt
    width = max(len(n) for n in names) + 2
    print(f"max relative discrepancy, m={model.m} n={inst.a.shape[1]} r={model.r} (rows vs columns)")
    print(" " * width + "".join(f"{n:>{width + 8}}" for n in names))
    for row in names:
        print(f"{row:<{width}}" + "".join(f"{_rel(grads[row], grads[c]):>{width + 8}.3e}" for c in names))
    worst = max((_rel(grads[n], grads[args.reference]) for n in names if n != args.reference), default=0.0)
    ok = worst <= args.tol
    print(f"{'PASS' if ok else 'FAIL'}: worst vs {args.reference} = {worst:.3e} (tol {args.tol:.1e})")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_bench(args):
    if args.repeats <= 0:
        raise InputError("--repeats must be positive")
    if args.solve:
        specs = [spec_from_args(args, args.seed + k) for k in range(args.seeds)]
        methods = [m for m in args.method if m != "blocksys"]
        opts = SolveOptions(max_iters=args.max_iters, grad_tol=args.tol)
        records = run_solve_bench(specs, methods, opts)
    else:
        grid = args.grid
        if grid is None and None not in (args.m, args.n, args.r):
            grid = [(args.m, args.n, args.r)]
        records = run_bench(grid or DEFAULT_GRID, args.method, args.repeats, args.seed)
    _emit(format_records(records, args.format), args.out)
    return EXIT_OK


def cmd_solve(args):
    spec = spec_from_args(args)
    inst = generate(spec)
    model = spec.make_model()
    opts = SolveOptions(max_iters=args.max_iters, grad_tol=args.tol, method=args.method)
    rep = broyden_minimize(model, inst.a, start_point(spec, model), opts)
    a_norm = float(np.linalg.norm(inst.a))
    out = rep.to_dict()
    out["problem"] = json.loads(spec.to_json())
    out["a_norm"] = a_norm
    deficient = rep.termination.value == "RankDeficient"
    out["final_residual"] = None if deficient else float(residual(model, inst.a, rep.final_sigma))
    out["success"] = rep.termination.success
    _emit(json.dumps(out, indent=1) + "\n", args.out)
    if deficient:
        print(f"error: {rep.error}", file=sys.stderr)
        return EXIT_INPUT
    if args.strict and not rep.termination.success:
        return EXIT_FAIL
    return EXIT_OK


COMMANDS = {"gen": cmd_gen, "gradcheck": cmd_gradcheck, "bench": cmd_bench, "solve": cmd_solve}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (InputError, ValueError, MatrixFormatError, RankDeficient, SizeCap, ObjectiveNearZero,
            OSError, KeyError, TypeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
