"""Command-line frontend: regression solves, flow pipelines, benchmarks, checks.

Exit statuses are fixed for CI scripting: 0 success, 2 parse or input error,
3 solver fault, 4 infeasible demands.  All commands are deterministic given
(arguments, seed); wall-clock columns are written as zero unless --timing is
passed so repeated runs are byte identical.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from .baselines import SmoothedObjective, gd_general_norm, plain_cd
from .cdsolver import solve_box_linf
from .core import (
    RegressionInstance,
    read_matrix_file,
    reduce_to_unit_box,
    sign_double,
)
from .errors import InfeasibleError, InputError, SolverFault
from .flow import dinic_oracle, exact_unit_maxflow, flow_to_regress
from .graphs import FlowSolution, incidence_apply, read_dimacs, write_flow_file
from .mirrorprox import solve_flow_regress
from .sampling import make_rng
from .simplexmaint import ReferenceSimplex, SimplexMaintainer

SOLVERS = ("cd-l2", "cd-diag", "mirror-prox", "gd", "plain-cd", "dinic")


def build_parser():
    p = argparse.ArgumentParser(
        prog="linfflow",
        description="Box-constrained max-residual regression and max-flow solvers",
    )
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, solver_default="cd-l2"):
        sp.add_argument("--input", required=True, help="instance file")
        sp.add_argument("--eps", type=float, default=1e-2)
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--solver", choices=SOLVERS, default=solver_default)
        sp.add_argument("--sparsity-s", type=float, default=None,
                        help="estimate of the squared l2 norm of the optimizer")
        sp.add_argument("--tau", type=float, default=1e-6)
        sp.add_argument("--trace", default=None, help="CSV trace output path")
        sp.add_argument("--output", default=None, help="solution output path")
        sp.add_argument("--format", choices=("dimacs", "linf-matrix"),
                        default=None, help="override input format sniffing")
        sp.add_argument("--timing", action="store_true",
                        help="record wall time in traces (breaks byte equality)")

    common(sub.add_parser("regress", help="solve a box-constrained instance"))
    common(sub.add_parser("maxflow", help="approximate max flow on DIMACS input"))
    common(sub.add_parser("exact-flow", help="exact unit-capacity max flow"))
    bench = sub.add_parser("bench", help="sweep eps and tabulate cost")
    common(bench)
    bench.add_argument("--eps-grid", default="0.1,0.05,0.025")
    common(sub.add_parser("verify", help="run recompute oracles on an instance"))
    return p


def _sniff_format(path, override):
    if override:
        return override
    with open(path) as fh:
        head = fh.read(64)
    return "linf-matrix" if head.startswith("linf-matrix") else "dimacs"


def _check_eps(eps):
    if not 0.0 < eps < 1.0:
        raise InputError("eps must lie in (0, 1)")


def _run_regress(args):
    _check_eps(args.eps)
    matrix, b = read_matrix_file(args.input)
    inst = RegressionInstance(matrix=matrix, b=b, epsilon=args.eps,
                              s=args.sparsity_s)
    if args.solver in ("cd-l2", "cd-diag"):
        res = solve_box_linf(inst, mode="l2" if args.solver == "cd-l2" else "diag",
                             seed=args.seed, timing=args.timing)
        value, x, rows = res.value, res.x, res.transcript_csv()
    elif args.solver == "mirror-prox":
        res = solve_flow_regress(inst, seed=args.seed, tau=args.tau,
                                 collect_transcript=True)
        value, x, rows = res.value, res.x, res.transcript_csv()
    elif args.solver in ("gd", "plain-cd"):
        m2, b2 = sign_double(matrix, b)
        alpha = args.eps / (2.0 * max(math.log(m2.n_rows), 1.0))
        obj = SmoothedObjective(m2, b2, alpha)
        budget = int(min(200_000, 16 * obj.linf_smoothness * matrix.n_cols
                         / args.eps + 100))
        if args.solver == "gd":
            tr = gd_general_norm(obj, obj.linf_smoothness, budget)
        else:
            tr = plain_cd(obj, np.maximum(obj.coord_smoothness(), 1e-12),
                          budget, seed=args.seed)
        x = np.clip(tr.x, -1.0, 1.0)
        value = inst.value_at(x)
        rows = "step,value\n" + "\n".join(
            f"{k},{v!r}" for k, v in enumerate(tr.values)) + "\n"
    else:
        raise InputError(f"solver {args.solver} does not apply to regress")
    if args.trace:
        with open(args.trace, "w") as fh:
            fh.write(rows)
    if args.output:
        with open(args.output, "w") as fh:
            for v in x:
                fh.write(f"{float(v)!r}\n")
    print(f"value {float(value)!r}")
    print(f"instance {inst.content_hash()}")
    print(f"seed {args.seed}")
    return 0


def _flow_common(args):
    net = read_dimacs(args.input)
    if net.source is None or net.sink is None:
        raise InputError("flow commands need source and sink lines")
    return net


def _run_maxflow(args):
    _check_eps(args.eps)
    net = _flow_common(args)
    if args.solver == "dinic":
        sol = dinic_oracle(net)
    else:
        d = net.st_demand(1.0)
        routed = flow_to_regress(net, d, args.eps, solver=args.solver,
                                 seed=args.seed)
        cong = routed.max_congestion
        if cong <= 0:
            raise InfeasibleError("no flow routed")
        sol = FlowSolution.from_flow(net, routed.flow / cong)
        sol.value = float(sol.achieved_demand[net.sink])
    if args.output:
        write_flow_file(args.output, net, sol)
    print(f"value {sol.value!r}")
    print(f"congestion {sol.max_congestion!r}")
    return 0


def _run_exact_flow(args):
    net = _flow_common(args)
    sol = exact_unit_maxflow(net, solver=args.solver if args.solver != "dinic"
                             else "cd-l2", seed=args.seed)
    if args.output:
        write_flow_file(args.output, net, sol)
    print(f"value {sol.value!r}")
    return 0


def _run_bench(args):
    grid = [float(v) for v in args.eps_grid.split(",") if v]
    for eps in grid:
        _check_eps(eps)
    fmt = _sniff_format(args.input, args.format)
    rows = ["eps,iterations,elapsed_ns,value"]
    import time as _time

    for eps in grid:
        start = _time.perf_counter_ns()
        if fmt == "dimacs":
            net = _flow_common(args)
            routed = flow_to_regress(net, net.st_demand(1.0), eps,
                                     solver=args.solver, seed=args.seed)
            value = 1.0 / max(routed.max_congestion, 1e-30)
            iters = routed.meta.get("iterations", 0)
        else:
            matrix, b = read_matrix_file(args.input)
            inst = RegressionInstance(matrix=matrix, b=b, epsilon=eps,
                                      s=args.sparsity_s)
            if args.solver == "mirror-prox":
                res = solve_flow_regress(inst, seed=args.seed)
                value, iters = res.value, res.sampled_coordinates
            else:
                res = solve_box_linf(
                    inst, mode="diag" if args.solver == "cd-diag" else "l2",
                    seed=args.seed)
                value, iters = res.value, res.sampled_coordinates
        elapsed = _time.perf_counter_ns() - start if args.timing else 0
        rows.append(f"{eps},{iters},{elapsed},{float(value)!r}")
    table = "\n".join(rows) + "\n"
    if args.trace:
        with open(args.trace, "w") as fh:
            fh.write(table)
    sys.stdout.write(table)
    return 0


def _run_verify(args):
    fmt = _sniff_format(args.input, args.format)
    rng = make_rng(args.seed)
    failures = 0

    def report(name, ok):
        nonlocal failures
        print(f"check {name} {'ok' if ok else 'FAIL'}")
        failures += 0 if ok else 1

    if fmt == "linf-matrix":
        matrix, b = read_matrix_file(args.input)
        dense = matrix.to_dense()
        report("column-max-cache",
               bool(np.allclose(matrix.col_maxabs, np.abs(dense).max(axis=0))))
        report("row-l1-cache",
               bool(np.allclose(matrix.row_l1, np.abs(dense).sum(axis=1))))
        m2, b2 = sign_double(matrix, b)
        ok = True
        for _ in range(64):
            x = rng.uniform(-1, 1, matrix.n_cols)
            lhs = float((m2.dot(x) - b2).max())
            rhs = float(np.abs(matrix.dot(x) - b).max())
            ok = ok and abs(lhs - rhs) <= 1e-12
        report("sign-double-identity", ok)
        from .smoothing import SoftmaxState

        ok = True
        for _ in range(32):
            alpha = float(rng.uniform(0.05, 2.0))
            st = SoftmaxState(m2, b2, alpha, x0=rng.uniform(-1, 1, matrix.n_cols))
            w = st.w_array() * alpha
            mx = float(w.max())
            v = float(st.smax())
            ok = ok and (mx - 1e-12 <= v <= mx + alpha * math.log(m2.n_rows) + 1e-12)
        report("softmax-sandwich", ok)
        n = max(matrix.n_rows, 2)
        maint = SimplexMaintainer(rng.normal(size=n), eps=0.1, kappa=16.0 * n)
        ref = ReferenceSimplex(rng.normal(size=n), eps=0.1, kappa=16.0 * n)
        report("simplex-maintainer-init",
               abs(sum(maint.coord(i) for i in range(n)) - 1.0) < 1e-6)
    else:
        net = read_dimacs(args.input)
        f = rng.normal(size=net.m)
        dense_b = np.zeros((net.n, net.m))
        for e in range(net.m):
            dense_b[net.tails[e], e] -= 1.0
            dense_b[net.heads[e], e] += 1.0
        report("incidence-apply",
               bool(np.allclose(incidence_apply(net, f), dense_b @ f)))
        from .flow import augment_to_max, build_tree_approximator

        dv = dinic_oracle(net).value
        av = augment_to_max(net, np.zeros(net.m)).value
        report("dinic-vs-augmenting", abs(dv - av) <= 1e-9)
        approx = build_tree_approximator(net)
        d = net.st_demand(1.0)
        f_tree = approx.tree_route(d)
        report("tree-routes-exactly",
               bool(np.allclose(incidence_apply(net, f_tree), d, atol=1e-9)))
        rd = float(np.abs(approx.apply(d)).max())
        cong = float(np.abs(f_tree / net.caps).max())
        report("approximator-sandwich",
               rd <= cong + 1e-9 and cong <= approx.alpha * rd + 1e-9)
    return 3 if failures else 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "regress":
            return _run_regress(args)
        if args.command == "maxflow":
            return _run_maxflow(args)
        if args.command == "exact-flow":
            return _run_exact_flow(args)
        if args.command == "bench":
            return _run_bench(args)
        if args.command == "verify":
            return _run_verify(args)
        raise InputError(f"unknown command {args.command}")
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SolverFault as exc:
        print(f"solver fault: {exc}", file=sys.stderr)
        return 3
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
