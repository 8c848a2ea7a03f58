"""Command-line front end: ``tailprod analyze|verify|vertices PROBLEM.json``.

Exit codes: 0 success, 1 input or configuration error, 2 the theory does
not apply (hypothesis failure, infinite constant, enumeration budget).
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from fractions import Fraction
from pathlib import Path

from .analysis import HypothesisViolation, InfiniteMoment, TailAnalysisError, TailReport, analyze
from .io import ProblemFileError, error_to_dict, load_problem, report_to_dict
from .lp import BudgetExceeded, default_budget, enumerate_vertices
from .verification import SimulationConfig, estimate_ratio, exact_prob, slope_fit

EXIT_OK, EXIT_INPUT, EXIT_THEORY = 0, 1, 2


def fmt(v) -> str:
    """``p/q (≈ decimal)`` for rationals, 6 significant digits."""
    if isinstance(v, Fraction):
        if v.denominator == 1:
            return str(v)
        return f"{v} (≈ {float(v):.6g})"
    if isinstance(v, float) and math.isinf(v):
        return "+inf"
    return f"{float(v):.6g}"


def _vec(vs) -> str:
    return "(" + ", ".join(str(v) for v in vs) + ")"


def render_report(report: TailReport) -> str:
    lines = [
        f"kappa: {_vec(report.kappa)}",
        f"kappa_hat: {_vec(report.kappa_hat)}",
        f"index: {fmt(report.rv_index)}",
        f"det A_kappa: {fmt(report.det_A_kappa)}",
        f"coefficient: {fmt(report.coefficient)}",
    ]
    for j, b in report.beta.items():
        lines.append(
            f"beta_{j + 1}: {fmt(b)}   E(X_{j + 1}^beta) = {fmt(report.moment_values[j])}"
            f"   eps_max = {fmt(report.eps_max[j])}"
        )
    lines.append(f"constant: {fmt(report.constant_at_c)}   at c = {_vec(report.spec.c)}")
    lines.append("hypotheses:")
    lines.extend(_render_log(report.hypothesis_log))
    return "\n".join(lines)


def _render_log(log) -> list[str]:
    return [f"  [{h.status}] {h.condition}: {h.detail}" for h in log]


def _render_error(exc: TailAnalysisError) -> str:
    lines = [f"error: {exc}"]
    if exc.uniqueness is not None and exc.uniqueness.unique is False:
        lines.append("witnesses (alternative optimal solutions):")
        lines.extend(f"  {_vec(w)}" for w in exc.uniqueness.witnesses)
    if exc.report is not None:
        lines.append(render_report(exc.report))
    else:
        lines.append("hypotheses:")
        lines.extend(_render_log(exc.log))
    if isinstance(exc, HypothesisViolation) and exc.report is None:
        lines.append("hint: run 'tailprod vertices' to list all basic feasible solutions")
    return "\n".join(lines)


def _load(path, require_model=True):
    try:
        return load_problem(path, require_model=require_model)
    except ProblemFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return None


def cmd_analyze(args) -> int:
    spec = _load(args.path)
    if spec is None:
        return EXIT_INPUT
    try:
        report = analyze(spec)
    except TailAnalysisError as exc:
        print(json.dumps(error_to_dict(exc), indent=2) if args.json else _render_error(exc))
        return EXIT_THEORY
    print(json.dumps(report_to_dict(report), indent=2) if args.json else render_report(report))
    return EXIT_OK


def _parse_grid(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise ValueError(f"--x-grid: cannot parse {text!r}") from None


def cmd_verify(args) -> int:
    try:
        cfg = SimulationConfig(_parse_grid(args.x_grid), args.samples, args.seed, args.chunks)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    spec = _load(args.path)
    if spec is None:
        return EXIT_INPUT
    try:
        report = analyze(spec)
    except InfiniteMoment as exc:
        print(_render_error(exc))
        print("verification infeasible: the limit constant is infinite")
        return EXIT_THEORY
    except TailAnalysisError as exc:
        print(_render_error(exc))
        return EXIT_THEORY

    result = estimate_ratio(spec, report, cfg, workers=args.workers)
    oracle = None
    if args.oracle:
        if spec.m > 4:
            print("note: quadrature oracle skipped (more than 4 factors)")
        else:
            oracle = [exact_prob(spec, x, args.tol) for x in cfg.x_grid]

    if args.out:
        Path(args.out).write_text(result.to_csv())

    target = report.constant_at_c
    print(f"analytic index: {fmt(report.rv_index)}")
    print(f"analytic constant: {fmt(target)}")
    print(f"samples per x: {cfg.samples_per_x}   seed: {cfg.seed}   chunks: {cfg.chunks}")
    print(f"prng: {result.prng}")
    header = f"{'x':>12} {'hits':>10} {'p_hat':>12} {'ratio':>12} {'stderr':>10}"
    if oracle:
        header += f" {'oracle':>12} {'z':>7}"
    print(header)
    for k, p in enumerate(result.points):
        line = f"{p.x:12.6g} {p.hits:10d} {p.p_hat:12.6g} {p.ratio:12.6g} {p.stderr:10.3g}"
        if oracle:
            o = oracle[k].value / p.normalizer
            z = (p.ratio - o) / p.stderr if p.stderr > 0 else float("nan")
            line += f" {o:12.6g} {z:7.2f}"
        print(line)

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        try:
            fit = slope_fit(result)
            print(
                f"MC slope: {fit.slope:.4f}  [{fit.ci_low:.4f}, {fit.ci_high:.4f}]"
                f"  vs index {float(report.rv_index):.4f}"
            )
        except ValueError as exc:
            print(f"MC slope: unavailable ({exc})")
        if oracle:
            try:
                ofit = slope_fit(cfg.x_grid, [o.value for o in oracle], [o.error for o in oracle])
                print(f"oracle slope: {ofit.slope:.4f}  vs index {float(report.rv_index):.4f}")
            except ValueError as exc:
                print(f"oracle slope: unavailable ({exc})")
    if args.json:
        Path(args.json).write_text(result.to_json())
    return EXIT_OK


def cmd_vertices(args) -> int:
    A = _load(args.path, require_model=False)
    if A is None:
        return EXIT_INPUT
    try:
        verts = enumerate_vertices(A, budget=args.budget)
    except BudgetExceeded as exc:
        print(f"error: {exc}; raise it with --budget or TAILPROD_ENUM_BUDGET")
        return EXIT_THEORY
    if not verts:
        print("no basic feasible solution: the program is infeasible")
        return EXIT_THEORY
    best = min(v.objective for v in verts)
    optima = {v.kappa for v in verts if v.objective == best}
    for v in sorted(verts, key=lambda v: (v.objective, v.basis)):
        mark = "  *optimal" if v.objective == best else ""
        cols = "{" + ", ".join(str(b + 1) for b in v.basis) + "}"
        print(f"basis {cols}: kappa = {_vec(v.kappa)}  objective = {fmt(v.objective)}{mark}")
    print(f"{len(verts)} feasible bases, {len(optima)} distinct optimal vertex(es), optimum {fmt(best)}")
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    # usage errors are input errors; exit code 2 is reserved
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="tailprod", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    a = sub.add_parser("analyze", help="exponent LP, index and limit constant")
    a.add_argument("path")
    a.add_argument("--json", action="store_true", help="print the report as JSON")
    a.set_defaults(func=cmd_analyze)

    v = sub.add_parser("verify", help="Monte Carlo (and quadrature) check of the limit")
    v.add_argument("path")
    v.add_argument("--x-grid", default="10,100,1000", help="comma-separated thresholds > 1")
    v.add_argument("--samples", type=int, default=1_000_000, help="samples per threshold")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--chunks", type=int, default=1)
    v.add_argument("--workers", type=int, default=None, help="threads for chunk evaluation")
    v.add_argument("--oracle", action="store_true", help="also integrate the exact probability")
    v.add_argument("--tol", type=float, default=1e-8, help="relative tolerance of the oracle")
    v.add_argument("--out", help="write the per-threshold table as CSV")
    v.add_argument("--json", help="write the simulation result with metadata as JSON")
    v.set_defaults(func=cmd_verify)

    e = sub.add_parser("vertices", help="list all basic feasible solutions")
    e.add_argument("path")
    e.add_argument("--budget", type=int, default=None, help="maximum number of bases to try")
    e.set_defaults(func=cmd_vertices)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        budget = default_budget()
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if getattr(args, "budget", None) is None and args.command == "vertices":
        args.budget = budget
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
