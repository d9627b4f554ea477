"""Command-line front end.

Exit codes: 0 success, 1 domain error, 2 certificate violation, 64 usage error.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from .certifier import (
    MembershipViolated,
    certify_membership,
    empirical_contraction,
    eps_max,
    p0,
)
from .fixpoint import DEFAULT_TOL, MaxIterationsExceeded, OutsideDomain, iterate_to_stability
from .formal_series import DEFAULT_P_TRUNC, SeriesError, rat_str
from .kernels import (
    KernelTable,
    SolveFailure,
    derived_kernels,
    kernel_bound_check,
    paper_a_table,
    solve_from_a_table,
    validate_support,
)
from .lambda_series import DomainError, a_table, assemble_symbolic, eval_numeric, series_value
from .oracle import (
    LatticeSpec,
    TooLarge,
    compare_series_oracle,
    count_matchings,
    d1_tail_bound,
    lambda1_exact,
    legendre_lambda,
)

EXIT_OK, EXIT_DOMAIN, EXIT_CERT, EXIT_USAGE = 0, 1, 2, 64
BUILTIN = "builtin-derived"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _load_kernels(source: str) -> KernelTable:
    return derived_kernels() if source == BUILTIN else KernelTable.load(source)


def _expansion(table: KernelTable, order: int):
    alpha, _ = iterate_to_stability(table, order)
    return assemble_symbolic(alpha)


def _fmt_rat(c: Fraction) -> str:
    return f"{rat_str(c):>16}  {float(c): .15g}"


def cmd_coeffs(args, table: KernelTable):
    L = _expansion(table, args.max_order)
    values = a_table(L, args.d)
    data = {
        "d": args.d,
        "max_order": args.max_order,
        "determined_through": table.k_max,
        "a_values": [rat_str(values[s]) for s in sorted(values)],
        "expansion": L.to_json(),
    }
    lines = [f"# a_s(d) at d={args.d}; orders above {table.k_max} depend on kernels not in the table"]
    lines += [f"{s:>3}  {_fmt_rat(c)}" for s, c in sorted(values.items())]
    return data, lines


def cmd_eval(args, table: KernelTable):
    if args.compare_oracle and args.d != 1:
        raise DomainError("closed-form comparison exists only for d=1; use the oracle command")
    order = min(args.max_order, table.k_max)
    L = _expansion(table, order)
    rows = []
    for p in args.p:
        row = {
            "p": p,
            "lambda": eval_numeric(table, p, args.d, args.tol),
            "partial_sum": series_value(L, p, args.d),
            "order": order,
        }
        if args.compare_oracle:
            exact = lambda1_exact(p)
            bound = d1_tail_bound(p, order) + 1e-12
            row.update(
                exact=exact,
                diff=abs(row["partial_sum"] - exact),
                numeric_diff=abs(row["lambda"] - exact),
                tail_bound=bound,
                within_bound=abs(row["partial_sum"] - exact) <= bound,
            )
        rows.append(row)
    lines = [f"# d={args.d}, partial sums through p^{order}"]
    for r in rows:
        line = f"p={r['p']:.6g}  lambda={r['lambda']:.15g}  partial={r['partial_sum']:.15g}"
        if "exact" in r:
            line += f"  exact={r['exact']:.15g}  |diff|={r['diff']:.3e}  bound={r['tail_bound']:.3e}"
        lines.append(line)
    return {"d": args.d, "rows": rows}, lines


def cmd_certify(args, table: KernelTable):
    B = table.bound_B if args.B is None else args.B
    table = KernelTable(table.kernels, B)
    eps = eps_max() if args.eps is None else args.eps
    radius, binding_k = p0(B, eps)
    p = 0.99 * radius if args.p is None else args.p
    d_values = args.d or [1, 2, 3, 4, 5]
    if not kernel_bound_check(table, B, d_values):
        raise MembershipViolated(f"kernels exceed B^k with B={B} for some d in {d_values}")
    margins, ratios = [], []
    for d in d_values:
        cert = certify_membership(table, p, d, eps, check_p0=False)
        margins.append(cert.map_margin)
        ratios.append(empirical_contraction(table, p, d, args.n_iters))
    data = {
        "B": B,
        "epsilon": eps,
        "p0": radius,
        "binding_k": binding_k,
        "map_margin": min(margins),
        "contraction_ratio": max(ratios),
        "p": p,
        "d_values": d_values,
    }
    lines = [f"{k:>18}  {v}" for k, v in data.items()]
    return data, lines


def cmd_kernels(args, table: KernelTable):
    if args.action == "solve":
        table = solve_from_a_table(paper_a_table(), args.max_order)
    data = table.to_json()
    if args.action == "check":
        d_values = args.d or list(range(1, 11))
        data = {
            "support_violations": [list(v) for v in validate_support(table)],
            "bound_ok": kernel_bound_check(table, table.bound_B, d_values),
            "B": table.bound_B,
            "d_values": d_values,
        }
        return data, [json.dumps(data, sort_keys=True)]
    lines = [f"# B = {table.bound_B}"]
    for entry in data["kernels"]:
        for j, c in sorted(entry["coeffs"].items(), key=lambda kv: int(kv[0])):
            lines.append(f"J_{entry['k']}  w^{j}  {_fmt_rat(Fraction(c))}")
    return data, lines


def cmd_oracle(args, table: KernelTable):
    spec = LatticeSpec(tuple(args.extents), args.boundary)
    order = min(args.max_order, table.k_max)
    rows = compare_series_oracle(table, spec, args.p, _expansion(table, order))
    counts = count_matchings(spec)
    for row in rows:
        row["legendre"] = legendre_lambda(spec, row["p"], counts)
    data = {
        "lattice": {"extents": list(spec.extents), "boundary": spec.boundary},
        "counts": counts.to_json(),
        "rows": rows,
    }
    lines = [f"# {spec.boundary} lattice {spec.extents}, N={spec.n_sites}"]
    for r in rows:
        lines.append(
            f"p={r['p']:.6g}  series={r['series']:.15g}  finite={r['oracle']:.15g}  "
            f"legendre={r['legendre']:.15g}  |diff|={r['diff']:.3e}"
        )
    return data, lines


COMMANDS = {
    "coeffs": cmd_coeffs,
    "eval": cmd_eval,
    "certify": cmd_certify,
    "kernels": cmd_kernels,
    "oracle": cmd_oracle,
}


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--kernel-file", default=BUILTIN)
    common.add_argument("--max-order", type=int, default=DEFAULT_P_TRUNC)
    common.add_argument("--tol", type=float, default=DEFAULT_TOL)
    common.add_argument("--format", choices=("json", "table"), default="json")
    common.add_argument("--output", default="-")

    parser = _Parser(prog="monodimer", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("coeffs", parents=[common], help="exact a_s(d) table")
    p.add_argument("--d", type=int, default=1)

    p = sub.add_parser("eval", parents=[common], help="numeric lambda_d(p)")
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--p", type=float, nargs="+", required=True)
    p.add_argument("--compare-oracle", action="store_true")

    p = sub.add_parser("certify", parents=[common], help="convergence certificate")
    p.add_argument("--B", type=float)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--eps", type=float)
    group.add_argument("--auto-eps", action="store_true")
    p.add_argument("--d", type=int, nargs="+")
    p.add_argument("--p", type=float)
    p.add_argument("--n-iters", type=int, default=50)

    p = sub.add_parser("kernels", parents=[common], help="solve, show or check kernels")
    p.add_argument("action", choices=("solve", "show", "check"))
    p.add_argument("--d", type=int, nargs="+")

    p = sub.add_parser("oracle", parents=[common], help="compare with exact lattice counts")
    p.add_argument("--extents", type=int, nargs="+", required=True)
    p.add_argument("--boundary", choices=("open", "periodic"), default="periodic")
    p.add_argument("--p", type=float, nargs="+", required=True)
    return parser


def _validate(args) -> None:
    if args.max_order < 2:
        raise UsageError("--max-order must be >= 2")
    if args.tol <= 0:
        raise UsageError("--tol must be positive")
    if getattr(args, "d", None) is not None:
        ds = args.d if isinstance(args.d, list) else [args.d]
        if any(d < 1 for d in ds):
            raise UsageError("--d must be a positive integer")
    if args.command == "kernels" and args.action == "solve" and args.max_order < 6:
        raise UsageError("kernels solve needs --max-order >= 6")


def run(argv=None, stdout=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _validate(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"monodimer: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        table = _load_kernels(args.kernel_file)
        data, lines = COMMANDS[args.command](args, table)
    except MembershipViolated as exc:
        print(f"certificate violated: {exc}", file=sys.stderr)
        return EXIT_CERT
    except (DomainError, OutsideDomain, SeriesError, SolveFailure, TooLarge,
            MaxIterationsExceeded, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    text = json.dumps(data, sort_keys=True, indent=2) + "\n" if args.format == "json" else "\n".join(lines) + "\n"
    if args.output == "-":
        stdout.write(text)
    else:
        Path(args.output).write_text(text)
    return EXIT_OK


def main(argv=None) -> int:
    return run(argv)
