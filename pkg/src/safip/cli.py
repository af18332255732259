"""Command-line front end: ``safip {solve,bench,sweep,list}``.

Exit status is 0 on success, 1 on bad input and 2 when a run stopped on its
evaluation budget before collecting ``N`` solutions.
"""

from __future__ import annotations

import argparse
import statistics
import sys
from dataclasses import asdict, fields, replace

from . import benchmarks
from ._validation import check_domain
from .enhanced import write_genealogy_csv
from .expr import ExprError, Expression
from .geometry import BoxDomain
from .metrics import EXIT_BUDGET, EXIT_ERROR, EXIT_OK, export_points, format_table, to_table_row
from .problem import Problem, ScalarField
from .solver import SolverConfig, solve, write_trace_csv

# flag name -> SolverConfig field
CONFIG_FLAGS = {
    "n": "n", "p": "p", "C": "C", "k": "k", "tol": "tol", "N": "N", "R0": "R0",
    "seed": "seed", "algo": "algorithm", "branching": "branching", "policy": "policy",
    "budget": "eval_budget", "threads": "threads", "on_solution": "on_solution",
    "max_population": "max_population",
}
FLAG_OF_FIELD = {v: k for k, v in CONFIG_FLAGS.items()}
# options whose values may start with "-" (negative bounds, unary minus)
_VALUE_FLAGS = ("--domain", "--expr", "--values")

BENCH_COLUMNS = ["label", "seed", "dim", "n", "tol", "N", "C", "k", "p",
                 "time_seconds", "ec", "total_evals", "solutions", "fill_distance", "published_ec"]
REFERENCE_SIZE = 500


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _glue_values(argv):
    # "--domain -1,1" would otherwise be read as an unknown option
    out, i = [], 0
    while i < len(argv):
        if argv[i] in _VALUE_FLAGS and i + 1 < len(argv):
            out.append(f"{argv[i]}={argv[i + 1]}")
            i += 2
        else:
            out.append(argv[i])
            i += 1
    return out


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _problem_flags(parser):
    src = parser.add_argument_group("problem")
    src.add_argument("--bench", metavar="NAME", help="registered benchmark (see `safip list`)")
    src.add_argument("--expr", action="append", metavar="TEXT",
                     help="residual expression in x1..xd; repeat for a system")
    src.add_argument("--dim", type=_positive_int, help="dimension for --expr problems")
    src.add_argument("--domain", metavar="LO,HI[;LO,HI...]",
                     help="box bounds; a single pair applies to every coordinate")


def _config_flags(parser):
    cfg = parser.add_argument_group("solver")
    cfg.add_argument("--n", type=int, help="initial number of chains")
    cfg.add_argument("--p", type=int, help="chains injected per round")
    cfg.add_argument("--C", type=float, help="residual decrease factor in [0.5, 1]")
    cfg.add_argument("--k", type=float, help="residual-to-radius coupling")
    cfg.add_argument("--tol", type=float, help="solution tolerance")
    cfg.add_argument("--N", type=int, help="number of solutions to collect")
    cfg.add_argument("--R0", type=float, help="root sampling radius for --algo enhanced")
    cfg.add_argument("--seed", type=int, help="master seed")
    cfg.add_argument("--algo", choices=("basic", "enhanced"))
    cfg.add_argument("--branching", type=int, help="offspring attempts per node (enhanced)")
    cfg.add_argument("--max-population", dest="max_population", type=int,
                     help="cap on the enhanced active set (0: unbounded)")
    cfg.add_argument("--policy", choices=("retry", "strict"))
    cfg.add_argument("--on-solution", dest="on_solution", choices=("continue", "stop"))
    cfg.add_argument("--normalize", action="store_true", default=None,
                     help="rescale each field by a pilot estimate of its magnitude")
    cfg.add_argument("--budget", type=int, help="evaluation budget")
    cfg.add_argument("--threads", type=int, help="worker threads (results do not depend on it)")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="safip", description="Sample the zero set of residual functions over a box.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_solve = sub.add_parser("solve", help="run one configuration")
    _problem_flags(p_solve)
    _config_flags(p_solve)
    p_solve.add_argument("--out", metavar="PATH", help="write solutions here")
    p_solve.add_argument("--format", choices=("csv", "json"), default="csv")
    p_solve.add_argument("--trace", metavar="PATH",
                         help="write per-step chain traces (genealogy for --algo enhanced)")

    p_bench = sub.add_parser("bench", help="rerun a published parameter study")
    p_bench.add_argument("--suite", required=True, choices=sorted(benchmarks.SUITES))
    p_bench.add_argument("--seeds", default="0,1,2,3,4", help="comma-separated seeds")
    _config_flags(p_bench)

    p_sweep = sub.add_parser("sweep", help="vary one solver parameter")
    _problem_flags(p_sweep)
    _config_flags(p_sweep)
    p_sweep.add_argument("--param", required=True, help="solver flag name, e.g. C or tol")
    p_sweep.add_argument("--values", required=True, help="comma-separated values")

    sub.add_parser("list", help="show registered benchmarks")
    return parser


def parse_domain(text: str, dim: int):
    try:
        pairs = [tuple(float(v) for v in part.split(",")) for part in text.split(";") if part.strip()]
    except ValueError:
        raise UsageError(f"--domain: cannot parse {text!r}; expected lo,hi[;lo,hi...]") from None
    if not pairs or any(len(p) != 2 for p in pairs):
        raise UsageError(f"--domain: expected lo,hi pairs, got {text!r}")
    if len(pairs) == 1:
        pairs = pairs * dim
    if len(pairs) != dim:
        raise UsageError(f"--domain: {len(pairs)} intervals given for dimension {dim}")
    try:
        return check_domain(BoxDomain([p[0] for p in pairs], [p[1] for p in pairs]), dim)
    except ValueError as exc:
        raise UsageError(f"--domain: {exc}") from None


def resolve_problem(args):
    """Problem, base config and (optional) benchmark case named by the flags."""
    if args.bench and args.expr:
        raise UsageError("--bench and --expr are mutually exclusive")
    if args.bench:
        if args.dim is not None or args.domain is not None:
            raise UsageError("--dim/--domain only apply to --expr problems")
        try:
            case = benchmarks.get_case(args.bench)
        except KeyError as exc:
            raise UsageError(f"--bench: {exc.args[0]}") from None
        return case.problem(), case.config, case
    if not args.expr:
        raise UsageError("one of --bench or --expr is required")
    if args.dim is None:
        raise UsageError("--dim is required with --expr")
    if args.domain is None:
        raise UsageError("--domain is required with --expr")
    box = parse_domain(args.domain, args.dim)
    try:
        fields_ = tuple(ScalarField(Expression(s, args.dim), args.dim, s) for s in args.expr)
    except ExprError as exc:
        raise UsageError(f"--expr: {exc}") from None
    return Problem(fields_, box), SolverConfig(), None


def _flag_error(exc: ValueError) -> UsageError:
    name = str(exc).split(" ", 1)[0]
    flag = FLAG_OF_FIELD.get(name, name).replace("_", "-")
    return UsageError(f"--{flag}: {exc}")


def apply_flags(base: SolverConfig, args, **extra) -> SolverConfig:
    changes = {}
    for flag, field_name in CONFIG_FLAGS.items():
        value = getattr(args, flag, None)
        if value is not None:
            changes[field_name] = value
    if getattr(args, "normalize", None):
        changes["normalize"] = True
    changes.update(extra)
    try:
        return replace(base, **changes)
    except ValueError as exc:
        raise _flag_error(exc) from None


def _with_coverage(report, case):
    if case is not None and case.has_reference and report.solutions:
        report.coverage = benchmarks.coverage(report.solutions, benchmarks.reference_points(case, REFERENCE_SIZE))
    return report


def _exit_code(reports) -> int:
    return EXIT_BUDGET if any(r.budget_stopped for r in reports) else EXIT_OK


def run_solve(args, out=None) -> int:
    out = out or sys.stdout
    problem, base, case = resolve_problem(args)
    cfg = apply_flags(base, args, record_trace=bool(args.trace) and (args.algo or base.algorithm) == "basic")
    report = _with_coverage(solve(problem, cfg), case)
    if args.out:
        export_points(report, args.format, args.out)
    if args.trace:
        with open(args.trace, "w", encoding="utf-8", newline="") as fh:
            if cfg.algorithm == "enhanced":
                write_genealogy_csv(report, fh)
            else:
                write_trace_csv(report, fh)
    out.write(format_table([to_table_row(report, args.bench or "expr")]))
    return _exit_code([report])


def _parse_seeds(text):
    try:
        seeds = [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise UsageError(f"--seeds: cannot parse {text!r}") from None
    if not seeds:
        raise UsageError("--seeds: no seeds given")
    return seeds


def _median_row(label, rows):
    med = {c: None for c in BENCH_COLUMNS}
    med.update(label=label, seed="median")
    for col in ("dim", "n", "tol", "N", "C", "k", "p", "published_ec"):
        med[col] = rows[0][col]
    for col in ("time_seconds", "ec", "total_evals", "solutions", "fill_distance"):
        values = [r[col] for r in rows if r[col] is not None]
        med[col] = float(statistics.median(values)) if values else None
    return med


def run_bench(args, out=None) -> int:
    out = out or sys.stdout
    seeds = _parse_seeds(args.seeds)
    table, reports = [], []
    for row in benchmarks.SUITES[args.suite]:
        case = benchmarks.get_case(row.case)
        varying = [k for k in row.overrides if len({r.overrides[k] for r in case.rows}) > 1]
        label = " ".join([row.case, *(f"{k}={row.overrides[k]}" for k in varying)])
        per_seed = []
        for seed in seeds:
            cfg = apply_flags(replace(case.config, **row.overrides), args, seed=seed)
            report = _with_coverage(solve(case.problem(), cfg), case)
            reports.append(report)
            entry = {**asdict(to_table_row(report, label)), "seed": seed, "published_ec": row.published_ec}
            per_seed.append(entry)
        table.extend(per_seed)
        table.append(_median_row(label, per_seed))
    out.write(format_table(table, BENCH_COLUMNS))
    return _exit_code(reports)


def _coerce(param: str, text: str):
    field_name = CONFIG_FLAGS[param]
    kind = {f.name: f.type for f in fields(SolverConfig)}[field_name]
    if text.lower() == "none" and "None" in str(kind):
        return None
    if str(kind).startswith("int"):
        return int(text)
    if str(kind).startswith("float"):
        return float(text)
    return text


def run_sweep(args, out=None) -> int:
    out = out or sys.stdout
    if args.param not in CONFIG_FLAGS:
        raise UsageError(f"--param: unknown parameter {args.param!r}; choose from {', '.join(CONFIG_FLAGS)}")
    try:
        values = [_coerce(args.param, v.strip()) for v in args.values.split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"--values: cannot convert {args.values!r} for --{args.param}") from None
    if not values:
        raise UsageError("--values: no values given")
    problem, base, case = resolve_problem(args)
    base = apply_flags(base, args)
    rows, reports = [], []
    for value in values:
        cfg = apply_flags(base, argparse.Namespace(), **{CONFIG_FLAGS[args.param]: value})
        # fresh counters for each run
        run_problem = case.problem() if case is not None else Problem(
            tuple(ScalarField(f.func, f.dim, f.name) for f in problem.fields), problem.domain)
        report = _with_coverage(solve(run_problem, cfg), case)
        reports.append(report)
        rows.append(to_table_row(report, f"{args.param}={value}"))
    out.write(format_table(rows))
    return _exit_code(reports)


def run_list(args, out=None) -> int:
    out = out or sys.stdout
    rows = []
    for case in benchmarks.registry():
        lo, hi = case.domain.lower, case.domain.upper
        box = ";".join(f"{a:g},{b:g}" for a, b in zip(lo, hi)) if case.dim <= 3 else f"{lo[0]:g},{hi[0]:g}"
        rows.append({"name": case.name, "dim": case.dim, "fields": len(case.funcs), "domain": box,
                     "formulas": " | ".join(case.formulas)})
    out.write(format_table(rows, ["name", "dim", "fields", "domain", "formulas"]))
    return EXIT_OK


COMMANDS = {"solve": run_solve, "bench": run_bench, "sweep": run_sweep, "list": run_list}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = build_parser().parse_args(_glue_values(argv))
    except SystemExit as exc:  # usage errors and --help
        return exc.code
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"safip: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (ValueError, OSError) as exc:
        print(f"safip: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
