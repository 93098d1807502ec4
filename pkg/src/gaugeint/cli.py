"""Job-running command line interface.

Subcommands
-----------
integrate   full decomposition report (total, plain integral, basic sum,
            residual table, identity check)
verify      total-integral verification rows only
residues    residual table plus the basic-sum verdict
partition   build one partition and dump it as CSV
parse       syntax-check a mini-language expression

Exit codes: 0 success (divergence is a correct verdict, not a failure);
1 verdict-level failure (an unverified tolerance row, or an identity gap
above the combined tolerance); 2 usage or parse error; 3 build failure that
prevents any result.

Jobs may come from a JSON file (``--job``); flags override file fields.
The ``F`` field is either mini-language text or a catalog name.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field

from .builders import (
    RefinementSchedule,
    build_anchored,
    build_cousin,
    build_straddle_verified,
)
from .catalog import CATALOG_NAMES, catalog_entry
from .dsl import CompiledFunction, ParseError, parse, render
from .errors import BuildError, EvaluationError, GaugeIntError
from .integrate import DecompositionReport, SequenceRow, TotalReport, decompose, total_kh
from .models import (
    ExceptionalSet,
    SingularFunctionModel,
    consistency_check,
    residual_estimate,
)
from .partition import Interval, anchored_gauge, partition_to_csv
from .sums import basic_sum_sequence
from .verdicts import Converged, verdict_to_json

EXIT_OK = 0
EXIT_VERDICT = 1
EXIT_USAGE = 2
EXIT_BUILD = 3


class JobError(Exception):
    """Invalid job specification (maps to exit code 2)."""


@dataclass
class Job:
    command: str
    F: str | None = None
    f: str | None = None
    E: list = field(default_factory=list)
    span: tuple | None = None
    epsilons: list = field(default_factory=lambda: [1e-2, 1e-3, 1e-4])
    anchor: float | None = None
    max_depth: int = 20
    tol: float = 1e-6
    div_threshold: float = 1e12
    seed: int = 0
    output: str = "table"
    emit_convergence: str | None = None
    builder: str = "anchored"
    expression: str | None = None  # for the parse command

    def validate(self) -> None:
        if self.span is not None:
            a, b = self.span
            if not a < b:
                raise JobError(f"span must satisfy a < b, got [{a}, {b}]")
            for e in self.E:
                if not a < e < b:
                    raise JobError(f"exceptional point {e} not strictly inside ({a}, {b})")
        if len(set(self.epsilons)) != len(self.epsilons):
            raise JobError("epsilon values must be distinct")
        if any(e <= 0 for e in self.epsilons):
            raise JobError("epsilon values must be positive")
        if self.max_depth < 0:
            raise JobError("max-depth must be nonnegative")
        if self.tol <= 0 or self.div_threshold <= 0:
            raise JobError("tol and div-threshold must be positive")

    def resolve_model(self) -> SingularFunctionModel:
        if self.F is None:
            raise JobError("no function given: use --catalog, --function or a job file")
        if self.F in CATALOG_NAMES:
            entry = catalog_entry(self.F)
            model = entry.model
            span = Interval(*self.span) if self.span is not None else model.span
            points = ExceptionalSet(self.E) if self.E else model.E
            if span != model.span or points != model.E:
                model = SingularFunctionModel(
                    F=model.F, f=model.f, E=points, span=span, provenance=model.provenance
                )
            return model
        F = CompiledFunction(self.F)  # surface parse errors first
        if self.f is None:
            raise JobError("--derivative is required for a non-catalog function")
        f = CompiledFunction(self.f)
        if self.span is None:
            raise JobError("--span is required for a non-catalog function")
        return SingularFunctionModel(
            F=F, f=f, E=ExceptionalSet(self.E), span=Interval(*self.span),
            provenance=f"dsl:{F.source}",
        )


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _float_list(text: str) -> list:
    try:
        return [float(part) for part in text.split(",") if part.strip() != ""]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_arg_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gaugeint",
        description="Gauge-integration job runner: total integrals, residues, partitions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("integrate", "full decomposition report"),
        ("verify", "total-integral verification only"),
        ("residues", "residual table and basic sum"),
        ("partition", "build one partition and dump it as CSV"),
        ("parse", "syntax-check a function expression"),
    ):
        cmd = sub.add_parser(name, help=text)
        if name == "parse":
            cmd.add_argument("expression", nargs="?", help="expression text (or use --function)")
            cmd.add_argument("--function", dest="function")
            cmd.add_argument("--output", choices=("table", "json", "csv"), default="table")
            continue
        cmd.add_argument("--job", help="JSON job file; flags override its fields")
        cmd.add_argument("--catalog", help="built-in model name")
        cmd.add_argument("--function", help="mini-language text for F")
        cmd.add_argument("--derivative", help="mini-language text for f")
        cmd.add_argument("--exceptional", type=_float_list, help='exceptional points "x1,x2"')
        cmd.add_argument("--span", type=_float_list, help='working interval "a,b"')
        cmd.add_argument("--epsilon", type=_float_list, help='tolerance list "1e-2,1e-3"')
        cmd.add_argument("--anchor", type=float, help="anchor radius (default: schedule r0)")
        cmd.add_argument("--max-depth", type=int, dest="max_depth")
        cmd.add_argument("--tol", type=float)
        cmd.add_argument("--div-threshold", type=float, dest="div_threshold")
        cmd.add_argument("--seed", type=int)
        cmd.add_argument("--output", choices=("table", "json", "csv"), default=None)
        cmd.add_argument("--emit-convergence", dest="emit_convergence", metavar="PATH")
        cmd.add_argument("--builder", choices=("anchored", "straddle", "cousin"), default=None)
    return parser


def job_from_args(args: argparse.Namespace) -> Job:
    job = Job(command=args.command)
    if args.command == "parse":
        job.expression = args.expression or args.function
        job.output = args.output
        if job.expression is None:
            raise JobError("parse needs an expression argument or --function")
        return job

    if args.job:
        try:
            with open(args.job, encoding="utf-8") as fh:
                doc = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise JobError(f"cannot read job file: {exc}") from None
        if not isinstance(doc, dict):
            raise JobError("job file must hold a JSON object")
        known = {
            "F": "F", "f": "f", "E": "E", "span": "span", "epsilon": "epsilons",
            "anchor": "anchor", "max_depth": "max_depth", "tol": "tol",
            "div_threshold": "div_threshold", "seed": "seed", "output": "output",
            "builder": "builder",
        }
        for key, value in doc.items():
            if key == "command":  # the subcommand on the command line wins
                continue
            if key not in known:
                raise JobError(f"unknown job field {key!r}")
            setattr(job, known[key], value)
        if job.span is not None:
            job.span = tuple(float(x) for x in job.span)
        job.E = [float(x) for x in job.E]

    if args.catalog and args.function:
        raise JobError("give either --catalog or --function, not both")
    if args.catalog:
        if args.catalog not in CATALOG_NAMES:
            raise JobError(
                f"unknown catalog name {args.catalog!r}; known: {', '.join(CATALOG_NAMES)}"
            )
        job.F = args.catalog
        job.f = None
    if args.function:
        job.F = args.function
    if args.derivative:
        job.f = args.derivative
    if args.exceptional is not None:
        job.E = args.exceptional
    if args.span is not None:
        if len(args.span) != 2:
            raise JobError('--span needs exactly two numbers "a,b"')
        job.span = (args.span[0], args.span[1])
    if args.epsilon is not None:
        job.epsilons = args.epsilon
    for name in ("anchor", "max_depth", "tol", "div_threshold", "seed",
                 "output", "emit_convergence", "builder"):
        value = getattr(args, name, None)
        if value is not None:
            setattr(job, name, value)
    if job.output is None:
        job.output = "table"
    job.validate()
    return job


# ---------------------------------------------------------------------------
# rendering
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    if x is None:
        return "n/a"
    return format(x, ".6g")


def _json_dump(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, indent=2) + "\n"


def convergence_csv(sections) -> str:
    lines = []
    for name, rows in sections:
        lines.append(f"# series: {name}")
        lines.append("depth,h,r,epsilon,value,delta")
        prev = None
        for row in rows:
            delta = "" if prev is None else format(abs(row.value - prev), ".17g")
            lines.append(
                f"{row.depth},{row.h:.17g},{row.r:.17g},{row.epsilon:.17g},"
                f"{row.value:.17g},{delta}"
            )
            prev = row.value
    return "\n".join(lines) + "\n"


def _verification_lines(report: TotalReport) -> list:
    lines = []
    for row in report.rows:
        if row.error is not None:
            lines.append(f"  eps={_fmt(row.epsilon)}: build failed ({row.error})")
        else:
            state = "ok" if row.ok else "EXCEEDED"
            lines.append(
                f"  eps={_fmt(row.epsilon)}: residual {_fmt(row.residual)} "
                f"<= {_fmt(row.bound)} [{state}] ({row.pairs} pairs)"
            )
    return lines


def _residual_lines(residuals) -> list:
    return [f"  R({_fmt(e)}) = {verdict.describe()}" for e, verdict in residuals.items()]


def _residuals_csv(residuals) -> str:
    lines = ["point,kind,value,error_estimate,depth,sign"]
    for e, v in residuals.items():
        if isinstance(v, Converged):
            lines.append(f"{e:.17g},converged,{v.value:.17g},{v.error_estimate:.17g},{v.depth},")
        elif v.kind == "diverged":
            lines.append(f"{e:.17g},diverged,,,,{'+' if v.sign > 0 else '-'}")
        else:
            lines.append(f"{e:.17g},inconclusive,,,,")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class ResidualsSummary:
    """Report body of the ``residues`` subcommand."""

    basic_sum_verdict: object
    residuals: dict
    bs_rows: tuple = ()

    def to_json(self) -> dict:
        return {
            "total": None,
            "verification": [],
            "kh": None,
            "basic_sum": verdict_to_json(self.basic_sum_verdict),
            "residuals": {repr(e): verdict_to_json(v) for e, v in self.residuals.items()},
            "identity_gap": None,
        }


def emit(report, output_format: str, model=None) -> str:
    """Render a report as json (schema document), csv, or a readable table.

    Verdict kinds survive every format: json carries them structurally, csv
    in a kind column or the value ladder, tables in the describe() strings.
    """
    if output_format == "json":
        return _json_dump(report.to_json())

    if isinstance(report, DecompositionReport):
        if output_format == "csv":
            return convergence_csv([("kh", report.kh_rows), ("basic_sum", report.bs_rows)])
        lines = []
        if model is not None:
            lines.append(
                f"model          {model.provenance or 'user function'} on "
                f"[{_fmt(model.span.lo)}, {_fmt(model.span.hi)}], "
                f"E = {{{', '.join(_fmt(e) for e in model.E)}}}"
            )
        lines += [
            f"total          {_fmt(report.total)}",
            "verification",
            *_verification_lines(report.verification),
            f"kh             {report.kh_verdict.describe()}",
            f"basic_sum      {report.basic_sum_verdict.describe()}",
        ]
        if report.residuals:
            lines.append("residuals")
            lines += _residual_lines(report.residuals)
        if report.identity_gap is not None:
            lines.append(
                f"identity_gap   {_fmt(report.identity_gap)} "
                f"(tolerance {_fmt(report.identity_tolerance)})"
            )
        else:
            lines.append("identity_gap   n/a (needs both kh and basic_sum converged)")
        if report.residue_sum_gap is not None:
            lines.append(f"residue_sum    |sum R - basic_sum| = {_fmt(report.residue_sum_gap)}")
        if not report.lemma_consistent:
            lines.append("WARNING        kh and basic_sum verdicts disagree on convergence")
        if report.build_diagnostic:
            lines.append(f"note           {report.build_diagnostic}")
        return "\n".join(lines) + "\n"

    if isinstance(report, TotalReport):
        if output_format == "csv":
            lines = ["epsilon,residual,bound,pairs,ok"]
            for row in report.rows:
                res = "" if row.residual is None else format(row.residual, ".17g")
                lines.append(
                    f"{row.epsilon:.17g},{res},{row.bound:.17g},{row.pairs},{int(row.ok)}"
                )
            return "\n".join(lines) + "\n"
        lines = [f"total          {_fmt(report.total)}", "verification"]
        lines += _verification_lines(report)
        lines.append(f"verified       {report.verified}")
        return "\n".join(lines) + "\n"

    if isinstance(report, ResidualsSummary):
        if output_format == "csv":
            return _residuals_csv(report.residuals)
        lines = [f"basic_sum      {report.basic_sum_verdict.describe()}"]
        lines += [line.strip() for line in _residual_lines(report.residuals)]
        return "\n".join(lines) + "\n"

    raise TypeError(f"cannot emit {type(report).__name__}")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _surface_warnings(model, seed: int) -> None:
    try:
        for warning in consistency_check(model, sample_count=32, seed=seed):
            print(f"warning: {warning}", file=sys.stderr)
    except GaugeIntError as exc:
        print(f"warning: derivative consistency check skipped: {exc}", file=sys.stderr)


def cmd_integrate(job: Job) -> int:
    model = job.resolve_model()
    _surface_warnings(model, job.seed)
    report = decompose(
        model,
        epsilons=job.epsilons,
        max_depth=job.max_depth,
        tol=job.tol,
        div_threshold=job.div_threshold,
        anchor_r=job.anchor,
    )
    if job.emit_convergence:
        with open(job.emit_convergence, "w", encoding="utf-8") as fh:
            fh.write(convergence_csv([("kh", report.kh_rows), ("basic_sum", report.bs_rows)]))
    sys.stdout.write(emit(report, job.output, model=model))
    if not report.kh_rows and report.build_diagnostic:
        print(f"error: {report.build_diagnostic}", file=sys.stderr)
        return EXIT_BUILD
    if report.identity_gap is not None and report.identity_gap > report.identity_tolerance:
        print(
            f"error: identity gap {report.identity_gap:.6g} exceeds "
            f"{report.identity_tolerance:.6g}",
            file=sys.stderr,
        )
        return EXIT_VERDICT
    return EXIT_OK


def cmd_verify(job: Job) -> int:
    model = job.resolve_model()
    _surface_warnings(model, job.seed)
    report = total_kh(model, epsilons=job.epsilons, r=job.anchor)
    sys.stdout.write(emit(report, job.output))
    if all(row.error is not None for row in report.rows):
        return EXIT_BUILD
    return EXIT_OK if report.verified else EXIT_VERDICT


def cmd_residues(job: Job) -> int:
    model = job.resolve_model()
    _surface_warnings(model, job.seed)
    schedule = RefinementSchedule.for_model(model)
    residuals = {
        e: residual_estimate(model, e, schedule, max_depth=job.max_depth,
                             tol=job.tol, div_threshold=job.div_threshold)
        for e in model.E
    }
    bs_rows = ()
    if len(model.E) > 0:
        trace, bs_verdict = basic_sum_sequence(
            model, schedule, max_depth=job.max_depth, tol=job.tol,
            div_threshold=job.div_threshold,
        )
        bs_rows = tuple(
            SequenceRow(n, schedule.at(n).h, schedule.at(n).r, schedule.at(n).eps, v)
            for n, v in trace
        )
    else:
        bs_verdict = Converged(value=0.0, error_estimate=0.0, depth=0)

    summary = ResidualsSummary(basic_sum_verdict=bs_verdict, residuals=residuals,
                               bs_rows=bs_rows)
    if job.emit_convergence:
        with open(job.emit_convergence, "w", encoding="utf-8") as fh:
            fh.write(convergence_csv([("basic_sum", bs_rows)]))
    sys.stdout.write(emit(summary, job.output))
    return EXIT_OK


def cmd_partition(job: Job) -> int:
    model = job.resolve_model()
    schedule = RefinementSchedule.for_model(model)
    r = job.anchor if job.anchor is not None else schedule.r0
    h = model.span.length / 8
    if job.builder == "anchored":
        part = build_anchored(model.span, tuple(model.E), r=r, h=h)
    elif job.builder == "straddle":
        part = build_straddle_verified(model, r=r, eps=job.epsilons[0])
    else:
        gauge = anchored_gauge(mesh=h, anchor_radii={e: r for e in model.E}, isolating=False)
        part = build_cousin(model.span, gauge, tag_policy="midpoint", seed=job.seed)
    sys.stdout.write(partition_to_csv(part, tuple(model.E)))
    return EXIT_OK


def cmd_parse(job: Job) -> int:
    defn = parse(job.expression)
    canonical = render(defn)
    if job.output == "json":
        sys.stdout.write(_json_dump({"ok": True, "canonical": canonical}))
    else:
        sys.stdout.write(canonical + "\n")
    return EXIT_OK


def run(argv) -> int:
    parser = build_arg_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else 0
    try:
        job = job_from_args(args)
    except JobError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    handler = {
        "integrate": cmd_integrate,
        "verify": cmd_verify,
        "residues": cmd_residues,
        "partition": cmd_partition,
        "parse": cmd_parse,
    }[job.command]
    try:
        return handler(job)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except JobError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BuildError as exc:
        print(f"build error: {exc}", file=sys.stderr)
        return EXIT_BUILD
    except EvaluationError as exc:
        print(f"evaluation error: {exc}", file=sys.stderr)
        return EXIT_BUILD
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
