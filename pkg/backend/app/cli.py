"""
Command-line driver for the verification pipeline.

    python -m app.cli check-wf model.bps
    python -m app.cli simulate model.bps --policy min --seed 7
    python -m app.cli compile model.bps deadline.prop --explain
    python -m app.cli minimize clauses.chc
    python -m app.cli emit clauses.chc --out clauses.smt2
    python -m app.cli solve clauses.chc --solver z3
    python -m app.cli verify model.bps deadline.prop --solver z3 --solver eldarica

Exit status: 0 property holds, 1 violated, 2 unknown or timeout, 3 usage,
4 unreadable or invalid input, 5 process not well-formed, 6 solver error,
7 oracle disagreement under --strict-oracle.
"""

import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional, Tuple

import structlog
from pydantic import ValidationError

from bpmn.wellformed import render_report
from chc.clauses import parse_clauses
from verification.minimizer import render_partition
from verification.semantics import DurationPolicy, ExplorationBounds, render_trace
from verification.smtlib import emit_smtlib
from verification.solver import SolverOutcome, SolverVerdict

from .core.config import settings
from .core.logging import configure_logging
from .schemas.verification import DeadlineTemplate, ResponseTemplate, RunConfig
from .services.verification_service import (
    ProcessNotWellFormed,
    VerificationOutcome,
    VerificationService,
)

logger = structlog.get_logger()

EXIT_HOLDS = 0
EXIT_VIOLATED = 1
EXIT_UNKNOWN = 2
EXIT_USAGE = 3
EXIT_INPUT = 4
EXIT_NOT_WELL_FORMED = 5
EXIT_SOLVER_ERROR = 6
EXIT_DISAGREEMENT = 7

_VERDICT_EXIT = {
    SolverOutcome.SATISFIABLE: EXIT_HOLDS,
    SolverOutcome.UNSATISFIABLE: EXIT_VIOLATED,
    SolverOutcome.UNKNOWN: EXIT_UNKNOWN,
    SolverOutcome.TIMEOUT: EXIT_UNKNOWN,
    SolverOutcome.SOLVER_ERROR: EXIT_SOLVER_ERROR,
}


class UsageError(Exception):
    """Bad command-line usage."""


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


def _oracle_bounds(text: str) -> Tuple[int, int]:
    try:
        states, slack = (int(part) for part in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected STATES,SLACK, e.g. 1000000,50")
    if states <= 0 or slack <= 0:
        raise argparse.ArgumentTypeError("bounds must be positive")
    return states, slack


def _add_property_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("property", nargs="?", type=Path, help="Property file (goal clause)")
    parser.add_argument("--response", nargs=3, metavar=("FROM", "TO", "DEADLINE"),
                        help="Response-time template instead of a property file")
    parser.add_argument("--deadline", nargs=2, metavar=("TARGET", "DEADLINE"),
                        help="Schedulability template instead of a property file")


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(prog="tempohorn",
                             description="Verify timing properties of business processes")
    parser.add_argument("--log-level", default=None, help="Logging level (default from settings)")
    parser.add_argument("--json-logs", action="store_true", help="Log JSON lines to stderr")
    commands = parser.add_subparsers(dest="command", required=True, parser_class=_ArgumentParser)

    output = _ArgumentParser(add_help=False)
    output.add_argument("--out", type=Path, help="Write the result here instead of stdout")

    minimize = _ArgumentParser(add_help=False)
    minimize.add_argument("--minimize", action=argparse.BooleanOptionalAction,
                          default=settings.MINIMIZE_BY_DEFAULT,
                          help="Merge equivalent predicates before solving")

    solver = _ArgumentParser(add_help=False)
    solver.add_argument("--solver", action="append", default=[],
                        help="Preset (z3, eldarica) or command line; repeat for a portfolio")
    solver.add_argument("--timeout", type=float, help="Seconds per solver run")

    check = commands.add_parser("check-wf", help="Check well-formedness")
    check.add_argument("model", type=Path)

    simulate = commands.add_parser("simulate", parents=[output], help="Print one run")
    simulate.add_argument("model", type=Path)
    simulate.add_argument("--seed", type=int)
    simulate.add_argument("--policy", choices=[p.value for p in DurationPolicy], default="random")
    simulate.add_argument("--max-steps", type=int, default=10_000)
    simulate.add_argument("--until", metavar="FLUENTS",
                          help="Search for a run reaching this fluent set instead")
    simulate.add_argument("--oracle-bounds", type=_oracle_bounds, metavar="STATES,SLACK")

    compile_ = commands.add_parser("compile", parents=[minimize, output],
                                   help="Emit the specialized clauses")
    compile_.add_argument("model", type=Path)
    compile_.add_argument("--explain", action="store_true",
                          help="Prefix the clauses with the definition table")

    minimize_ = commands.add_parser("minimize", parents=[output], help="Minimize a clause file")
    minimize_.add_argument("clauses", type=Path)

    emit = commands.add_parser("emit", parents=[minimize, output],
                               help="Write SMT-LIB for a clause file or a model and property")
    emit.add_argument("source", type=Path, help="Clause file, or model when a property is given")

    solve = commands.add_parser("solve", parents=[solver], help="Solve a clause file")
    solve.add_argument("clauses", type=Path)

    verify = commands.add_parser("verify", parents=[minimize, solver, output],
                                 help="Run the whole pipeline")
    verify.add_argument("model", type=Path)
    verify.add_argument("--oracle-bounds", type=_oracle_bounds, metavar="STATES,SLACK")
    verify.add_argument("--no-oracle", dest="oracle", action="store_false",
                        help="Skip the explicit-state cross-check")
    verify.add_argument("--strict-oracle", action="store_true",
                        help="Fail when the oracle disagrees with the solver")
    verify.add_argument("--format", choices=["text", "json"], default="text")

    for sub in (compile_, emit, verify):
        _add_property_arguments(sub)
    return parser


def _integer(value: str, name: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise UsageError(f"{name} must be an integer, got {value!r}")


def run_config(args: argparse.Namespace) -> RunConfig:
    """Turn parsed arguments into a validated RunConfig."""
    fields = {"command": args.command, "out": getattr(args, "out", None)}
    if args.command in ("check-wf", "simulate", "compile", "verify"):
        fields["model_path"] = args.model
    if args.command in ("minimize", "solve"):
        fields["clauses_path"] = args.clauses
    if getattr(args, "response", None):
        source, target, deadline = args.response
        fields["response"] = ResponseTemplate(source=source, target=target,
                                              deadline=_integer(deadline, "DEADLINE"))
    if getattr(args, "deadline", None):
        target, deadline = args.deadline
        fields["schedulability"] = DeadlineTemplate(target=target,
                                                    deadline=_integer(deadline, "DEADLINE"))
    fields["property_path"] = getattr(args, "property", None)
    if args.command == "emit":
        has_property = any(fields.get(k) is not None
                           for k in ("property_path", "response", "schedulability"))
        fields["model_path" if has_property else "clauses_path"] = args.source
    for name in ("solver", "timeout", "minimize", "seed", "policy", "explain", "strict_oracle",
                 "oracle", "format"):
        if hasattr(args, name) and getattr(args, name) is not None:
            fields["solvers" if name == "solver" else name] = getattr(args, name)
    bounds = getattr(args, "oracle_bounds", None)
    if bounds is not None:
        fields["max_states"], fields["max_offset"] = bounds
    return RunConfig(**fields)


def _write(cfg: RunConfig, text: str) -> None:
    if cfg.out is None:
        sys.stdout.write(text)
    else:
        cfg.out.write_text(text, encoding="utf-8")
        logger.info("Output written", path=str(cfg.out), bytes=len(text))


def _service(cfg: RunConfig) -> VerificationService:
    bounds = ExplorationBounds(cfg.max_states or settings.ORACLE_MAX_STATES,
                               cfg.max_offset or settings.ORACLE_MAX_OFFSET)
    return VerificationService(bounds, settings.MAX_CLOSURE_STATES)


def _solvers(cfg: RunConfig):
    commands = cfg.solvers or ([settings.TEMPOHORN_SOLVER] if settings.TEMPOHORN_SOLVER else [])
    return [settings.solver_config(command, cfg.timeout) for command in commands]


def _property(service: VerificationService, cfg: RunConfig, spec):
    text = cfg.property_path.read_text(encoding="utf-8") if cfg.property_path else None
    return service.resolve_property(spec, text, cfg.response, cfg.schedulability)


def _summary(outcome: VerificationOutcome) -> str:
    report = outcome.report
    lines = ["=" * 60, "VERIFICATION SUMMARY", "=" * 60]
    lines.append(f"Status: {report.status.upper()}")
    solver = report.solver
    detail = f" ({solver.detail})" if solver.detail else ""
    lines.append(f"Solver: {solver.solver or '-'} {solver.outcome} in {solver.elapsed:.3f}s{detail}")
    lines.append(f"Clauses: {report.clauses_before} -> {report.clauses_after} "
                 f"(predicates {report.predicates_before} -> {report.predicates_after})"
                 + ("" if report.minimized else ", minimization off"))
    for members in report.partition:
        lines.append(f"Merged: {{{', '.join(members)}}}")
    lines.append("Stages: " + ", ".join(f"{s.stage} {s.elapsed:.3f}s" for s in report.stages))
    if report.oracle is not None:
        oracle = report.oracle
        scope = "exhaustive" if oracle.exhaustive else "bounded"
        agreement = {True: "agrees", False: "DISAGREES", None: "inconclusive"}[oracle.agrees]
        lines.append(f"Oracle: {oracle.verdict} ({scope}, {oracle.states} states), {agreement}")
    lines.append("=" * 60)
    text = "\n".join(lines) + "\n"
    if outcome.oracle is not None and outcome.oracle.violated:
        text += "Counterexample:\n" + render_trace(outcome.oracle.trace)
    return text


def _check_wf(cfg: RunConfig) -> int:
    spec, violations = _service(cfg).check_model(cfg.model_path.read_text(encoding="utf-8"))
    sys.stdout.write(render_report(violations))
    logger.info("Well-formedness checked", objects=len(spec.objects), flows=len(spec.flows),
                violations=len(violations))
    return EXIT_NOT_WELL_FORMED if violations else EXIT_HOLDS


def _simulate(cfg: RunConfig, until: Optional[str], max_steps: int) -> int:
    service = _service(cfg)
    spec = service.load_model(cfg.model_path.read_text(encoding="utf-8"))
    if until is None:
        trace = service.simulate(spec, DurationPolicy(cfg.policy), cfg.seed, max_steps)
        _write(cfg, render_trace(trace))
        return EXIT_HOLDS
    verdict = service.explore_to(spec, until)
    if verdict.violated:
        _write(cfg, render_trace(verdict.trace))
        return EXIT_HOLDS
    sys.stderr.write(f"{until} not reached ({verdict.states} states, "
                     f"{'exhaustive' if verdict.exhaustive else 'bounded'})\n")
    return EXIT_VIOLATED


def _compile(cfg: RunConfig) -> int:
    service = _service(cfg)
    spec = service.load_model(cfg.model_path.read_text(encoding="utf-8"))
    result = service.compile(spec, _property(service, cfg, spec), cfg.minimize)
    text = result.clauses.to_text()
    if cfg.explain:
        header = result.definitions
        if result.partition is not None and result.partition.nontrivial:
            header += "".join(f"% merged {line}" for line in
                              render_partition(result.partition).splitlines(keepends=True)
                              if "," in line)
        text = header + text
    _write(cfg, text)
    logger.info("Clauses compiled", specialized=len(result.specialized), written=len(result.clauses))
    return EXIT_HOLDS


def _minimize(cfg: RunConfig) -> int:
    before, after, partition = _service(cfg).minimize_text(
        cfg.clauses_path.read_text(encoding="utf-8"))
    header = "".join(f"% {line}" for line in render_partition(partition).splitlines(keepends=True))
    _write(cfg, header + after.to_text())
    logger.info("Clauses minimized", before=len(before), after=len(after))
    return EXIT_HOLDS


def _emit(cfg: RunConfig) -> int:
    if cfg.clauses_path is not None:
        clauses = parse_clauses(cfg.clauses_path.read_text(encoding="utf-8"))
    else:
        service = _service(cfg)
        spec = service.load_model(cfg.model_path.read_text(encoding="utf-8"))
        clauses = service.compile(spec, _property(service, cfg, spec), cfg.minimize).clauses
    _write(cfg, emit_smtlib(clauses.normalized()))
    return EXIT_HOLDS


def _solve(cfg: RunConfig) -> int:
    clauses = parse_clauses(cfg.clauses_path.read_text(encoding="utf-8"))
    verdict: SolverVerdict = _service(cfg).solve(clauses, _solvers(cfg))
    print(verdict.outcome.value)
    if verdict.detail:
        sys.stderr.write(f"{verdict.detail}\n")
    return _VERDICT_EXIT[verdict.outcome]


def _verify(cfg: RunConfig) -> int:
    service = _service(cfg)
    spec = service.load_model(cfg.model_path.read_text(encoding="utf-8"))
    prop = _property(service, cfg, spec)
    outcome = service.verify(spec, prop, _solvers(cfg), cfg.minimize, cfg.oracle)
    if cfg.format == "json":
        _write(cfg, json.dumps(outcome.report.model_dump(), indent=2) + "\n")
    else:
        _write(cfg, _summary(outcome))
    if cfg.strict_oracle and outcome.disagreement:
        return EXIT_DISAGREEMENT
    return _VERDICT_EXIT[outcome.verdict.outcome]


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        configure_logging(args.json_logs, args.log_level or settings.LOG_LEVEL)
        cfg = run_config(args)
    except UsageError as e:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"{e}\n")
        return EXIT_USAGE
    except ValidationError as e:
        messages = "; ".join(error["msg"] for error in e.errors())
        sys.stderr.write(f"tempohorn: {messages}\n")
        return EXIT_USAGE

    try:
        if cfg.command == "check-wf":
            return _check_wf(cfg)
        if cfg.command == "simulate":
            return _simulate(cfg, args.until, args.max_steps)
        if cfg.command == "compile":
            return _compile(cfg)
        if cfg.command == "minimize":
            return _minimize(cfg)
        if cfg.command == "emit":
            return _emit(cfg)
        if cfg.command == "solve":
            return _solve(cfg)
        return _verify(cfg)
    except ProcessNotWellFormed as e:
        sys.stderr.write(render_report(e.violations))
        return EXIT_NOT_WELL_FORMED
    except (OSError, ValueError) as e:
        logger.error("Command failed", command=cfg.command, error=str(e))
        sys.stderr.write(f"tempohorn: {e}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
