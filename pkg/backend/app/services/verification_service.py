import time
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Sequence, Tuple
import structlog

from bpmn.model import BusinessProcessSpec, parse_bps
from bpmn.wellformed import Violation, check_well_formed
from chc.clauses import ClauseSet, parse_clauses
from chc.constraints import LinearConstraint
from verification.fluents import parse_fluent_set
from verification.minimizer import Partition, minimize
from verification.properties import (
    PropertySpec,
    Waypoint,
    parse_property,
    response_time_property,
    schedulability_property,
)
from verification.semantics import (
    DurationPolicy,
    ExplorationBounds,
    OracleVerdict,
    TraceStep,
    explore,
    simulate_run,
)
from verification.smtlib import emit_smtlib
from verification.solver import SolverConfig, SolverOutcome, SolverVerdict, run_portfolio
from verification.specializer import Specializer

from ..schemas.verification import (
    DeadlineTemplate,
    OracleReport,
    ResponseTemplate,
    SolverReport,
    StageTiming,
    VerificationReport,
)

logger = structlog.get_logger()

_STATUS = {
    SolverOutcome.SATISFIABLE: "holds",
    SolverOutcome.UNSATISFIABLE: "violated",
    SolverOutcome.UNKNOWN: "unknown",
    SolverOutcome.TIMEOUT: "unknown",
    SolverOutcome.SOLVER_ERROR: "solver_error",
}


class ProcessNotWellFormed(ValueError):
    """The process fails one or more well-formedness conditions."""

    def __init__(self, violations: List[Violation]):
        super().__init__("; ".join(str(v) for v in violations))
        self.violations = violations


@dataclass
class CompileResult:
    specialized: ClauseSet
    clauses: ClauseSet
    partition: Optional[Partition]
    definitions: str
    stages: List[StageTiming] = field(default_factory=list)


@dataclass
class VerificationOutcome:
    """Report plus the objects the command line prints."""
    report: VerificationReport
    verdict: SolverVerdict
    oracle: Optional[OracleVerdict]
    compiled: CompileResult

    @property
    def disagreement(self) -> bool:
        return self.report.oracle is not None and self.report.oracle.agrees is False


@contextmanager
def _stage(stages: List[StageTiming], name: str) -> Iterator[None]:
    started = time.perf_counter()
    yield
    elapsed = time.perf_counter() - started
    stages.append(StageTiming(stage=name, elapsed=round(elapsed, 4)))
    logger.info("Stage completed", stage=name, elapsed=round(elapsed, 4))


class VerificationService:
    """Pipeline shared by the command line and the HTTP routes."""

    def __init__(self, bounds: Optional[ExplorationBounds] = None,
                 max_closure_states: int = 200_000):
        self.bounds = bounds or ExplorationBounds()
        self.max_closure_states = max_closure_states

    def load_model(self, text: str, require_well_formed: bool = True) -> BusinessProcessSpec:
        spec = parse_bps(text)
        if require_well_formed:
            violations = check_well_formed(spec)
            if violations:
                logger.error("Process is not well-formed", violations=len(violations))
                raise ProcessNotWellFormed(violations)
        return spec

    def check_model(self, text: str) -> Tuple[BusinessProcessSpec, List[Violation]]:
        spec = parse_bps(text)
        return spec, check_well_formed(spec)

    def resolve_property(self, spec: BusinessProcessSpec, text: Optional[str] = None,
                         response: Optional[ResponseTemplate] = None,
                         schedulability: Optional[DeadlineTemplate] = None) -> PropertySpec:
        """A property from goal-clause text or from one of the templates."""
        if text is not None:
            prop = parse_property(text)
        elif response is not None:
            prop = response_time_property(spec, parse_fluent_set(response.source),
                                          parse_fluent_set(response.target), response.deadline)
        elif schedulability is not None:
            prop = schedulability_property(spec, parse_fluent_set(schedulability.target),
                                           schedulability.deadline)
        else:
            raise ValueError("no property given")
        prop.check_against(spec)
        return prop

    def simulate(self, spec: BusinessProcessSpec, policy: DurationPolicy, seed: Optional[int],
                 max_steps: int = 10_000) -> List[TraceStep]:
        trace = simulate_run(spec, policy, seed, max_steps)
        logger.info("Simulation completed", steps=len(trace) - 1, final_time=trace[-1].time,
                    policy=policy.value, seed=seed)
        return trace

    def explore_to(self, spec: BusinessProcessSpec, target: str) -> OracleVerdict:
        """Search for any run reaching the fluent set `target`."""
        prop = PropertySpec((Waypoint(parse_fluent_set(target), "T1"),), LinearConstraint.true())
        return explore(spec, prop, self.bounds)

    def compile(self, spec: BusinessProcessSpec, prop: PropertySpec,
                minimize_clauses: bool = True) -> CompileResult:
        stages: List[StageTiming] = []
        specializer = Specializer(spec, prop, self.max_closure_states)
        with _stage(stages, "specialization"):
            specialized = specializer.specialize()
        definitions = specializer.table.render()
        if not minimize_clauses:
            return CompileResult(specialized, specialized, None, definitions, stages)
        with _stage(stages, "minimization"):
            minimized, partition = minimize(specialized)
        return CompileResult(specialized, minimized, partition, definitions, stages)

    def minimize_text(self, text: str) -> Tuple[ClauseSet, ClauseSet, Partition]:
        clauses = parse_clauses(text).normalized()
        minimized, partition = minimize(clauses)
        return clauses, minimized, partition

    def solve(self, clauses: ClauseSet, solvers: Sequence[SolverConfig],
              stages: Optional[List[StageTiming]] = None) -> SolverVerdict:
        stages = stages if stages is not None else []
        with _stage(stages, "emission"):
            script = emit_smtlib(clauses.normalized())
        if not solvers:
            logger.error("No solver configured")
            return SolverVerdict(SolverOutcome.SOLVER_ERROR,
                                 detail="no solver configured; set TEMPOHORN_SOLVER or --solver")
        with _stage(stages, "solving"):
            return run_portfolio(list(solvers), script)

    def verify(self, spec: BusinessProcessSpec, prop: PropertySpec,
               solvers: Sequence[SolverConfig], minimize_clauses: bool = True,
               run_oracle: bool = True) -> VerificationOutcome:
        """
        Specialize, optionally minimize, emit and solve; then cross-check
        the solver verdict against the explicit-state oracle.

        A satisfiable clause set means the property holds. The oracle
        result is advisory; a definitive disagreement is logged.
        """
        compiled = self.compile(spec, prop, minimize_clauses)
        stages = list(compiled.stages)
        verdict = self.solve(compiled.clauses, solvers, stages)

        oracle: Optional[OracleVerdict] = None
        oracle_report: Optional[OracleReport] = None
        if run_oracle:
            with _stage(stages, "oracle"):
                oracle = explore(spec, prop, self.bounds)
            agrees = None
            if verdict.definitive and oracle.definitive:
                agrees = oracle.violated == (verdict.outcome is SolverOutcome.UNSATISFIABLE)
                if not agrees:
                    logger.warning("Oracle and solver disagree", solver=verdict.outcome.value,
                                   oracle=oracle.kind.value)
            oracle_report = OracleReport(agrees=agrees, **oracle.to_dict())

        report = VerificationReport(
            status=_STATUS[verdict.outcome],
            clauses_before=len(compiled.specialized),
            predicates_before=len(compiled.specialized.defined_predicates),
            clauses_after=len(compiled.clauses),
            predicates_after=len(compiled.clauses.defined_predicates),
            minimized=compiled.partition is not None,
            partition=[c for c in compiled.partition.to_dict() if len(c) > 1]
            if compiled.partition else [],
            stages=stages,
            solver=SolverReport(**verdict.to_dict()),
            oracle=oracle_report,
        )
        logger.info("Verification completed", status=report.status,
                    clauses_before=report.clauses_before, clauses_after=report.clauses_after)
        return VerificationOutcome(report, verdict, oracle, compiled)

