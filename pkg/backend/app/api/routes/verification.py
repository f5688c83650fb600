from fastapi import APIRouter, HTTPException
import structlog

from ...core.config import settings
from ...schemas.verification import (
    CompileRequest,
    CompileResponse,
    MinimizeRequest,
    MinimizeResponse,
    VerificationReport,
    VerifyRequest
)
from ...services.verification_service import VerificationService
from verification.semantics import ExplorationBounds

logger = structlog.get_logger()
router = APIRouter()

# Input errors (parse, model, clause, property, partition, emission) are ValueErrors.
def _status_for(error: Exception) -> int:
    return 422 if isinstance(error, ValueError) else 500

@router.post("/compile", response_model=CompileResponse)
async def compile_clauses(request: CompileRequest) -> CompileResponse:
    """Specialize a process and property into constrained Horn clauses."""
    try:
        service = VerificationService(max_closure_states=settings.MAX_CLOSURE_STATES)
        spec = service.load_model(request.model)
        prop = service.resolve_property(spec, request.property, request.response,
                                        request.schedulability)
        result = service.compile(spec, prop, request.minimize)
        return CompileResponse(
            clauses=result.clauses.to_text(),
            clause_count=len(result.clauses),
            predicate_count=len(result.clauses.defined_predicates),
            specialized_clause_count=len(result.specialized),
            specialized_predicate_count=len(result.specialized.defined_predicates),
            partition=result.partition.to_dict() if result.partition else [],
            definitions=result.definitions if request.explain else None
        )

    except Exception as e:
        logger.error("Failed to compile clauses", error=str(e))
        raise HTTPException(status_code=_status_for(e), detail=str(e))

@router.post("/minimize", response_model=MinimizeResponse)
async def minimize_clauses(request: MinimizeRequest) -> MinimizeResponse:
    """Merge equivalent predicates of a clause listing."""
    try:
        before, after, partition = VerificationService().minimize_text(request.clauses)
        return MinimizeResponse(
            clauses=after.to_text(),
            before=len(before),
            after=len(after),
            partition=partition.to_dict()
        )

    except Exception as e:
        logger.error("Failed to minimize clauses", error=str(e))
        raise HTTPException(status_code=_status_for(e), detail=str(e))

@router.post("/verify", response_model=VerificationReport)
async def verify_property(request: VerifyRequest) -> VerificationReport:
    """Run the whole pipeline and cross-check the solver with the oracle."""
    try:
        bounds = ExplorationBounds(request.max_states or settings.ORACLE_MAX_STATES,
                                   request.max_offset or settings.ORACLE_MAX_OFFSET)
        service = VerificationService(bounds, settings.MAX_CLOSURE_STATES)
        spec = service.load_model(request.model)
        prop = service.resolve_property(spec, request.property, request.response,
                                        request.schedulability)
        commands = request.solvers or ([settings.TEMPOHORN_SOLVER] if settings.TEMPOHORN_SOLVER
                                       else [])
        solvers = [settings.solver_config(c, request.timeout) for c in commands]
        outcome = service.verify(spec, prop, solvers, request.minimize, request.oracle)
        return outcome.report

    except Exception as e:
        logger.error("Failed to verify property", error=str(e))
        raise HTTPException(status_code=_status_for(e), detail=str(e))
