from fastapi import APIRouter, HTTPException
import structlog

from chc.syntax import ParseError
from bpmn.model import ModelError
from verification.semantics import DurationPolicy
from ...core.config import settings
from ...schemas.verification import (
    ModelCheckRequest,
    ModelCheckResponse,
    SimulationRequest,
    SimulationResponse,
    ViolationSchema
)
from ...services.verification_service import ProcessNotWellFormed, VerificationService

logger = structlog.get_logger()
router = APIRouter()

@router.post("/check", response_model=ModelCheckResponse)
async def check_process(request: ModelCheckRequest) -> ModelCheckResponse:
    """Parse a process and report every well-formedness violation."""
    try:
        spec, violations = VerificationService().check_model(request.model)
        return ModelCheckResponse(
            well_formed=not violations,
            objects=len(spec.objects),
            flows=len(spec.flows),
            violations=[ViolationSchema(**v.to_dict()) for v in violations]
        )

    except (ParseError, ModelError) as e:
        logger.error("Failed to read process", error=str(e))
        raise HTTPException(status_code=422, detail=str(e))
    except Exception as e:
        logger.error("Failed to check process", error=str(e))
        raise HTTPException(status_code=500, detail=str(e))

@router.post("/simulate", response_model=SimulationResponse)
async def simulate_process(request: SimulationRequest) -> SimulationResponse:
    """Produce one seeded run of a well-formed process."""
    try:
        service = VerificationService(settings.oracle_bounds())
        spec = service.load_model(request.model)
        trace = service.simulate(spec, DurationPolicy(request.policy), request.seed,
                                 request.max_steps)
        return SimulationResponse(
            trace=[str(step) for step in trace],
            final_time=trace[-1].time,
            steps=len(trace) - 1
        )

    except (ParseError, ModelError, ProcessNotWellFormed) as e:
        logger.error("Failed to read process", error=str(e))
        raise HTTPException(status_code=422, detail=str(e))
    except Exception as e:
        logger.error("Failed to simulate process", error=str(e))
        raise HTTPException(status_code=500, detail=str(e))
