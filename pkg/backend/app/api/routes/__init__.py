from fastapi import APIRouter

from ..routes import (
    processes,
    verification
)

api_router = APIRouter()

# Include all route modules
api_router.include_router(processes.router, prefix="/processes", tags=["processes"])
api_router.include_router(verification.router, prefix="/verification", tags=["verification"])
