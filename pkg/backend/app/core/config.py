from pydantic_settings import BaseSettings
from typing import List, Optional

from verification.semantics import ExplorationBounds
from verification.solver import SolverConfig

class Settings(BaseSettings):
    """Application settings."""

    # App settings
    APP_NAME: str = "TempoHorn"
    VERSION: str = "1.0.0"
    DEBUG: bool = False

    # API settings
    API_V1_STR: str = "/api/v1"
    ALLOWED_HOSTS: List[str] = ["http://localhost:3000", "http://127.0.0.1:3000"]

    # Solver settings
    TEMPOHORN_SOLVER: Optional[str] = None  # preset name or command line
    SOLVER_ARGS: List[str] = []
    SOLVER_TIMEOUT: float = 60.0  # seconds per solve

    # Oracle settings
    ORACLE_MAX_STATES: int = 1_000_000
    ORACLE_MAX_OFFSET: int = 50  # time units per waypoint segment

    # Pipeline settings
    MINIMIZE_BY_DEFAULT: bool = True
    MAX_CLOSURE_STATES: int = 200_000

    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_JSON: bool = True

    class Config:
        env_file = ".env"
        env_file_encoding = "utf-8"

    def solver_config(self, command: Optional[str] = None,
                      timeout: Optional[float] = None) -> Optional[SolverConfig]:
        """Solver from an explicit command or TEMPOHORN_SOLVER; None when neither is set."""
        text = command or self.TEMPOHORN_SOLVER
        if not text:
            return None
        return SolverConfig.from_command(text, timeout or self.SOLVER_TIMEOUT, self.SOLVER_ARGS)

    def oracle_bounds(self) -> ExplorationBounds:
        return ExplorationBounds(self.ORACLE_MAX_STATES, self.ORACLE_MAX_OFFSET)

settings = Settings()
