"""
External CHC solver invocation.

A solver is any command that reads an SMT-LIB HORN script from the path
given as its last argument and prints `sat`, `unsat` or `unknown` as its
first output token. Several solvers can be raced as a portfolio.
"""

import os
import shlex
import subprocess
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple
import structlog

logger = structlog.get_logger()


class SolverOutcome(str, Enum):
    SATISFIABLE = "sat"
    UNSATISFIABLE = "unsat"
    UNKNOWN = "unknown"
    TIMEOUT = "timeout"
    SOLVER_ERROR = "error"


# Rank of non-definitive outcomes when no solver of a portfolio decides.
_FALLBACK_RANK = {SolverOutcome.UNKNOWN: 0, SolverOutcome.TIMEOUT: 1, SolverOutcome.SOLVER_ERROR: 2}

SOLVER_PRESETS: Dict[str, Tuple[str, ...]] = {
    "z3": ("z3", "-smt2"),
    "eldarica": ("eld", "-horn", "-hsmt"),
}


@dataclass(frozen=True)
class SolverConfig:
    """Argument vector of a solver; the script path is appended on each run."""

    command: Tuple[str, ...]
    timeout: float = 60.0
    name: str = ""

    def __post_init__(self):
        if not self.command:
            raise ValueError("solver command must not be empty")
        if self.timeout <= 0:
            raise ValueError("solver timeout must be positive")

    @property
    def label(self) -> str:
        return self.name or os.path.basename(self.command[0])

    @classmethod
    def from_command(cls, text: str, timeout: float = 60.0,
                     extra_args: Sequence[str] = ()) -> "SolverConfig":
        """Build a config from a preset name (`z3`, `eldarica`) or a shell-style command line."""
        if text in SOLVER_PRESETS:
            return cls(SOLVER_PRESETS[text] + tuple(extra_args), timeout, text)
        return cls(tuple(shlex.split(text)) + tuple(extra_args), timeout)


@dataclass
class SolverVerdict:
    outcome: SolverOutcome
    raw: str = ""
    elapsed: float = 0.0
    solver: str = ""
    detail: Optional[str] = None

    @property
    def definitive(self) -> bool:
        return self.outcome in (SolverOutcome.SATISFIABLE, SolverOutcome.UNSATISFIABLE)

    def to_dict(self) -> Dict:
        return {
            "outcome": self.outcome.value,
            "solver": self.solver,
            "elapsed": round(self.elapsed, 3),
            "detail": self.detail,
        }


def classify_output(stdout: str) -> Optional[SolverOutcome]:
    """Outcome named by the first output token, or None."""
    tokens = stdout.split()
    if not tokens:
        return None
    first = tokens[0].strip().lower()
    for outcome in (SolverOutcome.SATISFIABLE, SolverOutcome.UNSATISFIABLE, SolverOutcome.UNKNOWN):
        if first == outcome.value:
            return outcome
    return None


def _write_script(script: str) -> str:
    handle = tempfile.NamedTemporaryFile("w", suffix=".smt2", delete=False, encoding="utf-8")
    with handle:
        handle.write(script)
    return handle.name


@dataclass
class _Launch:
    config: SolverConfig
    started: float
    process: Optional[subprocess.Popen] = None
    failure: Optional[str] = None
    cancelled: bool = field(default=False)


def _launch(config: SolverConfig, path: str) -> _Launch:
    started = time.monotonic()
    try:
        process = subprocess.Popen(list(config.command) + [path], stdout=subprocess.PIPE,
                                   stderr=subprocess.PIPE, text=True)
    except OSError as e:
        return _Launch(config, started, failure=str(e))
    return _Launch(config, started, process)


def _collect(launch: _Launch) -> SolverVerdict:
    config = launch.config
    if launch.process is None:
        logger.error("Solver could not be started", solver=config.label, error=launch.failure)
        return SolverVerdict(SolverOutcome.SOLVER_ERROR, solver=config.label, detail=launch.failure)
    process = launch.process
    try:
        stdout, stderr = process.communicate(timeout=config.timeout)
    except subprocess.TimeoutExpired:
        process.kill()
        stdout, _ = process.communicate()
        elapsed = time.monotonic() - launch.started
        logger.warning("Solver timed out", solver=config.label, timeout=config.timeout)
        return SolverVerdict(SolverOutcome.TIMEOUT, stdout or "", elapsed, config.label,
                             f"no answer within {config.timeout}s")
    elapsed = time.monotonic() - launch.started

    outcome = classify_output(stdout)
    if outcome is None:
        detail = (stderr or stdout).strip().splitlines()
        message = detail[0] if detail else f"exit status {process.returncode}"
        if not launch.cancelled:
            logger.error("Solver produced no verdict", solver=config.label,
                         returncode=process.returncode, error=message)
        return SolverVerdict(SolverOutcome.SOLVER_ERROR, stdout, elapsed, config.label, message)
    logger.info("Solver finished", solver=config.label, outcome=outcome.value,
                elapsed=round(elapsed, 3))
    return SolverVerdict(outcome, stdout, elapsed, config.label)


def run_solver(config: SolverConfig, script: str) -> SolverVerdict:
    """
    Run one solver on a script.

    Launch failures and output without a verdict token are reported as
    SOLVER_ERROR; a run exceeding the timeout is killed and reported as
    TIMEOUT.
    """
    path = _write_script(script)
    try:
        return _collect(_launch(config, path))
    finally:
        os.unlink(path)


def _kill(launch: _Launch) -> None:
    launch.cancelled = True
    if launch.process is not None and launch.process.poll() is None:
        launch.process.kill()


def run_portfolio(configs: Sequence[SolverConfig], script: str) -> SolverVerdict:
    """
    Race several solvers on the same script.

    The first definitive verdict wins and the other processes are killed.
    Without a definitive verdict the best remaining outcome is returned,
    UNKNOWN before TIMEOUT before SOLVER_ERROR.
    """
    if not configs:
        raise ValueError("a portfolio needs at least one solver")
    if len(configs) == 1:
        return run_solver(configs[0], script)

    path = _write_script(script)
    try:
        launches = [_launch(config, path) for config in configs]
        verdicts: List[SolverVerdict] = []
        winner: Optional[SolverVerdict] = None
        with ThreadPoolExecutor(max_workers=len(launches)) as pool:
            futures = {pool.submit(_collect, launch): launch for launch in launches}
            for future in as_completed(futures):
                verdict = future.result()
                if futures[future].cancelled:
                    continue
                verdicts.append(verdict)
                if verdict.definitive and winner is None:
                    winner = verdict
                    for other in launches:
                        if other is not futures[future]:
                            _kill(other)
        if winner is not None:
            logger.info("Portfolio decided", solver=winner.solver, outcome=winner.outcome.value)
            return winner
        return min(verdicts, key=lambda v: _FALLBACK_RANK[v.outcome])
    finally:
        os.unlink(path)
