"""
Test configuration for the TempoHorn verification toolchain
"""

import os
import shutil
import sys
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from app.main import app
from bpmn.model import BusinessProcessSpec, load_bps
from chc.clauses import ClauseSet, parse_clauses
from verification.properties import PropertySpec, load_property
from verification.solver import SolverConfig

FIXTURES = Path(__file__).parent / "fixtures"

MINIMAL_BPS = """
start(s). end(e). task(t).
seq(s,t). seq(t,e).
duration(t, D) :- D>={d}, D=<{d}.
duration(X, D) :- not_task(X), D=0.
"""

def fixture_text(name: str) -> str:
    return (FIXTURES / name).read_text(encoding="utf-8")

def minimal_bps(duration: int) -> str:
    """start -> task of fixed duration -> end."""
    return MINIMAL_BPS.format(d=duration)

@pytest.fixture(scope="session")
def po_text() -> str:
    return fixture_text("po.bps")

@pytest.fixture(scope="session")
def po_spec() -> BusinessProcessSpec:
    return load_bps(FIXTURES / "po.bps")

@pytest.fixture(scope="session")
def deadline9() -> PropertySpec:
    return load_property(FIXTURES / "po_deadline9.prop")

@pytest.fixture(scope="session")
def deadline8() -> PropertySpec:
    return load_property(FIXTURES / "po_deadline8.prop")

@pytest.fixture(scope="session")
def specialized_clauses() -> ClauseSet:
    """The 51-clause listing produced for the order process and the 9-unit deadline."""
    return parse_clauses(fixture_text("po_specialized.chc"))

@pytest.fixture(scope="session")
def minimized_clauses() -> ClauseSet:
    return parse_clauses(fixture_text("po_minimized.chc"))

def _z3_bindings_available() -> bool:
    try:
        import z3  # noqa: F401
    except ImportError:
        return False
    return True

def resolve_solver() -> SolverConfig:
    """TEMPOHORN_SOLVER, then a z3 or eld binary, then the z3 bindings front end."""
    configured = os.environ.get("TEMPOHORN_SOLVER")
    if configured:
        return SolverConfig.from_command(configured, timeout=60.0)
    if shutil.which("z3"):
        return SolverConfig.from_command("z3", timeout=60.0)
    if shutil.which("eld"):
        return SolverConfig.from_command("eldarica", timeout=60.0)
    if _z3_bindings_available():
        backend = Path(__file__).resolve().parent.parent
        runner = backend / "verification" / "z3_runner.py"
        return SolverConfig((sys.executable, str(runner)), 60.0, "z3-bindings")
    pytest.skip("no CHC solver available")

@pytest.fixture(scope="session")
def solver_config() -> SolverConfig:
    return resolve_solver()

@pytest.fixture
def client():
    """Create test client."""
    with TestClient(app) as test_client:
        yield test_client
