"""
TempoHorn

Verification of timing properties of business processes. A process with
task duration bounds and a property over waypoint times are compiled into
constrained Horn clauses and handed to an external CHC solver.

Features:
- Well-formedness checks and a seeded simulator for process models
- Explicit-state oracle for property verdicts on small models
- Clause specialization, predicate-merging minimization and SMT-LIB emission
- Solver portfolio over any HORN-capable solver (z3, Eldarica)
- RESTful API with FastAPI and a command-line driver (python -m app.cli)
"""

import sys
import os
import uvicorn

# Add current directory to Python path for imports
current_dir = os.path.dirname(os.path.abspath(__file__))
sys.path.insert(0, current_dir)

from app.main import app  # noqa: E402

if __name__ == "__main__":
    print("Starting TempoHorn API...")
    print("API Documentation: http://localhost:8000/docs")
    uvicorn.run("run:app", host="0.0.0.0", port=8000, reload=True)
