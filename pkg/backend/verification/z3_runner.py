"""
Solve an SMT-LIB HORN script with the z3 Python bindings.

Usable as a solver command where no z3 binary is installed:

    python -m verification.z3_runner script.smt2
"""

import sys
from typing import List, Optional

import z3


def solve_file(path: str, timeout_ms: Optional[int] = None) -> str:
    solver = z3.SolverFor("HORN")
    if timeout_ms is not None:
        solver.set("timeout", timeout_ms)
    solver.from_file(path)
    result = solver.check()
    if result == z3.sat:
        return "sat"
    if result == z3.unsat:
        return "unsat"
    return "unknown"


def main(argv: Optional[List[str]] = None) -> int:
    args = sys.argv[1:] if argv is None else argv
    if len(args) != 1:
        print("usage: z3_runner SCRIPT", file=sys.stderr)
        return 2
    try:
        print(solve_file(args[0]))
    except z3.Z3Exception as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
