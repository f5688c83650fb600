"""Constrained Horn clauses: linear integer constraints, clause sets and their text syntax."""
