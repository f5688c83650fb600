"""Semantics, properties, specialization, minimization and solving."""
