"""Operator circuits: expansion, path families, relational primitives."""
