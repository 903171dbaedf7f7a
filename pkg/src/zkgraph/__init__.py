"""Verifiable graph query engine over PLONKish constraint tables.

Queries are parsed from a small plan DSL, executed natively against a
committed graph database to produce witnesses, compiled into a single
constraint table, and checked directly (gates, lookups, randomized
permutation arguments) under Fiat-Shamir challenges.  The result is an
attestation bundle any holder of the database commitment can re-verify
offline.
"""

from .field import MODULUS, fe_add, fe_inv, fe_mul, fe_from_bytes_wide
from .cs import ConstraintTable, build_table, build_running_product
from .store import GraphDb, GraphSchema, load_csv, to_csr, commit_db

__all__ = [
    "MODULUS",
    "fe_add",
    "fe_inv",
    "fe_mul",
    "fe_from_bytes_wide",
    "ConstraintTable",
    "build_table",
    "build_running_product",
    "GraphDb",
    "GraphSchema",
    "load_csv",
    "to_csr",
    "commit_db",
]
