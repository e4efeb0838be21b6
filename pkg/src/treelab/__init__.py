"""treelab: exact-arithmetic operators, derivations and rigidity solves on regular trees."""

from . import derivation, exact, liftings, sampling, suites, tree, truncation, vectors
from .tree import (
    Composition,
    Inverse,
    Portrait,
    Translation,
    aut_apply,
    aut_compose,
    aut_invert,
    aut_reach,
    format_automorphism,
    parse_automorphism,
    random_automorphism,
    vertex_neighbors,
    vertex_parent,
)
from .vectors import FinSuppVector, apply_L, apply_Lstar, apply_N, apply_lambda, dot, norms

__version__ = "0.1.0"

__all__ = [
    "Composition", "FinSuppVector", "Inverse", "Portrait", "Translation",
    "apply_L", "apply_Lstar", "apply_N", "apply_lambda", "aut_apply",
    "aut_compose", "aut_invert", "aut_reach", "derivation", "dot", "exact",
    "format_automorphism", "liftings", "norms", "parse_automorphism",
    "random_automorphism", "sampling", "suites", "tree", "truncation",
    "vectors", "vertex_neighbors", "vertex_parent",
]
