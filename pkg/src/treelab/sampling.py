"""Seeded samplers shared by the property suites and the tests."""

from __future__ import annotations

import random
from fractions import Fraction

from . import tree
from .exact import Mat, frac_mat, identity_mat, mat_det, mat_mul
from .tree import TreeAutomorphism
from .vectors import FinSuppVector

_KINDS = ("translation", "portrait", "composition")


def random_word(rng: random.Random, q: int, max_depth: int) -> tree.Word:
    return tree._random_reduced_word(rng, q, rng.randint(0, max_depth))


def random_vector(rng: random.Random, q: int, max_depth: int,
                  max_support: int = 6) -> FinSuppVector:
    entries = []
    for _ in range(rng.randint(1, max_support)):
        num = rng.randint(-9, 9) or 1
        den = rng.randint(1, 9)
        entries.append((random_word(rng, q, max_depth), Fraction(num, den)))
    return FinSuppVector(entries)


def random_mixed_automorphism(rng: random.Random, q: int, size: int = 2) -> TreeAutomorphism:
    kind = rng.choice(_KINDS)
    return tree.random_automorphism(q, kind, size, rng.randrange(2**30))


def random_fraction(rng: random.Random, bound: int = 5) -> Fraction:
    return Fraction(rng.randint(-bound, bound), rng.randint(1, bound))


def random_matrix(rng: random.Random, n: int, m: int | None = None, bound: int = 4) -> Mat:
    m = n if m is None else m
    return frac_mat([[rng.randint(-bound, bound) for _ in range(m)] for _ in range(n)])


def random_invertible(rng: random.Random, n: int, bound: int = 3) -> Mat:
    """Random exactly invertible matrix (rejection on zero determinant)."""
    while True:
        m = random_matrix(rng, n, bound=bound)
        if mat_det(m):
            return m


def random_upper_block(rng: random.Random, n: int, bound: int = 3) -> tuple[Mat, Mat, Mat]:
    """Random (u, w, v) with invertible diagonal blocks."""
    return (
        random_invertible(rng, n, bound),
        random_matrix(rng, n, bound=bound),
        random_invertible(rng, n, bound),
    )
