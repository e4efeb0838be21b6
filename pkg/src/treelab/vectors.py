"""Finitely supported rational vectors on the tree and the basic operators.

All coefficients are exact rationals, which makes every operator identity in
this package checkable by literal equality.  The canonical order on support
vertices is (depth, lexicographic word); serialisation is a list of
``word:numerator/denominator`` triples in that order.
"""

from __future__ import annotations

from fractions import Fraction

from . import tree
from .tree import Word, TreeAutomorphism


class FinSuppVector:
    """Immutable finitely supported map Vertex -> Fraction; zeros are dropped."""

    __slots__ = ("_entries",)

    def __init__(self, entries=None):
        data: dict[Word, Fraction] = {}
        if entries:
            items = entries.items() if isinstance(entries, dict) else entries
            for word, coeff in items:
                word = tree.check_word(tuple(word))
                coeff = Fraction(coeff)
                if coeff:
                    data[word] = data.get(word, Fraction(0)) + coeff
                    if not data[word]:
                        del data[word]
        object.__setattr__(self, "_entries", data)

    @staticmethod
    def zero() -> "FinSuppVector":
        return FinSuppVector()

    @staticmethod
    def dirac(word: Word, coeff=1) -> "FinSuppVector":
        return FinSuppVector({tuple(word): Fraction(coeff)})

    def items(self) -> list[tuple[Word, Fraction]]:
        """Entries in canonical (depth, lexicographic) order."""
        return sorted(self._entries.items(), key=lambda kv: (len(kv[0]), kv[0]))

    def support(self) -> list[Word]:
        return [w for w, _ in self.items()]

    def coeff(self, word: Word) -> Fraction:
        return self._entries.get(tuple(word), Fraction(0))

    def support_depth(self) -> int:
        return max((len(w) for w in self._entries), default=0)

    def __len__(self):
        return len(self._entries)

    def __bool__(self):
        return bool(self._entries)

    def __eq__(self, other):
        return isinstance(other, FinSuppVector) and self._entries == other._entries

    def __hash__(self):
        return hash(tuple(self.items()))

    def __add__(self, other: "FinSuppVector") -> "FinSuppVector":
        data = dict(self._entries)
        for w, c in other._entries.items():
            s = data.get(w, Fraction(0)) + c
            if s:
                data[w] = s
            else:
                data.pop(w, None)
        out = FinSuppVector()
        object.__setattr__(out, "_entries", data)
        return out

    def __neg__(self) -> "FinSuppVector":
        out = FinSuppVector()
        object.__setattr__(out, "_entries", {w: -c for w, c in self._entries.items()})
        return out

    def __sub__(self, other: "FinSuppVector") -> "FinSuppVector":
        return self + (-other)

    def scale(self, factor) -> "FinSuppVector":
        factor = Fraction(factor)
        if not factor:
            return FinSuppVector.zero()
        out = FinSuppVector()
        object.__setattr__(out, "_entries", {w: factor * c for w, c in self._entries.items()})
        return out

    def __rmul__(self, factor):
        return self.scale(factor)

    def __repr__(self):
        if not self._entries:
            return "FinSuppVector(0)"
        parts = [f"{c}*1_{'.'.join(map(str, w)) or 'e'}" for w, c in self.items()]
        return "FinSuppVector(" + " + ".join(parts) + ")"


def apply_lambda(g: TreeAutomorphism, x: FinSuppVector) -> FinSuppVector:
    """Shift action: Dirac at s goes to Dirac at g(s)."""
    return FinSuppVector([(tree.aut_apply(g, w), c) for w, c in x.items()])


def apply_L(x: FinSuppVector) -> FinSuppVector:
    """Parent operator: 1_s -> 1_parent(s) for s != root, 1_root -> 0."""
    return FinSuppVector([(tree.vertex_parent(w), c) for w, c in x.items() if w])


def apply_Lstar(x: FinSuppVector, q: int) -> FinSuppVector:
    """Child-sum operator, the adjoint of the parent operator."""
    out = []
    for w, c in x.items():
        for child in tree.vertex_children(w, q):
            out.append((child, c))
    return FinSuppVector(out)


def apply_N(x: FinSuppVector, q: int) -> FinSuppVector:
    """Adjacency operator: 1_s -> sum of Diracs over the q neighbours of s."""
    out = []
    for w, c in x.items():
        for u in tree.vertex_neighbors(w, q):
            out.append((u, c))
    return FinSuppVector(out)


def norms(x: FinSuppVector) -> tuple[Fraction, Fraction, Fraction]:
    """(ell-1, squared ell-2, ell-infinity), all exact rationals."""
    l1 = Fraction(0)
    l2sq = Fraction(0)
    linf = Fraction(0)
    for _, c in x.items():
        l1 += abs(c)
        l2sq += c * c
        linf = max(linf, abs(c))
    return l1, l2sq, linf


def dot(x: FinSuppVector, y: FinSuppVector) -> Fraction:
    small, large = (x, y) if len(x) <= len(y) else (y, x)
    return sum((c * large.coeff(w) for w, c in small.items()), Fraction(0))


# ---------------------------------------------------------------------------
# serialisation
# ---------------------------------------------------------------------------


def to_triples(x: FinSuppVector) -> list[tuple[Word, int, int]]:
    return [(w, c.numerator, c.denominator) for w, c in x.items()]


def from_triples(triples) -> FinSuppVector:
    return FinSuppVector([(tuple(w), Fraction(num, den)) for w, num, den in triples])


def serialize_vector(x: FinSuppVector) -> str:
    if not x:
        return "0"
    parts = []
    for w, num, den in to_triples(x):
        word = ".".join(str(j) for j in w) or "e"
        parts.append(f"{word}:{num}/{den}")
    return ";".join(parts)


def parse_vector(text: str) -> FinSuppVector:
    text = text.strip()
    if text == "0":
        return FinSuppVector.zero()
    triples = []
    for part in text.split(";"):
        word_text, _, coeff_text = part.partition(":")
        num_text, _, den_text = coeff_text.partition("/")
        word = () if word_text == "e" else tuple(int(j) for j in word_text.split("."))
        triples.append((word, int(num_text), int(den_text)))
    return from_triples(triples)
