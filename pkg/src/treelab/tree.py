"""Reduced-word model of the q-regular tree and its computable automorphisms.

Vertices are reduced words over the alphabet {1, .., q} in which no two
consecutive letters agree; every letter is an involution, so the empty word
(the root) together with word concatenation-with-cancellation is the Cayley
graph of a free product of q copies of the order-two group.  Each vertex has
exactly q neighbours and every graph automorphism is realised by compositions
of two computable building blocks:

* ``Translation(w)`` -- left multiplication by a reduced word, moving the root;
* ``Portrait`` -- a root-fixing symmetry given by local letter bijections down
  to a finite depth and a canonical letter-swap continuation below.

Automorphism equality is only decidable on balls, so all behavioural checks
carry an explicit depth bound (see :func:`aut_equal_on_ball`).

Serialisation grammar (round-trips exactly, ``q`` supplied as context)::

    T(1.2.1)    translation by the word [1,2,1]; T() is the identity
    P(d,node)   portrait of depth d; node := [s1 s2 .. sq] or
                [s1 .. sq|j1:node,j2:node,...]
    C[g1,g2]    composition, leftmost factor applied last
    I(g)        inverse of g
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from functools import lru_cache

from .errors import InvalidAlphabetError, InvalidAutomorphismError

Word = tuple[int, ...]

ROOT: Word = ()


def check_word(word: Word, q: int | None = None) -> Word:
    """Validate reducedness (and letter range when q is given)."""
    prev = 0
    for letter in word:
        if letter < 1 or (q is not None and letter > q):
            raise InvalidAlphabetError(f"letter {letter} outside alphabet 1..{q}")
        if letter == prev:
            raise InvalidAlphabetError(f"word {word} is not reduced")
        prev = letter
    return tuple(word)


def reduce_concat(a: Word, b: Word) -> Word:
    """Concatenate two reduced words, cancelling involutive letters at the seam."""
    out = list(a)
    for letter in b:
        if out and out[-1] == letter:
            out.pop()
        else:
            out.append(letter)
    return tuple(out)


def word_inverse(word: Word) -> Word:
    return tuple(reversed(word))


def vertex_depth(v: Word) -> int:
    return len(v)


def vertex_parent(v: Word) -> Word:
    """Drop the last letter; the root is its own parent."""
    return v[:-1] if v else ROOT


def vertex_children(v: Word, q: int) -> list[Word]:
    """The q-1 children of v (q children for the root), in letter order."""
    check_word(v, q)
    last = v[-1] if v else 0
    return [v + (j,) for j in range(1, q + 1) if j != last]


def vertex_neighbors(v: Word, q: int) -> set[Word]:
    """All q neighbours: appending each letter, with involutive cancellation."""
    check_word(v, q)
    return {reduce_concat(v, (j,)) for j in range(1, q + 1)}


def vertex_distance(u: Word, v: Word) -> int:
    return len(reduce_concat(word_inverse(u), v))


def ball_words(q: int, depth: int) -> list[Word]:
    """All vertices of depth <= depth in canonical (depth, lexicographic) order."""
    levels: list[list[Word]] = [[ROOT]]
    for _ in range(depth):
        nxt = []
        for w in levels[-1]:
            last = w[-1] if w else 0
            for j in range(1, q + 1):
                if j != last:
                    nxt.append(w + (j,))
        levels.append(nxt)
    return [w for level in levels for w in level]


# ---------------------------------------------------------------------------
# automorphisms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Translation:
    """Left multiplication v -> reduce(word . v); moves the root to ``word``."""

    q: int
    word: Word

    def __post_init__(self):
        check_word(self.word, self.q)
        object.__setattr__(self, "word", tuple(self.word))

    def __str__(self):
        return format_automorphism(self)


@dataclass(frozen=True)
class PNode:
    """One node of a portrait: a full letter permutation plus child nodes.

    ``sigma[j-1]`` is the image of letter j.  A node reached through letter j
    must map j to the same image as its parent did, which keeps the encoded
    local maps bijective between the available-letter sets.
    """

    sigma: tuple[int, ...]
    children: tuple[tuple[int, "PNode"], ...] = ()

    def child(self, letter: int) -> "PNode | None":
        for j, node in self.children:
            if j == letter:
                return node
        return None


@dataclass(frozen=True)
class Portrait:
    """Root-fixing automorphism, identity (canonical swap) below its depth."""

    q: int
    root: PNode

    def __post_init__(self):
        _validate_pnode(self.root, self.q, incoming=None, pinned=None)

    @property
    def depth(self) -> int:
        return _pnode_depth(self.root)

    def __str__(self):
        return format_automorphism(self)


@dataclass(frozen=True)
class Composition:
    """Ordered product of automorphisms; the rightmost factor acts first."""

    q: int
    factors: tuple["TreeAutomorphism", ...]

    def __post_init__(self):
        if not self.factors:
            raise InvalidAutomorphismError("empty composition")
        for g in self.factors:
            if g.q != self.q:
                raise InvalidAutomorphismError("mixed alphabet sizes in composition")

    def __str__(self):
        return format_automorphism(self)


@dataclass(frozen=True)
class Inverse:
    """Lazy inverse wrapper; materialised on application."""

    inner: "TreeAutomorphism"

    @property
    def q(self) -> int:
        return self.inner.q

    def __str__(self):
        return format_automorphism(self)


TreeAutomorphism = Translation | Portrait | Composition | Inverse


def _validate_pnode(node: PNode, q: int, incoming: int | None, pinned: int | None):
    if len(node.sigma) != q or sorted(node.sigma) != list(range(1, q + 1)):
        raise InvalidAutomorphismError(f"local map {node.sigma} is not a permutation of 1..{q}")
    if incoming is not None and node.sigma[incoming - 1] != pinned:
        raise InvalidAutomorphismError(
            f"local map at letter {incoming} must send it to {pinned}, got {node.sigma[incoming - 1]}"
        )
    seen = set()
    for letter, child in node.children:
        if letter < 1 or letter > q:
            raise InvalidAutomorphismError(f"portrait child letter {letter} out of range")
        if incoming is not None and letter == incoming:
            raise InvalidAutomorphismError("portrait child along the incoming letter")
        if letter in seen:
            raise InvalidAutomorphismError(f"duplicate portrait child {letter}")
        seen.add(letter)
        _validate_pnode(child, q, incoming=letter, pinned=node.sigma[letter - 1])


def _pnode_depth(node: PNode) -> int:
    return 1 + max((_pnode_depth(child) for _, child in node.children), default=0)


def identity(q: int) -> Translation:
    return Translation(q, ())


def is_identity_translation(g: TreeAutomorphism) -> bool:
    return isinstance(g, Translation) and not g.word


def _portrait_apply(p: Portrait, v: Word) -> Word:
    node: PNode | None = p.root
    prev_in = prev_out = 0
    out = []
    for x in v:
        if node is not None:
            y = node.sigma[x - 1]
            node = node.child(x)
        elif x == prev_out:
            # canonical continuation: transposition of (prev_in, prev_out)
            y = prev_in
        else:
            y = x
        out.append(y)
        prev_in, prev_out = x, y
    return tuple(out)


def aut_apply(g: TreeAutomorphism, v: Word) -> Word:
    """Image of the vertex v under g."""
    if isinstance(g, Translation):
        return reduce_concat(g.word, v)
    if isinstance(g, Portrait):
        check_word(v, g.q)
        return _portrait_apply(g, v)
    if isinstance(g, Composition):
        for factor in reversed(g.factors):
            v = aut_apply(factor, v)
        return v
    if isinstance(g, Inverse):
        return aut_apply(_materialized_inverse(g.inner), v)
    raise TypeError(f"not a tree automorphism: {g!r}")


def _pnode_invert(node: PNode) -> PNode:
    q = len(node.sigma)
    inv = [0] * q
    for j, image in enumerate(node.sigma, start=1):
        inv[image - 1] = j
    children = tuple(
        sorted((node.sigma[j - 1], _pnode_invert(child)) for j, child in node.children)
    )
    return PNode(tuple(inv), children)


@lru_cache(maxsize=4096)
def _materialized_inverse(g: TreeAutomorphism) -> TreeAutomorphism:
    if isinstance(g, Translation):
        return Translation(g.q, word_inverse(g.word))
    if isinstance(g, Portrait):
        return Portrait(g.q, _pnode_invert(g.root))
    if isinstance(g, Composition):
        return Composition(g.q, tuple(aut_invert(f) for f in reversed(g.factors)))
    if isinstance(g, Inverse):
        return g.inner
    raise TypeError(f"not a tree automorphism: {g!r}")


def aut_invert(g: TreeAutomorphism) -> TreeAutomorphism:
    """Exact inverse; portraits invert node by node, compositions reverse."""
    return _materialized_inverse(g)


def _factors_of(g: TreeAutomorphism) -> tuple[TreeAutomorphism, ...]:
    return g.factors if isinstance(g, Composition) else (g,)


def aut_compose(g: TreeAutomorphism, h: TreeAutomorphism) -> TreeAutomorphism:
    """Composition g after h; adjacent translations fuse by word reduction."""
    if g.q != h.q:
        raise InvalidAutomorphismError("mixed alphabet sizes in composition")
    factors = list(_factors_of(g)) + list(_factors_of(h))
    fused: list[TreeAutomorphism] = []
    for f in factors:
        if fused and isinstance(fused[-1], Translation) and isinstance(f, Translation):
            fused[-1] = Translation(g.q, reduce_concat(fused[-1].word, f.word))
        else:
            fused.append(f)
    fused = [f for f in fused if not is_identity_translation(f)] or [identity(g.q)]
    if len(fused) == 1:
        return fused[0]
    return Composition(g.q, tuple(fused))


def aut_reach(g: TreeAutomorphism, depth_bound: int) -> int:
    """max |depth(g(v)) - depth(v)| over the ball of radius depth_bound.

    Portraits are depth-preserving by construction, so they short-circuit to 0;
    everything else is evaluated exhaustively over the ball.
    """
    if depth_bound < 0:
        raise ValueError("depth_bound must be >= 0")
    if isinstance(g, Portrait):
        return 0
    if isinstance(g, Inverse) and isinstance(g.inner, Portrait):
        return 0
    return max(
        abs(len(aut_apply(g, v)) - len(v)) for v in ball_words(g.q, depth_bound)
    )


def aut_equal_on_ball(g: TreeAutomorphism, h: TreeAutomorphism, depth: int) -> bool:
    """Behavioural equality of two automorphisms on the depth-``depth`` ball."""
    if g.q != h.q:
        return False
    return all(aut_apply(g, v) == aut_apply(h, v) for v in ball_words(g.q, depth))


# ---------------------------------------------------------------------------
# random generation (deterministic in all arguments)
# ---------------------------------------------------------------------------


def _random_reduced_word(rng: random.Random, q: int, length: int) -> Word:
    word: list[int] = []
    for _ in range(length):
        choices = [j for j in range(1, q + 1) if not word or j != word[-1]]
        word.append(rng.choice(choices))
    return tuple(word)


def _random_permutation(rng: random.Random, q: int) -> tuple[int, ...]:
    perm = list(range(1, q + 1))
    rng.shuffle(perm)
    return tuple(perm)


def _random_pinned_permutation(rng: random.Random, q: int, pin_from: int, pin_to: int):
    rest_src = [j for j in range(1, q + 1) if j != pin_from]
    rest_dst = [j for j in range(1, q + 1) if j != pin_to]
    rng.shuffle(rest_dst)
    sigma = [0] * q
    sigma[pin_from - 1] = pin_to
    for src, dst in zip(rest_src, rest_dst):
        sigma[src - 1] = dst
    return tuple(sigma)


def _random_pnode(rng: random.Random, q: int, levels_left: int,
                  incoming: int | None, pinned: int | None) -> PNode:
    if incoming is None:
        sigma = _random_permutation(rng, q)
    else:
        sigma = _random_pinned_permutation(rng, q, incoming, pinned)
    children = []
    if levels_left > 1:
        for j in range(1, q + 1):
            if j == incoming:
                continue
            if rng.random() < 0.75:
                children.append((j, _random_pnode(rng, q, levels_left - 1, j, sigma[j - 1])))
    return PNode(sigma, tuple(children))


def random_automorphism(q: int, kind: str, size: int, seed: int) -> TreeAutomorphism:
    """Deterministic sample; translation words / portrait depths bounded by size."""
    rng = random.Random(f"aut:{q}:{kind}:{size}:{seed}")
    if kind == "translation":
        return Translation(q, _random_reduced_word(rng, q, rng.randint(0, size)))
    if kind == "portrait":
        depth = rng.randint(1, max(1, size))
        return Portrait(q, _random_pnode(rng, q, depth, None, None))
    if kind == "composition":
        count = rng.randint(1, max(1, size))
        factors = []
        for _ in range(count):
            if rng.random() < 0.5:
                f: TreeAutomorphism = Translation(q, _random_reduced_word(rng, q, rng.randint(0, size)))
            else:
                f = Portrait(q, _random_pnode(rng, q, rng.randint(1, max(1, size)), None, None))
            if rng.random() < 0.3:
                f = Inverse(f)
            factors.append(f)
        return Composition(q, tuple(factors))
    raise ValueError(f"unknown automorphism kind: {kind}")


# ---------------------------------------------------------------------------
# serialisation
# ---------------------------------------------------------------------------


def _format_word(word: Word) -> str:
    return ".".join(str(x) for x in word)


def _format_pnode(node: PNode) -> str:
    sigma = " ".join(str(x) for x in node.sigma)
    if not node.children:
        return f"[{sigma}]"
    kids = ",".join(f"{j}:{_format_pnode(c)}" for j, c in sorted(node.children))
    return f"[{sigma}|{kids}]"


def format_automorphism(g: TreeAutomorphism) -> str:
    if isinstance(g, Translation):
        return f"T({_format_word(g.word)})"
    if isinstance(g, Portrait):
        return f"P({g.depth},{_format_pnode(g.root)})"
    if isinstance(g, Composition):
        return "C[" + ",".join(format_automorphism(f) for f in g.factors) + "]"
    if isinstance(g, Inverse):
        return f"I({format_automorphism(g.inner)})"
    raise TypeError(f"not a tree automorphism: {g!r}")


class _Parser:
    def __init__(self, text: str, q: int):
        self.text = text
        self.pos = 0
        self.q = q

    def error(self, message: str):
        raise InvalidAutomorphismError(f"{message} at position {self.pos} in {self.text!r}")

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch: str):
        if self.peek() != ch:
            self.error(f"expected {ch!r}")
        self.pos += 1

    def integer(self) -> int:
        start = self.pos
        while self.peek().isdigit():
            self.pos += 1
        if start == self.pos:
            self.error("expected integer")
        return int(self.text[start:self.pos])

    def word(self) -> Word:
        if self.peek() == ")":
            return ()
        letters = [self.integer()]
        while self.peek() == ".":
            self.pos += 1
            letters.append(self.integer())
        return tuple(letters)

    def pnode(self) -> PNode:
        self.expect("[")
        sigma = [self.integer()]
        while self.peek() == " ":
            self.pos += 1
            sigma.append(self.integer())
        children = []
        if self.peek() == "|":
            self.pos += 1
            while True:
                letter = self.integer()
                self.expect(":")
                children.append((letter, self.pnode()))
                if self.peek() == ",":
                    self.pos += 1
                    continue
                break
        self.expect("]")
        return PNode(tuple(sigma), tuple(children))

    def automorphism(self) -> TreeAutomorphism:
        head = self.peek()
        if head == "T":
            self.pos += 1
            self.expect("(")
            word = self.word()
            self.expect(")")
            return Translation(self.q, word)
        if head == "P":
            self.pos += 1
            self.expect("(")
            depth = self.integer()
            self.expect(",")
            node = self.pnode()
            self.expect(")")
            portrait = Portrait(self.q, node)
            if portrait.depth != depth:
                self.error(f"declared portrait depth {depth} != actual {portrait.depth}")
            return portrait
        if head == "C":
            self.pos += 1
            self.expect("[")
            factors = [self.automorphism()]
            while self.peek() == ",":
                self.pos += 1
                factors.append(self.automorphism())
            self.expect("]")
            return Composition(self.q, tuple(factors))
        if head == "I":
            self.pos += 1
            self.expect("(")
            inner = self.automorphism()
            self.expect(")")
            return Inverse(inner)
        self.error("expected one of T/P/C/I")


def parse_automorphism(text: str, q: int) -> TreeAutomorphism:
    parser = _Parser(text.strip(), q)
    g = parser.automorphism()
    if parser.pos != len(parser.text):
        parser.error("trailing characters")
    return g
