import random

import pytest

from treelab import tree
from treelab.errors import InvalidAlphabetError, InvalidAutomorphismError
from treelab.sampling import random_mixed_automorphism, random_word
from treelab.tree import (
    Composition,
    Inverse,
    Portrait,
    PNode,
    Translation,
    aut_apply,
    aut_compose,
    aut_equal_on_ball,
    aut_invert,
    aut_reach,
    ball_words,
    format_automorphism,
    identity,
    parse_automorphism,
    random_automorphism,
    vertex_distance,
    vertex_neighbors,
    vertex_parent,
)


def test_parent_examples():
    assert vertex_parent(()) == ()
    assert vertex_parent((1,)) == ()
    assert vertex_parent((1, 2, 1)) == (1, 2)


def test_neighbors_examples():
    assert vertex_neighbors((), 3) == {(1,), (2,), (3,)}
    assert vertex_neighbors((1,), 3) == {(), (1, 2), (1, 3)}
    assert vertex_neighbors((1, 2), 3) == {(1,), (1, 2, 1), (1, 2, 3)}


def test_neighbors_rejects_bad_letters():
    with pytest.raises(InvalidAlphabetError):
        vertex_neighbors((5,), 3)
    with pytest.raises(InvalidAlphabetError):
        tree.check_word((1, 1))


def test_every_vertex_has_q_neighbors():
    for q in (2, 3, 4):
        for v in ball_words(q, 3):
            assert len(vertex_neighbors(v, q)) == q


def test_translation_examples():
    t1 = Translation(3, (1,))
    assert aut_apply(t1, ()) == (1,)
    assert aut_apply(t1, (1,)) == ()
    assert aut_apply(t1, (2,)) == (1, 2)


def test_translation_involution_is_identity_on_ball():
    t1 = Translation(3, (1,))
    square = aut_compose(t1, t1)
    assert aut_equal_on_ball(square, identity(3), 5)


def test_invert_translation_reverses_word():
    assert aut_invert(Translation(3, (1, 2))) == Translation(3, (2, 1))


def test_translation_group_law_on_ball():
    rng = random.Random(5)
    for _ in range(20):
        v = random_word(rng, 3, 4)
        w = random_word(rng, 3, 4)
        lhs = aut_compose(Translation(3, v), Translation(3, w))
        rhs = Translation(3, tree.reduce_concat(v, w))
        assert aut_equal_on_ball(lhs, rhs, 6)


def test_compose_with_inverse_fixes_vertices():
    rng = random.Random(11)
    for i in range(20):
        g = random_mixed_automorphism(rng, 3)
        gg = aut_compose(g, aut_invert(g))
        for _ in range(100):
            v = random_word(rng, 3, 6)
            assert aut_apply(gg, v) == v


def test_automorphisms_are_isometries():
    rng = random.Random(23)
    for _ in range(10):
        g = random_mixed_automorphism(rng, 3)
        for _ in range(20):
            u = random_word(rng, 3, 6)
            v = random_word(rng, 3, 6)
            assert vertex_distance(aut_apply(g, u), aut_apply(g, v)) == vertex_distance(u, v)


def test_portraits_commute_with_parent():
    # root-fixing symmetries preserve the parent map; this is what makes the
    # derivation vanish on root stabilisers
    rng = random.Random(7)
    for i in range(10):
        g = random_automorphism(3, "portrait", 3, seed=i)
        for v in ball_words(3, 5):
            assert aut_apply(g, vertex_parent(v)) == vertex_parent(aut_apply(g, v))


def test_portrait_is_bijection_on_spheres():
    g = random_automorphism(4, "portrait", 3, seed=3)
    for depth in range(5):
        sphere = [v for v in ball_words(4, depth) if len(v) == depth]
        images = {aut_apply(g, v) for v in sphere}
        assert len(images) == len(sphere)
        assert all(len(w) == depth for w in images)


def test_portrait_inverse_exact():
    for seed in range(8):
        g = random_automorphism(3, "portrait", 3, seed=seed)
        gi = aut_invert(g)
        assert isinstance(gi, Portrait)
        for v in ball_words(3, 5):
            assert aut_apply(gi, aut_apply(g, v)) == v


def test_portrait_rejects_bad_local_maps():
    with pytest.raises(InvalidAutomorphismError):
        Portrait(3, PNode((1, 1, 3)))
    with pytest.raises(InvalidAutomorphismError):
        # child along letter 1 must send 1 to sigma(1)=2
        Portrait(3, PNode((2, 1, 3), ((1, PNode((1, 2, 3))),)))


def test_reach_examples():
    assert aut_reach(random_automorphism(3, "portrait", 3, seed=0), 5) == 0
    assert aut_reach(Translation(3, (1,)), 4) == 1
    assert aut_reach(identity(3), 6) == 0
    assert aut_reach(Translation(3, (1, 2)), 4) == 2


def test_reach_bounds_depth_displacement():
    rng = random.Random(2)
    for _ in range(10):
        g = random_mixed_automorphism(rng, 3)
        r = aut_reach(g, 5)
        for v in ball_words(3, 5):
            assert abs(len(aut_apply(g, v)) - len(v)) <= r


def test_random_automorphism_deterministic():
    for kind in ("translation", "portrait", "composition"):
        a = random_automorphism(3, kind, 3, seed=9)
        b = random_automorphism(3, kind, 3, seed=9)
        assert a == b
    assert random_automorphism(3, "translation", 3, seed=1) != random_automorphism(
        3, "translation", 3, seed=2
    )


def test_random_automorphism_size_contracts():
    for seed in range(10):
        t = random_automorphism(3, "translation", 1, seed=seed)
        assert len(t.word) <= 1
        p = random_automorphism(3, "portrait", 2, seed=seed)
        assert p.depth <= 2
        c = random_automorphism(3, "composition", 2, seed=seed)
        assert len(c.factors) <= 2


def test_serialization_round_trip():
    rng = random.Random(31)
    cases = [
        identity(3),
        Translation(3, (1, 2, 1)),
        random_automorphism(3, "portrait", 3, seed=4),
        Inverse(Translation(3, (2,))),
        Composition(3, (Translation(3, (1,)), Inverse(random_automorphism(3, "portrait", 2, seed=1)))),
    ]
    cases += [random_mixed_automorphism(rng, 3) for _ in range(20)]
    for g in cases:
        text = format_automorphism(g)
        parsed = parse_automorphism(text, 3)
        assert parsed == g
        assert format_automorphism(parsed) == text


def test_parse_rejects_garbage():
    for bad in ("X(1)", "T(1", "P(2,[2 1 3])", "T(1)junk"):
        with pytest.raises(InvalidAutomorphismError):
            parse_automorphism(bad, 3)


def test_inverse_wrapper_applies_inverse():
    g = random_automorphism(3, "portrait", 2, seed=5)
    wrapped = Inverse(g)
    for v in ball_words(3, 4):
        assert aut_apply(wrapped, aut_apply(g, v)) == v
    assert aut_invert(wrapped) == g
