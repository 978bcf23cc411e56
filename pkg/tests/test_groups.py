import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from folnerlab.groups import (
    H3, Z1, Z2, FolnerSequence, Region, ResourceCapError, closed_ball_size, doubling_radii,
    folner_defect, get_element_cap, left_boundary, left_boundary_minkowski, left_placements,
    parse_group, right_boundary, right_placements, set_element_cap, word_ball,
)


def brute_ball(G, n):
    """Independent BFS over the Cayley graph using the scalar group law only."""
    seen = {G.identity}
    frontier = [G.identity]
    for _ in range(n):
        nxt = []
        for g in frontier:
            for s in G.generators:
                h = G.mul(g, s)
                if h not in seen:
                    seen.add(h)
                    nxt.append(h)
        frontier = nxt
    return seen


def brute_left_boundary(K, T):
    G = K.group
    cand = {G.mul(G.inv(k), t) for k in K for t in T}
    out = set()
    for g in cand:
        Kg = {G.mul(k, g) for k in K}
        if Kg & T.elements and Kg - T.elements:
            out.add(g)
    return out


def test_h3_law_and_inverse():
    g, h = (1, 2, 3), (-4, 5, 7)
    assert H3.mul(g, h) == (-3, 7, 3 + 7 + 1 * 5)
    assert H3.mul(g, H3.inv(g)) == (0, 0, 0)
    k = (2, -1, 4)
    assert H3.mul(H3.mul(g, h), k) == H3.mul(g, H3.mul(h, k))


def test_parse_group():
    assert parse_group("z1") == Z1 and parse_group("h3") == H3 and parse_group("z2") == Z2
    with pytest.raises(ValueError):
        parse_group("sl2")


@pytest.mark.parametrize("G,n", [(Z1, 0), (Z1, 5), (Z2, 1), (Z2, 4), (H3, 0), (H3, 1), (H3, 2), (H3, 4)])
def test_ball_matches_bfs(G, n):
    B = word_ball(G, n)
    assert B.elements == frozenset(brute_ball(G, n))
    assert closed_ball_size(G, n) == len(B)


def test_ball_sizes_known():
    assert len(word_ball(Z2, 1)) == 5
    assert len(word_ball(H3, 0)) == 1 and len(word_ball(H3, 1)) == 5
    assert len(word_ball(H3, 2)) == 17


def test_ball_center_and_symmetry():
    B = word_ball(H3, 3)
    assert B.inverse() == B
    c = (1, -2, 5)
    assert word_ball(H3, 2, c) == word_ball(H3, 2).left(c)


def test_boundary_example():
    T = Region.interval(0, 9)
    K = Region.interval(-1, 1)
    assert left_boundary(K, T).elements == {(-1,), (0,), (9,), (10,)}
    assert right_boundary(K, T).elements == {(-1,), (0,), (9,), (10,)}


def test_ball_defect_formula():
    K = word_ball(Z1, 1)
    for n in (1, 5, 40):
        assert folner_defect(K, word_ball(Z1, n)) == pytest.approx(4 / (2 * n + 1))


def test_h3_defect_decreasing():
    K = word_ball(H3, 1)
    d = [folner_defect(K, word_ball(H3, n)) for n in range(4, 9)]
    assert all(b < a for a, b in zip(d, d[1:]))


def _random_region(rng, G, size, spread):
    pts = rng.integers(-spread, spread + 1, size=(size, G.dim))
    return Region.from_array(G, pts)


@pytest.mark.parametrize("G", [Z1, Z2, H3])
def test_boundary_two_ways(G):
    rng = np.random.default_rng(4)
    for _ in range(25):
        K = _random_region(rng, G, 4, 2)
        T = _random_region(rng, G, 12, 3)
        a = left_boundary(K, T)
        assert a == left_boundary_minkowski(K, T)
        assert a.elements == brute_left_boundary(K, T)


def test_boundary_intervals_fast_path():
    for (a, b), (c, d) in itertools.product([(-2, 1), (0, 0), (-3, 3)], [(0, 9), (-5, 2)]):
        K, T = Region.interval(a, b), Region.interval(c, d)
        slow = brute_left_boundary(K, T)
        assert left_boundary(K, T).elements == slow


@pytest.mark.parametrize("G", [Z2, H3])
def test_boundary_right_translation_invariance(G):
    rng = np.random.default_rng(9)
    for _ in range(10):
        K = _random_region(rng, G, 4, 2)
        T = _random_region(rng, G, 15, 3)
        g = tuple(int(v) for v in rng.integers(-5, 6, size=G.dim))
        assert len(left_boundary(K, T.right(g))) == len(left_boundary(K, T))
        assert left_boundary(K, T).right(g) == left_boundary(K, T.right(g))


def test_right_boundary_composition_z2():
    rng = np.random.default_rng(1)
    for _ in range(10):
        K = _random_region(rng, Z2, 3, 1)
        L = _random_region(rng, Z2, 3, 1)
        T = _random_region(rng, Z2, 20, 3)
        inner = right_boundary(K, right_boundary(L, T))
        assert inner.issubset(right_boundary(K.product(L), T))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.integers(-6, 6), st.integers(-6, 6), st.integers(-20, 20)),
                min_size=1, max_size=20))
def test_unimodular_counting(pts):
    T = Region.of(H3, pts)
    assert len(T.inverse()) == len(T)


@pytest.mark.parametrize("G", [Z1, Z2, H3])
def test_placements(G):
    S = word_ball(G, 1)
    T = word_ball(G, 3)
    lp = left_placements(S, T)
    rp = right_placements(S, T)
    for g in map(tuple, lp):
        assert S.left(g).issubset(T)
    for c in map(tuple, rp):
        assert S.right(c).issubset(T)
    # exhaustive check against all candidates in T
    assert len(lp) == sum(S.left(g).issubset(T) for g in T)
    assert len(rp) == sum(S.right(g).issubset(T) for g in T)


def test_strong_exhaustion():
    assert FolnerSequence.balls(H3, [0, 1, 2, 3]).is_strong_exhaustion(4)
    assert FolnerSequence.balls(Z1, "unit").is_strong_exhaustion(20)
    assert FolnerSequence.intervals().is_strong_exhaustion(20)
    assert not FolnerSequence.balls(Z1, [1, 1, 2]).is_strong_exhaustion(3)


def test_doubling_radii():
    assert doubling_radii(4) == [1, 2, 4, 16]
    assert doubling_radii(5)[-1] == 65536
    with pytest.raises(ResourceCapError):
        doubling_radii(6)


def test_intervals_sizes():
    F = FolnerSequence.intervals()
    for m in (1, 2, 7, 10):
        assert len(F[m]) == m == F.size(m)
        assert (0,) in F[m]


def test_element_cap():
    old = get_element_cap()
    try:
        set_element_cap(100)
        with pytest.raises(ResourceCapError):
            word_ball(H3, 5)
    finally:
        set_element_cap(old)


def test_region_json_roundtrip():
    B = word_ball(H3, 2)
    data = B.to_json()
    assert data == sorted(data)
    assert Region.from_json(H3, data) == B


def test_cap_refusal_leaves_table_usable():
    old = get_element_cap()
    big = 14
    try:
        set_element_cap(10)
        with pytest.raises(ResourceCapError):
            word_ball(Z2, big)
    finally:
        set_element_cap(old)
    assert len(word_ball(Z2, big)) == 2 * big * (big + 1) + 1
