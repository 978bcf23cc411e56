import numpy as np
import pytest

from folnerlab.groups import H3, Z1, FolnerSequence, Region, ResourceCapError, word_ball
from folnerlab.patterns import build_coloring
from folnerlab.spectral import (
    HoppingOperator, StepFunction, empirical_distribution, eigenvalue_counting, ids_convergence,
    inertia_count, interior, restrict, sup_distance, sup_distance_continuous,
)
from oracles import free_ids, path_eigenvalues, sylvester_below


def test_interior_examples():
    assert interior(Region.interval(0, 10), 2) == Region.interval(2, 8)
    assert len(interior(Region.interval(0, 2), 2)) == 0
    F = word_ball(H3, 2)
    assert interior(F, 0) == F
    # in H3 the interior of a ball is more than the smaller ball
    F, B = word_ball(H3, 4), word_ball(H3, 2)
    brute = {g for g in F if B.left(g).issubset(F)}
    assert interior(F, 2).elements == brute
    assert B.issubset(interior(F, 2))


def test_restrict_small_path():
    H = HoppingOperator("adjacency")
    r = restrict(H, None, Region.interval(0, 4))
    assert r.index == [(2,)]
    assert r.matrix.tolist() == [[0.0]]


def test_constant_kernel_diagonal():
    H = HoppingOperator("constant", {"value": 2.5})
    r = restrict(H, None, Region.interval(0, 9))
    assert np.array_equal(r.matrix, 2.5 * np.eye(8))


def test_h3_adjacency():
    r = restrict(HoppingOperator("adjacency"), None, word_ball(H3, 4))
    A = r.matrix
    assert r.dim == len(interior(word_ball(H3, 4), 2))
    assert np.abs(A - A.T).max() <= 1e-12 * max(1.0, np.abs(A).max())
    assert A.sum(axis=1).max() <= 4
    assert set(np.unique(A)) <= {0.0, 1.0}


def test_kernel_range_and_symmetry():
    c = build_coloring("random", group=H3, radius=5, seed=2, alphabet_size=3)
    rng = np.random.default_rng(0)
    pts = word_ball(H3, 3).array
    for kind in ("adjacency", "potential", "schrodinger"):
        H = HoppingOperator(kind, {"coupling": 0.7})
        for _ in range(200):
            g, h = (tuple(int(v) for v in pts[k]) for k in rng.integers(0, len(pts), 2))
            Kgh = H.kernel(c, g, h)
            assert np.array_equal(Kgh, H.kernel(c, h, g).T)
            if H3.distance(g, h) >= H.M:
                assert not Kgh.any()


def test_c_invariance_sampled():
    c = build_coloring("fibonacci", length=400)
    H = HoppingOperator("schrodinger")
    rng = np.random.default_rng(1)
    checked = 0
    word = c.word()
    while checked < 1000:
        g = int(rng.integers(5, 390))
        h = g + int(rng.integers(-2, 3))
        x = int(rng.integers(-g + 5, 390 - g))
        if not (0 <= g + x < 400 and 0 <= h + x < 400):
            continue
        lo, hi = min(g, h), max(g, h)
        if word[lo:hi + 1] != word[lo + x:hi + x + 1]:
            continue
        assert np.array_equal(H.kernel(c, (g,), (h,)), H.kernel(c, (g + x,), (h + x,)))
        checked += 1


def test_table_operator_roundtrip(tmp_path):
    spec = {"kind": "table", "M": 2, "N": 1, "fiber_dim": 2, "params": {"entries": [
        {"offset": [1], "colors": None, "value": 1.0},
        {"offset": [-1], "colors": None, "value": 1.0},
        {"offset": [0], "colors": ["a", "a"], "value": [[1.0, 0.5], [0.5, 1.0]]},
    ]}}
    H = HoppingOperator.from_json(spec)
    assert HoppingOperator.from_json(H.to_json()).to_json() == H.to_json()
    c = build_coloring("fibonacci", length=50)
    r = restrict(H, c, Region.interval(10, 30))
    assert r.dim == 2 * 17
    assert np.allclose(r.matrix, r.matrix.T)
    with pytest.raises(ValueError):
        HoppingOperator.from_json({"kind": "adjacency", "M": 3})


def test_eigenvalue_counting_examples():
    A = np.diag([1.0, 2.0, 3.0])
    assert eigenvalue_counting(A, 2.0) == 2
    assert eigenvalue_counting(A, 0.5) == 0
    rng = np.random.default_rng(0)
    B = rng.normal(size=(20, 20))
    B = B + B.T
    assert eigenvalue_counting(B, np.linalg.norm(B, 2) + 1) == 20


def test_sylvester_agreement():
    rng = np.random.default_rng(7)
    for _ in range(20):
        B = rng.normal(size=(50, 50))
        B = (B + B.T) / 2
        for E in rng.uniform(-8, 8, size=5):
            k = eigenvalue_counting(B, E)
            assert k == inertia_count(B, E) == sylvester_below(B, E)


def test_path_spectrum():
    H = HoppingOperator("adjacency")
    F = Region.interval(0, 30)
    r = restrict(H, None, F)
    ev = np.linalg.eigvalsh(r.matrix)
    assert np.allclose(ev, path_eigenvalues(r.dim), atol=1e-12)


def test_potential_jumps_at_weights():
    c = build_coloring("fibonacci", length=200, iota={"a": 1.0, "b": 2.5})
    N = empirical_distribution(HoppingOperator("potential"), c, Region.interval(50, 120))
    assert set(N.locations.tolist()) == {1.0, 2.5}


def test_step_function_distance():
    a = StepFunction([0.0], [1.0])
    assert sup_distance(a, a) == 0
    assert sup_distance(a, StepFunction([1.0], [1.0])) == 1.0
    b = StepFunction([0.0, 1.0, 2.0], [0.2, 0.5, 1.0])
    shifted = StepFunction([0.5, 1.5, 2.5], [0.2, 0.5, 1.0])
    gaps = [0.2, 0.5 - 0.2, 1.0 - 0.5]
    assert sup_distance(b, shifted) == pytest.approx(max(gaps))
    with pytest.raises(ValueError):
        StepFunction([0.0, 1.0], [0.5, 0.2])


def test_distribution_monotone_and_terminal():
    c = build_coloring("fibonacci", length=500)
    F = Region.interval(100, 300)
    N = empirical_distribution(HoppingOperator("schrodinger"), c, F)
    assert np.all(np.diff(N.values) >= 0)
    assert N.terminal == pytest.approx(len(interior(F, 2)) / len(F))
    assert empirical_distribution(HoppingOperator("adjacency"), None, Region.interval(0, 2)).terminal == 0


def test_free_oracle_distance():
    H = HoppingOperator("adjacency")
    N = empirical_distribution(H, None, word_ball(Z1, 200))
    d = sup_distance_continuous(N, free_ids)
    assert d <= 0.02
    # the finite-volume distribution is the path spectrum on F^R, normalised by |F|
    assert np.allclose(N.locations, path_eigenvalues(397), atol=1e-12)
    assert np.allclose(N.values, np.arange(1, 398) / 401)


def test_constant_operator_distances():
    # jumps only at the constant; successive distributions differ by the
    # change in |F^R| / |F|
    H = HoppingOperator("constant", {"value": 1.0})
    F = FolnerSequence.balls(Z1, "unit")
    rep = ids_convergence(H, None, F, [10, 20, 40])
    for row, prev in zip(rep.rows[1:], rep.rows):
        expected = row["size_FR"] / row["size_F"] - prev["size_FR"] / prev["size_F"]
        assert row["sup_dist_prev"] == pytest.approx(expected)


def test_schrodinger_cauchy():
    c = build_coloring("fibonacci", length=2000)
    rep = ids_convergence(HoppingOperator("schrodinger"), c, FolnerSequence.balls(Z1, "unit"),
                          [100, 200, 400])
    d = [r["sup_dist_prev"] for r in rep.rows[1:]]
    assert d[1] < d[0] < 0.05


def test_ids_threads_identical():
    c = build_coloring("fibonacci", length=2000)
    F = FolnerSequence.balls(Z1, "unit")
    H = HoppingOperator("schrodinger")
    a = ids_convergence(H, c, F, [50, 100, 150], threads=1)
    b = ids_convergence(H, c, F, [50, 100, 150], threads=3)
    assert a.rows == b.rows


def test_dimension_cap():
    with pytest.raises(ResourceCapError):
        restrict(HoppingOperator("adjacency"), None, Region.interval(0, 5000))
