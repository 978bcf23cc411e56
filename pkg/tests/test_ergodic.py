import numpy as np
import pytest

from folnerlab.ergodic import (
    HullPoint, banach_density, constant_function, convergence_experiment, envelope_sweep,
    letter_indicator, pattern_frequency, pattern_indicator, random_hull_points, test_axioms,
    toy_subadditive, weight_count, weight_wf,
)
from folnerlab.groups import H3, Z1, FolnerSequence, Region, left_boundary, word_ball
from folnerlab.patterns import Patch, build_coloring
from oracles import PHI, count_substring, fib_string

run_axioms = test_axioms  # the battery itself, not a test


@pytest.fixture(scope="module")
def fib():
    return build_coloring("fibonacci", length=60000)


def test_constant_local_function():
    c = build_coloring("fibonacci", length=100)
    w = weight_wf(constant_function(Z1))
    x = HullPoint.centered(c)
    T = Region.interval(-10, 10)
    assert w(T, x) == len(T)
    assert w(Region(Z1), x) == 0


def test_letter_count_matches_string(fib):
    w = weight_wf(letter_indicator(fib, "a"))
    x = HullPoint(fib, (0,))  # Pi = C
    # the site value at y reads Pi at y^{-1} = -y
    T = Region.interval(-9999, 0)
    assert w(T, x) == fib_string(10000).count("a")


def test_pattern_count_matches_string(fib):
    E = Patch(Region.interval(0, 1), {(0,): 1.0, (1,): 2.0})  # "ab"
    w = weight_wf(pattern_indicator(E))
    x = HullPoint(fib, (0,))
    T = Region.interval(-998, 0)
    assert w(T, x) == count_substring(fib_string(1000), "ab")


def test_count_weight_mass(fib):
    w = weight_count(fib.sigma)
    x = HullPoint(fib, (0,))
    K = Region.interval(0, 99).inverse()
    word = fib_string(100)
    assert w(K, x) == sum(1.0 if ch == "a" else 2.0 for ch in word)
    assert w(Region(Z1), x) == 0


def test_constant_iota_count():
    c = build_coloring("constant", length=300)
    w = weight_count(c.sigma)
    x = HullPoint.centered(c)
    K = Region.interval(-20, 30)
    assert w(K, x) == len(K)


def test_hull_point_rejects_outside():
    c = build_coloring("fibonacci", length=100)
    x = HullPoint.centered(c)
    assert x.validity_radius() == 49
    with pytest.raises(ValueError):
        x.weights_at(np.array([[60]]))
    assert x.translate((3,)).validity_radius() == 46


def test_hull_translate_action():
    c = build_coloring("random", group=H3, radius=5, seed=0)
    x = HullPoint.centered(c)
    h, y = (1, 0, 2), (0, 1, 0)
    # (h.Pi)(h y) = Pi(y)
    assert x.translate(h).weights_at(np.array([H3.mul(h, y)]))[0] == x.weights_at(np.array([y]))[0]


def test_envelope_brackets_every_translate(fib):
    w = weight_wf(letter_indicator(fib, "a"))
    x = HullPoint.centered(fib)
    T = Region.interval(-20, 20)
    window = Region.interval(-300, 300)
    env = envelope_sweep(w, T, window, x)
    for g in range(-280, 281, 13):
        v = w(T.right((g,)), x) / len(T)
        assert env.w_minus - 1e-12 <= v <= env.w_plus + 1e-12
    assert env.translates == 601 - 41 + 1


def test_envelope_trivial_cases():
    c = build_coloring("constant", length=500)
    w = weight_count(c.sigma)
    x = HullPoint.centered(c)
    env = envelope_sweep(w, Region.interval(-5, 5), None, x)
    assert env.w_plus == env.w_minus == 1.0
    fib = build_coloring("fibonacci", length=500)
    xf = HullPoint.centered(fib)
    T = Region.interval(-5, 5)
    env = envelope_sweep(weight_count(), T, T, xf)
    assert env.translates == 1
    assert env.w_plus == env.w_minus == weight_count()(T, xf) / len(T)


def test_boundedness_property():
    c = build_coloring("random", group=H3, radius=7, seed=4)
    rng = np.random.default_rng(0)
    base = word_ball(H3, 3).array
    J = Region.of(H3, [(0, 0, 0)])
    for w, Jset in ((weight_count(c.sigma), J), (weight_wf(letter_indicator(c, "b")), None)):
        eta = w.constants["eta"]
        for x in random_hull_points(c, 3 + w.reach, 30, rng):
            L = Region.from_array(H3, base[rng.random(len(base)) < 0.6])
            bd = len(left_boundary(Jset, L)) if Jset is not None else 0
            assert abs(w(L, x)) <= eta * (len(L) + bd) + 1e-9


def test_frequencies(fib):
    F = FolnerSequence.intervals()
    a = Patch(Region.of(Z1, [(0,)]), {(0,): 1.0})
    assert abs(pattern_frequency(fib, a, F, 20000) - 1 / PHI) < 1e-3
    bb = Patch(Region.interval(0, 1), {(0,): 2.0, (1,): 2.0})
    assert pattern_frequency(fib, bb, F, 20000) == 0.0
    const = build_coloring("constant", length=1000)
    assert pattern_frequency(const, a, F, 500) == 1.0


def test_frequency_oracle_prefix():
    n = 30000
    c = build_coloring("fibonacci", length=n)
    a = Patch(Region.of(Z1, [(0,)]), {(0,): 1.0})
    F = FolnerSequence.intervals()
    m = 10000
    # the default hull point puts T_m^{-1} in the middle of the window
    f = pattern_frequency(c, a, F, m)
    word = fib_string(n)
    lo = (n - m) // 2
    counts = {word[s:s + m].count("a") for s in range(lo - 1, lo + 2)}
    assert any(abs(f - k / m) < 1e-12 for k in counts)


def test_density_examples():
    ones = build_coloring("periodic", word="ab", length=4000, iota={"a": 1.0, "b": 1.0})
    rows = banach_density(ones, FolnerSequence.intervals(), [10, 101])
    assert all(r.upper == r.lower == 1.0 for r in rows)
    ab = build_coloring("periodic", word="ab", length=4000, iota={"a": 1.0, "b": 3.0})
    rows = banach_density(ab, FolnerSequence.intervals(), [2, 10, 400])
    assert all(r.upper == r.lower == 2.0 for r in rows)
    odd = banach_density(ab, FolnerSequence.intervals(), [11])[0]
    assert odd.upper > 2 > odd.lower


def test_density_fibonacci(fib):
    rows = banach_density(fib, FolnerSequence.balls(Z1, "unit"), [100, 1000, 10000])
    target = 2 - 1 / PHI
    for r in rows:
        assert r.upper >= r.lower
    last = rows[-1]
    assert abs(last.upper - target) < 1e-3 and abs(last.lower - target) < 1e-3
    gaps = [r.gap for r in rows]
    assert gaps == sorted(gaps, reverse=True)


def test_convergence_fibonacci(fib):
    w = weight_wf(letter_indicator(fib, "a"))
    rep = convergence_experiment(w, fib, FolnerSequence.intervals(), [1000, 2000, 4000])
    spreads = [r["spread"] for r in rep.rows]
    assert spreads[2] <= 0.5 * spreads[1] + 1e-15
    assert rep.cauchy
    assert abs(rep.I_w - 1 / PHI) <= rep.error_bar + 1e-3


def test_convergence_constant():
    c = build_coloring("constant", length=3000, iota={"a": 1.5})
    rep = convergence_experiment(weight_count(c.sigma), c, FolnerSequence.balls(Z1, "unit"), [5, 50, 500])
    assert all(r["sup"] == r["inf"] == 1.5 for r in rep.rows)
    assert rep.I_w == 1.5 and rep.error_bar == 0


def test_two_schedules_agree(fib):
    w = weight_wf(letter_indicator(fib, "a"))
    a = convergence_experiment(w, fib, FolnerSequence.intervals(), [8000])
    b = convergence_experiment(w, fib, FolnerSequence.balls(Z1, "unit"), [4000])
    assert abs(a.I_w - b.I_w) <= a.error_bar + b.error_bar + 1e-3


def test_doubling_schedule_spread_periodic():
    # along radii 1, 2, 4, 16 the ab-periodic count weight has spread
    # |iota(b) - iota(a)| / (2r + 1): odd balls see one extra letter of either kind
    c = build_coloring("periodic", word="ab", length=5000)
    F = FolnerSequence.balls(Z1, "doubling")
    rep = convergence_experiment(weight_count(c.sigma), c, F, [1, 2, 3, 4])
    for row, r in zip(rep.rows, [1, 2, 4, 16]):
        assert row["spread"] == pytest.approx(1.0 / (2 * r + 1))


def test_axiom_battery_fibonacci(fib):
    wf = weight_wf(letter_indicator(fib, "a"))
    res = {r.axiom: r for r in run_axioms(wf, fib, 300, 1)}
    assert all(r.passed for r in res.values())
    assert res["W2"].measured <= 1.0
    assert res["W3"].measured == 0 and res["W4"].measured == 0
    wc = weight_count(fib.sigma)
    res = {r.axiom: r for r in run_axioms(wc, fib, 300, 1)}
    assert all(r.passed for r in res.values())
    assert res["W2"].measured <= fib.sigma


def test_axiom_battery_h3():
    c = build_coloring("random", group=H3, radius=8, seed=1)
    for w in (weight_count(c.sigma), weight_wf(letter_indicator(c, "a"))):
        assert all(r.passed for r in run_axioms(w, c, 100, 2))


def test_toy_weight_needs_theta():
    c = build_coloring("constant", length=400)
    w = toy_subadditive(Z1, theta=1.0)
    res = {r.axiom: r for r in run_axioms(w, c, 200, 3)}
    assert res["W3"].passed
    assert 0 < res["W3"].measured <= 1.0


def test_w5_probe(fib):
    w = weight_count(fib.sigma)
    res = run_axioms(w, fib, 200, 5, w5_m=20, w5_delta=0.5)
    w5 = res[-1]
    assert w5.axiom == "W5" and w5.instances > 0
    assert w5.measured < 0.5
