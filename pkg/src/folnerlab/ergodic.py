"""Weight functions over the hull, envelopes, axiom checks and densities.

A hull point is a translate ``t.C`` of a finite coloring, so
``(t.C)(x) = C(t^{-1} x)``.  The discrete Haar integral is the plain sum.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .groups import (
    Element,
    FolnerSequence,
    GroupModel,
    Region,
    left_boundary,
    left_placements,
    right_placements,
    word_ball,
)
from .patterns import (
    Coloring,
    Patch,
    Pattern,
    delta_occurs,
    discrepancy_from_matrix,
    support_distances,
)


# -- hull points -------------------------------------------------------------------------

@dataclass(frozen=True)
class HullPoint:
    """The translate ``t.C`` of a coloring; defined on ``t * window``."""

    coloring: Coloring
    translator: Element

    @classmethod
    def centered(cls, c: Coloring) -> "HullPoint":
        """Translate moving the coloring's center to the identity."""
        return cls(c, c.group.inv(c.center))

    @property
    def group(self) -> GroupModel:
        return self.coloring.group

    def _pull(self, arr: np.ndarray) -> np.ndarray:
        G = self.group
        arr = np.asarray(arr, dtype=np.int64).reshape(-1, G.dim)
        tinv = np.array(G.inv(self.translator))
        return G.mul_arrays(np.broadcast_to(tinv, arr.shape), arr)

    def weights_at(self, arr: np.ndarray) -> np.ndarray:
        """Point weights at ``arr``; evaluations off the domain are rejected."""
        shape = np.shape(arr)[:-1]
        y = self._pull(arr)
        codes = self.coloring.codes_at(y)
        if (codes < 0).any():
            raise ValueError("hull point evaluated outside its validity domain")
        return self.coloring.weight_table[codes].reshape(shape)

    def translate(self, h: Element) -> "HullPoint":
        """``h.(t.C) = (ht).C``."""
        return HullPoint(self.coloring, self.group.mul(h, self.translator))

    @property
    def domain(self) -> Region:
        return self.coloring.window.left(self.translator)

    def validity_radius(self) -> int:
        """Largest r with the closed r-ball around the identity inside the domain."""
        G = self.group
        dom = self.domain
        if G.identity not in dom:
            return -1
        iv = dom.z_interval
        if iv:
            return min(-iv[0], iv[1])
        r = 0
        while word_ball(G, r + 1).issubset(dom):
            r += 1
        return r


def random_hull_points(c: Coloring, margin: int, count: int, rng) -> list:
    """Hull points whose domain contains the closed ``margin``-ball around e."""
    G = c.group
    ok = left_placements(word_ball(G, margin), c.window)  # admissible t^{-1}
    if len(ok) == 0:
        raise ValueError("window too small for the requested margin")
    pick = rng.integers(0, len(ok), size=count)
    return [HullPoint(c, G.inv(tuple(int(v) for v in ok[k]))) for k in pick]


# -- local functions and weight functions ------------------------------------------------

@dataclass
class LocalFunction:
    """``f(x.Pi)`` reading the weights of ``x.Pi`` on a finite support E."""

    support: Region
    func: Callable[[np.ndarray], np.ndarray]  # (n, |E|) weights -> (n,) values
    sup_norm: float
    name: str = "f"


def pattern_indicator(patch: Patch, delta: float = 0.0) -> LocalFunction:
    """Indicator that ``x.Pi`` shows the pattern of ``patch`` on its canonical support
    (exactly, or delta-similar when ``delta > 0``)."""
    canon = Pattern.of(patch).canonical
    mu = canon.weight_vector()
    if not canon.point_mask().all():
        raise ValueError("pattern templates must carry a point at every support site")
    if delta == 0:
        def f(W):
            return (W == mu[None, :]).all(axis=1).astype(float)
    else:
        D = support_distances(canon.support)

        def f(W):
            d = discrepancy_from_matrix(D, np.broadcast_to(mu, W.shape), W,
                                        np.ones(W.shape, dtype=bool))
            return (d < delta).astype(float)
    return LocalFunction(canon.support, f, 1.0, f"indicator(delta={delta})")


def letter_indicator(c: Coloring, letter: str) -> LocalFunction:
    G = c.group
    val = float(c.iota[letter])
    return LocalFunction(Region(G, frozenset([G.identity])),
                         lambda W: (W[:, 0] == val).astype(float), 1.0, f"[{letter}]")


def constant_function(group: GroupModel, value: float = 1.0) -> LocalFunction:
    return LocalFunction(Region(group, frozenset([group.identity])),
                         lambda W: np.full(len(W), float(value)), abs(float(value)), f"const({value})")


@dataclass
class WeightFunction:
    """``w(K, x)`` with declared axiom constants.

    Additive weights carry a ``site`` map so that ``w(K, x)`` is the sum of
    site values over K; this enables fast sliding-window sweeps.
    """

    name: str
    evaluator: Callable
    constants: dict = field(default_factory=dict)
    site: Optional[Callable] = None
    domain: Optional[Callable] = None  # x -> Region of evaluable sites
    reach: int = 0  # word radius read around each site

    def __call__(self, K, x: HullPoint) -> float:
        arr = K.array if isinstance(K, Region) else np.asarray(K, dtype=np.int64)
        if arr.size == 0:
            return 0.0
        return float(self.evaluator(arr.reshape(-1, x.group.dim), x))


def _additive(name, site, constants, domain, reach=0) -> WeightFunction:
    def ev(arr, x):
        return float(site(arr, x).sum())
    return WeightFunction(name, ev, constants, site, domain, reach)


def weight_wf(f: LocalFunction) -> WeightFunction:
    """``w(T, Pi) = sum_{x in T} f(x.Pi)``."""
    E = f.support

    def site(arr, x: HullPoint):
        G = x.group
        pts = G.mul_arrays(G.inv_arrays(arr)[:, None, :], E.array[None, :, :])
        return f.func(x.weights_at(pts))

    def domain(x: HullPoint) -> Region:
        # x.Pi is readable on E iff y^{-1} E lies in the domain of Pi
        ok = left_placements(E, x.domain)
        return Region.from_array(x.group, x.group.inv_arrays(ok))

    consts = {"eta": f.sup_norm, "J": "empty", "theta": 0.0, "B": "empty",
              "vartheta": 0.0, "I": "empty"}
    reach = int(E.group.word_lengths(E.array).max())
    return _additive(f"w_f[{f.name}]", site, consts, domain, reach)


def weight_count(sigma: Optional[float] = None) -> WeightFunction:
    """``w(K, Pi) = delta_Pi(K^{-1})``, the total weight in ``K^{-1}``."""

    def site(arr, x: HullPoint):
        return x.weights_at(x.group.inv_arrays(arr))

    def domain(x: HullPoint) -> Region:
        return x.domain.inverse()

    consts = {"eta": sigma, "J": "{e}", "theta": 0.0, "B": "empty",
              "vartheta": 0.0, "I": "empty"}
    return _additive("w_count", site, consts, domain)


def toy_subadditive(group: GroupModel, theta: float = 1.0) -> WeightFunction:
    """``w(K) = |K| - theta * |∂_B(K)| / 2`` with B the generator star.

    Not additive; satisfies almost sub-additivity with constant theta (the
    boundary of a union is inside the union of boundaries)."""
    B = word_ball(group, 1)

    def ev(arr, x):
        K = Region.from_array(group, arr)
        return len(K) - 0.5 * theta * len(left_boundary(B, K))

    consts = {"eta": 1.0 + theta, "J": "B1", "theta": theta, "B": "B1",
              "vartheta": 0.0, "I": "empty"}
    return WeightFunction(f"toy(theta={theta})", ev, consts)


# -- envelopes ---------------------------------------------------------------------------

@dataclass
class Envelope:
    w_plus: float
    w_minus: float
    max_sum: float
    min_sum: float
    size: int
    translates: int

    @property
    def spread(self) -> float:
        return (self.max_sum - self.min_sum) / self.size


def _translate_sums(w: WeightFunction, T: Region, window: Region, x: HullPoint,
                    chunk: int = 4096) -> np.ndarray:
    """``w(Tg, x)`` for every g with ``Tg ⊆ window``."""
    G = x.group
    gs = right_placements(T, window)
    if len(gs) == 0:
        return np.zeros(0)
    if w.site is None:
        return np.array([w(G.mul_arrays(T.array, np.broadcast_to(g, T.array.shape)), x) for g in gs])
    vals = w.site(window.array, x)
    a, b = T.z_interval, window.z_interval
    if a and b:
        csum = np.concatenate([[0.0], np.cumsum(vals)])
        start = gs[:, 0] + a[0] - b[0]
        return csum[start + len(T)] - csum[start]
    out = np.empty(len(gs))
    for lo in range(0, len(gs), chunk):
        g = gs[lo:lo + chunk]
        pts = G.mul_arrays(T.array[None, :, :], g[:, None, :])
        idx = window.index_of(pts.reshape(-1, G.dim)).reshape(len(g), len(T))
        out[lo:lo + len(g)] = vals[idx].sum(axis=1)
    return out


def envelope_sweep(w: WeightFunction, T: Region, window: Optional[Region], x: HullPoint) -> Envelope:
    """Sup and inf of ``w(Tg, x) / |T|`` over the translates ``Tg ⊆ window``.

    ``window`` defaults to every site where ``w`` can be evaluated at x.
    """
    if len(T) == 0:
        raise ValueError("empty Følner set")
    if window is None:
        if w.domain is None:
            raise ValueError("this weight needs an explicit window")
        window = w.domain(x)
    sums = _translate_sums(w, T, window, x)
    if len(sums) == 0:
        raise ValueError("no translate of T fits inside the window")
    hi, lo = float(sums.max()), float(sums.min())
    return Envelope(hi / len(T), lo / len(T), hi, lo, len(T), len(sums))


@dataclass
class ConvergenceReport:
    rows: list  # dicts with m, size, sup, inf, spread, translates
    I_w: float
    error_bar: float
    cauchy: bool
    certified_radius: int

    def to_json(self) -> dict:
        return {"rows": self.rows, "I_w": self.I_w, "error_bar": self.error_bar,
                "cauchy": self.cauchy, "certified_radius": self.certified_radius}


def convergence_experiment(w: WeightFunction, c: Coloring, F: FolnerSequence,
                           m_list: Sequence[int], window: Optional[Region] = None,
                           x: Optional[HullPoint] = None, tol: float = 1e-12) -> ConvergenceReport:
    """Envelope rows along ``F``; ``I_w`` is the midpoint at the largest m."""
    if x is None:
        x = HullPoint.centered(c)
    if window is None:
        window = w.domain(x)
    rows = []
    for m in sorted(m_list):
        env = envelope_sweep(w, F[m], window, x)
        rows.append({"m": m, "size": env.size, "sup": env.w_plus, "inf": env.w_minus,
                     "spread": env.spread, "translates": env.translates})
    last = rows[-1]
    spreads = [r["spread"] for r in rows]
    cauchy = all(b <= a + tol for a, b in zip(spreads, spreads[1:]))
    return ConvergenceReport(rows, 0.5 * (last["sup"] + last["inf"]), 0.5 * last["spread"],
                             cauchy, x.validity_radius())


# -- frequencies and densities -----------------------------------------------------------

def pattern_frequency(c: Coloring, E: Patch, F: FolnerSequence, m: int,
                      x: Optional[HullPoint] = None) -> float:
    """Occurrences of E inside ``T_m^{-1}`` for the hull point x, over ``|T_m|``.

    Without x, the translate of the coloring that places ``T_m^{-1}`` in the
    middle of the window is used.
    """
    G = c.group
    Tinv = F[m].inverse()
    if x is None:
        fits = left_placements(Tinv, c.window)
        if len(fits) == 0:
            raise ValueError("T_m^{-1} does not fit in the coloring window")
        s = tuple(int(v) for v in fits[len(fits) // 2])
        x = HullPoint(c, G.inv(s))
    # occurrences in t.C inside R are occurrences in C inside t^{-1} R
    region = Tinv.left(G.inv(x.translator))
    hits = delta_occurs(Pattern.of(E), region, c, 0.0)
    return len(hits) / len(Tinv)


@dataclass
class DensityRow:
    m: int
    upper: float
    lower: float
    size: int
    translates: int

    @property
    def gap(self) -> float:
        return self.upper - self.lower


def banach_density(c: Coloring, F: FolnerSequence, m_list: Sequence[int],
                   x: Optional[HullPoint] = None) -> list:
    """``sup_g`` and ``inf_g`` of ``delta_Pi(g T_m^{-1}) / |T_m|`` over window translates.

    Since ``delta_Pi(g T^{-1}) = w_count(T g^{-1}, Pi)`` this is the envelope
    of the counting weight.
    """
    if x is None:
        x = HullPoint.centered(c)
    w = weight_count(c.sigma)
    window = w.domain(x)
    out = []
    for m in m_list:
        env = envelope_sweep(w, F[m], window, x)
        out.append(DensityRow(m, env.w_plus, env.w_minus, env.size, env.translates))
    return out


# -- axiom battery -----------------------------------------------------------------------

@dataclass
class AxiomResult:
    axiom: str
    measured: float
    declared: Optional[float]
    instances: int
    counterexamples: int
    note: str = ""

    @property
    def passed(self) -> bool:
        return self.counterexamples == 0

    def to_json(self) -> dict:
        return {"axiom": self.axiom, "measured": self.measured, "declared": self.declared,
                "instances": self.instances, "counterexamples": self.counterexamples,
                "passed": self.passed, "note": self.note}


def _boundary_size(spec, K: Region) -> int:
    if spec in (None, "empty"):
        return 0
    G = K.group
    J = Region(G, frozenset([G.identity])) if spec == "{e}" else word_ball(G, 1)
    return len(left_boundary(J, K))


def _random_subset(rng, base: np.ndarray, p: float) -> np.ndarray:
    return base[rng.random(len(base)) < p]


def test_axioms(w: WeightFunction, c: Coloring, trials: int, seed: int,
                radius: int = 3, shift_radius: int = 2, tol: float = 1e-9,
                w5_m: Optional[int] = None, w5_delta: float = 0.25) -> list:
    """Randomized checks of W1-W4 (and a W5 probe) reporting measured constants.

    Each trial draws a hull point whose domain covers all evaluations, then
    random nested pairs, disjoint families and translates inside the
    ``radius``-ball.  A counterexample is an instance violating the declared
    constant.
    """
    rng = np.random.default_rng(seed)
    G = c.group
    consts = w.constants
    extra = shift_radius + w.reach
    pts = random_hull_points(c, radius + extra + 1, trials, rng)
    base = word_ball(G, radius).array
    eta = consts.get("eta")
    theta = consts.get("theta", 0.0) or 0.0
    vartheta = consts.get("vartheta", 0.0) or 0.0

    w1 = w2 = w3 = w4 = 0
    m2 = m3 = m4 = 0.0
    eq3 = eq4 = 0.0
    for x in pts:
        if w(np.zeros((0, G.dim), dtype=np.int64), x) != 0:
            w1 += 1
        # W2: K ⊆ L
        L = _random_subset(rng, base, 0.7)
        K = L[rng.random(len(L)) < 0.5]
        Lr, Kr = Region.from_array(G, L), Region.from_array(G, K)
        den = len(Lr) - len(Kr) + _boundary_size(consts.get("J"), Lr) + _boundary_size(consts.get("J"), Kr)
        diff = abs(w(Lr, x) - w(Kr, x))
        if den == 0:
            if diff > tol:
                w2 += 1
                m2 = math.inf
        else:
            m2 = max(m2, diff / den)
            if eta is not None and diff > eta * den + tol:
                w2 += 1
        # W3: a random partition of a random subset
        U = _random_subset(rng, base, 0.8)
        labels = rng.integers(0, 4, size=len(U))
        parts = [Region.from_array(G, U[labels == k]) for k in range(4)]
        resid = w(Region.from_array(G, U), x) - sum(w(P, x) for P in parts)
        bsum = sum(_boundary_size(consts.get("B"), P) for P in parts)
        eq3 = max(eq3, abs(resid))
        if resid > tol:
            if bsum == 0:
                m3 = math.inf
            else:
                m3 = max(m3, resid / bsum)
            if resid > theta * bsum + tol:
                w3 += 1
        # W4: w(K, x) vs w(K h^{-1}, h.x)
        hs = word_ball(G, shift_radius).array
        h = tuple(int(v) for v in hs[rng.integers(0, len(hs))])
        Kh = Kr.right(G.inv(h))
        d4 = abs(w(Kr, x) - w(Kh, x.translate(h)))
        eq4 = max(eq4, d4)
        ib = _boundary_size(consts.get("I"), Kr)
        if d4 > tol:
            m4 = math.inf if ib == 0 else max(m4, d4 / ib)
            if d4 > vartheta * ib + tol:
                w4 += 1

    out = [
        AxiomResult("W1", 0.0, 0.0, trials, w1, "w(empty) = 0"),
        AxiomResult("W2", m2, eta, trials, w2, f"J = {consts.get('J')}"),
        AxiomResult("W3", m3, theta, trials, w3, f"max |residual| = {eq3:.3g}"),
        AxiomResult("W4", m4, vartheta, trials, w4, f"max |defect| = {eq4:.3g}"),
    ]
    if w5_m is not None:
        out.append(_w5_probe(w, c, w5_m, w5_delta, trials, rng))
    return out


test_axioms.__test__ = False  # keep pytest from collecting it


def _w5_probe(w: WeightFunction, c: Coloring, m: int, delta: float, trials: int, rng) -> AxiomResult:
    """Pairs of hull points with ``d_{T^{-1}}(Pi, Phi) <= delta`` on T = B_m;
    reports the largest ``|w(T, Phi) - w(T, Pi)| / |T|`` among them."""
    G = c.group
    T = word_ball(G, m)
    pts = random_hull_points(c, m + 4, 2 * trials, rng)
    Tinv = T.inverse()
    D = support_distances(Tinv)
    worst, close = 0.0, 0
    for a, b in zip(pts[::2], pts[1::2]):
        wa, wb = a.weights_at(Tinv.array), b.weights_at(Tinv.array)
        d = float(discrepancy_from_matrix(D, wa, wb, np.ones(len(wa), dtype=bool))[0])
        if d <= delta:
            close += 1
            worst = max(worst, abs(w(T, a) - w(T, b)) / len(T))
    return AxiomResult("W5", worst, None, close, 0,
                       f"max |w(T,Phi)-w(T,Pi)|/|T| over {close} pairs with d <= {delta} at m={m}")
