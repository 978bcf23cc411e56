"""Colorings as weighted Delone sets, patches, patterns and occurrences.

A coloring assigns a symbol to every element of a finite window of the
group; the weight map ``iota`` turns it into the Dirac comb
``sum_x iota(C(x)) delta_x``.  Patches carry explicit supports, so a patch
may also have empty sites (only possible for file inputs).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Optional, Sequence

import numpy as np

from .groups import (
    Element,
    GroupModel,
    Region,
    Z1,
    _check_cap,
    left_placements,
    parse_group,
    word_ball,
)


def _letters(k: int) -> tuple:
    if k > 26:
        return tuple(f"s{i}" for i in range(k))
    return tuple(chr(ord("a") + i) for i in range(k))


def substitution_word(rules: Mapping[str, str], seed: str, length: int) -> str:
    """Prefix of length ``length`` of the fixed point grown from ``seed``."""
    w = seed
    while len(w) < length:
        nxt = "".join(rules[ch] for ch in w)
        if len(nxt) <= len(w):
            raise ValueError("substitution does not grow")
        w = nxt
    return w[:length]


FIBONACCI = {"a": "ab", "b": "a"}
THUE_MORSE = {"a": "ab", "b": "ba"}


def fibonacci_word(length: int) -> str:
    return substitution_word(FIBONACCI, "a", length)


def thue_morse_word(length: int) -> str:
    return substitution_word(THUE_MORSE, "a", length)


@dataclass
class Coloring:
    """A coloring of a finite window, doubling as a weighted Delone set.

    ``codes`` are indices into ``alphabet`` aligned with ``window.array``.
    """

    group: GroupModel
    window: Region
    codes: np.ndarray
    alphabet: tuple
    iota: dict
    sigma: float = 0.0
    generator_spec: dict = field(default_factory=dict)
    center: Optional[Element] = None

    def __post_init__(self):
        self.codes = np.asarray(self.codes, dtype=np.int64)
        if len(self.codes) != len(self.window):
            raise ValueError("every window element needs a color")
        if len(self.codes) and (self.codes.min() < 0 or self.codes.max() >= len(self.alphabet)):
            raise ValueError("color code outside the alphabet")
        missing = [a for a in self.alphabet if a not in self.iota]
        if missing:
            raise ValueError(f"iota undefined for {missing}")
        vals = [float(self.iota[a]) for a in self.alphabet]
        if any(v <= 0 for v in vals):
            raise ValueError("weights must be positive")
        need = max(max(vals), 1.0 / min(vals))
        if not self.sigma:
            self.sigma = need
        elif need > self.sigma * (1 + 1e-12):
            raise ValueError(f"weights leave [1/sigma, sigma] for sigma={self.sigma}")
        if self.center is None:
            self.center = _default_center(self.window)
        self.center = tuple(int(x) for x in self.center)

    @cached_property
    def weight_table(self) -> np.ndarray:
        return np.array([float(self.iota[a]) for a in self.alphabet])

    @cached_property
    def weights(self) -> np.ndarray:
        return self.weight_table[self.codes]

    def codes_at(self, arr: np.ndarray) -> np.ndarray:
        """Color codes at the given elements; -1 outside the window."""
        idx = self.window.index_of(arr)
        out = np.where(idx >= 0, self.codes[np.maximum(idx, 0)], -1)
        return out

    def weights_at(self, arr: np.ndarray) -> np.ndarray:
        codes = self.codes_at(arr)
        if (codes < 0).any():
            raise ValueError("evaluation outside the coloring window")
        return self.weight_table[codes]

    def color(self, g: Element) -> str:
        code = int(self.codes_at(np.array([g]))[0])
        if code < 0:
            raise KeyError(f"{g} outside the window")
        return self.alphabet[code]

    def weight(self, g: Element) -> float:
        return float(self.iota[self.color(g)])

    def word(self) -> str:
        """Symbols along the window in canonical order (meant for Z)."""
        return "".join(self.alphabet[c] for c in self.codes)

    @property
    def is_interval(self) -> bool:
        if self.group != Z1 or len(self.window) == 0:
            return False
        a = self.window.array[:, 0]
        return int(a[-1] - a[0]) + 1 == len(a)

    def to_json(self) -> dict:
        cells = [list(g) + [self.alphabet[c]] for g, c in zip(self.window.array.tolist(), self.codes.tolist())]
        return {
            "group": self.group.name,
            "window": self.window.to_json(),
            "alphabet": list(self.alphabet),
            "iota": {a: float(self.iota[a]) for a in self.alphabet},
            "cells": cells,
        }

    @classmethod
    def from_json(cls, data: dict) -> "Coloring":
        group = parse_group(data["group"])
        alphabet = tuple(data["alphabet"])
        pos = {a: i for i, a in enumerate(alphabet)}
        cells = data["cells"]
        elems = [tuple(int(x) for x in cell[:-1]) for cell in cells]
        if any(len(e) != group.dim for e in elems):
            raise ValueError("cell coordinates do not match the group dimension")
        window = Region.of(group, elems)
        if len(window) != len(elems):
            raise ValueError("duplicate cells")
        if "window" in data and Region.of(group, data["window"]) != window:
            raise ValueError("window and cells disagree")
        lookup = {e: pos[cell[-1]] for e, cell in zip(elems, cells)}
        codes = [lookup[tuple(g)] for g in window.array.tolist()]
        return cls(group, window, np.array(codes), alphabet, dict(data["iota"]),
                   float(data.get("sigma", 0.0)), {"kind": "explicit"},
                   data.get("center"))

    @classmethod
    def load(cls, path) -> "Coloring":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def _default_center(window: Region) -> Element:
    if len(window) == 0:
        return window.group.identity
    arr = window.array
    lo, hi = arr.min(axis=0), arr.max(axis=0)
    mid = (lo + hi) // 2
    if tuple(mid.tolist()) in window:
        return tuple(int(x) for x in mid)
    # nearest window element to the coordinate midpoint
    k = int(np.argmin(np.abs(arr - mid).sum(axis=1)))
    return tuple(int(x) for x in arr[k])


def default_iota(alphabet: Sequence[str]) -> dict:
    return {a: float(i + 1) for i, a in enumerate(alphabet)}


def build_coloring(
    kind: str,
    group: GroupModel = Z1,
    length: Optional[int] = None,
    radius: Optional[int] = None,
    word: Optional[str] = None,
    periods: Optional[Sequence[int]] = None,
    alphabet_size: int = 2,
    seed: Optional[int] = None,
    iota: Optional[Mapping[str, float]] = None,
    path=None,
) -> Coloring:
    """Deterministic example colorings.

    ``kind`` is one of ``constant``, ``periodic``, ``fibonacci``,
    ``thue_morse``, ``random`` or ``explicit``.  On Z a ``length`` gives the
    window ``[0, length)``; otherwise ``radius`` gives the closed word ball
    around the identity.  Substitution words are only defined on Z.
    """
    if kind == "explicit":
        if path is None:
            raise ValueError("explicit colorings need a file path")
        c = Coloring.load(path)
        if iota:
            c = Coloring(c.group, c.window, c.codes, c.alphabet, dict(iota), 0.0,
                         c.generator_spec, c.center)
        return c

    if length is not None:
        if group != Z1:
            raise ValueError("'length' windows are only defined on Z")
        if length < 1:
            raise ValueError("length must be positive")
        _check_cap(length, "coloring window")
        window = Region(Z1, frozenset((i,) for i in range(length)))
        center = ((length - 1) // 2,)
    elif radius is not None:
        window = word_ball(group, radius)
        center = group.identity
    else:
        raise ValueError("give a window length (Z) or radius")
    arr = window.array
    spec = {"kind": kind, "group": group.name, "length": length, "radius": radius}

    if kind == "constant":
        alphabet = ("a",)
        codes = np.zeros(len(arr), dtype=np.int64)
    elif kind == "periodic":
        if periods is not None:
            periods = [int(p) for p in periods]
            if len(periods) != group.dim or min(periods) < 1:
                raise ValueError("need one positive period per coordinate")
            n_sym = int(np.prod(periods))
            alphabet = tuple(word) if word and len(word) == n_sym and len(set(word)) == n_sym else _letters(n_sym)
            idx = np.zeros(len(arr), dtype=np.int64)
            for i, p in enumerate(periods):
                idx = idx * p + np.mod(arr[:, i], p)
            codes = idx
            spec["periods"] = periods
        else:
            if not word:
                raise ValueError("periodic colorings need a word or periods")
            alphabet = tuple(sorted(set(word)))
            pos = {a: i for i, a in enumerate(alphabet)}
            table = np.array([pos[ch] for ch in word])
            codes = table[np.mod(arr[:, 0], len(word))]
        spec["word"] = word
    elif kind in ("fibonacci", "thue_morse"):
        if group != Z1 or length is None:
            raise ValueError(f"{kind} colorings live on a Z window [0, length)")
        w = fibonacci_word(length) if kind == "fibonacci" else thue_morse_word(length)
        alphabet = ("a", "b")
        codes = np.frombuffer(w.encode(), dtype=np.uint8).astype(np.int64) - ord("a")
    elif kind == "random":
        if seed is None:
            raise ValueError("random colorings need a seed")
        alphabet = _letters(alphabet_size)
        rng = np.random.default_rng(seed)
        codes = rng.integers(0, alphabet_size, size=len(arr))
        spec["seed"] = seed
        spec["alphabet_size"] = alphabet_size
    else:
        raise ValueError(f"unknown coloring kind {kind!r}")

    if iota is None:
        iota = default_iota(alphabet)
    return Coloring(group, window, codes, alphabet, dict(iota), 0.0, spec, center)


# -- patches ---------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Patch:
    """A support region with weighted points (``points`` maps element -> weight)."""

    support: Region
    points: Mapping
    anchor: Optional[Element] = None

    def __post_init__(self):
        pts = {tuple(int(x) for x in k): float(v) for k, v in dict(self.points).items()}
        bad = [k for k in pts if k not in self.support]
        if bad:
            raise ValueError(f"weighted points outside the support: {bad[:3]}")
        object.__setattr__(self, "points", pts)
        if self.anchor is None and len(self.support):
            object.__setattr__(self, "anchor", min(self.support.elements))

    @property
    def group(self) -> GroupModel:
        return self.support.group

    def weight_vector(self) -> np.ndarray:
        """Weights in canonical support order, 0 for empty sites."""
        return np.array([self.points.get(g, 0.0) for g in self.support.sorted()])

    def point_mask(self) -> np.ndarray:
        return np.array([g in self.points for g in self.support.sorted()], dtype=bool)

    def translate(self, g: Element) -> "Patch":
        """``g.p = (g_* mu, gS)``."""
        G = self.group
        return Patch(self.support.left(g), {G.mul(g, x): w for x, w in self.points.items()},
                     G.mul(g, self.anchor) if self.anchor is not None else None)

    def mass(self) -> float:
        return float(sum(self.points.values()))

    def __eq__(self, other) -> bool:
        if not isinstance(other, Patch):
            return NotImplemented
        return self.support == other.support and self.points == other.points

    def __hash__(self) -> int:
        return hash((self.support, frozenset(self.points.items())))

    def to_json(self) -> dict:
        return {
            "group": self.group.name,
            "support": self.support.to_json(),
            "points": [list(g) + [w] for g, w in sorted(self.points.items())],
            "anchor": list(self.anchor) if self.anchor is not None else None,
        }

    @classmethod
    def from_json(cls, data: dict) -> "Patch":
        group = parse_group(data["group"])
        support = Region.of(group, data["support"])
        points = {tuple(int(x) for x in p[:-1]): float(p[-1]) for p in data["points"]}
        anchor = tuple(data["anchor"]) if data.get("anchor") is not None else None
        return cls(support, points, anchor)


@dataclass(frozen=True)
class Pattern:
    """Translation class of a patch, stored as the representative whose
    lexicographically smallest support element is the identity.

    Left translations preserve the lexicographic order on Z^d and on H3(Z),
    so this representative is intrinsic.
    """

    canonical: Patch

    @classmethod
    def of(cls, patch: Patch) -> "Pattern":
        if len(patch.support) == 0:
            return cls(patch)
        base = min(patch.support.elements)
        return cls(patch.translate(patch.group.inv(base)))

    @property
    def support(self) -> Region:
        return self.canonical.support

    def __eq__(self, other) -> bool:
        return isinstance(other, Pattern) and self.canonical == other.canonical

    def __hash__(self) -> int:
        return hash(self.canonical)


def patch_extract(c: Coloring, S: Region) -> Patch:
    """The S-patch ``(delta_C restricted to S, S)``."""
    if S.group != c.group:
        raise ValueError("region and coloring live in different groups")
    if len(S) == 0:
        return Patch(S, {})
    idx = c.window.index_of(S.array)
    if (idx < 0).any():
        missing = [tuple(x) for x in S.array[idx < 0][:5].tolist()]
        raise ValueError(f"S escapes the coloring window; missing e.g. {missing}")
    w = c.weights[idx]
    return Patch(S, dict(zip(map(tuple, S.array.tolist()), w.tolist())))


# -- the patch discrepancy ----------------------------------------------------------

def support_distances(S: Region) -> np.ndarray:
    """Word-metric distance matrix of S in canonical order."""
    G = S.group
    arr = S.array
    rel = G.mul_arrays(G.inv_arrays(arr)[:, None, :], arr[None, :, :])
    return G.word_lengths(rel)


def discrepancy_from_matrix(D: np.ndarray, mu: np.ndarray, nu: np.ndarray,
                            relevant: np.ndarray) -> np.ndarray:
    """Closed form of the patch discrepancy for a batch of measure pairs.

    ``mu`` and ``nu`` have shape (batch, n) (or (n,)); ``relevant`` marks the
    sites carrying a point in either measure.  Open balls of radius
    ``delta in (k, k+1]`` are closed balls of radius k, so with
    ``g_k = max_y |mu(B_k(y)) - nu(B_k(y))|`` the infimum equals
    ``min_k {max(k, g_k) : g_k < k + 1}``.
    """
    mu = np.atleast_2d(np.asarray(mu, dtype=float))
    nu = np.atleast_2d(np.asarray(nu, dtype=float))
    relevant = np.atleast_2d(relevant)
    diff = mu - nu
    batch = diff.shape[0]
    best = np.full(batch, math.inf)
    if diff.shape[1] == 0:
        return np.zeros(batch)
    any_rel = relevant.any(axis=1)
    best[~any_rel] = 0.0
    dmax = int(D.max()) if D.size else 0
    g = np.zeros(batch)
    for k in range(0, dmax + 1):
        open_ = best > k
        if not open_.any():
            return best
        ball = (D <= k).astype(float)
        sums = np.abs(diff @ ball.T)  # row b, column y
        g = np.where(relevant, sums, 0.0).max(axis=1)
        ok = open_ & (g < k + 1)
        best[ok] = np.minimum(best[ok], np.maximum(k, g[ok]))
    # from the diameter on every ball is all of S, so g_k = g and radius k
    # costs max(k, g); the cheapest such k gives max(dmax, g)
    return np.minimum(best, np.maximum(g, dmax))


def patch_distance(p: Patch, q: Patch) -> float:
    """The patch discrepancy ``d_S(mu, nu)`` of two patches on one support."""
    if p.support != q.support:
        raise ValueError("patches must share the same support")
    if len(p.support) == 0:
        return 0.0
    D = support_distances(p.support)
    relevant = p.point_mask() | q.point_mask()
    return float(discrepancy_from_matrix(D, p.weight_vector(), q.weight_vector(), relevant)[0])


def translator(S: Region, T: Region) -> Optional[Element]:
    """The unique g with gS = T, or None."""
    if len(S) != len(T) or S.group != T.group:
        return None
    if len(S) == 0:
        return S.group.identity
    G = S.group
    g = G.mul(min(T.elements), G.inv(min(S.elements)))
    return g if S.left(g) == T else None


def delta_similar(p: Patch, q: Patch, delta: float) -> Optional[Element]:
    """A witness g with ``gS = T`` and ``d_T(g_* mu, nu) < delta``.

    ``delta = 0`` asks for exact equivalence.
    """
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    g = translator(p.support, q.support)
    if g is None:
        raise ValueError("supports are not translates of each other")
    moved = p.translate(g)
    if delta == 0:
        return g if moved.points == q.points else None
    return g if patch_distance(moved, q) < delta else None


def placements(S: Region, T: Region) -> np.ndarray:
    """All g with gS ⊆ T, as a sorted (n, dim) array."""
    if len(S) == 0:
        raise ValueError("empty pattern support")
    return left_placements(S, T)


def delta_occurs(pat: Pattern, T: Region, c: Coloring, delta: float) -> list:
    """All g with ``gS ⊆ T`` whose coloring patch is delta-similar to ``pat``."""
    S = pat.support
    if not T.issubset(c.window):
        raise ValueError("T must lie inside the coloring window")
    if len(S) == 0:
        return []
    cand = placements(S, T)
    if len(cand) == 0:
        return []
    G = c.group
    pts = G.mul_arrays(cand[:, None, :], S.array[None, :, :])
    nus = c.weights_at(pts)
    mu = pat.canonical.weight_vector()
    mask = pat.canonical.point_mask()
    if delta == 0:
        hit = (nus == mu[None, :]).all(axis=1) if mask.all() else np.zeros(len(cand), bool)
    else:
        D = support_distances(S)
        d = discrepancy_from_matrix(D, np.broadcast_to(mu, nus.shape), nus,
                                    np.ones_like(nus, dtype=bool))
        hit = d < delta
    return [tuple(int(x) for x in g) for g in cand[hit].tolist()]


def patch_codes(c: Coloring, S: Region, centers: np.ndarray) -> np.ndarray:
    """Color codes of the patches ``gS`` for each g in ``centers``."""
    G = c.group
    pts = G.mul_arrays(np.asarray(centers)[:, None, :], S.array[None, :, :])
    return c.codes_at(pts)


def flc_census(c: Coloring, r: int) -> set:
    """Distinct patterns of radius-r ball patches with the ball inside the window."""
    ball = word_ball(c.group, r)
    centers = placements(ball, c.window)
    if len(centers) == 0:
        return set()
    codes = patch_codes(c, ball, centers)
    uniq = np.unique(codes, axis=0)
    out = set()
    for row in uniq:
        w = c.weight_table[row]
        out.add(Pattern(Patch(ball, dict(zip(map(tuple, ball.array.tolist()), w.tolist())))))
    return out
