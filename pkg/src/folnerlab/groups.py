"""Discrete groups, word metrics, finite regions and Følner diagnostics.

Two group models ship: the free abelian groups ``Z^d`` with the standard
generators and the integer Heisenberg group ``H3(Z)`` with generators
``a^{±1} = (±1, 0, 0)`` and ``b^{±1} = (0, ±1, 0)``.  Elements are plain
integer tuples.  Regions are immutable sets of elements bound to a group.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

DEFAULT_ELEMENT_CAP = 5_000_000
_element_cap = DEFAULT_ELEMENT_CAP


class ResourceCapError(RuntimeError):
    """Raised when an enumeration would exceed the configured element cap."""


def set_element_cap(cap: int) -> None:
    global _element_cap
    if cap < 1:
        raise ValueError("element cap must be positive")
    _element_cap = int(cap)


def get_element_cap() -> int:
    return _element_cap


def _check_cap(size: int, what: str) -> None:
    if size > _element_cap:
        raise ResourceCapError(f"{what}: {size} elements exceeds cap {_element_cap}")


Element = tuple


@dataclass(frozen=True)
class GroupModel:
    """A finitely generated group with exact integer arithmetic.

    ``kind`` is ``"zd"`` or ``"heis3"``.  The generator list is symmetric and
    never contains the identity.
    """

    kind: str
    dim: int

    def __post_init__(self):
        if self.kind not in ("zd", "heis3"):
            raise ValueError(f"unknown group kind {self.kind!r}")
        if self.kind == "heis3" and self.dim != 3:
            raise ValueError("H3(Z) elements have three coordinates")
        if self.dim < 1:
            raise ValueError("dimension must be positive")

    @property
    def name(self) -> str:
        return "h3" if self.kind == "heis3" else f"z{self.dim}"

    @property
    def identity(self) -> Element:
        return (0,) * self.dim

    @cached_property
    def generators(self) -> tuple:
        if self.kind == "heis3":
            return ((1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0))
        gens = []
        for i in range(self.dim):
            for s in (1, -1):
                e = [0] * self.dim
                e[i] = s
                gens.append(tuple(e))
        return tuple(gens)

    # -- scalar arithmetic ------------------------------------------------
    def mul(self, g: Element, h: Element) -> Element:
        if self.kind == "heis3":
            return (g[0] + h[0], g[1] + h[1], g[2] + h[2] + g[0] * h[1])
        return tuple(a + b for a, b in zip(g, h))

    def inv(self, g: Element) -> Element:
        if self.kind == "heis3":
            return (-g[0], -g[1], -g[2] + g[0] * g[1])
        return tuple(-a for a in g)

    # -- vectorised arithmetic on (n, dim) int64 arrays ----------------------
    def mul_arrays(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        a = np.asarray(a, dtype=np.int64)
        b = np.asarray(b, dtype=np.int64)
        out = a + b
        if self.kind == "heis3":
            out[..., 2] += a[..., 0] * b[..., 1]
        return out

    def inv_arrays(self, a: np.ndarray) -> np.ndarray:
        a = np.asarray(a, dtype=np.int64)
        out = -a
        if self.kind == "heis3":
            out[..., 2] += a[..., 0] * a[..., 1]
        return out

    # -- word metric ------------------------------------------------------
    def word_length(self, g: Element) -> int:
        if self.kind == "zd":
            return sum(abs(x) for x in g)
        return _bfs_table(self).length(tuple(g))

    def distance(self, g: Element, h: Element) -> int:
        return self.word_length(self.mul(self.inv(g), h))

    def word_lengths(self, a: np.ndarray) -> np.ndarray:
        a = np.asarray(a, dtype=np.int64)
        if self.kind == "zd":
            return np.abs(a).sum(axis=-1)
        table = _bfs_table(self)
        flat = a.reshape(-1, 3)
        return np.array([table.length(tuple(map(int, r))) for r in flat],
                        dtype=np.int64).reshape(a.shape[:-1])

    # -- key packing --------------------------------------------------------
    @cached_property
    def _pack_bits(self) -> int:
        return 62 // self.dim

    def pack(self, a: np.ndarray) -> np.ndarray:
        """Order-preserving int64 keys (lexicographic on coordinates)."""
        a = np.asarray(a, dtype=np.int64)
        if self.dim == 1:
            return a[..., 0].copy()
        bits = self._pack_bits
        off = 1 << (bits - 1)
        if a.size and (a.min() < -off or a.max() >= off):
            raise ResourceCapError("coordinates exceed the packable range")
        key = np.zeros(a.shape[:-1], dtype=np.int64)
        for i in range(self.dim):
            key = (key << bits) | (a[..., i] + off)
        return key

    def to_json(self) -> str:
        return self.name


def parse_group(spec: str) -> GroupModel:
    """``"z1"``, ``"z2"``, ... or ``"h3"``."""
    s = spec.strip().lower()
    if s in ("h3", "heis3", "h3z"):
        return GroupModel("heis3", 3)
    if s.startswith("z") and s[1:].isdigit():
        return GroupModel("zd", int(s[1:]))
    raise ValueError(f"unknown group spec {spec!r}")


Z1 = GroupModel("zd", 1)
Z2 = GroupModel("zd", 2)
H3 = GroupModel("heis3", 3)


class _BFSTable:
    """Incrementally grown BFS layers around the identity."""

    def __init__(self, model: GroupModel):
        self.model = model
        self.dist = {model.identity: 0}
        self.layers = [[model.identity]]

    def grow_to(self, n: int) -> None:
        gens = self.model.generators
        mul = self.model.mul
        while len(self.layers) <= n:
            fresh = {}
            r = len(self.layers)
            for g in self.layers[-1]:
                for s in gens:
                    h = mul(g, s)
                    if h not in self.dist and h not in fresh:
                        fresh[h] = r
            # check before committing so a refused layer leaves the table intact
            _check_cap(len(self.dist) + len(fresh), f"word ball of radius {r}")
            self.dist.update(fresh)
            self.layers.append(list(fresh))

    def length(self, g: Element) -> int:
        while g not in self.dist:
            self.grow_to(len(self.layers))
        return self.dist[g]

    def ball(self, n: int) -> list:
        self.grow_to(n)
        _check_cap(sum(len(l) for l in self.layers[: n + 1]), f"word ball of radius {n}")
        out = []
        for layer in self.layers[: n + 1]:
            out.extend(layer)
        return out


_tables: dict = {}


def _bfs_table(model: GroupModel) -> _BFSTable:
    if model not in _tables:
        _tables[model] = _BFSTable(model)
    return _tables[model]


def bfs_ball(model: GroupModel, n: int) -> list:
    """Word ball around the identity by breadth-first search (any model)."""
    if n < 0:
        raise ValueError("radius must be nonnegative")
    return _bfs_table(model).ball(n)


@dataclass(frozen=True, eq=False)
class Region:
    """A finite set of group elements.

    Iteration is in canonical (lexicographic) order.  Equality compares the
    underlying sets.
    """

    group: GroupModel
    elements: frozenset = field(default_factory=frozenset)

    @classmethod
    def of(cls, group: GroupModel, elems: Iterable) -> "Region":
        fs = frozenset(tuple(int(x) for x in e) for e in elems)
        _check_cap(len(fs), "region")
        return cls(group, fs)

    @classmethod
    def from_array(cls, group: GroupModel, arr: np.ndarray) -> "Region":
        arr = np.asarray(arr, dtype=np.int64).reshape(-1, group.dim)
        _check_cap(len(arr), "region")
        return cls(group, frozenset(map(tuple, arr.tolist())))

    @classmethod
    def interval(cls, lo: int, hi: int) -> "Region":
        """The integer interval ``[lo, hi]`` in Z."""
        return cls(Z1, frozenset((i,) for i in range(lo, hi + 1)))

    def __len__(self) -> int:
        return len(self.elements)

    @cached_property
    def z_interval(self) -> Optional[tuple]:
        """``(lo, hi)`` when this is a nonempty integer interval of Z."""
        if self.group != Z1 or not self.elements:
            return None
        lo = min(self.elements)[0]
        hi = max(self.elements)[0]
        return (lo, hi) if hi - lo + 1 == len(self.elements) else None

    def __contains__(self, g) -> bool:
        return tuple(g) in self.elements

    def __iter__(self) -> Iterator[Element]:
        return iter(self.sorted())

    def __eq__(self, other) -> bool:
        if not isinstance(other, Region):
            return NotImplemented
        return self.group == other.group and self.elements == other.elements

    def __hash__(self) -> int:
        return hash((self.group, self.elements))

    def __repr__(self) -> str:
        return f"Region({self.group.name}, {len(self)} elements)"

    def sorted(self) -> list:
        return sorted(self.elements)

    @cached_property
    def array(self) -> np.ndarray:
        """Elements as a canonically sorted (n, dim) int64 array."""
        if not self.elements:
            return np.zeros((0, self.group.dim), dtype=np.int64)
        arr = np.array(list(self.elements), dtype=np.int64).reshape(-1, self.group.dim)
        keys = self.group.pack(arr)
        order = np.argsort(keys, kind="stable")
        return arr[order]

    @cached_property
    def keys(self) -> np.ndarray:
        return self.group.pack(self.array)

    def index_of(self, arr: np.ndarray) -> np.ndarray:
        """Row positions in :attr:`array` of the given elements, -1 if absent."""
        arr = np.asarray(arr, dtype=np.int64)
        shape = arr.shape[:-1]
        if len(self) == 0:
            return np.full(shape, -1, dtype=np.int64)
        try:
            q = self.group.pack(arr)
        except ResourceCapError:
            # out-of-range coordinates cannot be members
            lim = 1 << (self.group._pack_bits - 1)
            ok = np.all((arr >= -lim) & (arr < lim), axis=-1)
            out = np.full(shape, -1, dtype=np.int64)
            out[ok] = self.index_of(arr[ok])
            return out
        pos = np.searchsorted(self.keys, q)
        pos = np.minimum(pos, len(self.keys) - 1)
        hit = self.keys[pos] == q
        return np.where(hit, pos, -1)

    def contains_array(self, arr: np.ndarray) -> np.ndarray:
        return self.index_of(arr) >= 0

    # -- set algebra ------------------------------------------------------
    def _same(self, other: "Region") -> None:
        if other.group != self.group:
            raise ValueError("regions live in different groups")

    def union(self, other: "Region") -> "Region":
        self._same(other)
        return Region(self.group, self.elements | other.elements)

    def intersection(self, other: "Region") -> "Region":
        self._same(other)
        return Region(self.group, self.elements & other.elements)

    def difference(self, other: "Region") -> "Region":
        self._same(other)
        return Region(self.group, self.elements - other.elements)

    def issubset(self, other: "Region") -> bool:
        return self.elements <= other.elements

    def inverse(self) -> "Region":
        return Region(self.group, frozenset(self.group.inv(g) for g in self.elements))

    def left(self, g: Element) -> "Region":
        """The translate ``gS``."""
        mul = self.group.mul
        return Region(self.group, frozenset(mul(g, s) for s in self.elements))

    def right(self, g: Element) -> "Region":
        """The translate ``Sg``."""
        mul = self.group.mul
        return Region(self.group, frozenset(mul(s, g) for s in self.elements))

    def product(self, other: "Region") -> "Region":
        """Minkowski product ``S·T = {st}``."""
        self._same(other)
        if len(self) == 0 or len(other) == 0:
            return Region(self.group)
        a, b = self.z_interval, other.z_interval
        if a and b:
            _check_cap(len(self) + len(other), "Minkowski product")
            return Region.interval(a[0] + b[0], a[1] + b[1])
        _check_cap(len(self) * len(other), "Minkowski product")
        prod = self.group.mul_arrays(self.array[:, None, :], other.array[None, :, :])
        prod = prod.reshape(-1, self.group.dim)
        _, first = np.unique(self.group.pack(prod), return_index=True)
        return Region.from_array(self.group, prod[first])

    def to_json(self) -> list:
        return [list(g) for g in self.sorted()]

    @classmethod
    def from_json(cls, group: GroupModel, data: Sequence) -> "Region":
        return cls.of(group, data)


def word_ball(model: GroupModel, n: int, center: Element | None = None) -> Region:
    """Closed word-metric ball ``{h : d_S(center, h) <= n}``."""
    if n < 0:
        raise ValueError("radius must be nonnegative")
    if model.kind == "zd" and model.dim == 1:
        _check_cap(2 * n + 1, f"word ball of radius {n}")
        ball = Region(model, frozenset((i,) for i in range(-n, n + 1)))
    else:
        ball = Region(model, frozenset(bfs_ball(model, n)))
    if center is None or tuple(center) == model.identity:
        return ball
    return ball.left(tuple(center))


def closed_ball_size(model: GroupModel, n: int) -> int:
    if model.kind == "zd" and model.dim == 1:
        return 2 * n + 1
    return len(bfs_ball(model, n))


# -- boundaries -------------------------------------------------------------

def _fits(K: Region, T: Region, cand: np.ndarray, side: str) -> np.ndarray:
    """For each candidate g: (meets T, contained in T) for Kg (left) / gK (right)."""
    G = K.group
    if side == "left":
        pts = G.mul_arrays(K.array[None, :, :], cand[:, None, :])
    else:
        pts = G.mul_arrays(cand[:, None, :], K.array[None, :, :])
    inside = T.contains_array(pts)
    return inside.any(axis=1), inside.all(axis=1)


def _boundary(K: Region, T: Region, side: str) -> Region:
    K._same(T)
    if len(K) == 0 or len(T) == 0:
        return Region(K.group)
    a, b = K.z_interval, T.z_interval
    if a and b:
        # K+g meets T for g in [c-b, d-a]; lies inside T for g in [c-a, d-b]
        meet = set(range(b[0] - a[1], b[1] - a[0] + 1))
        meet -= set(range(b[0] - a[0], b[1] - a[1] + 1))
        return Region(K.group, frozenset((g,) for g in meet))
    # Kg meets T iff g in K^{-1}T; gK meets T iff g in T K^{-1}
    cand = K.inverse().product(T) if side == "left" else T.product(K.inverse())
    arr = cand.array
    meets, within = _fits(K, T, arr, side)
    return Region.from_array(K.group, arr[meets & ~within])


def left_boundary(K: Region, T: Region) -> Region:
    """``∂_K(T) = {g : Kg ∩ T ≠ ∅ and Kg ∩ (G∖T) ≠ ∅}``."""
    return _boundary(K, T, "left")


def right_boundary(K: Region, T: Region) -> Region:
    """``∂̃_K(T) = T K^{-1} ∩ (G∖T) K^{-1}``, i.e. gK meets T and its complement."""
    return _boundary(K, T, "right")


def left_boundary_minkowski(K: Region, T: Region) -> Region:
    """Same set as :func:`left_boundary` via ``K^{-1}T ∖ ⋂_k k^{-1}T``."""
    K._same(T)
    if len(K) == 0 or len(T) == 0:
        return Region(K.group)
    G = K.group
    hull = K.inverse().product(T)
    interior = None
    for k in K.elements:
        shifted = T.left(G.inv(k)).elements
        interior = shifted if interior is None else interior & shifted
    return Region(G, hull.elements - interior)


def _lex_sorted(arr: np.ndarray) -> np.ndarray:
    if len(arr) == 0:
        return arr
    return arr[np.lexsort(arr.T[::-1])]


def _sieve(cand: np.ndarray, S: Region, T: Region, act, chunk: int = 16) -> np.ndarray:
    """Keep the candidates moving all of S into T; far elements of S go first
    since they eliminate most candidates."""
    order = np.argsort(-S.group.word_lengths(S.array), kind="stable")
    arr = S.array[order]
    for k in range(0, len(arr), chunk):
        if len(cand) == 0:
            break
        pts = act(cand, arr[k:k + chunk])
        cand = cand[T.contains_array(pts).all(axis=1)]
    return cand


def left_placements(S: Region, T: Region) -> np.ndarray:
    """All g with ``gS ⊆ T``, lexicographically sorted (n, dim) array."""
    S._same(T)
    G = S.group
    if len(S) == 0:
        raise ValueError("empty shape")
    a, b = S.z_interval, T.z_interval
    if a and b:
        return np.arange(b[0] - a[0], b[1] - a[1] + 1, dtype=np.int64)[:, None]
    base_inv = np.array(G.inv(min(S.elements)))
    cand = G.mul_arrays(T.array, np.broadcast_to(base_inv, T.array.shape))
    return _lex_sorted(_sieve(cand, S, T, lambda c, s: G.mul_arrays(c[:, None, :], s[None, :, :])))


def right_placements(S: Region, T: Region) -> np.ndarray:
    """All c with ``Sc ⊆ T``, lexicographically sorted (n, dim) array."""
    S._same(T)
    G = S.group
    if len(S) == 0:
        raise ValueError("empty shape")
    a, b = S.z_interval, T.z_interval
    if a and b:
        return np.arange(b[0] - a[0], b[1] - a[1] + 1, dtype=np.int64)[:, None]
    s0inv = np.array(G.inv(min(S.elements)))
    cand = G.mul_arrays(np.broadcast_to(s0inv, T.array.shape), T.array)
    return _lex_sorted(_sieve(cand, S, T, lambda c, s: G.mul_arrays(s[None, :, :], c[:, None, :])))


def folner_defect(K: Region, T: Region, side: str = "left") -> float:
    """``|∂_K(T)| / |T|`` (or the right-boundary variant)."""
    if len(T) == 0:
        raise ValueError("Følner defect of an empty set is undefined")
    if side == "left":
        b = left_boundary(K, T)
    elif side == "right":
        b = right_boundary(K, T)
    else:
        raise ValueError("side must be 'left' or 'right'")
    return len(b) / len(T)


# -- Følner sequences ---------------------------------------------------------

def doubling_radii(count: int) -> list:
    """The schedule r_1 = 1, r_{m+1} = 2**r_m (kept as Python ints)."""
    radii = [1]
    while len(radii) < count:
        if radii[-1] > 4096:
            raise ResourceCapError("doubling schedule overflows any finite window")
        radii.append(2 ** radii[-1])
    return radii


@dataclass
class FolnerSequence:
    """A Følner sequence indexed from m = 1.

    ``kind`` is one of

    * ``"balls"``: closed word balls with ``radii[m-1]`` (``radii`` may be a
      list or the names ``"unit"`` (r_m = m) / ``"doubling"``);
    * ``"intervals"``: centred intervals of Z with ``|T_m| = m``;
    * ``"explicit"``: a finite list of regions.
    """

    group: GroupModel
    kind: str = "balls"
    radii: object = "unit"
    regions: list = field(default_factory=list)
    _cache: dict = field(default_factory=dict, repr=False)

    @classmethod
    def balls(cls, group: GroupModel, radii="unit") -> "FolnerSequence":
        return cls(group, "balls", radii)

    @classmethod
    def intervals(cls) -> "FolnerSequence":
        return cls(Z1, "intervals", None)

    @classmethod
    def explicit(cls, regions: Sequence[Region]) -> "FolnerSequence":
        regions = list(regions)
        if not regions:
            raise ValueError("empty explicit Følner sequence")
        return cls(regions[0].group, "explicit", None, regions)

    @property
    def length(self) -> float:
        if self.kind == "explicit":
            return len(self.regions)
        if self.kind == "balls" and isinstance(self.radii, (list, tuple)):
            return len(self.radii)
        return math.inf

    def radius(self, m: int) -> int:
        if m < 1:
            raise ValueError("Følner index starts at 1")
        if self.kind != "balls":
            raise ValueError("only ball sequences have radii")
        if self.radii == "unit":
            return m
        if self.radii == "doubling":
            return doubling_radii(m)[m - 1]
        if m > len(self.radii):
            raise IndexError(f"Følner sequence has only {len(self.radii)} sets")
        return int(self.radii[m - 1])

    def size(self, m: int) -> int:
        """``|T_m|`` without necessarily building the set."""
        if self.kind == "intervals":
            return m
        if self.kind == "balls" and self.group == Z1:
            return 2 * self.radius(m) + 1
        return len(self[m])

    def interval_bounds(self, m: int) -> tuple:
        """``(lo, hi)`` for sequences of Z-intervals."""
        if self.kind == "intervals":
            lo = -((m - 1) // 2)
            return lo, lo + m - 1
        if self.kind == "balls" and self.group == Z1:
            r = self.radius(m)
            return -r, r
        raise ValueError("not an interval sequence")

    @property
    def is_z_intervals(self) -> bool:
        return self.group == Z1 and self.kind in ("intervals", "balls")

    @property
    def symmetric(self) -> bool:
        return self.kind == "balls"

    def __getitem__(self, m: int) -> Region:
        if m < 1:
            raise ValueError("Følner index starts at 1")
        if m in self._cache:
            return self._cache[m]
        if self.kind == "balls":
            reg = word_ball(self.group, self.radius(m))
        elif self.kind == "intervals":
            lo, hi = self.interval_bounds(m)
            reg = Region.interval(lo, hi)
        else:
            if m > len(self.regions):
                raise IndexError(f"Følner sequence has only {len(self.regions)} sets")
            reg = self.regions[m - 1]
        self._cache[m] = reg
        return reg

    def is_strong_exhaustion(self, m_max: int) -> bool:
        """``e ∈ T_1`` and ``T_m ⊊ T_{m+1}`` for m < m_max (discrete interiors)."""
        e = self.group.identity
        if e not in self[1]:
            return False
        for m in range(1, m_max):
            a, b = self[m], self[m + 1]
            if not (a.issubset(b) and len(b) > len(a)):
                return False
        return True

    def describe(self) -> dict:
        if self.kind == "explicit":
            return {"kind": "explicit", "count": len(self.regions)}
        return {"kind": self.kind, "radii": self.radii if not isinstance(self.radii, tuple) else list(self.radii)}
