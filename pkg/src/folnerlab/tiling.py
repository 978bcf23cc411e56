"""Epsilon-quasi-tilings: prototile selection, greedy placement and verification.

Tiles are right translates ``S c``.  Placement is greedy, largest type
first, scanning candidate centers in lexicographic order; the verifier
re-checks every clause (T1)-(T4) from scratch and is the correctness gate.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .groups import FolnerSequence, Region, ResourceCapError, left_boundary, right_placements


class TilingError(RuntimeError):
    """A tiling clause or a requested precondition failed."""


def n_epsilon(eps: float) -> int:
    """``ceil(-ln(eps / (1 - eps)))`` for ``0 < eps < 1/10``."""
    if not (0 < eps < 0.1):
        raise ValueError("epsilon must lie in (0, 1/10)")
    return math.ceil(-math.log(eps / (1.0 - eps)))


def invariance_defect(K: Region, T: Region) -> float:
    """``|∂_K(T)| / |T|``; T is (K, delta)-invariant iff this is < delta."""
    return len(left_boundary(K, T)) / len(T)


@dataclass
class PrototileSet:
    epsilon: float
    n_eps: int
    tiles: list  # nested regions, smallest first
    provenance: list  # Følner indices
    invariance_target: float
    defects: list  # defect of tile i w.r.t. tile i-1 (0 for the first)

    def to_json(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "n_eps": self.n_eps,
            "provenance": self.provenance,
            "sizes": [len(t) for t in self.tiles],
            "invariance_target": self.invariance_target,
            "defects": self.defects,
        }


def select_prototiles(F: FolnerSequence, eps: float, n: int,
                      invariance: Optional[float] = None,
                      max_index: int = 10_000,
                      indices: Optional[Sequence[int]] = None) -> PrototileSet:
    """Nested prototiles ``S_1 ⊆ ... ⊆ S_N`` drawn from ``F``.

    ``S_1 = S_n``; each later tile is the first later Følner set whose
    boundary defect relative to the previous tile is at most ``invariance``
    (default ``(eps/16)**2``).  ``indices`` fixes the Følner indices instead
    of searching; the defects are measured and reported either way.
    """
    N = n_epsilon(eps)
    if invariance is None:
        invariance = (eps / 16.0) ** 2
    if indices is not None:
        idx = [int(i) for i in indices]
        if len(idx) != N:
            raise ValueError(f"need exactly N(eps) = {N} indices")
        for i, l in enumerate(idx, start=1):
            if l < max(i, n):
                raise ValueError(f"tile {i} must come from S_l with l >= {max(i, n)}")
        if idx != sorted(idx) or len(set(idx)) != N:
            raise ValueError("indices must be strictly increasing")
        tiles = [F[l] for l in idx]
        defects = [0.0] + [invariance_defect(tiles[i - 1], tiles[i]) for i in range(1, N)]
    else:
        idx, tiles, defects = [n], [F[n]], [0.0]
        for i in range(2, N + 1):
            l = max(idx[-1] + 1, i, n)
            while True:
                if l > min(F.length, max_index):
                    raise TilingError(
                        f"Følner sequence exhausted before tile {i} reached invariance {invariance:g}")
                cand = F[l]
                d = invariance_defect(tiles[-1], cand)
                if d <= invariance:
                    break
                l += 1
            idx.append(l)
            tiles.append(cand)
            defects.append(d)
    for a, b in zip(tiles, tiles[1:]):
        if not a.issubset(b):
            raise TilingError("prototiles are not nested")
    return PrototileSet(eps, N, tiles, idx, invariance, defects)


@dataclass
class QuasiTiling:
    region: Region
    tiles: list  # prototiles S_i, smallest first
    centers: list  # per type: list of center elements
    trimmed: list  # per type: list of Regions aligned with centers
    epsilon: float
    preconditions: dict = field(default_factory=dict)

    def tile(self, i: int, c) -> Region:
        return self.tiles[i].right(c)

    def tile_arrays(self) -> list:
        """Point arrays of every placed tile, cached; order follows ``centers``."""
        cached = self.__dict__.get("_tile_arrays")
        if cached is None:
            G = self.region.group
            cached = []
            for S, cs in zip(self.tiles, self.centers):
                for c in cs:
                    cached.append(G.mul_arrays(S.array, np.broadcast_to(np.array(c), S.array.shape)))
            self.__dict__["_tile_arrays"] = cached
        return cached

    def covered(self) -> Region:
        out = set()
        for i, cs in enumerate(self.centers):
            for c in cs:
                out |= self.tile(i, c).elements
        return Region(self.region.group, frozenset(out))

    def to_json(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "region_size": len(self.region),
            "tiles": [t.to_json() for t in self.tiles],
            "centers": [[list(c) for c in cs] for cs in self.centers],
            "trimmed": [[t.to_json() for t in ts] for ts in self.trimmed],
        }


def measure_preconditions(A: Region, P: PrototileSet) -> dict:
    top = P.tiles[-1]
    try:
        big = invariance_defect(top.product(top.inverse()), A)
    except ResourceCapError:
        big = None  # too large to measure under the element cap
    return {
        "big_tile_defect": big,
        "tile_defects": [invariance_defect(S, A) for S in P.tiles],
    }


def quasi_tile(A: Region, P: PrototileSet, strict: bool = False, check: bool = True) -> QuasiTiling:
    """Greedy epsilon-quasi-tiling of A, verified before returning.

    Measured invariance defects of A are stored on the tiling; a tile defect
    above epsilon raises with ``strict`` and warns otherwise.  With
    ``check=False`` the tiling is returned unverified.
    """
    if len(A) == 0:
        raise ValueError("cannot tile the empty set")
    eps = P.epsilon
    pre = measure_preconditions(A, P)
    bad = [d for d in pre["tile_defects"] if d >= eps]
    if bad:
        msg = f"region is not (S_i, eps)-invariant: defects {pre['tile_defects']}"
        if strict:
            raise TilingError(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)

    G = A.group
    owner = np.full(len(A), -1, dtype=np.int64)  # tile type covering each site
    centers = [[] for _ in P.tiles]
    trimmed = [[] for _ in P.tiles]
    for i in range(len(P.tiles) - 1, -1, -1):
        S = P.tiles[i]
        cand = right_placements(S, A)
        if len(cand) == 0:
            continue
        pts = G.mul_arrays(S.array[None, :, :], cand[:, None, :])
        idx = A.index_of(pts.reshape(-1, G.dim)).reshape(len(cand), len(S))
        allowed = math.floor(eps * len(S) + 1e-12)
        for k in range(len(cand)):
            o = owner[idx[k]]
            if ((o >= 0) & (o != i)).any():
                continue
            overlap = int((o == i).sum())
            if overlap > allowed:
                continue
            fresh = idx[k][o < 0]
            owner[fresh] = i
            c = tuple(int(x) for x in cand[k])
            centers[i].append(c)
            trimmed[i].append(Region.from_array(G, A.array[fresh]))
    t = QuasiTiling(A, list(P.tiles), centers, trimmed, eps, pre)
    if not check:
        return t
    rep = verify_tiling(t, eps)
    if not rep.ok:
        raise TilingError(f"tiling verification failed: {rep.failures()}")
    return t


@dataclass
class TilingReport:
    t1: bool
    t2: bool
    t3: bool
    t4: bool
    coverage: float
    trim_fractions: list
    n_eps: int
    counts: list

    @property
    def ok(self) -> bool:
        return self.t1 and self.t2 and self.t3 and self.t4

    def failures(self) -> list:
        return [k for k in ("t1", "t2", "t3", "t4") if not getattr(self, k)]

    def to_json(self) -> dict:
        return {
            "T1": self.t1, "T2": self.t2, "T3": self.t3, "T4": self.t4,
            "coverage": self.coverage,
            "min_trim_fraction": min((f for fs in self.trim_fractions for f in fs), default=1.0),
            "centers_per_type": self.counts,
            "n_eps": self.n_eps,
        }


def verify_tiling(t: QuasiTiling, eps: float) -> TilingReport:
    """Check (T1)-(T4) directly from the tiles, centers and trimmed pieces."""
    A = t.region
    t1 = t2 = t3 = True
    unions = []
    fracs = []
    for i, (S, cs) in enumerate(zip(t.tiles, t.centers)):
        U = set()
        pieces = t.trimmed[i] if i < len(t.trimmed) else []
        if len(pieces) != len(cs):
            t2 = False
        seen = set()
        fr = []
        for k, c in enumerate(cs):
            tile = S.right(c)
            if not tile.issubset(A):
                t1 = False
            U |= tile.elements
            if k < len(pieces):
                p = pieces[k]
                if not p.issubset(tile):
                    t2 = False
                if len(p) < (1 - eps) * len(tile) - 1e-9:
                    t2 = False
                if seen & p.elements:
                    t2 = False
                seen |= p.elements
                fr.append(len(p) / len(tile))
        if seen != U:
            t2 = False
        fracs.append(fr)
        unions.append(U)
    for i in range(len(unions)):
        for j in range(i + 1, len(unions)):
            if unions[i] & unions[j]:
                t3 = False
    covered = set().union(*unions) if unions else set()
    cov = len(covered & A.elements) / len(A) if len(A) else 1.0
    t4 = cov >= 1 - 2 * eps - 1e-12
    n_eps = n_epsilon(eps) if 0 < eps < 0.1 else len(t.tiles)
    return TilingReport(t1, t2, t3, t4, cov, fracs, n_eps, [len(cs) for cs in t.centers])


@dataclass
class SubadditivityResult:
    delta: float
    bound: float
    eta: float
    theta: float

    @property
    def ok(self) -> bool:
        return self.delta <= self.bound + 1e-12


def tiling_subadditivity_check(t: QuasiTiling, w, x, eta: float, theta: float) -> SubadditivityResult:
    """``Δ = w(A)/|A| - Σ_{i,c} w(S_i c)/|A|`` against ``(8 eta + 2 theta) eps``.

    ``w`` is any callable ``w(region, x)`` (a WeightFunction qualifies).
    """
    A = t.region
    total = sum(w(arr, x) for arr in t.tile_arrays())
    delta = (w(A, x) - total) / len(A)
    return SubadditivityResult(delta, (8 * eta + 2 * theta) * t.epsilon, eta, theta)
