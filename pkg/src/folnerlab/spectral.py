"""Pattern-equivariant hopping operators, finite-volume restrictions and IDS.

Balls ``B_n`` here are open word balls ``{d < n}``; the closed ball of radius
``n - 1``.  ``F^R = {x in F : B_{R+1}(x) ⊆ F}``, and the restriction ``H_F``
is the compression of H to ``F^R``.  The empirical distribution divides by
``|F| * dim`` so it undershoots 1 on finite volumes.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.linalg

from .groups import (
    FolnerSequence,
    GroupModel,
    Region,
    ResourceCapError,
    left_placements,
    word_ball,
)
from .patterns import Coloring

MAX_DIM = 4000


@dataclass
class HoppingOperator:
    """A C-invariant operator with finite hopping range.

    ``kind`` is ``adjacency``, ``potential``, ``schrodinger``, ``constant``
    (a multiple of the identity) or ``table``.  A table is a list of entries
    ``{"offset": g^{-1} h, "colors": [color(g), color(h)] or null, "value": v}``
    whose values add up; with ``N = 1`` only the colors at g and h are read.
    """

    kind: str
    params: dict = field(default_factory=dict)
    M: int = 2
    N: int = 0
    fiber_dim: int = 1

    def __post_init__(self):
        if self.kind == "adjacency":
            self.M, self.N = 2, 0
        elif self.kind == "potential":
            self.M, self.N = 1, 1
        elif self.kind == "schrodinger":
            self.M, self.N = 2, 1
        elif self.kind == "constant":
            self.M, self.N = 1, 0
        elif self.kind == "table":
            self._check_table()
        else:
            raise ValueError(f"unknown operator kind {self.kind!r}")
        if self.fiber_dim < 1:
            raise ValueError("fiber dimension must be positive")

    @property
    def R(self) -> int:
        """Overall range ``max(M, N)``."""
        return max(self.M, self.N)

    @classmethod
    def from_json(cls, data: dict) -> "HoppingOperator":
        kind = data["kind"]
        op = cls(kind, dict(data.get("params", {})), int(data.get("M", 2)),
                 int(data.get("N", 0)), int(data.get("fiber_dim", 1)))
        for key in ("M", "N"):
            if key in data and int(data[key]) != getattr(op, key):
                raise ValueError(f"{key}={data[key]} contradicts the {kind} kernel")
        return op

    @classmethod
    def load(cls, path) -> "HoppingOperator":
        with open(path) as fh:
            return cls.from_json(json.load(fh))

    def to_json(self) -> dict:
        return {"kind": self.kind, "params": self.params, "M": self.M, "N": self.N,
                "fiber_dim": self.fiber_dim}

    def _check_table(self):
        entries = self.params.get("entries", [])
        if self.N > 1:
            raise ValueError("table kernels read colors at g and h only (N <= 1)")
        keyed = {}
        for e in entries:
            off = tuple(int(v) for v in e["offset"])
            cols = tuple(e["colors"]) if e.get("colors") else None
            keyed[(off, cols)] = self._block(e["value"])
        self._entries = keyed

    def _block(self, value) -> np.ndarray:
        v = np.asarray(value, dtype=float)
        if v.ndim == 0:
            return v * np.eye(self.fiber_dim)
        if v.shape != (self.fiber_dim, self.fiber_dim):
            raise ValueError("kernel block has the wrong shape")
        return v

    # -- kernel ---------------------------------------------------------------------

    def _potential(self, c: Coloring, g) -> float:
        scale = float(self.params.get("coupling", 1.0))
        return scale * c.weight(g)

    def kernel(self, c: Optional[Coloring], g, h, group: Optional[GroupModel] = None) -> np.ndarray:
        """The block ``H(g, h)``."""
        G = group if group is not None else c.group
        d = G.distance(g, h)
        I = np.eye(self.fiber_dim)
        if d >= self.M:
            return 0.0 * I
        hop = float(self.params.get("hopping", 1.0))
        if self.kind == "adjacency":
            return hop * I if d == 1 else 0.0 * I
        if self.kind == "constant":
            return float(self.params.get("value", 1.0)) * I
        if self.kind == "potential":
            return self._potential(c, g) * I
        if self.kind == "schrodinger":
            if d == 1:
                return hop * I
            return self._potential(c, g) * I
        off = G.mul(G.inv(g), h)
        out = 0.0 * I
        for (o, cols), val in self._entries.items():
            if o != off:
                continue
            if cols is not None and (c.color(g), c.color(h)) != cols:
                continue
            out = out + val
        return out


def interior(F: Region, R: int) -> Region:
    """``F^R``: points whose closed R-ball stays in F."""
    if R < 0:
        raise ValueError("range must be nonnegative")
    if len(F) == 0:
        return F
    ok = left_placements(word_ball(F.group, R), F)
    return Region.from_array(F.group, ok)


@dataclass
class RestrictedOperator:
    index: list
    matrix: np.ndarray
    fiber_dim: int = 1

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def restrict(H: HoppingOperator, c: Optional[Coloring], F: Region,
             max_dim: int = MAX_DIM) -> RestrictedOperator:
    """Matrix of H on ``F^R`` (F in the coordinates of the coloring window)."""
    G = F.group
    if c is not None and not F.issubset(c.window):
        raise ValueError("F must lie inside the coloring window")
    if c is None and H.N > 0:
        raise ValueError("a color-dependent kernel needs a coloring")
    inner = interior(F, H.R)
    n = len(inner)
    dim = n * H.fiber_dim
    if dim > max_dim:
        raise ResourceCapError(f"restricted operator of dimension {dim} exceeds {max_dim}")
    A = np.zeros((dim, dim))
    if n == 0:
        return RestrictedOperator([], A, H.fiber_dim)
    arr = inner.array
    k = H.fiber_dim
    offsets = word_ball(G, H.M - 1).array  # d(g, h) < M
    for off in offsets:
        nb = G.mul_arrays(arr, np.broadcast_to(off, arr.shape))
        j = inner.index_of(nb)
        for i in np.nonzero(j >= 0)[0]:
            g = tuple(int(v) for v in arr[i])
            h = tuple(int(v) for v in nb[i])
            A[i * k:(i + 1) * k, j[i] * k:(j[i] + 1) * k] = H.kernel(c, g, h, G)
    return RestrictedOperator([tuple(int(v) for v in g) for g in arr], A, k)


def eigenvalue_counting(A: np.ndarray, E: float) -> int:
    """``ev(A)(E)``: eigenvalues ``<= E`` with multiplicity."""
    if A.size == 0:
        return 0
    return int(np.count_nonzero(np.linalg.eigvalsh(A) <= E))


def inertia_count(A: np.ndarray, E: float) -> int:
    """Eigenvalues ``< E`` from the inertia of ``A - E`` (Sylvester's law),
    using a symmetric-indefinite LDL^T factorisation."""
    if A.size == 0:
        return 0
    _, D, _ = scipy.linalg.ldl(A - E * np.eye(A.shape[0]))
    neg, i, n = 0, 0, D.shape[0]
    while i < n:
        if i + 1 < n and D[i + 1, i] != 0:
            neg += int(np.count_nonzero(np.linalg.eigvalsh(D[i:i + 2, i:i + 2]) < 0))
            i += 2
        else:
            neg += int(D[i, i] < 0)
            i += 1
    return neg


@dataclass
class StepFunction:
    """Right-continuous nondecreasing step function, 0 before the first jump."""

    locations: np.ndarray
    values: np.ndarray  # value from each location on

    def __post_init__(self):
        self.locations = np.asarray(self.locations, dtype=float)
        self.values = np.asarray(self.values, dtype=float)
        if len(self.locations) != len(self.values):
            raise ValueError("locations and values must align")
        if np.any(np.diff(self.locations) <= 0):
            raise ValueError("jump locations must be strictly increasing")
        if np.any(np.diff(np.r_[0.0, self.values]) < -1e-15):
            raise ValueError("step function must be nondecreasing")

    @classmethod
    def from_samples(cls, samples: np.ndarray, norm: float) -> "StepFunction":
        if len(samples) == 0:
            return cls(np.zeros(0), np.zeros(0))
        loc, counts = np.unique(np.asarray(samples, dtype=float), return_counts=True)
        return cls(loc, np.cumsum(counts) / norm)

    @classmethod
    def zero(cls) -> "StepFunction":
        return cls(np.zeros(0), np.zeros(0))

    def __call__(self, E) -> np.ndarray:
        E = np.asarray(E, dtype=float)
        k = np.searchsorted(self.locations, E, side="right")
        vals = np.r_[0.0, self.values]
        return vals[k]

    def left_limit(self, E) -> np.ndarray:
        E = np.asarray(E, dtype=float)
        k = np.searchsorted(self.locations, E, side="left")
        return np.r_[0.0, self.values][k]

    @property
    def terminal(self) -> float:
        return float(self.values[-1]) if len(self.values) else 0.0


def sup_distance(a: StepFunction, b: StepFunction) -> float:
    """Exact ``sup_E |a(E) - b(E)|`` over the merged jump set."""
    pts = np.union1d(a.locations, b.locations)
    if len(pts) == 0:
        return 0.0
    return float(max(np.abs(a(pts) - b(pts)).max(), np.abs(a.left_limit(pts) - b.left_limit(pts)).max()))


def sup_distance_continuous(a: StepFunction, cdf: Callable, lower: float = 0.0,
                            upper: float = 1.0) -> float:
    """``sup_E |a(E) - F(E)|`` for a continuous nondecreasing F with limits
    ``lower`` and ``upper`` at minus and plus infinity."""
    if len(a.locations) == 0:
        return max(abs(lower), abs(upper))
    p = a.locations
    Fp = np.asarray(cdf(p), dtype=float)
    d = max(np.abs(a(p) - Fp).max(), np.abs(a.left_limit(p) - Fp).max())
    return float(max(d, abs(a.terminal - upper), abs(lower)))


def empirical_distribution(H: HoppingOperator, c: Optional[Coloring], F: Region,
                           max_dim: int = MAX_DIM) -> StepFunction:
    """``N_H(F)(E) = ev(H_F)(E) / (|F| dim)``."""
    r = restrict(H, c, F, max_dim)
    if r.dim == 0:
        return StepFunction.zero()
    ev = np.linalg.eigvalsh(r.matrix)
    return StepFunction.from_samples(ev, len(F) * H.fiber_dim)


def free_ids_z(E) -> np.ndarray:
    """IDS of the free adjacency operator on Z: ``arccos(-E/2) / pi`` on [-2, 2]."""
    E = np.clip(np.asarray(E, dtype=float), -2.0, 2.0)
    return np.arccos(-E / 2.0) / math.pi


def path_spectrum_distribution(n_inner: int, n_total: int) -> StepFunction:
    """Finite-volume distribution of the Z adjacency from the path-graph
    spectrum ``2 cos(k pi / (n + 1))``, normalised by ``n_total``."""
    k = np.arange(1, n_inner + 1)
    return StepFunction.from_samples(np.sort(2 * np.cos(k * math.pi / (n_inner + 1))), n_total)


@dataclass
class IDSReport:
    rows: list
    oracle: Optional[str] = None

    def to_json(self) -> dict:
        return {"rows": self.rows, "oracle": self.oracle}


def ids_convergence(H: HoppingOperator, c: Optional[Coloring], F: FolnerSequence,
                    m_list: Sequence[int], oracle: Optional[Callable] = None,
                    oracle_name: Optional[str] = None, threads: int = 1,
                    max_dim: int = MAX_DIM) -> IDSReport:
    """Sup-distances between successive ``N_{H_m}``, and to an oracle CDF.

    Følner sets are moved onto the coloring's center so they sit inside the
    window; without a coloring they are used as they are.
    """
    ms = sorted(m_list)

    def region(m):
        T = F[m]
        return T.left(c.center) if c is not None else T

    def job(m):
        reg = region(m)
        return reg, empirical_distribution(H, c, reg, max_dim)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(job, ms))
    else:
        results = [job(m) for m in ms]
    rows = []
    prev = None
    for m, (reg, N) in zip(ms, results):
        row = {"m": m, "size_F": len(reg), "size_FR": len(interior(reg, H.R)),
               "terminal": N.terminal,
               "sup_dist_prev": None if prev is None else sup_distance(prev, N)}
        if oracle is not None:
            row["sup_dist_oracle"] = sup_distance_continuous(N, oracle)
        rows.append(row)
        prev = N
    return IDSReport(rows, oracle_name)
