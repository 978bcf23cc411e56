"""Repetitivity index and portion with window-certified semantics.

The quantifier "for every h in G" is truncated to the translates that fit
inside the coloring window.  An index that would need a translate larger
than the window is reported as ``UNCERTIFIED``.  Window values are lower
bounds for the index of the infinite object.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .groups import FolnerSequence, Region, ResourceCapError
from .patterns import (
    Coloring,
    discrepancy_from_matrix,
    patch_codes,
    placements,
    support_distances,
)


class _Uncertified:
    _inst = None

    def __new__(cls):
        if cls._inst is None:
            cls._inst = super().__new__(cls)
        return cls._inst

    def __repr__(self) -> str:
        return "UNCERTIFIED"

    def __bool__(self) -> bool:
        return False


UNCERTIFIED = _Uncertified()

DEFAULT_TEMPERED_THRESHOLD = 0.05
DEFAULT_LR_BOUND = 20.0


def window_radius(c: Coloring) -> int:
    """Largest word distance from the coloring center to a window element."""
    G = c.group
    arr = c.window.array
    rel = G.mul_arrays(np.array(G.inv(c.center))[None, :], arr)
    return int(G.word_lengths(rel).max())


def _shape(F: FolnerSequence, m: int) -> Region:
    # patterns of size T_m^{-1}; balls are symmetric
    T = F[m]
    return T if F.symmetric else T.inverse()


def _safe_size(F: FolnerSequence, n: int) -> Optional[int]:
    if n > F.length:
        return None
    try:
        return F.size(n)
    except (ResourceCapError, IndexError):
        return None


# -- Z fast path ---------------------------------------------------------------------

def window_ids(codes: np.ndarray, width: int) -> np.ndarray:
    """Exact ids of all length-``width`` factors of ``codes`` (equal ids iff
    equal factors), by prefix doubling of ranks."""
    n = len(codes) - width + 1
    if n <= 0:
        return np.zeros(0, dtype=np.int64)
    _, rank = np.unique(codes, return_inverse=True)
    rank = rank.astype(np.int64)
    k = 1
    ranks = {1: rank}
    while 2 * k <= width:
        r = ranks[k]
        m = len(r) - k
        pair = r[:m] * (int(r.max()) + 1) + r[k:k + m]
        _, nr = np.unique(pair, return_inverse=True)
        k *= 2
        ranks[k] = nr.astype(np.int64)
    r = ranks[k]
    if k == width:
        return r[:n]
    shift = width - k
    pair = r[:n] * (int(r.max()) + 1) + r[shift:shift + n]
    _, ids = np.unique(pair, return_inverse=True)
    return ids.astype(np.int64)


def required_span(ids: np.ndarray) -> int:
    """Smallest L such that every run of L consecutive positions sees every id."""
    N = len(ids)
    order = np.lexsort((np.arange(N), ids))
    sid, pos = ids[order], np.arange(N)[order]
    first = np.r_[True, sid[1:] != sid[:-1]]
    last = np.r_[sid[1:] != sid[:-1], True]
    need = max(int((pos[first] + 1).max()), int((N - pos[last]).max()))
    gaps = np.diff(pos)
    same = ~first[1:]
    if same.any():
        need = max(need, int(gaps[same].max()))
    return need


def _z_fast_index(c: Coloring, F: FolnerSequence, m: int):
    win = len(c.window)
    w = F.size(m)
    if w > win:
        raise ValueError("window too small for patterns of size T_m")
    ids = window_ids(c.codes, w)
    L_req = required_span(ids)
    n = m
    while True:
        s = _safe_size(F, n)
        if s is None or s > win:
            return UNCERTIFIED
        if s - w + 1 >= L_req:
            return n
        n += 1


# -- generic path ---------------------------------------------------------------------

def _harvest(c: Coloring, P: Region, delta: float):
    centers = placements(P, c.window)
    if len(centers) == 0:
        raise ValueError("window too small for patterns of size T_m")
    codes = patch_codes(c, P, centers)
    uniq, ids = np.unique(codes, axis=0, return_inverse=True)
    ids = ids.reshape(-1)
    sim = None
    if delta > 0:
        D = support_distances(P)
        wt = c.weight_table[uniq]
        ones = np.ones_like(wt, dtype=bool)
        sim = np.zeros((len(uniq), len(uniq)), dtype=bool)
        for i in range(len(uniq)):
            d = discrepancy_from_matrix(D, np.broadcast_to(wt[i], wt.shape), wt, ones)
            sim[i] = d < delta
    keys = c.group.pack(centers)
    order = np.argsort(keys)
    return centers, keys[order], ids[order], len(uniq), sim


def _covers_all(id_mat: np.ndarray, u: int, sim) -> bool:
    if sim is None:
        s = np.sort(id_mat, axis=1)
        distinct = 1 + (np.diff(s, axis=1) != 0).sum(axis=1)
        return bool((distinct == u).all())
    # pattern i is seen in row h iff some center j has sim[i, id_j]
    return bool(sim[:, id_mat].any(axis=2).all())


def _generic_index(c: Coloring, F: FolnerSequence, delta: float, m: int, chunk: int = 2048):
    G = c.group
    P_m = _shape(F, m)
    _, skeys, sids, u, sim = _harvest(c, P_m, delta)
    win = len(c.window)
    n = m
    while True:
        s = _safe_size(F, n)
        if s is None or s > win:
            return UNCERTIFIED
        P_n = _shape(F, n)
        H = placements(P_n, c.window)
        if len(H) == 0:
            return UNCERTIFIED
        Dmn = placements(P_m, P_n)
        ok = True
        for lo in range(0, len(H), chunk):
            pts = G.mul_arrays(H[lo:lo + chunk, None, :], Dmn[None, :, :])
            k = G.pack(pts.reshape(-1, G.dim))
            pos = np.searchsorted(skeys, k)
            id_mat = sids[pos].reshape(len(pts), len(Dmn))
            if not _covers_all(id_mat, u, sim):
                ok = False
                break
        if ok:
            return n
        n += 1


def repetitivity_index(c: Coloring, F: FolnerSequence, delta: float, m: int):
    """``R(delta, m)``: the smallest n such that every harvested pattern of
    size ``T_m^{-1}`` delta-occurs in every window translate ``h T_n^{-1}``."""
    if delta < 0:
        raise ValueError("delta must be nonnegative")
    if F.group != c.group:
        raise ValueError("Følner sequence and coloring live in different groups")
    if delta == 0 and F.is_z_intervals and c.is_interval:
        return _z_fast_index(c, F, m)
    return _generic_index(c, F, delta, m)


@dataclass
class RepetitivityReport:
    delta: float
    entries: list  # (m, R or UNCERTIFIED)
    sizes: list  # (|T_m|, |T_R| or None)
    portion: float
    window_radius: int
    window_size: int
    certified: list
    threshold: float = DEFAULT_TEMPERED_THRESHOLD
    folner: dict = field(default_factory=dict)

    @property
    def ratios(self) -> list:
        return [a / b if b else None for a, b in self.sizes]

    @property
    def tempered(self) -> Optional[bool]:
        """Evidence of tempered repetitivity: the portion stays above threshold."""
        if not any(self.certified):
            return None
        return self.portion >= self.threshold

    def rows(self) -> list:
        out = []
        for (m, R), (a, b), ok, ratio in zip(self.entries, self.sizes, self.certified, self.ratios):
            out.append({"m": m, "R": R if ok else "UNCERTIFIED", "size_m": a,
                        "size_R": b, "ratio": ratio, "certified": ok})
        return out

    def to_json(self) -> dict:
        return {
            "delta": self.delta,
            "rows": self.rows(),
            "portion": self.portion,
            "tempered": self.tempered,
            "threshold": self.threshold,
            "certified_radius": self.window_radius,
            "window_size": self.window_size,
            "folner": self.folner,
        }


def repetitivity_portion(c: Coloring, F: FolnerSequence, delta: float, m_max: int,
                         threshold: float = DEFAULT_TEMPERED_THRESHOLD) -> RepetitivityReport:
    """Index table for m = 1..m_max and ``zeta = inf |T_m| / |T_R(delta,m)|``
    over certified entries."""
    entries, sizes, cert = [], [], []
    m_top = int(min(m_max, F.length))
    for m in range(1, m_top + 1):
        R = repetitivity_index(c, F, delta, m)
        ok = R is not UNCERTIFIED
        entries.append((m, R))
        sizes.append((F.size(m), F.size(R) if ok else None))
        cert.append(ok)
    ratios = [a / b for (a, b), ok in zip(sizes, cert) if ok]
    zeta = min(ratios) if ratios else float("nan")
    return RepetitivityReport(delta, entries, sizes, zeta, window_radius(c), len(c.window),
                              cert, threshold, F.describe())


@dataclass
class LinearFit:
    delta: float
    c_estimate: float
    r_range: tuple
    values: list  # (r, R(delta, r) or UNCERTIFIED)

    def bounded(self, bound: float = DEFAULT_LR_BOUND) -> bool:
        return self.c_estimate <= bound


def linear_repetitivity_fit(c: Coloring, delta: float, r_max: int) -> LinearFit:
    """``max_r R(delta, r) / r`` over certified radii, balls of radius r as patterns."""
    F = FolnerSequence.balls(c.group, "unit")
    values, best, top = [], 0.0, 0
    for r in range(1, r_max + 1):
        R = repetitivity_index(c, F, delta, r)
        values.append((r, R))
        if R is UNCERTIFIED:
            break
        best = max(best, R / r)
        top = r
    return LinearFit(delta, best, (1, top), values)


@dataclass
class CrossCheck:
    portion: RepetitivityReport
    fit: LinearFit
    tempered: Optional[bool]
    linear: bool
    consistent: Optional[bool]

    def to_json(self) -> dict:
        return {
            "zeta": self.portion.portion,
            "tempered": self.tempered,
            "c_estimate": self.fit.c_estimate,
            "linear": self.linear,
            "consistent": self.consistent,
        }


def temp_lr_crosscheck(c: Coloring, delta: float, m_max: int,
                       F: Optional[FolnerSequence] = None,
                       threshold: float = DEFAULT_TEMPERED_THRESHOLD,
                       lr_bound: float = DEFAULT_LR_BOUND) -> CrossCheck:
    """Tempered repetitivity along ``F`` (balls by default) next to the
    linear-repetitivity fit.  The two agree for ball sequences; along other
    schedules they may disagree, which the report exposes."""
    if F is None:
        F = FolnerSequence.balls(c.group, "unit")
    rep = repetitivity_portion(c, F, delta, m_max, threshold)
    fit = linear_repetitivity_fit(c, delta, m_max)
    lin = fit.bounded(lr_bound)
    temp = rep.tempered
    return CrossCheck(rep, fit, temp, lin, None if temp is None else temp == lin)
