"""The continuous Heisenberg group C x R with the Cygan-Korányi norm.

Group law ``(z, t)(w, s) = (z + w, t + s + Im(conj(z) w) / 2)`` and norm
``(|z|^4 + 16 t^2)^(1/4)``.  Haar measure is Lebesgue measure on R^3, and
the norm ball of radius R has volume ``pi^2 R^4 / 8``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

RNG_ALGORITHM = "Philox4x64-10 (numpy.random.Philox), SeedSequence(seed, spawn_key=(chunk,))"
CHUNK = 1 << 20


@dataclass(frozen=True)
class CHPoint:
    z_re: float
    z_im: float
    t: float

    @property
    def z(self) -> complex:
        return complex(self.z_re, self.z_im)

    def inverse(self) -> "CHPoint":
        return CHPoint(-self.z_re, -self.z_im, -self.t)


IDENTITY = CHPoint(0.0, 0.0, 0.0)


def heis_multiply(p: CHPoint, q: CHPoint) -> CHPoint:
    # Im(conj(z) w) = x1*y2 - y1*x2
    twist = p.z_re * q.z_im - p.z_im * q.z_re
    return CHPoint(p.z_re + q.z_re, p.z_im + q.z_im, p.t + q.t + 0.5 * twist)


def ck_norm(p: CHPoint) -> float:
    r2 = p.z_re * p.z_re + p.z_im * p.z_im
    return (r2 * r2 + 16.0 * p.t * p.t) ** 0.25


def ck_norm_arrays(x: np.ndarray, y: np.ndarray, t: np.ndarray) -> np.ndarray:
    r2 = x * x + y * y
    return (r2 * r2 + 16.0 * t * t) ** 0.25


def heis_multiply_arrays(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Vectorised group law on (..., 3) arrays of (x, y, t)."""
    out = p + q
    out[..., 2] += 0.5 * (p[..., 0] * q[..., 1] - p[..., 1] * q[..., 0])
    return out


def ck_distance(p: CHPoint, q: CHPoint) -> float:
    return ck_norm(heis_multiply(p.inverse(), q))


def exact_ball_volume(radius: float) -> float:
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    return math.pi ** 2 / 8.0 * radius ** 4


def growth_ratio(radius: float, r: float) -> float:
    """``vol(B_{R+r}) / vol(B_R)``, which tends to 1 as R grows."""
    if radius <= 0:
        raise ValueError("radius must be positive")
    if r < 0:
        raise ValueError("increment must be nonnegative")
    return ((radius + r) / radius) ** 4


@dataclass(frozen=True)
class VolumeEstimate:
    radius: float
    samples: int
    seed: int
    estimate: float
    stderr: float
    exact: float
    algorithm: str = RNG_ALGORITHM

    @property
    def rel_err(self) -> float:
        if self.exact == 0:
            return 0.0
        return abs(self.estimate - self.exact) / self.exact


def _chunk_hits(radius: float, seed: int, chunk: int, n: int) -> int:
    ss = np.random.SeedSequence(seed, spawn_key=(chunk,))
    rng = np.random.Generator(np.random.Philox(ss))
    u = rng.random((n, 3))
    x = (2.0 * u[:, 0] - 1.0) * radius
    y = (2.0 * u[:, 1] - 1.0) * radius
    t = (2.0 * u[:, 2] - 1.0) * (radius * radius / 4.0)
    return int(np.count_nonzero(ck_norm_arrays(x, y, t) <= radius))


def mc_ball_volume(radius: float, n: int, seed: int, threads: int = 1) -> VolumeEstimate:
    """Monte-Carlo volume of the Cygan-Korányi ball by rejection sampling.

    Samples are drawn uniformly from the box ``[-R, R]^2 x [-R^2/4, R^2/4]``,
    which contains the ball.  Sample index ranges are cut into fixed chunks
    with their own Philox substream, so the result depends only on
    ``(radius, n, seed)`` and not on ``threads``.
    """
    if n < 1000:
        raise ValueError("at least 10^3 samples are required")
    if radius < 0:
        raise ValueError("radius must be nonnegative")
    exact = exact_ball_volume(radius)
    if radius == 0:
        return VolumeEstimate(0.0, n, seed, 0.0, 0.0, 0.0)
    sizes = [CHUNK] * (n // CHUNK)
    if n % CHUNK:
        sizes.append(n % CHUNK)
    jobs = [(radius, seed, i, s) for i, s in enumerate(sizes)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            hits = sum(pool.map(lambda a: _chunk_hits(*a), jobs))
    else:
        hits = sum(_chunk_hits(*a) for a in jobs)
    box = (2 * radius) ** 2 * (radius * radius / 2.0)
    p = hits / n
    return VolumeEstimate(radius, n, seed, box * p, box * math.sqrt(p * (1 - p) / n), exact)
