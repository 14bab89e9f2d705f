"""Density representations: exact piecewise-constant densities on interval
unions and weighted particle ensembles on billiard tables.

A :class:`PiecewiseDensity` maps interval indices to step functions living
inside the corresponding intervals; all linear operations and the free
stream are closed on this class, so 1D evolution is exact.

A :class:`ParticleEnsemble` carries positions, velocities, weights, rebound
counters and degeneracy flags as flat numpy arrays.  Sampling is counter
based (splitmix64 keyed by seed, particle index and draw stream), so an
ensemble is a pure function of (geometry, spec, seed, size).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .geometry import Billiard, IntervalUnion, VelocitySpec
from .steps import StepFunction

__all__ = [
    "PiecewiseDensity",
    "ParticleEnsemble",
    "free_stream",
    "restrict",
    "sample_ensemble",
    "sample_ladder_positions",
    "transport_ensemble",
]

# draw-stream layout for counter-based sampling (per particle):
#   0, 1, 2 -> position; 3, 4 -> velocity; 8+ -> survival draws (kernels)
_POS_STREAMS = (0, 1, 2)
_VEL_STREAMS = (3, 4)


class PiecewiseDensity:
    """Finitely supported map ``interval index -> StepFunction``.

    Each step function must live inside its interval.  The zero function on
    an interval is simply absent from the map.
    """

    __slots__ = ("parts",)

    def __init__(self, parts: dict[int, StepFunction]):
        self.parts = {int(k): f for k, f in parts.items() if not f.is_zero}

    @classmethod
    def zero(cls) -> "PiecewiseDensity":
        return cls({})

    @classmethod
    def from_pieces(cls, geom: IntervalUnion, pieces) -> "PiecewiseDensity":
        """Build from ``(lo, hi, value)`` pieces, validating that every piece
        sits inside a single interval of the geometry."""
        parts: dict[int, StepFunction] = {}
        for lo, hi, value in pieces:
            lo, hi, value = float(lo), float(hi), float(value)
            if not lo < hi:
                raise ValueError(f"piece ({lo}, {hi}) is empty")
            klo = geom.index_of(lo)
            if klo is None:
                kind, k = geom.classify(lo)
                klo = k if kind == "incoming" else None
            if klo is None or not hi <= geom.b(klo):
                raise ValueError(
                    f"piece ({lo}, {hi}) does not sit inside one interval of the geometry"
                )
            f = StepFunction.indicator(lo, hi, value)
            parts[klo] = parts[klo] + f if klo in parts else f
        return cls(parts)

    # -- queries -------------------------------------------------------------

    def mass(self) -> float:
        return float(sum(f.integral() for f in self.parts.values()))

    def abs_mass(self) -> float:
        return float(sum(f.abs_integral() for f in self.parts.values()))

    def min_value(self) -> float:
        if not self.parts:
            return 0.0
        return min(f.min_value() for f in self.parts.values())

    @property
    def is_nonnegative(self) -> bool:
        return self.min_value() >= 0.0

    def part(self, k: int) -> StepFunction:
        return self.parts.get(int(k), StepFunction.zero())

    def indices(self) -> list[int]:
        return sorted(self.parts)

    def __call__(self, x: float, geom: IntervalUnion) -> float:
        k = geom.index_of(x)
        if k is None:
            return 0.0
        return self.part(k)(x)

    def max_index(self) -> int:
        return max(self.parts) if self.parts else -1

    def __eq__(self, other) -> bool:
        if not isinstance(other, PiecewiseDensity):
            return NotImplemented
        return self.parts == other.parts

    def __repr__(self):
        return f"PiecewiseDensity({self.parts!r})"

    # -- linear structure -----------------------------------------------------

    def __add__(self, other: "PiecewiseDensity") -> "PiecewiseDensity":
        parts = dict(self.parts)
        for k, f in other.parts.items():
            parts[k] = parts[k] + f if k in parts else f
        return PiecewiseDensity(parts)

    def __sub__(self, other: "PiecewiseDensity") -> "PiecewiseDensity":
        return self + other.scale(-1.0)

    def scale(self, a: float) -> "PiecewiseDensity":
        return PiecewiseDensity({k: f.scale(a) for k, f in self.parts.items()})

    def l1_distance(self, other: "PiecewiseDensity") -> float:
        return (self - other).abs_mass()

    def to_rows(self):
        """Flat ``(k, lo, hi, value)`` rows for reports."""
        rows = []
        for k in self.indices():
            f = self.parts[k]
            for i in range(f.vals.size):
                rows.append((k, float(f.xs[i]), float(f.xs[i + 1]), float(f.vals[i])))
        return rows


def restrict(f: PiecewiseDensity, k: int) -> PiecewiseDensity:
    """Restriction to a single interval of the geometry."""
    part = f.part(k)
    return PiecewiseDensity({k: part}) if not part.is_zero else PiecewiseDensity.zero()


def free_stream(f: PiecewiseDensity, t: float, geom: IntervalUnion) -> PiecewiseDensity:
    """Drift by time t with absorption at the outgoing endpoints.

    Each interval's content shifts right; whatever crosses ``b_k`` is
    dropped here (it re-enters through the boundary operator at higher
    expansion orders, not in the free part).
    """
    if t < 0.0:
        raise ValueError("free stream runs forward in time")
    if t == 0.0:
        return f
    parts = {}
    for k, part in f.parts.items():
        shifted = part.shift(t).clip(geom.a(k), geom.b(k))
        if not shifted.is_zero:
            parts[k] = shifted
    return PiecewiseDensity(parts)


# ---------------------------------------------------------------------------
# particle ensembles
# ---------------------------------------------------------------------------


@dataclass
class ParticleEnsemble:
    """Weighted billiard population.  Arrays share one length N."""

    pos: np.ndarray
    vel: np.ndarray
    weight: np.ndarray
    rebounds: np.ndarray
    degenerate: np.ndarray
    seed: int

    def __post_init__(self):
        n = self.pos.shape[0]
        if (
            self.pos.shape != (n, 2)
            or self.vel.shape != (n, 2)
            or self.weight.shape != (n,)
            or self.rebounds.shape != (n,)
            or self.degenerate.shape != (n,)
        ):
            raise ValueError("ensemble arrays have inconsistent shapes")

    def __len__(self) -> int:
        return self.pos.shape[0]

    def mass(self) -> float:
        """Total weight, degenerate (frozen) particles included."""
        return float(self.weight.sum())

    def speeds(self) -> np.ndarray:
        return np.sqrt(np.sum(self.vel * self.vel, axis=1))

    def copy(self) -> "ParticleEnsemble":
        return ParticleEnsemble(
            self.pos.copy(),
            self.vel.copy(),
            self.weight.copy(),
            self.rebounds.copy(),
            self.degenerate.copy(),
            self.seed,
        )

    def rebound_histogram(self) -> np.ndarray:
        """Weight per rebound count, index n holding weight with exactly n."""
        if len(self) == 0:
            return np.zeros(1)
        top = int(self.rebounds.max())
        return np.bincount(self.rebounds, weights=self.weight, minlength=top + 1)

    def tail_weights(self, n_max: int | None = None) -> np.ndarray:
        """``out[n]`` = weight of particles with at least n+1 rebounds.

        This estimates the time-integrated outgoing trace norm of expansion
        order n: exactly the mass whose (n+1)-th boundary hit happened
        within the elapsed time.  The array runs one order past the largest
        observed rebound count, so its last entry is exactly zero.
        """
        hist = np.concatenate([self.rebound_histogram(), [0.0]])
        if n_max is not None and n_max + 2 > hist.size:
            hist = np.concatenate([hist, np.zeros(n_max + 2 - hist.size)])
        tail = np.cumsum(hist[::-1])[::-1]
        out = tail[1:]
        return out if n_max is None else out[: n_max + 1]


def _region_spec(region, geom: Billiard):
    if region == "domain":
        if geom.shape == "disk":
            return ("disk", geom.center[0], geom.center[1], geom.radius)
        return ("polygon",)
    if isinstance(region, str) and region.startswith("disk:"):
        cx, cy, rad = (float(s) for s in region[5:].split(","))
        if geom.shape == "disk":
            gx, gy = geom.center
            fits = np.hypot(cx - gx, cy - gy) + rad <= geom.radius + 1e-12
        else:
            n, d = geom.edge_normals()
            fits = np.all(n @ np.array([cx, cy]) + rad <= d + 1e-12)
        if not fits or rad <= 0:
            raise ValueError(f"region {region!r} does not sit inside the table")
        return ("disk", cx, cy, rad)
    if isinstance(region, str) and region.startswith("box:"):
        x0, y0, x1, y1 = (float(s) for s in region[4:].split(","))
        if not (x0 < x1 and y0 < y1):
            raise ValueError(f"region {region!r} is empty")
        corners = [(x0, y0), (x0, y1), (x1, y0), (x1, y1)]
        if not all(geom.contains(c) for c in corners):
            raise ValueError(f"region {region!r} does not sit inside the table")
        return ("box", x0, y0, x1, y1)
    raise ValueError(f"unknown sampling region {region!r}")


def sample_ensemble(geom: Billiard, n: int, seed: int, region="domain") -> ParticleEnsemble:
    """Uniform positions on the region, isotropic velocities per the table's
    velocity spec, unit total weight."""
    if geom.velocities is None:
        raise ValueError("billiard has no velocity spec to sample from")
    if n <= 0:
        raise ValueError("ensemble size must be positive")
    idx = np.arange(n, dtype=np.int64)
    u0 = _kernels.uniform_array(seed, idx, _POS_STREAMS[0])
    u1 = _kernels.uniform_array(seed, idx, _POS_STREAMS[1])
    spec = _region_spec(region, geom)
    if spec[0] == "disk":
        _, cx, cy, rad = spec
        r = rad * np.sqrt(u0)
        ang = 2.0 * np.pi * u1
        pos = np.stack([cx + r * np.cos(ang), cy + r * np.sin(ang)], axis=1)
    elif spec[0] == "box":
        _, x0, y0, x1, y1 = spec
        pos = np.stack([x0 + (x1 - x0) * u0, y0 + (y1 - y0) * u1], axis=1)
    else:
        # fan triangulation of the convex polygon, area-weighted
        verts = np.array(geom.vertices)
        v0, rest = verts[0], verts[1:]
        areas = 0.5 * np.abs(
            (rest[:-1, 0] - v0[0]) * (rest[1:, 1] - v0[1])
            - (rest[1:, 0] - v0[0]) * (rest[:-1, 1] - v0[1])
        )
        cum = np.cumsum(areas) / areas.sum()
        tri = np.searchsorted(cum, u0, side="right")
        tri = np.minimum(tri, areas.size - 1)
        u2 = _kernels.uniform_array(seed, idx, _POS_STREAMS[2])
        su = np.sqrt(u1)
        p0, p1, p2 = v0[None, :], rest[tri], rest[tri + 1]
        pos = (1.0 - su)[:, None] * p0 + (su * (1.0 - u2))[:, None] * p1 + (su * u2)[:, None] * p2
    uv0 = _kernels.uniform_array(seed, idx, _VEL_STREAMS[0])
    uv1 = _kernels.uniform_array(seed, idx, _VEL_STREAMS[1])
    vs = geom.velocities
    if vs.kind == "speeds":
        speeds = np.array(vs.speeds)
        pick = np.minimum((uv0 * speeds.size).astype(np.int64), speeds.size - 1)
        speed = speeds[pick]
    else:
        speed = np.sqrt(vs.speed_min**2 + uv0 * (vs.speed_max**2 - vs.speed_min**2))
    ang = 2.0 * np.pi * uv1
    vel = np.stack([speed * np.cos(ang), speed * np.sin(ang)], axis=1)
    weight = np.full(n, 1.0 / n)
    return ParticleEnsemble(
        pos, vel, weight, np.zeros(n, dtype=np.int64), np.zeros(n, dtype=np.bool_), int(seed)
    )


def transport_ensemble(
    ens: ParticleEnsemble, t: float, geom: Billiard, scale: float = 1.0, use_numba=None
) -> ParticleEnsemble:
    """Billiard flow applied to every particle for time t.

    Rebound counters accumulate one per reflection (the expansion order the
    particle currently contributes to); grazing hits freeze the particle and
    raise its degenerate flag.  ``scale`` is the per-reflection boundary
    weight.
    """
    out = ens.copy()
    _kernels.billiard_transport(
        out.pos,
        out.vel,
        out.weight,
        out.rebounds,
        out.degenerate,
        geom,
        t,
        scale=scale,
        use_numba=use_numba,
    )
    return out


# ---------------------------------------------------------------------------
# 1D sampling (Monte Carlo cross-check of the exact lane)
# ---------------------------------------------------------------------------


def sample_ladder_positions(f: PiecewiseDensity, geom: IntervalUnion, n: int, seed: int):
    """Draw n positions from the normalised density by inverse CDF.

    Returns ``(x0, k0)``: positions and their interval indices.  The draw
    for particle i is keyed by (seed, i, stream 0) only, so it is stable
    under resizing of later particles.
    """
    if not f.is_nonnegative:
        raise ValueError("cannot sample from a signed density")
    total = f.mass()
    if total <= 0.0:
        raise ValueError("cannot sample from a zero density")
    lows, highs, vals, ks = [], [], [], []
    for k in f.indices():
        part = f.parts[k]
        for i in range(part.vals.size):
            if part.vals[i] > 0.0:
                lows.append(part.xs[i])
                highs.append(part.xs[i + 1])
                vals.append(part.vals[i])
                ks.append(k)
    lows = np.array(lows)
    highs = np.array(highs)
    masses = np.array(vals) * (highs - lows)
    cum = np.cumsum(masses)
    idx = np.arange(n, dtype=np.int64)
    u = _kernels.uniform_array(seed, idx, _POS_STREAMS[0]) * cum[-1]
    piece = np.searchsorted(cum, u, side="right")
    piece = np.minimum(piece, masses.size - 1)
    before = np.where(piece > 0, cum[piece - 1], 0.0)
    frac = (u - before) / masses[piece]
    x0 = lows[piece] + frac * (highs[piece] - lows[piece])
    k0 = np.array(ks, dtype=np.int64)[piece]
    return x0, k0
