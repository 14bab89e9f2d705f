"""Hot numerical kernels: billiard ensemble transport and the 1D ladder
survival Monte Carlo.

Every kernel exists twice: a numba ``@njit`` build and a vectorised numpy
build performing the same arithmetic per particle, so results agree bitwise.
``HONESTFLOW_DISABLE_NUMBA=1`` (or an unavailable numba) selects the numpy
path; the public wrappers dispatch automatically.

Randomness is counter-based: every uniform draw is a pure function of
(seed, particle index, stream index) through a splitmix64 finaliser, so
ensembles are reproducible bit-for-bit regardless of vectorisation, chunking
or evaluation order.
"""

from __future__ import annotations

import os

import numpy as np

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and os.environ.get("HONESTFLOW_DISABLE_NUMBA", "0") != "1"

# survival draws start at this stream index; lower streams seed positions
# and velocities (see densities.sample_* for the layout)
SURVIVAL_STREAM_BASE = 8

_GOLD = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U30 = np.uint64(30)
_U27 = np.uint64(27)
_U31 = np.uint64(31)
_U11 = np.uint64(11)
_INV53 = float(2.0**-53)


def _mix64(z):
    z = (z ^ (z >> _U30)) * _MIX1
    z = (z ^ (z >> _U27)) * _MIX2
    return z ^ (z >> _U31)


def _hash3(seed, index, stream):
    # uint64 in, uint64 out; works elementwise on arrays
    h = _mix64(seed + _GOLD)
    h = _mix64(h + _GOLD * index)
    return _mix64(h + _GOLD * stream)


def uniform_array(seed: int, index, stream) -> np.ndarray:
    """Vectorised uniform draws in [0, 1) keyed by (seed, index, stream)."""
    s = np.uint64(seed)
    idx = np.atleast_1d(np.asarray(index)).astype(np.uint64)
    st = np.atleast_1d(np.asarray(stream)).astype(np.uint64)
    with np.errstate(over="ignore"):
        h = _hash3(s, idx, st)
    return (h >> _U11) * _INV53


if HAS_NUMBA:
    _mix64_nb = numba.njit(cache=True)(_mix64)

    @numba.njit(cache=True)
    def _uniform_nb(seed, index, stream):
        h = _mix64_nb(seed + _GOLD)
        h = _mix64_nb(h + _GOLD * np.uint64(index))
        h = _mix64_nb(h + _GOLD * np.uint64(stream))
        return (h >> _U11) * _INV53


# ---------------------------------------------------------------------------
# 1D ladder survival Monte Carlo
# ---------------------------------------------------------------------------
#
# A particle drifts right at unit speed inside interval k, jumps from b_k to
# a_{k+1} instantly and survives each jump with probability r.  tail[k] holds
# the total interval length from k on: once the remaining time covers the
# whole tail the particle completes infinitely many jumps and is gone.


def _ladder_py(x0, k0, a, b, tail, r, t, seed):
    n = x0.shape[0]
    nk = a.shape[0]
    alive = np.ones(n, dtype=np.bool_)
    hops = np.zeros(n, dtype=np.int64)
    useed = np.uint64(seed)
    for i in range(n):
        pos = x0[i]
        k = k0[i]
        rem = t
        while True:
            flight = b[k] - pos
            if flight > rem:
                break
            rem -= flight
            if r < 1.0:
                u = _uniform_nb(useed, i, SURVIVAL_STREAM_BASE + hops[i])
                if u >= r:
                    alive[i] = False
                    break
            hops[i] += 1
            k += 1
            if k >= nk or rem >= tail[k]:
                alive[i] = False
                break
            pos = a[k]
    return alive, hops


def _ladder_np(x0, k0, a, b, tail, r, t, seed):
    n = x0.shape[0]
    nk = a.shape[0]
    alive = np.ones(n, dtype=np.bool_)
    hops = np.zeros(n, dtype=np.int64)
    pos = x0.copy()
    k = k0.copy()
    rem = np.full(n, t)
    moving = np.ones(n, dtype=np.bool_)
    idx_all = np.arange(n)
    while True:
        idx = idx_all[moving]
        if idx.size == 0:
            break
        flight = b[k[idx]] - pos[idx]
        crossing = flight <= rem[idx]
        moving[idx[~crossing]] = False
        idx = idx[crossing]
        if idx.size == 0:
            break
        rem[idx] -= flight[crossing]
        if r < 1.0:
            u = uniform_array(seed, idx, SURVIVAL_STREAM_BASE + hops[idx])
            dead = u >= r
            alive[idx[dead]] = False
            moving[idx[dead]] = False
            idx = idx[~dead]
        hops[idx] += 1
        k[idx] += 1
        out = k[idx] >= nk
        safe = idx[~out]
        gone = safe[rem[safe] >= tail[k[safe]]]
        dead_idx = np.concatenate([idx[out], gone])
        alive[dead_idx] = False
        moving[dead_idx] = False
        still = safe[rem[safe] < tail[k[safe]]]
        pos[still] = a[k[still]]
    return alive, hops


if HAS_NUMBA:
    _ladder_nb = numba.njit(cache=True)(_ladder_py)


def ladder_survival(x0, k0, a, b, tail, r, t, seed, use_numba=None):
    """Transport a sampled ladder population to time t.

    Returns ``(alive, hops)``: whether each particle is still inside some
    interval at time t, and how many boundary jumps it made.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    k0 = np.asarray(k0, dtype=np.int64)
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    tail = np.asarray(tail, dtype=np.float64)
    if not 0.0 < r <= 1.0:
        raise ValueError("survival probability r must lie in (0, 1]")
    if use_numba is None:
        use_numba = USE_NUMBA
    if use_numba and HAS_NUMBA:
        return _ladder_nb(x0, k0, a, b, tail, float(r), float(t), int(seed))
    return _ladder_np(x0, k0, a, b, tail, float(r), float(t), int(seed))


# ---------------------------------------------------------------------------
# disk billiard transport
# ---------------------------------------------------------------------------


def _disk_py(pos, vel, weight, rebounds, degenerate, cx, cy, radius, t, scale, eps, iter_cap):
    n = pos.shape[0]
    for i in range(n):
        if degenerate[i]:
            continue
        x = pos[i, 0]
        y = pos[i, 1]
        vx = vel[i, 0]
        vy = vel[i, 1]
        rem = t
        speed = np.sqrt(vx * vx + vy * vy)
        it = 0
        while rem > 0.0:
            it += 1
            if it > iter_cap:
                degenerate[i] = True
                break
            # recomputed per bounce from the current velocity (reflection
            # preserves speed only up to rounding)
            v2 = vx * vx + vy * vy
            rx = x - cx
            ry = y - cy
            bq = rx * vx + ry * vy
            cq = rx * rx + ry * ry - radius * radius
            disc = bq * bq - v2 * cq
            if disc < 0.0:
                disc = 0.0
            root = np.sqrt(disc)
            if bq > 0.0:
                s = -cq / (bq + root)
            else:
                s = (root - bq) / v2
            if s < 0.0:
                s = 0.0
            if s > rem:
                x += vx * rem
                y += vy * rem
                rem = 0.0
                break
            x += vx * s
            y += vy * s
            rem -= s
            # re-anchor onto the circle, reflect
            rx = x - cx
            ry = y - cy
            nr = np.sqrt(rx * rx + ry * ry)
            nx = rx / nr
            ny = ry / nr
            x = cx + radius * nx
            y = cy + radius * ny
            vn = vx * nx + vy * ny
            if abs(vn) < eps * speed:
                degenerate[i] = True
                break
            vx -= 2.0 * vn * nx
            vy -= 2.0 * vn * ny
            rebounds[i] += 1
            weight[i] *= scale
        pos[i, 0] = x
        pos[i, 1] = y
        vel[i, 0] = vx
        vel[i, 1] = vy
    return pos, vel, weight, rebounds, degenerate


def _disk_np(pos, vel, weight, rebounds, degenerate, cx, cy, radius, t, scale, eps, iter_cap):
    n = pos.shape[0]
    rem = np.where(degenerate, 0.0, t)
    speed = np.sqrt(np.sum(vel * vel, axis=1))
    idx_all = np.arange(n)
    rounds = 0
    while True:
        act = idx_all[rem > 0.0]
        if act.size == 0:
            break
        rounds += 1
        if rounds > iter_cap:
            degenerate[act] = True
            break
        rx = pos[act, 0] - cx
        ry = pos[act, 1] - cy
        vx = vel[act, 0]
        vy = vel[act, 1]
        v2 = vx * vx + vy * vy
        bq = rx * vx + ry * vy
        cq = rx * rx + ry * ry - radius * radius
        disc = np.maximum(bq * bq - v2 * cq, 0.0)
        root = np.sqrt(disc)
        # where() evaluates both branches; mask the dead one's zero divisor
        with np.errstate(divide="ignore", invalid="ignore"):
            s = np.where(bq > 0.0, -cq / (bq + root), (root - bq) / v2)
        s = np.maximum(s, 0.0)
        fly = s > rem[act]
        done = act[fly]
        pos[done, 0] += vel[done, 0] * rem[done]
        pos[done, 1] += vel[done, 1] * rem[done]
        rem[done] = 0.0
        hit = act[~fly]
        sh = s[~fly]
        pos[hit, 0] += vel[hit, 0] * sh
        pos[hit, 1] += vel[hit, 1] * sh
        rem[hit] -= sh
        rx = pos[hit, 0] - cx
        ry = pos[hit, 1] - cy
        nr = np.sqrt(rx * rx + ry * ry)
        nx = rx / nr
        ny = ry / nr
        pos[hit, 0] = cx + radius * nx
        pos[hit, 1] = cy + radius * ny
        vn = vel[hit, 0] * nx + vel[hit, 1] * ny
        graze = np.abs(vn) < eps * speed[hit]
        gz = hit[graze]
        degenerate[gz] = True
        rem[gz] = 0.0
        ok = hit[~graze]
        vel[ok, 0] -= 2.0 * vn[~graze] * nx[~graze]
        vel[ok, 1] -= 2.0 * vn[~graze] * ny[~graze]
        rebounds[ok] += 1
        weight[ok] *= scale
    return pos, vel, weight, rebounds, degenerate


if HAS_NUMBA:
    _disk_nb = numba.njit(cache=True)(_disk_py)


# ---------------------------------------------------------------------------
# convex polygon billiard transport
# ---------------------------------------------------------------------------


def _polygon_py(pos, vel, weight, rebounds, degenerate, normals, offsets, verts,
                t, scale, eps, vert_eps, iter_cap):
    n = pos.shape[0]
    ne = normals.shape[0]
    nv = verts.shape[0]
    for i in range(n):
        if degenerate[i]:
            continue
        x = pos[i, 0]
        y = pos[i, 1]
        vx = vel[i, 0]
        vy = vel[i, 1]
        speed = np.sqrt(vx * vx + vy * vy)
        rem = t
        it = 0
        while rem > 0.0:
            it += 1
            if it > iter_cap:
                degenerate[i] = True
                break
            s = np.inf
            edge = -1
            for e in range(ne):
                dv = normals[e, 0] * vx + normals[e, 1] * vy
                if dv > 0.0:
                    se = (offsets[e] - normals[e, 0] * x - normals[e, 1] * y) / dv
                    if se < s:
                        s = se
                        edge = e
            if s < 0.0:
                s = 0.0
            if s > rem:
                x += vx * rem
                y += vy * rem
                rem = 0.0
                break
            x += vx * s
            y += vy * s
            rem -= s
            hit_vertex = False
            for w in range(nv):
                dx = x - verts[w, 0]
                dy = y - verts[w, 1]
                if np.sqrt(dx * dx + dy * dy) < vert_eps:
                    hit_vertex = True
                    break
            if hit_vertex:
                degenerate[i] = True
                break
            nx = normals[edge, 0]
            ny = normals[edge, 1]
            vn = vx * nx + vy * ny
            if abs(vn) < eps * speed:
                degenerate[i] = True
                break
            vx -= 2.0 * vn * nx
            vy -= 2.0 * vn * ny
            rebounds[i] += 1
            weight[i] *= scale
        pos[i, 0] = x
        pos[i, 1] = y
        vel[i, 0] = vx
        vel[i, 1] = vy
    return pos, vel, weight, rebounds, degenerate


def _polygon_np(pos, vel, weight, rebounds, degenerate, normals, offsets, verts,
                t, scale, eps, vert_eps, iter_cap):
    n = pos.shape[0]
    rem = np.where(degenerate, 0.0, t)
    speed = np.sqrt(np.sum(vel * vel, axis=1))
    idx_all = np.arange(n)
    rounds = 0
    while True:
        act = idx_all[rem > 0.0]
        if act.size == 0:
            break
        rounds += 1
        if rounds > iter_cap:
            degenerate[act] = True
            break
        # elementwise products (not matmul) so rounding matches the scalar path
        dv = vel[act, 0, None] * normals[None, :, 0] + vel[act, 1, None] * normals[None, :, 1]
        proj = pos[act, 0, None] * normals[None, :, 0] + pos[act, 1, None] * normals[None, :, 1]
        gap = offsets[None, :] - proj
        with np.errstate(divide="ignore", invalid="ignore"):
            times = np.where(dv > 0.0, gap / dv, np.inf)
        edge = np.argmin(times, axis=1)
        s = np.maximum(times[np.arange(act.size), edge], 0.0)
        fly = s > rem[act]
        done = act[fly]
        pos[done] += vel[done] * rem[done, None]
        rem[done] = 0.0
        hit = act[~fly]
        sh = s[~fly]
        eh = edge[~fly]
        pos[hit] += vel[hit] * sh[:, None]
        rem[hit] -= sh
        dist = np.min(np.linalg.norm(pos[hit][:, None, :] - verts[None, :, :], axis=2), axis=1)
        nx = normals[eh, 0]
        ny = normals[eh, 1]
        vn = vel[hit, 0] * nx + vel[hit, 1] * ny
        graze = (np.abs(vn) < eps * speed[hit]) | (dist < vert_eps)
        gz = hit[graze]
        degenerate[gz] = True
        rem[gz] = 0.0
        ok = hit[~graze]
        vel[ok, 0] -= 2.0 * vn[~graze] * nx[~graze]
        vel[ok, 1] -= 2.0 * vn[~graze] * ny[~graze]
        rebounds[ok] += 1
        weight[ok] *= scale
    return pos, vel, weight, rebounds, degenerate


if HAS_NUMBA:
    _polygon_nb = numba.njit(cache=True)(_polygon_py)


def billiard_transport(pos, vel, weight, rebounds, degenerate, geom, t,
                       scale=1.0, eps=1e-10, iter_cap=10_000_000, use_numba=None):
    """Advance a billiard ensemble by time t in place (arrays are mutated).

    ``scale`` multiplies the particle weight at every reflection (the
    boundary operator weight).  Grazing hits freeze the particle and set its
    degenerate flag instead of reflecting.
    """
    if t < 0.0:
        raise ValueError("transport time must be nonnegative")
    if use_numba is None:
        use_numba = USE_NUMBA
    if geom.shape == "disk":
        fn = _disk_nb if (use_numba and HAS_NUMBA) else _disk_np
        cx, cy = geom.center
        return fn(pos, vel, weight, rebounds, degenerate, float(cx), float(cy),
                  float(geom.radius), float(t), float(scale), float(eps), int(iter_cap))
    normals, offsets = geom.edge_normals()
    verts = np.array(geom.vertices, dtype=np.float64)
    fn = _polygon_nb if (use_numba and HAS_NUMBA) else _polygon_np
    return fn(pos, vel, weight, rebounds, degenerate, normals, offsets, verts,
              float(t), float(scale), float(eps), float(eps) * max(1.0, float(np.max(np.abs(verts)))),
              int(iter_cap))
