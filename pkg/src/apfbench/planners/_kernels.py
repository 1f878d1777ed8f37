"""Compiled inner loops of the planners.

Each kernel mirrors, operation for operation, the pure-Python planner of
the same name in ``reference.py``; the tests hold the two to identical
paths, evaluation counts and statuses.  Arguments are flat float/int arrays
so that numba can type them.

Status codes: 0 Reached, 1 NoPath, 2 Timeout.
"""
from __future__ import annotations

import math
import time

import numpy as np
from numba import njit, objmode

REACHED, NO_PATH, TIMEOUT = 0, 1, 2
CLOCK_EVERY = 256  # steps between wall-clock checks


@njit(cache=True)
def _now():
    with objmode(t="float64"):
        t = time.perf_counter()
    return t


# ---------------------------------------------------------------------------
# spatial index: compressed bucket lists on a unit grid
# ---------------------------------------------------------------------------

@njit(cache=True)
def build_index(ox, oy, reach, x0, y0, nx, ny):
    """Bucket ``k`` into every unit cell its disc of radius ``reach[k]`` may touch.

    Returns ``(start, items)``: cell ``c = i * ny + j`` holds
    ``items[start[c]:start[c + 1]]``, in increasing obstacle order.
    """
    n = ox.shape[0]
    counts = np.zeros(nx * ny + 1, np.int64)
    for k in range(n):
        r = reach[k]
        i0 = max(int(math.floor(ox[k] - r - x0)), 0)
        i1 = min(int(math.floor(ox[k] + r - x0)), nx - 1)
        j0 = max(int(math.floor(oy[k] - r - y0)), 0)
        j1 = min(int(math.floor(oy[k] + r - y0)), ny - 1)
        for i in range(i0, i1 + 1):
            for j in range(j0, j1 + 1):
                counts[i * ny + j + 1] += 1
    start = np.cumsum(counts)
    fill = start[:-1].copy()
    items = np.empty(max(start[-1], 1), np.int64)
    for k in range(n):
        r = reach[k]
        i0 = max(int(math.floor(ox[k] - r - x0)), 0)
        i1 = min(int(math.floor(ox[k] + r - x0)), nx - 1)
        j0 = max(int(math.floor(oy[k] - r - y0)), 0)
        j1 = min(int(math.floor(oy[k] + r - y0)), ny - 1)
        for i in range(i0, i1 + 1):
            for j in range(j0, j1 + 1):
                c = i * ny + j
                items[fill[c]] = k
                fill[c] += 1
    return start, items


@njit(cache=True)
def _bucket(x, y, x0, y0, nx, ny, start):
    i = int(math.floor(x - x0))
    j = int(math.floor(y - y0))
    if i < 0 or j < 0 or i >= nx or j >= ny:
        return 0, 0
    c = i * ny + j
    return start[c], start[c + 1]


# ---------------------------------------------------------------------------
# Gaussian potential
# ---------------------------------------------------------------------------

@njit(cache=True)
def _gauss(x, y, tx, ty, aa, ma, ao, mo, ox, oy, rl2, ru2, items, s0, s1, ax, ay, na, aru2):
    dx = x - tx
    dy = y - ty
    j = -aa * math.exp(-ma * (dx * dx + dy * dy))
    for q in range(s0, s1):
        k = items[q]
        ex = x - ox[k]
        ey = y - oy[k]
        d2 = ex * ex + ey * ey
        if d2 >= ru2[k]:
            continue
        if d2 <= rl2[k]:
            return math.inf
        j += ao * math.exp(-mo * d2)
    # markers added during this plan come after every input obstacle
    for q in range(na):
        ex = x - ax[q]
        ey = y - ay[q]
        d2 = ex * ex + ey * ey
        if d2 < aru2:
            j += ao * math.exp(-mo * d2)
    return j


@njit(cache=True)
def _unit_ring(nb):
    rc = np.empty(nb)
    rs = np.empty(nb)
    for j in range(1, nb + 1):
        a = 0.0 if j == nb else 2.0 * math.pi * j / nb
        rc[j - 1] = math.cos(a)
        rs[j - 1] = math.sin(a)
    return rc, rs


@njit(cache=True)
def _revisits(hx, hy, hn, x, y, tol2):
    for q in range(hn):
        dx = hx[q] - x
        dy = hy[q] - y
        if dx * dx + dy * dy < tol2:
            return True
    return False


@njit(cache=True)
def rapf(sx, sy, tx, ty, ox, oy, rl2, ru2, start, items, gx0, gy0, gnx, gny,
         aa, ma, ao, mo, nb, rb, aru2, margin2, max_steps, max_time, max_art, window):
    """Aligned bacteria descent with artificial-obstacle restarts."""
    t0 = _now()
    rc, rs = _unit_ring(nb)
    path = np.empty((max_steps + 1, 2))
    ax = np.empty(max_art + 1)
    ay = np.empty(max_art + 1)
    ev = np.empty((max_art + 1, 2))
    ev_step = np.empty(max_art + 1, np.int64)
    hx = np.empty(window)
    hy = np.empty(window)
    tol2 = (0.5 * rb) ** 2
    na = 0
    hn = 0
    hp = 0
    evals = 0
    x = sx
    y = sy
    path[0, 0] = x
    path[0, 1] = y
    npath = 1
    s0, s1 = _bucket(x, y, gx0, gy0, gnx, gny, start)
    j_robot = _gauss(x, y, tx, ty, aa, ma, ao, mo, ox, oy, rl2, ru2, items, s0, s1, ax, ay, na, aru2)
    evals += 1
    steps = 0
    status = TIMEOUT
    while True:
        if steps % CLOCK_EVERY == 0 and _now() - t0 > max_time:
            status = TIMEOUT
            break
        if steps >= max_steps:
            status = TIMEOUT
            break
        dx = tx - x
        dy = ty - y
        d2 = dx * dx + dy * dy
        if d2 < margin2:
            status = REACHED
            break
        steps += 1
        inv = rb / math.sqrt(d2)
        ux = dx * inv
        uy = dy * inv
        s0, s1 = _bucket(x, y, gx0, gy0, gnx, gny, start)
        found = False
        bx_best = 0.0
        by_best = 0.0
        j_best = 0.0
        e_best = math.inf
        for b in range(nb):
            c = rc[b]
            s = rs[b]
            bx = x + c * ux - s * uy
            by = y + s * ux + c * uy
            jb = _gauss(bx, by, tx, ty, aa, ma, ao, mo, ox, oy, rl2, ru2, items, s0, s1, ax, ay, na, aru2)
            if jb < j_robot:
                ex = bx - tx
                ey = by - ty
                e2 = ex * ex + ey * ey
                if e2 < e_best:
                    found = True
                    bx_best = bx
                    by_best = by
                    j_best = jb
                    e_best = e2
        evals += nb
        trapped = not found
        if found:
            hx[hp] = x
            hy[hp] = y
            hp = (hp + 1) % window
            if hn < window:
                hn += 1
            x = bx_best
            y = by_best
            j_robot = j_best
            path[npath, 0] = x
            path[npath, 1] = y
            npath += 1
            trapped = _revisits(hx, hy, hn, x, y, tol2)
        if trapped:
            ev[na, 0] = x
            ev[na, 1] = y
            ev_step[na] = steps
            ax[na] = x
            ay[na] = y
            na += 1
            if na > max_art:
                status = NO_PATH
                break
            x = sx
            y = sy
            path[0, 0] = x
            path[0, 1] = y
            npath = 1
            hn = 0
            hp = 0
            s0, s1 = _bucket(x, y, gx0, gy0, gnx, gny, start)
            j_robot = _gauss(x, y, tx, ty, aa, ma, ao, mo, ox, oy, rl2, ru2, items, s0, s1, ax, ay, na, aru2)
            evals += 1
    return status, path[:npath].copy(), na, evals, ev[:na].copy(), ev_step[:na].copy()


# SplitMix64, shared with the reference planner so both draw the same walk
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


@njit(cache=True)
def _splitmix(state):
    state = state + _GOLDEN
    z = state
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return state, z ^ (z >> np.uint64(31))


@njit(cache=True)
def crbapf(sx, sy, tx, ty, ox, oy, rl2, ru2, start, items, gx0, gy0, gnx, gny,
           aa, ma, ao, mo, nb, rb, margin2, max_steps, max_time, rw_steps, window, seed):
    """Fixed-ring bacteria descent with random-walk escapes."""
    t0 = _now()
    rc, rs = _unit_ring(nb)
    path = np.empty((max_steps + 1, 2))
    ev = np.empty((max_steps + 1, 2))
    ev_step = np.empty(max_steps + 1, np.int64)
    hx = np.empty(window)
    hy = np.empty(window)
    optx = np.empty(nb)
    opty = np.empty(nb)
    ax = np.empty(0)
    ay = np.empty(0)
    tol2 = (0.5 * rb) ** 2
    rng = np.uint64(seed)
    hn = 0
    hp = 0
    nev = 0
    evals = 0
    x = sx
    y = sy
    path[0, 0] = x
    path[0, 1] = y
    npath = 1
    s0, s1 = _bucket(x, y, gx0, gy0, gnx, gny, start)
    j_robot = _gauss(x, y, tx, ty, aa, ma, ao, mo, ox, oy, rl2, ru2, items, s0, s1, ax, ay, 0, 0.0)
    evals += 1
    steps = 0
    walk_left = 0
    status = TIMEOUT
    while True:
        if steps % CLOCK_EVERY == 0 and _now() - t0 > max_time:
            status = TIMEOUT
            break
        if steps >= max_steps:
            status = TIMEOUT
            break
        dx = tx - x
        dy = ty - y
        if dx * dx + dy * dy < margin2:
            status = REACHED
            break
        steps += 1
        s0, s1 = _bucket(x, y, gx0, gy0, gnx, gny, start)
        if walk_left > 0:
            walk_left -= 1
            nopt = 0
            for b in range(nb):
                bx = x + rc[b] * rb - rs[b] * 0.0
                by = y + rs[b] * rb + rc[b] * 0.0
                jb = _gauss(bx, by, tx, ty, aa, ma, ao, mo, ox, oy, rl2, ru2, items, s0, s1, ax, ay, 0, 0.0)
                if jb < math.inf:
                    optx[nopt] = bx
                    opty[nopt] = by
                    nopt += 1
            evals += nb
            if nopt == 0:
                status = NO_PATH
                break
            rng, z = _splitmix(rng)
            pick = int(z % np.uint64(nopt))
            x = optx[pick]
            y = opty[pick]
            path[npath, 0] = x
            path[npath, 1] = y
            npath += 1
            if walk_left == 0:
                s0, s1 = _bucket(x, y, gx0, gy0, gnx, gny, start)
                j_robot = _gauss(x, y, tx, ty, aa, ma, ao, mo, ox, oy, rl2, ru2, items, s0, s1, ax, ay, 0, 0.0)
                evals += 1
                hn = 0
                hp = 0
            continue
        found = False
        bx_best = 0.0
        by_best = 0.0
        j_best = 0.0
        e_best = math.inf
        for b in range(nb):
            bx = x + rc[b] * rb - rs[b] * 0.0
            by = y + rs[b] * rb + rc[b] * 0.0
            jb = _gauss(bx, by, tx, ty, aa, ma, ao, mo, ox, oy, rl2, ru2, items, s0, s1, ax, ay, 0, 0.0)
            if jb < j_robot:
                ex = bx - tx
                ey = by - ty
                e2 = ex * ex + ey * ey
                if e2 < e_best:
                    found = True
                    bx_best = bx
                    by_best = by
                    j_best = jb
                    e_best = e2
        evals += nb
        trapped = not found
        if found:
            hx[hp] = x
            hy[hp] = y
            hp = (hp + 1) % window
            if hn < window:
                hn += 1
            x = bx_best
            y = by_best
            j_robot = j_best
            path[npath, 0] = x
            path[npath, 1] = y
            npath += 1
            trapped = _revisits(hx, hy, hn, x, y, tol2)
        if trapped:
            ev[nev, 0] = x
            ev[nev, 1] = y
            ev_step[nev] = steps
            nev += 1
            walk_left = rw_steps
    return status, path[:npath].copy(), evals, ev[:nev].copy(), ev_step[:nev].copy()


# ---------------------------------------------------------------------------
# quadratic field: force map and descent (APF / RVF)
# ---------------------------------------------------------------------------

@njit(cache=True)
def _quad_force(x, y, tx, ty, k_a, k_rep, rho0, rot, ox, oy, idx, m):
    """Force at (x, y) from the obstacles ``idx[:m]``; ``ok`` False on a center hit."""
    fx = -k_a * (x - tx)
    fy = -k_a * (y - ty)
    r02 = rho0 * rho0
    inv0 = 1.0 / rho0
    for q in range(m):
        k = idx[q]
        dx = x - ox[k]
        dy = y - oy[k]
        d2 = dx * dx + dy * dy
        if d2 > r02:
            continue
        if d2 == 0.0:
            return 0.0, 0.0, False
        d = math.sqrt(d2)
        c = -k_rep * (1.0 / d - inv0) / (d2 * d)
        gx = c * dx
        gy = c * dy
        if rot == 0:
            fx -= gx
            fy -= gy
        elif rot == 1:
            fx += gy
            fy -= gx
        else:
            fx -= gy
            fy += gx
    return fx, fy, True


@njit(cache=True)
def descend(sx, sy, tx, ty, ox, oy, orad, k_a, k_rep, rho0, rot, map_size, map_cell,
            step, margin2, rover_radius, max_steps, max_time, window, tol2, stall):
    """Normalized descent along a force map rebuilt around the robot near its border."""
    t0 = _now()
    n_obs = ox.shape[0]
    m = max(1, int(round(0.5 * map_size / map_cell)))
    n = 2 * m + 1
    half = m * map_cell
    fxm = np.zeros((n, n))
    fym = np.zeros((n, n))
    idx = np.empty(max(n_obs, 1), np.int64)
    nidx = 0
    path = np.empty((max_steps + 1, 2))
    hx = np.empty(window)
    hy = np.empty(window)
    hn = 0
    hp = 0
    evals = 0
    x = sx
    y = sy
    path[0, 0] = x
    path[0, 1] = y
    npath = 1
    have_map = False
    cx = 0.0
    cy = 0.0
    x0 = 0.0
    y0 = 0.0
    steps = 0
    status = TIMEOUT
    while True:
        if steps % CLOCK_EVERY == 0 and _now() - t0 > max_time:
            status = TIMEOUT
            break
        if steps >= max_steps:
            status = TIMEOUT
            break
        dx = tx - x
        dy = ty - y
        if dx * dx + dy * dy < margin2:
            status = REACHED
            break
        steps += 1
        lim = half - map_cell
        if not have_map or not (abs(x - cx) <= lim and abs(y - cy) <= lim):
            cx = x
            cy = y
            x0 = cx - m * map_cell
            y0 = cy - m * map_cell
            reach = half + rho0 + map_cell
            nidx = 0
            for k in range(n_obs):
                if abs(ox[k] - cx) <= reach + orad[k] and abs(oy[k] - cy) <= reach + orad[k]:
                    idx[nidx] = k
                    nidx += 1
            for i in range(n):
                px = x0 + i * map_cell
                for j in range(n):
                    fx, fy, ok = _quad_force(px, y0 + j * map_cell, tx, ty, k_a, k_rep, rho0, rot,
                                             ox, oy, idx, nidx)
                    fxm[i, j] = fx
                    fym[i, j] = fy
            evals += n * n
            have_map = True
        u = (x - x0) / map_cell
        v = (y - y0) / map_cell
        i = min(max(int(u), 0), n - 2)
        j = min(max(int(v), 0), n - 2)
        a = u - i
        b = v - j
        w00 = (1 - a) * (1 - b)
        w10 = a * (1 - b)
        w01 = (1 - a) * b
        w11 = a * b
        fx = w00 * fxm[i, j] + w10 * fxm[i + 1, j] + w01 * fxm[i, j + 1] + w11 * fxm[i + 1, j + 1]
        fy = w00 * fym[i, j] + w10 * fym[i + 1, j] + w01 * fym[i, j + 1] + w11 * fym[i + 1, j + 1]
        norm = math.sqrt(fx * fx + fy * fy)  # libm hypot and CPython hypot differ in the last ulp
        if norm < stall:
            status = NO_PATH
            break
        nx_ = x + step * fx / norm
        ny_ = y + step * fy / norm
        hit = False
        for q in range(nidx):
            k = idx[q]
            lim2 = orad[k] + rover_radius
            ex = nx_ - ox[k]
            ey = ny_ - oy[k]
            if ex * ex + ey * ey < lim2 * lim2:
                hit = True
                break
        if hit or _revisits(hx, hy, hn, nx_, ny_, tol2):
            status = NO_PATH
            break
        hx[hp] = x
        hy[hp] = y
        hp = (hp + 1) % window
        if hn < window:
            hn += 1
        x = nx_
        y = ny_
        path[npath, 0] = x
        path[npath, 1] = y
        npath += 1
    return status, path[:npath].copy(), evals


# ---------------------------------------------------------------------------
# A* on an occupancy grid
# ---------------------------------------------------------------------------

@njit(cache=True)
def stamp(blocked, xmin, ymin, h, cx, cy, radius):
    """Block every cell whose center lies strictly within ``radius`` of (cx, cy)."""
    nx, ny = blocked.shape
    i0 = max(int(math.floor((cx - radius - xmin) / h)), 0)
    i1 = min(int(math.ceil((cx + radius - xmin) / h)), nx - 1)
    j0 = max(int(math.floor((cy - radius - ymin) / h)), 0)
    j1 = min(int(math.ceil((cy + radius - ymin) / h)), ny - 1)
    r2 = radius * radius
    for i in range(i0, i1 + 1):
        ddx = xmin + (i + 0.5) * h - cx
        for j in range(j0, j1 + 1):
            ddy = ymin + (j + 0.5) * h - cy
            if ddx * ddx + ddy * ddy < r2:
                blocked[i, j] = True


@njit(cache=True)
def stamp_all(blocked, xmin, ymin, h, ox, oy, radii):
    for k in range(ox.shape[0]):
        stamp(blocked, xmin, ymin, h, ox[k], oy[k], radii[k])


@njit(cache=True)
def _less(f1, h1, i1, f2, h2, i2):
    if f1 != f2:
        return f1 < f2
    if h1 != h2:
        return h1 < h2
    return i1 < i2


@njit(cache=True)
def astar(blocked, si, sj, gi, gj):
    """8-connected A*, octile heuristic, ties on (f, h, cell index).

    Returns ``(cost, cells)`` in cell units; ``cost < 0`` when unreachable.
    """
    ncell = blocked.shape[0] * blocked.shape[1]
    return astar_ws(blocked, si, sj, gi, gj, np.empty(ncell), np.empty(ncell, np.int64),
                    np.empty(ncell, np.bool_))


@njit(cache=True)
def astar_ws(blocked, si, sj, gi, gj, g_buf, parent_buf, closed_buf):
    """``astar`` on caller-owned scratch arrays of at least ``nx * ny`` entries."""
    nx, ny = blocked.shape
    ncell = nx * ny
    s = si * ny + sj
    goal = gi * ny + gj
    empty = np.empty((0, 2), np.int64)
    if blocked[si, sj] or blocked[gi, gj]:
        return -1.0, empty
    g = g_buf[:ncell]
    parent = parent_buf[:ncell]
    closed = closed_buf[:ncell]
    g[:] = np.inf
    parent[:] = -1
    closed[:] = False
    k = math.sqrt(2.0) - 1.0
    diag = math.sqrt(2.0)
    cap = 1024
    hf = np.empty(cap)
    hh = np.empty(cap)
    hi = np.empty(cap, np.int64)
    ai = abs(si - gi)
    aj = abs(sj - gj)
    h0 = k * min(ai, aj) + max(ai, aj)
    hf[0] = h0
    hh[0] = h0
    hi[0] = s
    hn = 1
    g[s] = 0.0
    while hn > 0:
        cur = hi[0]
        hn -= 1
        if hn > 0:
            lf = hf[hn]
            lh = hh[hn]
            li = hi[hn]
            p = 0
            while True:
                c = 2 * p + 1
                if c >= hn:
                    break
                if c + 1 < hn and _less(hf[c + 1], hh[c + 1], hi[c + 1], hf[c], hh[c], hi[c]):
                    c += 1
                if _less(hf[c], hh[c], hi[c], lf, lh, li):
                    hf[p] = hf[c]
                    hh[p] = hh[c]
                    hi[p] = hi[c]
                    p = c
                else:
                    break
            hf[p] = lf
            hh[p] = lh
            hi[p] = li
        if closed[cur]:
            continue
        if cur == goal:
            cnt = 0
            c = cur
            while c != -1:
                cnt += 1
                c = parent[c]
            cells = np.empty((cnt, 2), np.int64)
            c = cur
            for q in range(cnt - 1, -1, -1):
                cells[q, 0] = c // ny
                cells[q, 1] = c % ny
                c = parent[c]
            return g[goal], cells
        closed[cur] = True
        ci = cur // ny
        cj = cur % ny
        gc = g[cur]
        for mv in range(8):
            if mv == 0:
                i, j, cost = ci + 1, cj, 1.0
            elif mv == 1:
                i, j, cost = ci - 1, cj, 1.0
            elif mv == 2:
                i, j, cost = ci, cj + 1, 1.0
            elif mv == 3:
                i, j, cost = ci, cj - 1, 1.0
            elif mv == 4:
                i, j, cost = ci + 1, cj + 1, diag
            elif mv == 5:
                i, j, cost = ci + 1, cj - 1, diag
            elif mv == 6:
                i, j, cost = ci - 1, cj + 1, diag
            else:
                i, j, cost = ci - 1, cj - 1, diag
            if i < 0 or j < 0 or i >= nx or j >= ny:
                continue
            nb = i * ny + j
            if closed[nb] or blocked[i, j]:
                continue
            ng = gc + cost
            if ng >= g[nb]:
                continue
            g[nb] = ng
            parent[nb] = cur
            ai = abs(i - gi)
            aj = abs(j - gj)
            h = k * (ai if ai < aj else aj) + (ai if ai > aj else aj)
            f = ng + h
            if hn == hf.shape[0]:
                hf = np.concatenate((hf, np.empty(hn)))
                hh = np.concatenate((hh, np.empty(hn)))
                hi = np.concatenate((hi, np.empty(hn, np.int64)))
            p = hn
            hn += 1
            while p > 0:
                q = (p - 1) // 2
                if _less(f, h, nb, hf[q], hh[q], hi[q]):
                    hf[p] = hf[q]
                    hh[p] = hh[q]
                    hi[p] = hi[q]
                    p = q
                else:
                    break
            hf[p] = f
            hh[p] = h
            hi[p] = nb
    return -1.0, empty
