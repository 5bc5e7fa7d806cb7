"""Compiled event loops for single and basic-coupled lattice dynamics.

State layout: ``eta`` holds the window plus, on segments, ``M`` frozen
reservoir sites on each side.  Per-site outgoing rates live in a binary sum
tree (leaves at ``P + i``).  Random numbers are consumed from a caller-supplied
uniform buffer so that the stream is fully determined by the caller.
"""

from __future__ import annotations

import numpy as np
from numba import njit

# Reference counting is off: none of these kernels allocate, and atomic
# incref/decref on every helper call dominated the cost of an event.

DONE = 0
NEED_RANDOMS = 1
BUDGET = 2

_U_PER_EVENT = 4


@njit(cache=True, nogil=True, _nrt=False)
def _is_inner(i, ring, M, L):
    return ring or (i >= M and i < M + L)


@njit(cache=True, nogil=True, _nrt=False)
def _target(i, z, n_ext, ring):
    j = i + z
    if ring:
        if j >= n_ext:
            j -= n_ext
        elif j < 0:
            j += n_ext
        return j
    if j < 0 or j >= n_ext:
        return -1
    return j


@njit(cache=True, nogil=True, _nrt=False)
def _channel_rate(eta, i, k, n_ext, ring, M, L, offsets, rates):
    n = eta[i]
    if n == 0:
        return 0.0
    j = _target(i, offsets[k], n_ext, ring)
    if j < 0:
        return 0.0
    if not ring and not _is_inner(i, ring, M, L) and not _is_inner(j, ring, M, L):
        return 0.0
    return rates[k, n, eta[j]]


@njit(cache=True, nogil=True, _nrt=False)
def _site_rate(eta, i, n_ext, ring, M, L, offsets, rates):
    s = 0.0
    for k in range(offsets.size):
        s += _channel_rate(eta, i, k, n_ext, ring, M, L, offsets, rates)
    return s


@njit(cache=True, nogil=True, _nrt=False)
def _coupled_site_rate(a, b, i, n_ext, ring, M, L, offsets, rates):
    s = 0.0
    for k in range(offsets.size):
        ra = _channel_rate(a, i, k, n_ext, ring, M, L, offsets, rates)
        rb = _channel_rate(b, i, k, n_ext, ring, M, L, offsets, rates)
        s += ra if ra > rb else rb
    return s


@njit(cache=True, nogil=True, _nrt=False)
def _tree_set(tree, P, i, v):
    k = P + i
    if tree[k] == v:
        return
    tree[k] = v
    k >>= 1
    while k >= 1:
        tree[k] = tree[2 * k] + tree[2 * k + 1]
        k >>= 1


@njit(cache=True, nogil=True, _nrt=False)
def _tree_pick(tree, P, u):
    """Leaf index selected with probability proportional to its weight."""
    target = u * tree[1]
    k = 1
    while k < P:
        left = tree[2 * k]
        if target < left or tree[2 * k + 1] == 0.0:
            k = 2 * k
        else:
            target -= left
            k = 2 * k + 1
    return k - P


def build_tree(n_ext):
    P = 1
    while P < n_ext:
        P *= 2
    return np.zeros(2 * P), P


@njit(cache=True, nogil=True, _nrt=False)
def init_tree(tree, P, eta, n_ext, ring, M, L, offsets, rates):
    tree[:] = 0.0
    for i in range(n_ext):
        tree[P + i] = _site_rate(eta, i, n_ext, ring, M, L, offsets, rates)
    for k in range(P - 1, 0, -1):
        tree[k] = tree[2 * k] + tree[2 * k + 1]


@njit(cache=True, nogil=True, _nrt=False)
def init_coupled_tree(tree, P, a, b, n_ext, ring, M, L, offsets, rates):
    tree[:] = 0.0
    for i in range(n_ext):
        tree[P + i] = _coupled_site_rate(a, b, i, n_ext, ring, M, L, offsets, rates)
    for k in range(P - 1, 0, -1):
        tree[k] = tree[2 * k] + tree[2 * k + 1]


@njit(cache=True, nogil=True, _nrt=False)
def _move(eta, x, y, ring, M, L):
    if _is_inner(x, ring, M, L):
        eta[x] -= 1
    if _is_inner(y, ring, M, L):
        eta[y] += 1


@njit(cache=True, nogil=True, _nrt=False)
def _count_crossing(cross, x, z, n_ext, ring):
    if z > 0:
        for s in range(z):
            b = x + s
            if ring and b >= n_ext:
                b -= n_ext
            cross[b] += 1
    else:
        for s in range(1, -z + 1):
            b = x - s
            if ring and b < 0:
                b += n_ext
            cross[b] -= 1


@njit(cache=True, nogil=True, _nrt=False)
def _refresh(tree, P, eta, x, y, n_ext, ring, M, L, offsets, rates):
    for c in range(2):
        w0 = x if c == 0 else y
        _tree_set(tree, P, w0, _site_rate(eta, w0, n_ext, ring, M, L, offsets, rates))
        for k in range(offsets.size):
            w = _target(w0, -offsets[k], n_ext, ring)
            if w >= 0:
                _tree_set(tree, P, w, _site_rate(eta, w, n_ext, ring, M, L, offsets, rates))


@njit(cache=True, nogil=True, _nrt=False)
def _refresh_coupled(tree, P, a, b, x, y, n_ext, ring, M, L, offsets, rates):
    for c in range(2):
        w0 = x if c == 0 else y
        _tree_set(tree, P, w0, _coupled_site_rate(a, b, w0, n_ext, ring, M, L, offsets, rates))
        for k in range(offsets.size):
            w = _target(w0, -offsets[k], n_ext, ring)
            if w >= 0:
                _tree_set(tree, P, w, _coupled_site_rate(a, b, w, n_ext, ring, M, L, offsets, rates))


@njit(cache=True, nogil=True, _nrt=False)
def run_single(
    eta, ring, M, L, offsets, rates, tree, P,
    t, t_end, ubuf, upos, n_events, max_events,
    cross, disp, snap_times, snap_idx, snaps,
):
    """Advance one configuration.  Returns ``(t, upos, n_events, snap_idx, status)``."""
    n_ext = eta.size
    nu = ubuf.size
    while True:
        if nu - upos < _U_PER_EVENT:
            return t, upos, n_events, snap_idx, NEED_RANDOMS
        total = tree[1]
        if total <= 0.0:
            t_next = np.inf
        else:
            t_next = t - np.log(1.0 - ubuf[upos]) / total
        upos += 1
        while snap_idx < snap_times.size and snap_times[snap_idx] < t_next and snap_times[snap_idx] <= t_end:
            for s in range(L):
                snaps[snap_idx, s] = eta[s if ring else s + M]
            snap_idx += 1
        if t_next > t_end:
            return t_end, upos, n_events, snap_idx, DONE
        if n_events >= max_events:
            return t, upos, n_events, snap_idx, BUDGET
        t = t_next
        x = _tree_pick(tree, P, ubuf[upos])
        upos += 1
        rx = tree[P + x]
        if rx <= 0.0:
            upos += 2
            continue
        target = ubuf[upos] * rx
        upos += 1
        kk = -1
        acc = 0.0
        for k in range(offsets.size):
            r = _channel_rate(eta, x, k, n_ext, ring, M, L, offsets, rates)
            if r > 0.0:
                kk = k
                acc += r
                if target < acc:
                    break
        upos += 1
        z = offsets[kk]
        y = _target(x, z, n_ext, ring)
        _move(eta, x, y, ring, M, L)
        _count_crossing(cross, x, z, n_ext, ring)
        disp[0] += z
        n_events += 1
        _refresh(tree, P, eta, x, y, n_ext, ring, M, L, offsets, rates)


@njit(cache=True, nogil=True, _nrt=False)
def run_coupled(
    a, b, ring, M, L, offsets, rates, tree, P,
    t, t_end, ubuf, upos, n_events, max_events,
    snap_times, snap_idx, snaps_a, snaps_b, moves,
):
    """Basic coupling: one clock per channel at the larger of the two rates.

    A shared uniform decides who moves, so both move at the smaller rate and
    the faster component moves alone at the rate difference.  ``moves``
    counts (both, a alone, b alone).
    """
    n_ext = a.size
    nu = ubuf.size
    while True:
        if nu - upos < _U_PER_EVENT:
            return t, upos, n_events, snap_idx, NEED_RANDOMS
        total = tree[1]
        if total <= 0.0:
            t_next = np.inf
        else:
            t_next = t - np.log(1.0 - ubuf[upos]) / total
        upos += 1
        while snap_idx < snap_times.size and snap_times[snap_idx] < t_next and snap_times[snap_idx] <= t_end:
            for s in range(L):
                snaps_a[snap_idx, s] = a[s if ring else s + M]
                snaps_b[snap_idx, s] = b[s if ring else s + M]
            snap_idx += 1
        if t_next > t_end:
            return t_end, upos, n_events, snap_idx, DONE
        if n_events >= max_events:
            return t, upos, n_events, snap_idx, BUDGET
        t = t_next
        x = _tree_pick(tree, P, ubuf[upos])
        upos += 1
        rx = tree[P + x]
        if rx <= 0.0:
            upos += 2
            continue
        target = ubuf[upos] * rx
        upos += 1
        kk = -1
        acc = 0.0
        ra = 0.0
        rb = 0.0
        for k in range(offsets.size):
            r1 = _channel_rate(a, x, k, n_ext, ring, M, L, offsets, rates)
            r2 = _channel_rate(b, x, k, n_ext, ring, M, L, offsets, rates)
            r = r1 if r1 > r2 else r2
            if r > 0.0:
                kk = k
                ra = r1
                rb = r2
                acc += r
                if target < acc:
                    break
        rmax = ra if ra > rb else rb
        thin = ubuf[upos] * rmax
        upos += 1
        z = offsets[kk]
        y = _target(x, z, n_ext, ring)
        move_a = thin < ra
        move_b = thin < rb
        if move_a:
            _move(a, x, y, ring, M, L)
        if move_b:
            _move(b, x, y, ring, M, L)
        if move_a and move_b:
            moves[0] += 1
        elif move_a:
            moves[1] += 1
        else:
            moves[2] += 1
        n_events += 1
        _refresh_coupled(tree, P, a, b, x, y, n_ext, ring, M, L, offsets, rates)
