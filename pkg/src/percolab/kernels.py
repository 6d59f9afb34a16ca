"""Compiled Monte Carlo kernels.

Everything here mirrors the pure-python reference operations but runs the
sample loops in numba.  Colours are never stored: each kernel re-derives them
from the same counter-based hash as sampling.site_color, so a kernel and the
python layer agree bit for bit on every site.  Batch kernels take an index
range [i0, i1) and derive one seed per sample index, which makes the results
independent of how the range is split across workers.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

_GOLD = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_INV53 = 2.0 ** -53
_U11 = np.uint64(11)


@njit(inline="always", cache=True)
def _fin(x):
    x = x ^ (x >> np.uint64(30))
    x = x * _MIX1
    x = x ^ (x >> np.uint64(27))
    x = x * _MIX2
    x = x ^ (x >> np.uint64(31))
    return x


@njit(inline="always", cache=True)
def _site_u01(seed, u, v):
    h = _fin(np.uint64(seed) ^ _GOLD)
    h = _fin(h ^ np.uint64(u))
    h = _fin(h ^ np.uint64(v))
    return np.float64(h >> _U11) * _INV53


@njit(inline="always", cache=True)
def _is_black(seed, p, u, v):
    return _site_u01(seed, u, v) < p


@njit(inline="always", cache=True)
def _derive(seed, index):
    return _fin(_fin(np.uint64(seed) ^ _GOLD) ^ np.uint64(index + 1))


@njit(inline="always", cache=True)
def _hexdist(u, v):
    s = u + v
    a = u if u >= 0 else -u
    b = v if v >= 0 else -v
    c = s if s >= 0 else -s
    return (a + b + c) // 2


# Neighbour steps, counterclockwise from (1, 0).
_DU = np.array([1, 0, -1, -1, 0, 1], dtype=np.int64)
_DV = np.array([0, 1, 1, 0, -1, -1], dtype=np.int64)


# ---------------------------------------------------------------------------
# Crossings of a parallelogram [0,a] x [0,b]
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _cross_lazy(seed, p, a, b, want_black, horizontal, stamp, epoch, queue):
    """BFS over same-colour sites from one closed side to the opposite one."""
    nv = b + 1
    qh = 0
    qt = 0
    if horizontal:
        for v in range(b + 1):
            idx = 0 * nv + v
            black = _is_black(seed, p, 0, v)
            if black == want_black:
                stamp[idx] = epoch
                queue[qt] = idx
                qt += 1
    else:
        for u in range(a + 1):
            idx = u * nv + 0
            black = _is_black(seed, p, u, 0)
            if black == want_black:
                stamp[idx] = epoch
                queue[qt] = idx
                qt += 1
    while qh < qt:
        idx = queue[qh]
        qh += 1
        u = idx // nv
        v = idx - u * nv
        if horizontal:
            if u == a:
                return True
        else:
            if v == b:
                return True
        for k in range(6):
            uu = u + _DU[k]
            vv = v + _DV[k]
            if uu < 0 or uu > a or vv < 0 or vv > b:
                continue
            jdx = uu * nv + vv
            if stamp[jdx] == epoch:
                continue
            stamp[jdx] = epoch
            if _is_black(seed, p, uu, vv) == want_black:
                queue[qt] = jdx
                qt += 1
    return False


@njit(cache=True, nogil=True)
def crossing_open_lr_batch(seed, p, a, b, i0, i1):
    """Number of samples in [i0, i1) with an open left-right crossing."""
    n = (a + 1) * (b + 1)
    stamp = np.zeros(n, np.int64)
    queue = np.empty(n, np.int64)
    hits = 0
    for i in range(i0, i1):
        s = _derive(seed, i)
        if _cross_lazy(s, p, a, b, True, True, stamp, i + 1, queue):
            hits += 1
    return hits


@njit(cache=True, nogil=True)
def crossing_pair_batch(seed, p, a, b, i0, i1):
    """Counts of (open LR, open TB, both) crossings on shared samples."""
    n = (a + 1) * (b + 1)
    stamp = np.zeros(n, np.int64)
    queue = np.empty(n, np.int64)
    lr = 0
    tb = 0
    both = 0
    for i in range(i0, i1):
        s = _derive(seed, i)
        h = _cross_lazy(s, p, a, b, True, True, stamp, 2 * i + 1, queue)
        v = _cross_lazy(s, p, a, b, True, False, stamp, 2 * i + 2, queue)
        if h:
            lr += 1
        if v:
            tb += 1
        if h and v:
            both += 1
    return lr, tb, both


@njit(cache=True)
def _mask_crossing(mask, a, b, want_black, horizontal, stamp, epoch, queue):
    nv = b + 1
    qh = 0
    qt = 0
    if horizontal:
        for v in range(b + 1):
            idx = v
            bit = (mask >> idx) & 1
            if (bit == 1) == want_black:
                stamp[idx] = epoch
                queue[qt] = idx
                qt += 1
    else:
        for u in range(a + 1):
            idx = u * nv
            bit = (mask >> idx) & 1
            if (bit == 1) == want_black:
                stamp[idx] = epoch
                queue[qt] = idx
                qt += 1
    while qh < qt:
        idx = queue[qh]
        qh += 1
        u = idx // nv
        v = idx - u * nv
        if horizontal:
            if u == a:
                return True
        else:
            if v == b:
                return True
        for k in range(6):
            uu = u + _DU[k]
            vv = v + _DV[k]
            if uu < 0 or uu > a or vv < 0 or vv > b:
                continue
            jdx = uu * nv + vv
            if stamp[jdx] == epoch:
                continue
            stamp[jdx] = epoch
            if (((mask >> jdx) & 1) == 1) == want_black:
                queue[qt] = jdx
                qt += 1
    return False


@njit(cache=True)
def duality_exhaustive(a, b):
    """Sweep all colourings of the parallelogram.

    Returns (number with a Black left-right crossing, number violating the
    exact alternative Black-LR xor White-TB).
    """
    nsites = (a + 1) * (b + 1)
    total = 1 << nsites
    stamp = np.zeros(nsites, np.int64)
    queue = np.empty(nsites, np.int64)
    black_lr = 0
    violations = 0
    for mask in range(total):
        blr = _mask_crossing(mask, a, b, True, True, stamp, 2 * mask + 1, queue)
        wtb = _mask_crossing(mask, a, b, False, False, stamp, 2 * mask + 2, queue)
        if blr:
            black_lr += 1
        if blr == wtb:
            violations += 1
    return black_lr, violations


# ---------------------------------------------------------------------------
# One-arm connection of the origin, lazily revealed colours
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _one_arm(seed, p, n, stamp, epoch, queue):
    w = 2 * n + 1
    if not _is_black(seed, p, 0, 0):
        return False
    if n == 0:
        return True
    qh = 0
    qt = 0
    c = n * w + n
    stamp[c] = epoch
    queue[qt] = c
    qt += 1
    while qh < qt:
        idx = queue[qh]
        qh += 1
        u = idx // w - n
        v = idx - (u + n) * w - n
        if _hexdist(u, v) == n:
            return True
        for k in range(6):
            uu = u + _DU[k]
            vv = v + _DV[k]
            if _hexdist(uu, vv) > n:
                continue
            jdx = (uu + n) * w + (vv + n)
            if stamp[jdx] == epoch:
                continue
            stamp[jdx] = epoch
            if _is_black(seed, p, uu, vv):
                queue[qt] = jdx
                qt += 1
    return False


@njit(cache=True, nogil=True)
def one_arm_batch(seed, p, n, i0, i1):
    w = 2 * n + 1
    stamp = np.zeros(w * w, np.int64)
    queue = np.empty(w * w, np.int64)
    hits = 0
    for i in range(i0, i1):
        s = _derive(seed, i)
        if _one_arm(s, p, n, stamp, i + 1, queue):
            hits += 1
    return hits


@njit(cache=True, nogil=True)
def annulus_arm_batch(seed, p, r1, r2, i0, i1):
    """Samples with an open path from the ring at distance r1+1 to the ring
    at distance r2, inside the annulus between them."""
    w = 2 * r2 + 1
    stamp = np.zeros(w * w, np.int64)
    queue = np.empty(w * w, np.int64)
    inner = r1 + 1
    hits = 0
    for i in range(i0, i1):
        s = _derive(seed, i)
        epoch = i + 1
        qh = 0
        qt = 0
        for k in range(6):
            du0 = _DU[k]
            dv0 = _DV[k]
            eu = _DU[(k + 2) % 6]
            ev = _DV[(k + 2) % 6]
            for step in range(inner):
                u = du0 * inner + step * eu
                v = dv0 * inner + step * ev
                idx = (u + r2) * w + (v + r2)
                if stamp[idx] != epoch and _is_black(s, p, u, v):
                    stamp[idx] = epoch
                    queue[qt] = idx
                    qt += 1
        found = False
        while qh < qt and not found:
            idx = queue[qh]
            qh += 1
            u = idx // w - r2
            v = idx - (u + r2) * w - r2
            if _hexdist(u, v) == r2:
                found = True
                break
            for k in range(6):
                uu = u + _DU[k]
                vv = v + _DV[k]
                d = _hexdist(uu, vv)
                if d < inner or d > r2:
                    continue
                jdx = (uu + r2) * w + (vv + r2)
                if stamp[jdx] == epoch:
                    continue
                stamp[jdx] = epoch
                if _is_black(s, p, uu, vv):
                    queue[qt] = jdx
                    qt += 1
        if found:
            hits += 1
    return hits


# ---------------------------------------------------------------------------
# Interface curves from the origin's cell to the ring at distance n.
#
# The trace walks dual (Black, White) cell pairs; the two faces of a pair are
# the common neighbours of the two sites.  Rotations by +-60 degrees in axial
# coordinates: ccw (u,v) -> (-v, u+v), cw (u,v) -> (u+v, -u).
# ---------------------------------------------------------------------------


@njit(inline="always", cache=True)
def _color_at(seed, p, cx, cv, u, v):
    return _site_u01(seed, u + cx, v + cv) < p


@njit(cache=True, nogil=True)
def _interfaces_from_center(seed, p, cx, cv, n, need):
    """Count interface curves from the centre cell to relative distance n.

    The centre site's own colour is never read.  Early exit once `need`
    curves have reached the ring.
    """
    count = 0
    consumed = 0  # bitmask over the six start slots
    for k in range(6):
        if (consumed >> k) & 1:
            continue
        au = _DU[k]
        av = _DV[k]
        bu = _DU[(k + 1) % 6]
        bv = _DV[(k + 1) % 6]
        ca = _color_at(seed, p, cx, cv, au, av)
        cb = _color_at(seed, p, cx, cv, bu, bv)
        if ca == cb:
            continue
        # Orient the pair as (left=White, right=Black) for an outward march.
        # Outward direction: from the face {centre, a, b} to the other face.
        # Site a sits counterclockwise of b around the centre, so moving
        # outward, a is on the left iff ... fixed by the turn algebra below;
        # we only need consistency, so put the Black site on the right going
        # out: the left/right roles follow from which of a, b is Black.
        if ca:
            lu, lv = bu, bv
            ru, rv = au, av
        else:
            lu, lv = au, av
            ru, rv = bu, bv
        pu, pv = 0, 0  # previous third site: the centre
        steps = 0
        limit = 40 * (n + 2) * (n + 2)
        while True:
            steps += 1
            if steps > limit:
                return -1
            # third sites of the pair (l, r): common neighbours
            su = ru - lu
            sv = rv - lv
            t1u = lu - sv
            t1v = lv + su + sv
            t2u = lu + su + sv
            t2v = lv - su
            if t1u == pu and t1v == pv:
                fu, fv = t2u, t2v
            else:
                fu, fv = t1u, t1v
            if _hexdist(fu, fv) > n:
                count += 1
                break
            if fu == 0 and fv == 0:
                # returned to the centre cell; retire the start slot it used
                for j in range(6):
                    ju, jv = _DU[j], _DV[j]
                    ku, kv = _DU[(j + 1) % 6], _DV[(j + 1) % 6]
                    if (ju == lu and jv == lv and ku == ru and kv == rv) or \
                       (ju == ru and jv == rv and ku == lu and kv == lv):
                        consumed |= 1 << j
                break
            if _color_at(seed, p, cx, cv, fu, fv):
                pu, pv = ru, rv
                ru, rv = fu, fv
            else:
                pu, pv = lu, lv
                lu, lv = fu, fv
        if count >= need:
            return count
    return count


@njit(cache=True, nogil=True)
def origin_interfaces_batch(seed, p, n, need, i0, i1):
    """Samples whose origin cell sends at least `need` interfaces to distance n."""
    hits = 0
    for i in range(i0, i1):
        s = _derive(seed, i)
        c = _interfaces_from_center(s, p, 0, 0, n, need)
        if c >= need:
            hits += 1
    return hits


# ---------------------------------------------------------------------------
# Triangle events: separating crossings next to a corner
# ---------------------------------------------------------------------------


@njit(inline="always", cache=True)
def _uf_find(parent, i):
    root = i
    while parent[root] != root:
        root = parent[root]
    while parent[i] != root:
        nxt = parent[i]
        parent[i] = root
        i = nxt
    return root


@njit(cache=True, nogil=True)
def _cardy_event(seed, p, n, jcode, fu, fv, fparity, parent, t1, t2, fseen, queue):
    """Does an open crossing between the two sides at corner j wall off the face?

    jcode 0: corner a=(0,0), sides ab & ca, opposite side bc (u+v=n).
    jcode 1: corner b=(n,0), sides ab & bc, opposite side ca (u=0).
    jcode 2: corner c=(0,n), sides bc & ca, opposite side ab (v=0).
    Sides are closed (corners belong to both adjacent sides).
    """
    nv = n + 1
    nsites = nv * nv
    for i in range(nsites):
        parent[i] = i
        t1[i] = False
        t2[i] = False
    # union open neighbours (three directions cover each edge once)
    for u in range(n + 1):
        for v in range(n + 1 - u):
            if not _is_black(seed, p, u, v):
                continue
            i = u * nv + v
            # (1,0)
            if u + 1 + v <= n and _is_black(seed, p, u + 1, v):
                a = _uf_find(parent, i)
                b = _uf_find(parent, (u + 1) * nv + v)
                if a != b:
                    parent[a] = b
            # (0,1)
            if u + v + 1 <= n and _is_black(seed, p, u, v + 1):
                a = _uf_find(parent, i)
                b = _uf_find(parent, u * nv + v + 1)
                if a != b:
                    parent[a] = b
            # (1,-1)
            if v - 1 >= 0 and u + v <= n and _is_black(seed, p, u + 1, v - 1):
                a = _uf_find(parent, i)
                b = _uf_find(parent, (u + 1) * nv + v - 1)
                if a != b:
                    parent[a] = b
    # side-touch flags on roots
    for u in range(n + 1):
        for v in range(n + 1 - u):
            if not _is_black(seed, p, u, v):
                continue
            on_ab = v == 0
            on_bc = u + v == n
            on_ca = u == 0
            if jcode == 0:
                f1 = on_ab
                f2 = on_ca
            elif jcode == 1:
                f1 = on_ab
                f2 = on_bc
            else:
                f1 = on_bc
                f2 = on_ca
            if f1 or f2:
                r = _uf_find(parent, u * nv + v)
                if f1:
                    t1[r] = True
                if f2:
                    t2[r] = True
    # face BFS from (fu, fv, fparity); face slot = 2*(u*nv+v)+parity
    for i in range(2 * nsites):
        fseen[i] = False

    qh = 0
    qt = 0
    start = 2 * (fu * nv + fv) + fparity
    fseen[start] = True
    queue[qt] = start
    qt += 1
    while qh < qt:
        slot = queue[qh]
        qh += 1
        parity = slot & 1
        cell = slot >> 1
        u = cell // nv
        v = cell - u * nv
        if parity == 0:
            # exit through the boundary edge on the opposite side?
            if jcode == 0 and u + v == n - 1:
                if not (_in_s(seed, p, parent, t1, t2, u + 1, v, nv, n) and
                        _in_s(seed, p, parent, t1, t2, u, v + 1, nv, n)):
                    return False
            if jcode == 1 and u == 0:
                if not (_in_s(seed, p, parent, t1, t2, 0, v, nv, n) and
                        _in_s(seed, p, parent, t1, t2, 0, v + 1, nv, n)):
                    return False
            if jcode == 2 and v == 0:
                if not (_in_s(seed, p, parent, t1, t2, u, 0, nv, n) and
                        _in_s(seed, p, parent, t1, t2, u + 1, 0, nv, n)):
                    return False
            # up(u,v) ~ down(u,v): shared (u+1,v), (u,v+1)
            if u + v <= n - 2:
                nslot = 2 * (u * nv + v) + 1
                if not fseen[nslot]:
                    if not (_in_s(seed, p, parent, t1, t2, u + 1, v, nv, n) and
                            _in_s(seed, p, parent, t1, t2, u, v + 1, nv, n)):
                        fseen[nslot] = True
                        queue[qt] = nslot
                        qt += 1
            # up(u,v) ~ down(u,v-1): shared (u,v), (u+1,v)
            if v - 1 >= 0:
                nslot = 2 * (u * nv + v - 1) + 1
                if not fseen[nslot]:
                    if not (_in_s(seed, p, parent, t1, t2, u, v, nv, n) and
                            _in_s(seed, p, parent, t1, t2, u + 1, v, nv, n)):
                        fseen[nslot] = True
                        queue[qt] = nslot
                        qt += 1
            # up(u,v) ~ down(u-1,v): shared (u,v), (u,v+1)
            if u - 1 >= 0:
                nslot = 2 * ((u - 1) * nv + v) + 1
                if not fseen[nslot]:
                    if not (_in_s(seed, p, parent, t1, t2, u, v, nv, n) and
                            _in_s(seed, p, parent, t1, t2, u, v + 1, nv, n)):
                        fseen[nslot] = True
                        queue[qt] = nslot
                        qt += 1
        else:
            # down(u,v) neighbours: up(u,v), up(u+1,v), up(u,v+1)
            nslot = 2 * (u * nv + v)
            if not fseen[nslot]:
                if not (_in_s(seed, p, parent, t1, t2, u + 1, v, nv, n) and
                        _in_s(seed, p, parent, t1, t2, u, v + 1, nv, n)):
                    fseen[nslot] = True
                    queue[qt] = nslot
                    qt += 1
            if u + 1 + v <= n - 1:
                nslot = 2 * ((u + 1) * nv + v)
                if not fseen[nslot]:
                    if not (_in_s(seed, p, parent, t1, t2, u + 1, v, nv, n) and
                            _in_s(seed, p, parent, t1, t2, u + 1, v + 1, nv, n)):
                        fseen[nslot] = True
                        queue[qt] = nslot
                        qt += 1
            if u + v + 1 <= n - 1:
                nslot = 2 * (u * nv + v + 1)
                if not fseen[nslot]:
                    if not (_in_s(seed, p, parent, t1, t2, u, v + 1, nv, n) and
                            _in_s(seed, p, parent, t1, t2, u + 1, v + 1, nv, n)):
                        fseen[nslot] = True
                        queue[qt] = nslot
                        qt += 1
    return True


@njit(inline="always", cache=True)
def _in_s(seed, p, parent, t1, t2, u, v, nv, n):
    """Is (u, v) an open site whose cluster touches both corner sides?"""
    if not _is_black(seed, p, u, v):
        return False
    r = _uf_find(parent, u * nv + v)
    return t1[r] and t2[r]


@njit(cache=True, nogil=True)
def cardy_event_batch(seed, p, n, jcode, fu, fv, fparity, i0, i1):
    nv = n + 1
    nsites = nv * nv
    parent = np.empty(nsites, np.int64)
    t1 = np.zeros(nsites, np.bool_)
    t2 = np.zeros(nsites, np.bool_)
    fseen = np.zeros(2 * nsites, np.bool_)
    queue = np.empty(2 * nsites, np.int64)
    hits = 0
    for i in range(i0, i1):
        s = _derive(seed, i)
        if _cardy_event(s, p, n, jcode, fu, fv, fparity, parent, t1, t2, fseen, queue):
            hits += 1
    return hits


@njit(cache=True, nogil=True)
def cardy_event_single(seed, p, n, jcode, fu, fv, fparity):
    nv = n + 1
    nsites = nv * nv
    parent = np.empty(nsites, np.int64)
    t1 = np.zeros(nsites, np.bool_)
    t2 = np.zeros(nsites, np.bool_)
    fseen = np.zeros(2 * nsites, np.bool_)
    queue = np.empty(2 * nsites, np.int64)
    return _cardy_event(seed, p, n, jcode, fu, fv, fparity, parent, t1, t2, fseen, queue)


# ---------------------------------------------------------------------------
# Half-plane events along the base of an upper half-plane sample
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _reaches_arch(seed, p, x, n, want_black, start_off, stamp, epoch, queue):
    """Same-colour path from (x+start_off, 0) to the arch of x + H_n."""
    if (_site_u01(seed, x + start_off, 0) < p) != want_black:
        return False
    w = 2 * n + 1
    nv = n + 1
    qh = 0
    qt = 0
    idx0 = (start_off + n) * nv + 0
    stamp[idx0] = epoch
    queue[qt] = idx0
    qt += 1
    while qh < qt:
        idx = queue[qh]
        qh += 1
        du = idx // nv - n
        dv = idx - (du + n) * nv
        if _hexdist(du, dv) == n and dv >= 1:
            return True
        for k in range(6):
            uu = du + _DU[k]
            vv = dv + _DV[k]
            if vv < 0 or _hexdist(uu, vv) > n:
                continue
            jdx = (uu + n) * nv + vv
            if stamp[jdx] == epoch:
                continue
            stamp[jdx] = epoch
            if (_site_u01(seed, x + uu, vv) < p) == want_black:
                queue[qt] = jdx
                qt += 1
    return False


@njit(cache=True, nogil=True)
def halfplane_two_arm_batch(seed, p, n, xmax, i0, i1, out):
    """Per-sample fraction of base points x in [-xmax, xmax] that are n-good.

    n-good: an open path from x and a closed path from x+1, both to the arch
    of x + H_n inside that half-hexagon.
    """
    w = 2 * n + 1
    stamp = np.zeros(w * (n + 1), np.int64)
    queue = np.empty(w * (n + 1), np.int64)
    npos = 2 * xmax + 1
    for i in range(i0, i1):
        s = _derive(seed, i)
        good = 0
        for j in range(npos):
            x = j - xmax
            if _reaches_arch(s, p, x, n, True, 0, stamp, 2 * (i * npos + j) + 1, queue) and \
               _reaches_arch(s, p, x, n, False, 1, stamp, 2 * (i * npos + j) + 2, queue):
                good += 1
        out[i] = good / npos


@njit(cache=True, nogil=True)
def halfplane_three_arm_batch(seed, p, n, xmax, i0, i1, out):
    """Per-sample fraction of base points that are the unique lowest exit point.

    The event at x: x is open, its open cluster in the half-plane slab of
    radius 3n leaves x + H_n, and no other cluster site inside x + H_n sits on
    the base line.
    """
    big = 3 * n
    w = 2 * big + 1
    stamp = np.zeros(w * (big + 1), np.int64)
    queue = np.empty(w * (big + 1), np.int64)
    npos = 2 * xmax + 1
    for i in range(i0, i1):
        s = _derive(seed, i)
        good = 0
        for j in range(npos):
            x = j - xmax
            if not _is_black(s, p, x, 0):
                continue
            epoch = i * npos + j + 1
            qh = 0
            qt = 0
            idx0 = (0 + big) * (big + 1) + 0
            stamp[idx0] = epoch
            queue[qt] = idx0
            qt += 1
            exits = False
            second_base = False
            while qh < qt:
                idx = queue[qh]
                qh += 1
                du = idx // (big + 1) - big
                dv = idx - (du + big) * (big + 1)
                if _hexdist(du, dv) > n:
                    exits = True
                if dv == 0 and du != 0 and _hexdist(du, dv) <= n:
                    second_base = True
                    break
                for k in range(6):
                    uu = du + _DU[k]
                    vv = dv + _DV[k]
                    if vv < 0 or _hexdist(uu, vv) > big:
                        continue
                    jdx = (uu + big) * (big + 1) + vv
                    if stamp[jdx] == epoch:
                        continue
                    stamp[jdx] = epoch
                    if _is_black(s, p, x + uu, vv):
                        queue[qt] = jdx
                        qt += 1
            if exits and not second_base:
                good += 1
        out[i] = good / npos


# ---------------------------------------------------------------------------
# Vertex-disjoint path count (Menger) via unit-capacity augmentation
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _vertex_menger(nbrs, allowed, is_source, is_sink, cap,
                   used_cap, flow_next, flow_prev, parent, visited, queue):
    """Max number (capped) of vertex-disjoint paths from sources to sinks.

    Nodes are split: node 2i is the entry half of site i, node 2i+1 the exit
    half.  Standard unit-capacity augmentation with reverse arcs, so paths
    may be rerouted as more are added.
    """
    nsites = nbrs.shape[0]
    for i in range(nsites):
        used_cap[i] = 0
        flow_next[i] = -1
        flow_prev[i] = -1
    flow = 0
    while flow < cap:
        for i in range(2 * nsites):
            visited[i] = False
        qh = 0
        qt = 0
        for i in range(nsites):
            if is_source[i] and allowed[i] and not visited[2 * i]:
                visited[2 * i] = True
                parent[2 * i] = -1
                queue[qt] = 2 * i
                qt += 1
        found = -1
        while qh < qt and found < 0:
            node = queue[qh]
            qh += 1
            site = node >> 1
            if node & 1:
                # exit half: forward arcs to neighbours, reverse cap arc
                if is_sink[site]:
                    found = node
                    break
                for k in range(nbrs.shape[1]):
                    j = nbrs[site, k]
                    if j < 0 or not allowed[j]:
                        continue
                    if flow_next[site] == j:
                        continue
                    if not visited[2 * j]:
                        visited[2 * j] = True
                        parent[2 * j] = node
                        queue[qt] = 2 * j
                        qt += 1
                if used_cap[site] == 1 and not visited[2 * site]:
                    visited[2 * site] = True
                    parent[2 * site] = node
                    queue[qt] = 2 * site
                    qt += 1
            else:
                # entry half: capacity arc, plus cancelling an inbound unit
                if used_cap[site] == 0 and not visited[2 * site + 1]:
                    visited[2 * site + 1] = True
                    parent[2 * site + 1] = node
                    queue[qt] = 2 * site + 1
                    qt += 1
                pv = flow_prev[site]
                if pv >= 0 and not visited[2 * pv + 1]:
                    visited[2 * pv + 1] = True
                    parent[2 * pv + 1] = node
                    queue[qt] = 2 * pv + 1
                    qt += 1
        if found < 0:
            break
        # augment along the parent chain
        node = found
        while parent[node] >= 0:
            prev = parent[node]
            ps = prev >> 1
            ns = node >> 1
            if ps == ns:
                if (prev & 1) == 0:
                    used_cap[ps] = 1
                else:
                    used_cap[ps] = 0
            else:
                if (prev & 1) == 1 and (node & 1) == 0:
                    flow_next[ps] = ns
                    flow_prev[ns] = ps
                else:
                    # arc (entry of ps) -> (exit of ns) cancels the unit ns -> ps
                    flow_next[ns] = -1
                    flow_prev[ps] = -1
            node = prev
        flow += 1
    return flow


@njit(cache=True, nogil=True)
def _build_par_nbrs(a, b):
    nv = b + 1
    n = (a + 1) * nv
    nbrs = np.full((n, 6), -1, np.int64)
    for u in range(a + 1):
        for v in range(b + 1):
            i = u * nv + v
            for k in range(6):
                uu = u + _DU[k]
                vv = v + _DV[k]
                if 0 <= uu <= a and 0 <= vv <= b:
                    nbrs[i, k] = uu * nv + vv
    return nbrs


@njit(cache=True, nogil=True)
def menger_lr_batch(seed, p, a, b, want_black, cap, i0, i1, out):
    """Per-sample count (capped) of disjoint same-colour left-right crossings."""
    nv = b + 1
    nsites = (a + 1) * nv
    nbrs = _build_par_nbrs(a, b)
    allowed = np.zeros(nsites, np.bool_)
    is_source = np.zeros(nsites, np.bool_)
    is_sink = np.zeros(nsites, np.bool_)
    for v in range(b + 1):
        is_source[0 * nv + v] = True
        is_sink[a * nv + v] = True
    used_cap = np.zeros(nsites, np.int8)
    flow_next = np.empty(nsites, np.int64)
    flow_prev = np.empty(nsites, np.int64)
    parent = np.empty(2 * nsites, np.int64)
    visited = np.zeros(2 * nsites, np.bool_)
    queue = np.empty(2 * nsites, np.int64)
    for i in range(i0, i1):
        s = _derive(seed, i)
        for u in range(a + 1):
            for v in range(b + 1):
                allowed[u * nv + v] = _is_black(s, p, u, v) == want_black
        out[i] = _vertex_menger(nbrs, allowed, is_source, is_sink, cap,
                                used_cap, flow_next, flow_prev, parent, visited, queue)


# ---------------------------------------------------------------------------
# Five-arm points: closed sites joining two distinct crossing open clusters
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def five_arm_batch(seed, p, m, i0, i1, out):
    """Per-sample fraction of centres x in the ball of radius m//2 where the
    five-arm pattern (closed centre, two open and three closed disjoint arms
    to x + the distance-m ring, colours interleaved) occurs.

    Detected as: x closed, at least four interface curves from x's cell to
    the ring, at least two distinct open clusters of the ball x + ball(m)
    adjacent to x reaching the ring, and at least three vertex-disjoint
    closed paths from x's closed neighbours to the ring (paths avoid x).
    """
    big = 2 * m
    w = 2 * big + 1
    nsites = w * w
    colors = np.zeros(nsites, np.bool_)
    inball = np.zeros(nsites, np.bool_)
    for u in range(-big, big + 1):
        for v in range(-big, big + 1):
            if _hexdist(u, v) <= big:
                idx = (u + big) * w + (v + big)
                inball[idx] = True

    parent = np.empty(nsites, np.int64)
    reach = np.zeros(nsites, np.bool_)
    nbrs = np.full((nsites, 6), -1, np.int64)
    for u in range(-big, big + 1):
        for v in range(-big, big + 1):
            i = (u + big) * w + (v + big)
            for k in range(6):
                uu = u + _DU[k]
                vv = v + _DV[k]
                if -big <= uu <= big and -big <= vv <= big:
                    nbrs[i, k] = (uu + big) * w + (vv + big)
    allowed = np.zeros(nsites, np.bool_)
    is_source = np.zeros(nsites, np.bool_)
    is_sink = np.zeros(nsites, np.bool_)
    used_cap = np.zeros(nsites, np.int8)
    flow_next = np.empty(nsites, np.int64)
    flow_prev = np.empty(nsites, np.int64)
    fparent = np.empty(2 * nsites, np.int64)
    fvisited = np.zeros(2 * nsites, np.bool_)
    fqueue = np.empty(2 * nsites, np.int64)

    half = m // 2
    npos = 0
    for u in range(-half, half + 1):
        for v in range(-half, half + 1):
            if _hexdist(u, v) <= half:
                npos += 1

    for i in range(i0, i1):
        s = _derive(seed, i)
        for u in range(-big, big + 1):
            for v in range(-big, big + 1):
                idx = (u + big) * w + (v + big)
                if inball[idx]:
                    colors[idx] = _is_black(s, p, u, v)
        hits = 0
        for cu in range(-half, half + 1):
            for cv in range(-half, half + 1):
                if _hexdist(cu, cv) > half:
                    continue
                cidx = (cu + big) * w + (cv + big)
                if colors[cidx]:
                    continue  # centre must be closed
                nif = _interfaces_from_center(s, p, cu, cv, m, 4)
                if nif < 4:
                    continue
                if _five_arm_exact(colors, cu, cv, m, big, w, parent, reach,
                                   nbrs, allowed, is_source, is_sink, used_cap,
                                   flow_next, flow_prev, fparent, fvisited, fqueue):
                    hits += 1
        out[i] = hits / npos


@njit(cache=True, nogil=True)
def _five_arm_exact(colors, cu, cv, m, big, w, parent, reach, nbrs, allowed,
                    is_source, is_sink, used_cap, flow_next, flow_prev,
                    fparent, fvisited, fqueue):
    cidx = (cu + big) * w + (cv + big)
    # union-find over open sites of the ball x + ball(m)
    for du in range(-m, m + 1):
        for dv in range(-m, m + 1):
            if _hexdist(du, dv) > m:
                continue
            idx = (cu + du + big) * w + (cv + dv + big)
            parent[idx] = idx
            reach[idx] = False
    for du in range(-m, m + 1):
        for dv in range(-m, m + 1):
            if _hexdist(du, dv) > m:
                continue
            idx = (cu + du + big) * w + (cv + dv + big)
            if not colors[idx] or idx == cidx:
                continue
            for k in range(3):  # (1,0), (0,1), (-1,1) cover each edge once
                uu = du + _DU[k]
                vv = dv + _DV[k]
                if _hexdist(uu, vv) > m:
                    continue
                jdx = (cu + uu + big) * w + (cv + vv + big)
                if jdx == cidx or not colors[jdx]:
                    continue
                ra = _uf_find(parent, idx)
                rb = _uf_find(parent, jdx)
                if ra != rb:
                    parent[ra] = rb
    for du in range(-m, m + 1):
        for dv in range(-m, m + 1):
            if _hexdist(du, dv) != m:
                continue
            idx = (cu + du + big) * w + (cv + dv + big)
            if colors[idx]:
                reach[_uf_find(parent, idx)] = True
    # two distinct open clusters adjacent to the centre, both reaching
    r1 = np.int64(-1)
    distinct = False
    for k in range(6):
        uu = cu + _DU[k]
        vv = cv + _DV[k]
        idx = (uu + big) * w + (vv + big)
        if not colors[idx]:
            continue
        r = _uf_find(parent, idx)
        if not reach[r]:
            continue
        if r1 < 0:
            r1 = r
        elif r != r1:
            distinct = True
            break
    if not distinct:
        return False
    # three disjoint closed paths from the centre's closed neighbours
    for du in range(-m, m + 1):
        for dv in range(-m, m + 1):
            if _hexdist(du, dv) > m:
                continue
            idx = (cu + du + big) * w + (cv + dv + big)
            allowed[idx] = (not colors[idx]) and idx != cidx
            is_source[idx] = False
            is_sink[idx] = _hexdist(du, dv) == m
    for k in range(6):
        uu = cu + _DU[k]
        vv = cv + _DV[k]
        is_source[(uu + big) * w + (vv + big)] = True
    flow = _vertex_menger(nbrs, allowed, is_source, is_sink, 3,
                          used_cap, flow_next, flow_prev, fparent, fvisited, fqueue)
    # reset the masks we touched (allowed/is_source/is_sink are reused)
    for k in range(6):
        uu = cu + _DU[k]
        vv = cv + _DV[k]
        is_source[(uu + big) * w + (vv + big)] = False
    for du in range(-m, m + 1):
        for dv in range(-m, m + 1):
            if _hexdist(du, dv) > m:
                continue
            idx = (cu + du + big) * w + (cv + dv + big)
            allowed[idx] = False
            is_sink[idx] = False
    return flow >= 3


# ---------------------------------------------------------------------------
# Pivotal sites for the left-right crossing (Russo derivative)
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def _reach_side(colors, a, b, want_black, side, reach, queue):
    """Same-colour reach set from one closed side.

    side: 0 left (u=0), 1 right (u=a), 2 bottom (v=0), 3 top (v=b).
    """
    nv = b + 1
    n = (a + 1) * nv
    for i in range(n):
        reach[i] = False
    qh = 0
    qt = 0
    if side == 0 or side == 1:
        u = 0 if side == 0 else a
        for v in range(b + 1):
            i = u * nv + v
            if colors[i] == want_black:
                reach[i] = True
                queue[qt] = i
                qt += 1
    else:
        v = 0 if side == 2 else b
        for u in range(a + 1):
            i = u * nv + v
            if colors[i] == want_black:
                reach[i] = True
                queue[qt] = i
                qt += 1
    while qh < qt:
        i = queue[qh]
        qh += 1
        u = i // nv
        v = i - u * nv
        for k in range(6):
            uu = u + _DU[k]
            vv = v + _DV[k]
            if uu < 0 or uu > a or vv < 0 or vv > b:
                continue
            j = uu * nv + vv
            if reach[j] or colors[j] != want_black:
                continue
            reach[j] = True
            queue[qt] = j
            qt += 1


@njit(cache=True, nogil=True)
def pivotal_count_batch(seed, p, a, b, i0, i1, out):
    """Per-sample number of sites whose flip changes the open LR crossing."""
    nv = b + 1
    n = (a + 1) * nv
    colors = np.zeros(n, np.bool_)
    rl = np.zeros(n, np.bool_)
    rr = np.zeros(n, np.bool_)
    rt = np.zeros(n, np.bool_)
    rb = np.zeros(n, np.bool_)
    queue = np.empty(n, np.int64)
    for i in range(i0, i1):
        s = _derive(seed, i)
        for u in range(a + 1):
            for v in range(b + 1):
                colors[u * nv + v] = _is_black(s, p, u, v)
        _reach_side(colors, a, b, True, 0, rl, queue)
        _reach_side(colors, a, b, True, 1, rr, queue)
        crossing = False
        for k in range(n):
            if rl[k] and rr[k]:
                crossing = True
                break
        count = 0
        if crossing:
            # flipping open site s kills the crossing iff a closed top-bottom
            # crossing would run through s (exact planar alternative)
            _reach_side(colors, a, b, False, 3, rt, queue)
            _reach_side(colors, a, b, False, 2, rb, queue)
            for u in range(a + 1):
                for v in range(b + 1):
                    idx = u * nv + v
                    if not colors[idx]:
                        continue
                    top_ok = v == b
                    bot_ok = v == 0
                    for k in range(6):
                        uu = u + _DU[k]
                        vv = v + _DV[k]
                        if uu < 0 or uu > a or vv < 0 or vv > b:
                            continue
                        j = uu * nv + vv
                        if rt[j]:
                            top_ok = True
                        if rb[j]:
                            bot_ok = True
                    if top_ok and bot_ok:
                        count += 1
        else:
            for u in range(a + 1):
                for v in range(b + 1):
                    idx = u * nv + v
                    if colors[idx]:
                        continue
                    left_ok = u == 0
                    right_ok = u == a
                    for k in range(6):
                        uu = u + _DU[k]
                        vv = v + _DV[k]
                        if uu < 0 or uu > a or vv < 0 or vv > b:
                            continue
                        j = uu * nv + vv
                        if rl[j]:
                            left_ok = True
                        if rr[j]:
                            right_ok = True
                    if left_ok and right_ok:
                        count += 1
        out[i] = count


# ---------------------------------------------------------------------------
# Density of sites connected far away (near-critical theta proxy)
# ---------------------------------------------------------------------------


@njit(cache=True, nogil=True)
def theta_fraction_batch(seed, p, nsmall, nbig, i0, i1, out):
    """Fraction of the radius-nsmall ball connected to the distance-nbig ring."""
    w = 2 * nbig + 1
    stamp = np.zeros(w * w, np.int64)
    queue = np.empty(w * w, np.int64)
    count_small = 0
    for u in range(-nsmall, nsmall + 1):
        for v in range(-nsmall, nsmall + 1):
            if _hexdist(u, v) <= nsmall:
                count_small += 1
    for i in range(i0, i1):
        s = _derive(seed, i)
        epoch = i + 1
        qh = 0
        qt = 0
        for k in range(6):
            du = _DU[k]
            dv = _DV[k]
            cu = du * nbig
            cvv = dv * nbig
            eu = _DU[(k + 2) % 6]
            ev = _DV[(k + 2) % 6]
            for step in range(nbig):
                uu = cu + step * eu
                vv = cvv + step * ev
                idx = (uu + nbig) * w + (vv + nbig)
                if stamp[idx] != epoch and _is_black(s, p, uu, vv):
                    stamp[idx] = epoch
                    queue[qt] = idx
                    qt += 1
        reached = 0
        while qh < qt:
            idx = queue[qh]
            qh += 1
            u = idx // w - nbig
            v = idx - (u + nbig) * w - nbig
            if _hexdist(u, v) <= nsmall:
                reached += 1
            for k in range(6):
                uu = u + _DU[k]
                vv = v + _DV[k]
                if _hexdist(uu, vv) > nbig:
                    continue
                jdx = (uu + nbig) * w + (vv + nbig)
                if stamp[jdx] == epoch:
                    continue
                stamp[jdx] = epoch
                if _is_black(s, p, uu, vv):
                    queue[qt] = jdx
                    qt += 1
        out[i] = reached / count_small


# ---------------------------------------------------------------------------
# The boundary-repelled diffusion dY = sqrt(6) dB + cot(Y/2) dt
# ---------------------------------------------------------------------------


@njit(inline="always", cache=True)
def _gauss(seed, i, j):
    u1 = _site_u01(seed, i, 2 * j)
    u2 = _site_u01(seed, i, 2 * j + 1)
    if u1 < 1e-300:
        u1 = 1e-300
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(2.0 * math.pi * u2)


@njit(cache=True, nogil=True)
def diffusion_functional_batch(seed, x0, b, q, t, dt, i0, i1, out):
    """Per-sample value of exp(-(b/2) int ds / sin^2(Y/2)) * sin(Y_t/2)^q,
    zero if the path is absorbed at 0 or 2 pi before time t."""
    two_pi = 2.0 * math.pi
    for i in range(i0, i1):
        s = _derive(seed, i)
        y = x0
        time = 0.0
        acc = 0.0
        alive = True
        step = 0
        while time < t:
            d0 = y
            d1 = two_pi - y
            scale = 1.0
            if d0 * d0 < scale:
                scale = d0 * d0
            if d1 * d1 < scale:
                scale = d1 * d1
            # the floor only guards against a zero step; anything coarse
            # enough to matter next to d^2 leaks undetected boundary
            # crossings and biases survival upward
            if scale < 1e-8:
                scale = 1e-8
            h = dt * scale
            if time + h > t:
                h = t - time
            sh = math.sin(0.5 * y)
            ch = math.cos(0.5 * y)
            if b != 0.0:
                acc += h / (sh * sh)
            y = y + (ch / sh) * h + math.sqrt(6.0 * h) * _gauss(s, step, 0)
            step += 1
            time += h
            if y <= 0.0 or y >= two_pi:
                alive = False
                break
        if alive:
            val = math.sin(0.5 * y) ** q
            if b != 0.0:
                val *= math.exp(-0.5 * b * acc)
            out[i] = val
        else:
            out[i] = 0.0


@njit(cache=True, nogil=True)
def diffusion_survival_batch(seed, dt, tmax, i0, i1, out):
    """Death time of the reflected-at-0, absorbed-at-2pi diffusion from 0.

    Returns tmax + 1 for paths still alive at tmax.  Near 0 the update runs on
    Z = Y^2, whose drift stays bounded, which avoids the step-size collapse a
    naive Euler scheme suffers at the reflecting end.
    """
    two_pi = 2.0 * math.pi
    ycut = 0.3
    for i in range(i0, i1):
        s = _derive(seed, i)
        y = 0.0
        time = 0.0
        step = 0
        death = tmax + 1.0
        while time < tmax:
            if y < ycut:
                h = dt
                z = y * y
                if z < 1e-12:
                    drift = 10.0
                else:
                    sy = math.sqrt(z)
                    drift = 2.0 * sy * (math.cos(0.5 * sy) / math.sin(0.5 * sy)) + 6.0
                z = z + drift * h + 2.0 * math.sqrt(6.0 * z * h) * _gauss(s, step, 0)
                if z < 0.0:
                    z = -z
                y = math.sqrt(z)
            else:
                d1 = two_pi - y
                scale = 1.0
                if d1 * d1 < scale:
                    scale = d1 * d1
                if scale < 1e-8:
                    scale = 1e-8
                h = dt * scale
                sh = math.sin(0.5 * y)
                ch = math.cos(0.5 * y)
                y = y + (ch / sh) * h + math.sqrt(6.0 * h) * _gauss(s, step, 0)
                if y < 0.0:
                    y = -y
            step += 1
            time += h
            if y >= two_pi:
                death = time
                break
        out[i] = death
