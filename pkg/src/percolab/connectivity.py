"""Cluster and crossing queries on configurations.

These are the plain-python reference operations: clear, region-general, and
deliberately unclever.  The compiled kernels re-implement the hot ones and are
cross-checked against these in the tests.

Convention for crossings: the query sides of a region are closed, i.e. a
corner site belongs to both sides meeting there.  With that convention the
planar alternative is exact on this lattice: a parallelogram has a Black
left-right crossing if and only if it has no White top-bottom crossing.
"""

from __future__ import annotations

import math
from collections import deque
from typing import Callable, Iterable

from .lattice import (NEIGHBOR_STEPS, Region, Site, face_sites, faces_of_pair,
                      hex_distance, neighbors, to_plane)
from .sampling import Color, Configuration


def _query_sites(region: Region, name: str) -> list[Site]:
    """Sites of a named side (closed) or, failing that, a boundary arc."""
    if name in region.sides:
        return region.side_sites(name)
    return region.arc_sites(name)


def cluster_at(config: Configuration, site: Site) -> set[Site]:
    """The same-colour cluster containing `site`."""
    want = config.color(site)
    seen = {site}
    queue = deque([site])
    while queue:
        s = queue.popleft()
        for t in neighbors(s):
            if t in seen or t not in config.region.sites:
                continue
            if config.color(t) is want:
                seen.add(t)
                queue.append(t)
    return seen


def clusters(config: Configuration, color: Color) -> list[set[Site]]:
    """All clusters of the given colour, in no particular order."""
    out = []
    done: set[Site] = set()
    for s in config.region.sites:
        if s in done or config.color(s) is not color:
            continue
        c = cluster_at(config, s)
        done |= c
        out.append(c)
    return out


def has_path(config: Configuration, color: Color,
             sources: Iterable[Site], targets: Iterable[Site]) -> bool:
    """Is there a path of `color` sites from some source to some target?"""
    target_set = {t for t in targets if t in config.region.sites}
    if not target_set:
        return False
    seen: set[Site] = set()
    queue: deque[Site] = deque()
    for s in sources:
        if s in config.region.sites and s not in seen and config.color(s) is color:
            seen.add(s)
            queue.append(s)
    while queue:
        s = queue.popleft()
        if s in target_set:
            return True
        for t in neighbors(s):
            if t in seen or t not in config.region.sites:
                continue
            if config.color(t) is color:
                seen.add(t)
                queue.append(t)
    return False


def has_crossing(config: Configuration, color: Color,
                 side_a: str = "left", side_b: str = "right") -> bool:
    region = config.region
    return has_path(config, color, _query_sites(region, side_a),
                    _query_sites(region, side_b))


# -- circuits around the hole of an annulus ---------------------------------

_RAY_ANGLE = 0.2391  # generic direction: no site centre lies on the ray


def _winding_step(a: Site, b: Site) -> int:
    """Signed crossing count of the edge a -> b with the reference ray.

    +1 when the edge crosses the ray counterclockwise (from below to above),
    -1 clockwise, 0 when it does not cross.  The ray leaves the origin at a
    generic angle so no site centre can sit on it.
    """
    ca, sa = math.cos(_RAY_ANGLE), math.sin(_RAY_ANGLE)
    za = to_plane(a)
    zb = to_plane(b)
    xa, ya = za.real, za.imag
    xb, yb = zb.real, zb.imag
    ra_x, ra_y = xa * ca + ya * sa, -xa * sa + ya * ca
    rb_x, rb_y = xb * ca + yb * sa, -xb * sa + yb * ca
    assert abs(ra_y) > 1e-9 and abs(rb_y) > 1e-9
    if (ra_y > 0) == (rb_y > 0):
        return 0
    t = ra_y / (ra_y - rb_y)
    xi = ra_x + t * (rb_x - ra_x)
    if xi <= 0:
        return 0
    return 1 if ra_y < 0 else -1


def has_circuit(config: Configuration, color: Color) -> bool:
    """Is there a cycle of `color` sites surrounding the hole of an annulus?

    Works on the covering space: walk the colour subgraph keeping a running
    winding count around the origin; the subgraph contains a surrounding
    cycle exactly when some site is reachable with two different counts.
    """
    if config.region.kind not in ("hex_annulus", "disc_annulus"):
        raise ValueError(f"no hole to surround in region kind {config.region.kind!r}")
    first: dict[Site, int] = {}
    for s0 in config.region.sites:
        if s0 in first or config.color(s0) is not color:
            continue
        first[s0] = 0
        queue = deque([(s0, 0)])
        while queue:
            s, k = queue.popleft()
            for t in neighbors(s):
                if t not in config.region.sites or config.color(t) is not color:
                    continue
                kt = k + _winding_step(s, t)
                if t in first:
                    if first[t] != kt:
                        return True
                    # already explored from this sheet; deeper sheets only
                    # arise after a nonzero cycle, which we just ruled out
                    continue
                first[t] = kt
                queue.append((t, kt))
    return False


# -- interfaces crossing an annulus ------------------------------------------


def _hole_test(region: Region) -> Callable[[Site], bool]:
    if region.kind == "hex_annulus":
        n1 = region.params[0]
        return lambda s: hex_distance(s, (0, 0)) <= n1
    if region.kind == "disc_annulus":
        r1 = region.params[0]
        return lambda s: abs(to_plane(s)) <= r1
    raise ValueError(f"region kind {region.kind!r} has no hole")


def count_crossing_interfaces(config: Configuration) -> int:
    """Number of colour-interface curves joining the inner and outer
    boundaries of an annulus.

    Interfaces enter the annulus through honeycomb edges whose inner face
    contains a hole site; they are traced along the Black/White boundary and
    counted when they leave through the outer face layer.  By planar duality
    the count is even, and consecutive crossing interfaces flank alternating
    colours.
    """
    region = config.region
    in_hole = _hole_test(region)
    in_region = region.sites.__contains__

    starts: list[tuple[Site, Site, Site]] = []  # (left?, other, hole third)
    seen_pairs: set[frozenset[Site]] = set()
    for a in region.sites:
        for step in NEIGHBOR_STEPS[:3]:  # each adjacent pair once
            b = (a[0] + step[0], a[1] + step[1])
            if not in_region(b):
                continue
            for face in faces_of_pair(a, b):
                third = next(s for s in face_sites(face) if s not in (a, b))
                if not in_region(third) and in_hole(third):
                    pair = frozenset((a, b))
                    assert pair not in seen_pairs, "annulus too thin to orient starts"
                    seen_pairs.add(pair)
                    starts.append((a, b, third))
    count = 0
    consumed: set[frozenset[Site]] = set()
    for a, b, hole_site in starts:
        if frozenset((a, b)) in consumed:
            continue
        if config.color(a) is config.color(b):
            continue
        if config.color(a) is Color.BLACK:
            left, right = b, a
        else:
            left, right = a, b
        prev = hole_site
        while True:
            su = right[0] - left[0]
            sv = right[1] - left[1]
            t1 = (left[0] - sv, left[1] + su + sv)
            t2 = (left[0] + su + sv, left[1] - su)
            front = t2 if t1 == prev else t1
            if not in_region(front):
                if in_hole(front):
                    consumed.add(frozenset((left, right)))
                else:
                    count += 1
                break
            if config.color(front) is Color.BLACK:
                prev, right = right, front
            else:
                prev, left = left, front
    return count


def interfaces_from_origin(config: Configuration, n: int, origin: Site = (0, 0)) -> int:
    """Interface curves from the cell of `origin` out to hex distance n.

    The colour of `origin` itself is never consulted, so the count is a
    property of the surrounding annulus alone.  Plain-python twin of the
    compiled tracer.
    """
    count = 0
    consumed: set[int] = set()
    region_sites = config.region.sites
    for k in range(6):
        if k in consumed:
            continue
        sa = NEIGHBOR_STEPS[k]
        sb = NEIGHBOR_STEPS[(k + 1) % 6]
        a = (origin[0] + sa[0], origin[1] + sa[1])
        b = (origin[0] + sb[0], origin[1] + sb[1])
        if config.color(a) is config.color(b):
            continue
        if config.color(a) is Color.BLACK:
            left, right = b, a
        else:
            left, right = a, b
        prev = origin
        while True:
            su = right[0] - left[0]
            sv = right[1] - left[1]
            t1 = (left[0] - sv, left[1] + su + sv)
            t2 = (left[0] + su + sv, left[1] - su)
            front = t2 if t1 == prev else t1
            if hex_distance(front, origin) > n or front not in region_sites:
                count += 1
                break
            if front == origin:
                for j in range(6):
                    pa = (origin[0] + NEIGHBOR_STEPS[j][0], origin[1] + NEIGHBOR_STEPS[j][1])
                    pb = (origin[0] + NEIGHBOR_STEPS[(j + 1) % 6][0],
                          origin[1] + NEIGHBOR_STEPS[(j + 1) % 6][1])
                    if {pa, pb} == {left, right}:
                        consumed.add(j)
                break
            if config.color(front) is Color.BLACK:
                prev, right = right, front
            else:
                prev, left = left, front
    return count


# -- disjoint crossings (Menger count) ---------------------------------------


def count_disjoint_crossings(config: Configuration, color: Color,
                             side_a: str = "left", side_b: str = "right",
                             cap: int = 1 << 30) -> int:
    """Maximum number of vertex-disjoint `color` paths between two sides.

    Unit-capacity augmenting paths on the split-vertex graph; paths may be
    rerouted as more are added, so the count is the true Menger number.
    """
    region = config.region
    allowed = {s for s in region.sites if config.color(s) is color}
    sources = [s for s in _query_sites(region, side_a) if s in allowed]
    sinks = {s for s in _query_sites(region, side_b) if s in allowed}
    flow_next: dict[Site, Site] = {}
    flow_prev: dict[Site, Site] = {}
    used_cap: set[Site] = set()
    flow = 0
    while flow < cap:
        parent: dict[tuple[Site, int], tuple[Site, int] | None] = {}
        queue: deque[tuple[Site, int]] = deque()
        for s in sources:
            if (s, 0) not in parent:
                parent[(s, 0)] = None
                queue.append((s, 0))
        found = None
        while queue and found is None:
            node = queue.popleft()
            s, half = node
            if half == 1:
                if s in sinks:
                    found = node
                    break
                for t in neighbors(s):
                    if t not in allowed or flow_next.get(s) == t:
                        continue
                    nxt = (t, 0)
                    if nxt not in parent:
                        parent[nxt] = node
                        queue.append(nxt)
                if s in used_cap and (s, 0) not in parent:
                    parent[(s, 0)] = node
                    queue.append((s, 0))
            else:
                if s not in used_cap and (s, 1) not in parent:
                    parent[(s, 1)] = node
                    queue.append((s, 1))
                pv = flow_prev.get(s)
                if pv is not None and (pv, 1) not in parent:
                    parent[(pv, 1)] = node
                    queue.append((pv, 1))
        if found is None:
            break
        node = found
        while parent[node] is not None:
            prev = parent[node]
            (ps, ph), (ns, nh) = prev, node
            if ps == ns:
                if ph == 0:
                    used_cap.add(ps)
                else:
                    used_cap.discard(ps)
            elif ph == 1 and nh == 0:
                flow_next[ps] = ns
                flow_prev[ns] = ps
            else:
                # cancelling the unit ns -> ps
                flow_next.pop(ns, None)
                flow_prev.pop(ps, None)
            node = prev
        flow += 1
    return flow


def is_pivotal(config: Configuration, site: Site,
               event: Callable[[Configuration], bool]) -> bool:
    """Does flipping `site` change the truth of `event`?"""
    return event(config) != event(config.with_flip(site))
