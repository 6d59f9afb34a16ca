"""Triangular-lattice geometry in axial coordinates, with finite study regions.

A site (u, v) sits at the plane point u + v * exp(i*pi/3).  Every site has six
neighbours and its Voronoi cell is a regular hexagon, so a site colouring is
the same thing as a colouring of the hexagonal tiling.  Regions carry their
boundary split into named arcs (a partition, used for boundary conditions) and
a companion map of closed sides (arcs plus the adjacent corner sites, used for
crossing queries, where sharing corners is what makes planar duality exact).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

Site = tuple[int, int]

ORIGIN: Site = (0, 0)

# The six lattice directions, in counterclockwise order starting from +1.
NEIGHBOR_STEPS: tuple[Site, ...] = (
    (1, 0),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (0, -1),
    (1, -1),
)

_HALF_SQRT3 = math.sqrt(3.0) / 2.0


def to_plane(site: Site) -> complex:
    """Plane embedding u + v * exp(i*pi/3)."""
    u, v = site
    return complex(u + 0.5 * v, _HALF_SQRT3 * v)


def neighbors(site: Site) -> tuple[Site, ...]:
    u, v = site
    return tuple((u + du, v + dv) for du, dv in NEIGHBOR_STEPS)


def hex_distance(a: Site, b: Site = ORIGIN) -> int:
    """Graph distance on the triangular lattice."""
    du = a[0] - b[0]
    dv = a[1] - b[1]
    return (abs(du) + abs(dv) + abs(du + dv)) // 2


def are_neighbors(a: Site, b: Site) -> bool:
    return hex_distance(a, b) == 1


# ---------------------------------------------------------------------------
# Faces of the lattice (vertices of the dual hexagonal grid).
#
# A face is identified by (u, v, parity): parity 0 is the upward triangle with
# corners (u,v), (u+1,v), (u,v+1), parity 1 the downward one with corners
# (u+1,v), (u,v+1), (u+1,v+1).  Interfaces between colours live on the edges
# joining adjacent face centres.
# ---------------------------------------------------------------------------

Face = tuple[int, int, int]


def face_sites(face: Face) -> tuple[Site, Site, Site]:
    u, v, parity = face
    if parity == 0:
        return ((u, v), (u + 1, v), (u, v + 1))
    return ((u + 1, v), (u, v + 1), (u + 1, v + 1))


def face_center(face: Face) -> complex:
    """Centroid of the face, which is to_plane((u + t, v + t)) for t = 1/3 or 2/3."""
    u, v, parity = face
    t = 1.0 / 3.0 if parity == 0 else 2.0 / 3.0
    return complex((u + t) + 0.5 * (v + t), _HALF_SQRT3 * (v + t))


def adjacent_faces(face: Face) -> tuple[Face, Face, Face]:
    u, v, parity = face
    if parity == 0:
        return ((u, v, 1), (u, v - 1, 1), (u - 1, v, 1))
    return ((u, v, 0), (u + 1, v, 0), (u, v + 1, 0))


def faces_of_pair(a: Site, b: Site) -> tuple[Face, Face]:
    """The two faces containing the adjacent sites a and b."""
    if not are_neighbors(a, b):
        raise ValueError(f"sites {a} and {b} are not adjacent")
    out = []
    for cand in _candidate_faces(a):
        if b in face_sites(cand):
            out.append(cand)
    if len(out) != 2:
        raise AssertionError("adjacent sites must share exactly two faces")
    return out[0], out[1]


def _candidate_faces(s: Site) -> list[Face]:
    u, v = s
    return [
        (u, v, 0), (u - 1, v, 0), (u, v - 1, 0),
        (u - 1, v, 1), (u - 1, v - 1, 1), (u, v - 1, 1),
    ]


def faces_of_site(s: Site) -> list[Face]:
    """The six faces whose corner set contains s (cells around its hexagon)."""
    return [f for f in _candidate_faces(s) if s in face_sites(f)]


# ---------------------------------------------------------------------------
# Regions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Region:
    """A finite site set with named boundary structure.

    arcs: ordered (name, sites) pairs that partition the boundary sites, i.e.
        the sites having at least one neighbour outside the region.  Corner
        sites belong to the arc that follows them counterclockwise.
    sides: closed variants of the arcs for crossing queries; adjacent sides
        share their corner sites.  For ring-shaped boundaries the side equals
        the arc.
    """

    kind: str
    params: tuple
    sites: frozenset[Site]
    arcs: tuple[tuple[str, tuple[Site, ...]], ...]
    sides: dict[str, frozenset[Site]] = field(compare=False)

    def __contains__(self, site: Site) -> bool:
        return site in self.sites

    @property
    def arc_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.arcs)

    def arc_sites(self, name: str) -> tuple[Site, ...]:
        for arc_name, sites in self.arcs:
            if arc_name == name:
                return sites
        raise KeyError(f"region has no boundary arc named {name!r}")

    def side_sites(self, name: str) -> frozenset[Site]:
        if name not in self.sides:
            raise KeyError(f"region has no side named {name!r}")
        return self.sides[name]

    @property
    def boundary_sites(self) -> frozenset[Site]:
        out: set[Site] = set()
        for _, sites in self.arcs:
            out.update(sites)
        return frozenset(out)

    def interior_sites(self) -> frozenset[Site]:
        return self.sites - self.boundary_sites


def _finish(kind: str, params: tuple, sites: set[Site],
            arcs: list[tuple[str, list[Site]]],
            sides: dict[str, set[Site]]) -> Region:
    if not sites:
        raise ValueError(f"{kind}{params} has no sites")
    arc_tuple = tuple((name, tuple(a)) for name, a in arcs if a)
    side_map = {name: frozenset(s) for name, s in sides.items()}
    return Region(kind=kind, params=params, sites=frozenset(sites),
                  arcs=arc_tuple, sides=side_map)


def parallelogram(a: int, b: int) -> Region:
    """Sites (u, v) with 0 <= u <= a and 0 <= v <= b ((a+1)(b+1) of them).

    Arcs run counterclockwise: bottom, right, top, left.  Left-right crossings
    join the sides u = 0 and u = a; with closed sides, exactly one of a Black
    left-right crossing and a White top-bottom crossing occurs in every
    configuration.
    """
    if a < 0 or b < 0:
        raise ValueError("parallelogram needs a >= 0 and b >= 0")
    sites = {(u, v) for u in range(a + 1) for v in range(b + 1)}
    if a > 0 and b > 0:
        bottom = [(u, 0) for u in range(0, a)]
        right = [(a, v) for v in range(0, b)]
        top = [(u, b) for u in range(a, 0, -1)]
        left = [(0, v) for v in range(b, 0, -1)]
    elif b == 0 and a > 0:
        bottom = [(u, 0) for u in range(0, a)]
        right = [(a, 0)]
        top, left = [], []
    elif a == 0 and b > 0:
        bottom = [(0, 0)]
        right = []
        top = [(0, b)]
        left = [(0, v) for v in range(b - 1, 0, -1)]
    else:
        bottom, right, top, left = [(0, 0)], [], [], []
    sides = {
        "left": {(0, v) for v in range(b + 1)},
        "right": {(a, v) for v in range(b + 1)},
        "bottom": {(u, 0) for u in range(a + 1)},
        "top": {(u, b) for u in range(a + 1)},
    }
    arcs = [("bottom", bottom), ("right", right), ("top", top), ("left", left)]
    return _finish("parallelogram", (a, b), sites, arcs, sides)


def hexagon(n: int) -> Region:
    """Ball of graph radius n around the origin, 1 + 3n(n+1) sites."""
    if n < 0:
        raise ValueError("hexagon needs n >= 0")
    sites = {(u, v) for u in range(-n, n + 1) for v in range(-n, n + 1)
             if hex_distance((u, v)) <= n}
    ring = _hex_ring(n)
    sides = {"boundary": set(ring)}
    return _finish("hexagon", (n,), sites, [("boundary", ring)], sides)


def _hex_ring(n: int) -> list[Site]:
    """Sites at graph distance exactly n, in counterclockwise order."""
    if n == 0:
        return [ORIGIN]
    ring: list[Site] = []
    corners = [(n, 0), (0, n), (-n, n), (-n, 0), (0, -n), (n, -n)]
    for k in range(6):
        cu, cv = corners[k]
        du, dv = NEIGHBOR_STEPS[(k + 2) % 6]
        for step in range(n):
            ring.append((cu + step * du, cv + step * dv))
    return ring


def half_hexagon(n: int) -> Region:
    """Upper half of the radius-n hexagon (v >= 0), with arcs base and arch.

    The base is the segment of sites on the real axis; the arch is the part of
    the distance-n ring strictly above it.
    """
    if n < 1:
        raise ValueError("half_hexagon needs n >= 1")
    sites = {(u, v) for (u, v) in hexagon(n).sites if v >= 0}
    base = [(u, 0) for u in range(-n, n + 1)]
    arch = [s for s in _hex_ring(n) if s[1] >= 1]
    sides = {"base": set(base), "arch": set(arch) | {(n, 0), (-n, 0)}}
    return _finish("half_hexagon", (n,), sites, [("base", base), ("arch", arch)], sides)


def disc(r: float) -> Region:
    """Sites whose plane position is within Euclidean distance r of 0."""
    if r < 1:
        raise ValueError("disc needs r >= 1")
    m = int(math.ceil(r)) + 1
    sites = {(u, v) for u in range(-2 * m, 2 * m + 1) for v in range(-2 * m, 2 * m + 1)
             if abs(to_plane((u, v))) <= r}
    rim = [s for s in sites if any(abs(to_plane(t)) > r for t in neighbors(s))]
    rim.sort(key=lambda s: math.atan2(to_plane(s).imag, to_plane(s).real))
    sides = {"boundary": set(rim)}
    return _finish("disc", (r,), sites, [("boundary", rim)], sides)


def hex_annulus(n1: int, n2: int) -> Region:
    """Sites with n1 < graph distance <= n2.

    The inner arc is the ring at distance n1 + 1 (the sites adjacent to the
    hole), the outer arc the ring at distance n2.
    """
    if not (0 <= n1 < n2):
        raise ValueError("hex_annulus needs 0 <= n1 < n2")
    sites = {s for s in hexagon(n2).sites if hex_distance(s) > n1}
    inner = _hex_ring(n1 + 1)
    # For a one-ring annulus the single ring plays both roles; the partition
    # gives its sites to the inner arc and the sides map keeps both readings.
    outer = _hex_ring(n2) if n2 > n1 + 1 else []
    sides = {"inner": set(_hex_ring(n1 + 1)), "outer": set(_hex_ring(n2))}
    return _finish("hex_annulus", (n1, n2), sites, [("inner", inner), ("outer", outer)], sides)


def disc_annulus(r1: float, r2: float) -> Region:
    """Sites with r1 < |plane position| <= r2, arcs inner and outer."""
    if not (0 <= r1 < r2):
        raise ValueError("disc_annulus needs 0 <= r1 < r2")
    if r2 < 1:
        raise ValueError("disc_annulus needs r2 >= 1")
    m = int(math.ceil(r2)) + 1
    sites = {(u, v) for u in range(-2 * m, 2 * m + 1) for v in range(-2 * m, 2 * m + 1)
             if r1 < abs(to_plane((u, v))) <= r2}
    inner = {s for s in sites if any(abs(to_plane(t)) <= r1 for t in neighbors(s))}
    outer_all = {s for s in sites if any(abs(to_plane(t)) > r2 for t in neighbors(s))}
    outer = outer_all - inner
    key = lambda s: math.atan2(to_plane(s).imag, to_plane(s).real)
    sides = {"inner": inner, "outer": outer_all}
    return _finish("disc_annulus", (r1, r2), sites,
                   [("inner", sorted(inner, key=key)), ("outer", sorted(outer, key=key))],
                   sides)


def triangle(n: int) -> Region:
    """Equilateral triangle u >= 0, v >= 0, u + v <= n.

    Corners a = (0,0), b = (n,0), c = (0,n).  Arcs counterclockwise: ab (the
    base), bc (the diagonal), ca (the left edge); each corner belongs to the
    arc that starts there.
    """
    if n < 1:
        raise ValueError("triangle needs n >= 1")
    sites = {(u, v) for u in range(n + 1) for v in range(n + 1 - u)}
    ab = [(u, 0) for u in range(0, n)]
    bc = [(n - v, v) for v in range(0, n)]
    ca = [(0, n - k) for k in range(0, n)]
    sides = {
        "ab": {(u, 0) for u in range(n + 1)},
        "bc": {(n - v, v) for v in range(n + 1)},
        "ca": {(0, v) for v in range(n + 1)},
    }
    return _finish("triangle", (n,), sites, [("ab", ab), ("bc", bc), ("ca", ca)], sides)


def triangle_corners(n: int) -> tuple[complex, complex, complex]:
    return (0j, complex(n, 0), to_plane((0, n)))


def region_faces(region: Region) -> list[Face]:
    """All faces whose three corners lie in the region."""
    out = []
    seen = set()
    for s in region.sites:
        for f in _candidate_faces(s):
            if f in seen:
                continue
            seen.add(f)
            if all(c in region.sites for c in face_sites(f)):
                out.append(f)
    out.sort()
    return out


def boundary_by_bfs(region: Region) -> frozenset[Site]:
    """Sites of the region having a neighbour outside it (reference version)."""
    return frozenset(s for s in region.sites
                     if any(t not in region.sites for t in neighbors(s)))


def split_arc(region: Region, name: str, k: int) -> Region:
    """Split the named boundary arc in two at index k.

    The first k sites keep running under ``name_a``, the rest under
    ``name_b``; arc order and the closed sides are unchanged.  Useful for
    imposing boundary colours that change in the middle of a geometric side.
    """
    old = region.arc_sites(name)
    if not 0 < k < len(old):
        raise ValueError(f"split index {k} not inside arc {name!r} "
                         f"of length {len(old)}")
    arcs = []
    for arc_name, sites in region.arcs:
        if arc_name == name:
            arcs.append((f"{name}_a", sites[:k]))
            arcs.append((f"{name}_b", sites[k:]))
        else:
            arcs.append((arc_name, sites))
    return Region(kind=region.kind, params=region.params, sites=region.sites,
                  arcs=tuple(arcs), sides=dict(region.sides))
