"""Discrete exploration interfaces on the honeycomb of cell boundaries.

The walker state is a directed honeycomb edge, encoded by the ordered pair of
cells it separates: (left, right).  At each vertex exactly one cell is the
"front" (incident to the vertex but not to the edge just traversed); its
colour forces the turn:

    Black front -> turn left, continue between left and front
    White front -> turn right, continue between front and right

so the invariant "left cells White, right cells Black" propagates.  Because
every honeycomb vertex touches exactly two edges whose cell pairs have
opposite colours, the walk never revisits a vertex: interfaces are simple
curves.

Chordal explorations run between the two boundary cracks of a configuration
whose boundary arcs are pinned.  Radial explorations run toward the origin in
a disc with a free boundary: a boundary cell gets a colour the first time the
walker must consult it, chosen so that the walker turns toward the side of
the path still holding the origin.  A loop event fires the moment the cells
of one colour flanking the walk close a circuit around the origin (detected
incrementally by a union-find that carries winding numbers); a Black circuit
is traced clockwise and a White one counterclockwise.  The walk then
restarts on the boundary of the origin's still-unexplored region next to the
tip, with all colours of that boundary treated as unknown again.
"""

from __future__ import annotations

import cmath
import math
from collections import deque
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .lattice import (Face, Region, Site, face_center, face_sites,
                      faces_of_pair, neighbors, to_plane)
from .sampling import Color, Configuration


class LoopEvent(NamedTuple):
    step: int          # index into path.pairs of the sealing step
    winding: int       # +1 counterclockwise, -1 clockwise
    color: Color       # colour of the discovered loop around the origin


class DisconnectionRecord(NamedTuple):
    z: Site
    step: int


@dataclass
class ExplorationPath:
    """A walk along honeycomb edges, possibly in several stages (radial).

    faces[k] are the visited honeycomb vertices as lattice faces and
    vertices[k] their plane positions.  steps lists the traversed directed
    edges as (i, i+1) index pairs into faces; pairs[j] is the (left, right)
    cell pair separated by the j-th traversed edge, in step order.  jumps
    lists face indices i where faces[i] -> faces[i+1] is a radial restart
    rather than an edge.  pretend records colours invented for boundary
    cells during a radial walk (interior flank cells always carry their
    configuration colour).
    """

    region: Region
    kind: str
    faces: list[Face]
    pairs: list[tuple[Site, Site]]
    left_cells: set[Site]
    right_cells: set[Site]
    loop_events: list[LoopEvent] = field(default_factory=list)
    jumps: list[int] = field(default_factory=list)
    pretend: dict[Site, Color] = field(default_factory=dict)
    start_pair: tuple[Site, Site] | None = None
    end_pair: tuple[Site, Site] | None = None
    hit: Site | None = None

    @property
    def vertices(self) -> np.ndarray:
        return np.array([face_center(f) for f in self.faces], dtype=complex)

    @property
    def steps(self) -> list[tuple[int, int]]:
        skip = set(self.jumps)
        return [(i, i + 1) for i in range(len(self.faces) - 1) if i not in skip]

    def __len__(self) -> int:
        return len(self.pairs)


def _thirds(left: Site, right: Site) -> tuple[Site, Site]:
    """The two common neighbours of an adjacent pair (the faces' third cells)."""
    su = right[0] - left[0]
    sv = right[1] - left[1]
    return (left[0] - sv, left[1] + su + sv), (left[0] + su + sv, left[1] - su)


def _face_of(a: Site, b: Site, third: Site) -> Face:
    for f in faces_of_pair(a, b):
        if third in face_sites(f):
            return f
    raise AssertionError(f"{third} is not a face-mate of {a}, {b}")


def _oriented_inward(a: Site, b: Site, outer: Face, inner: Face) -> tuple[Site, Site]:
    """Order the pair as (left, right) for a walker entering outer -> inner."""
    d = face_center(inner) - face_center(outer)
    mid = 0.5 * (to_plane(a) + to_plane(b))
    cross = (d.conjugate() * (to_plane(a) - mid)).imag
    assert abs(cross) > 1e-9
    return (a, b) if cross > 0 else (b, a)


def boundary_cracks(config: Configuration) -> list[dict]:
    """Places where two opposite pinned boundary colours sit side by side
    next to a face that sticks out of the region.  Each crack reports the
    orientation a walker entering there would have; it is an entry crack when
    entering puts the White cell on the walker's left.
    """
    pinned = config.pinned_sites()
    region = config.region
    out = []
    seen: set[frozenset[Site]] = set()
    for s, cs in pinned.items():
        for t in neighbors(s):
            ct = pinned.get(t)
            if ct is None or ct is cs or frozenset((s, t)) in seen:
                continue
            seen.add(frozenset((s, t)))
            f1, f2 = faces_of_pair(s, t)
            third1 = next(x for x in face_sites(f1) if x not in (s, t))
            third2 = next(x for x in face_sites(f2) if x not in (s, t))
            in1 = third1 in region.sites
            in2 = third2 in region.sites
            if in1 == in2:
                continue  # interior junction, or a sliver poking out twice
            outer, inner = (f2, f1) if in1 else (f1, f2)
            left, right = _oriented_inward(s, t, outer, inner)
            out.append({
                "white": s if cs is Color.WHITE else t,
                "black": s if cs is Color.BLACK else t,
                "outer_face": outer,
                "inner_face": inner,
                "entry": config.color(left) is Color.WHITE,
            })
    out.sort(key=lambda c: (c["white"], c["black"]))
    return out


def chordal_exploration(config: Configuration,
                        start: tuple[Site, Site] | None = None,
                        end: tuple[Site, Site] | None = None,
                        stop_cells: set[Site] | None = None) -> ExplorationPath:
    """Trace the interface separating the pinned Black arc's cluster from the
    pinned White arc's cluster.

    start/end, when given, are the unordered crack pairs the path must leave
    from and arrive at.  stop_cells aborts the walk the first time the front
    cell lies in that set (recorded as path.hit), before its colour is read.
    """
    cracks = boundary_cracks(config)
    if len(cracks) != 2:
        raise ValueError(
            f"need exactly two boundary colour changes, found {len(cracks)}")
    entries = [c for c in cracks if c["entry"]]
    if len(entries) != 1:
        raise AssertionError("exactly one crack should admit White-left entry")
    crack = entries[0]
    if start is not None and set(start) != {crack["white"], crack["black"]}:
        raise ValueError(f"start {start} is not the entry crack "
                         f"({crack['white']}, {crack['black']})")

    region = config.region
    left: Site = crack["white"]
    right: Site = crack["black"]
    outer = crack["outer_face"]
    prev = next(x for x in face_sites(outer) if x not in (left, right))
    faces = [outer]
    pairs: list[tuple[Site, Site]] = []
    left_cells = {left}
    right_cells = {right}
    hit = None
    limit = 8 * len(region.sites) + 16
    while True:
        if len(pairs) > limit:
            raise RuntimeError("exploration did not terminate")
        t1, t2 = _thirds(left, right)
        front = t2 if t1 == prev else t1
        faces.append(_face_of(left, right, front))
        pairs.append((left, right))
        if stop_cells is not None and front in stop_cells:
            hit = front
            break
        if front not in region.sites:
            break
        if config.color(front) is Color.BLACK:
            prev, right = right, front
            right_cells.add(front)
        else:
            prev, left = left, front
            left_cells.add(front)
    end_pair = (left, right)
    if end is not None and hit is None and set(end) != set(end_pair):
        raise ValueError(f"path ended at {end_pair}, not at {end}")
    return ExplorationPath(region=region, kind="chordal", faces=faces,
                           pairs=pairs, left_cells=left_cells,
                           right_cells=right_cells,
                           start_pair=(crack["white"], crack["black"]),
                           end_pair=end_pair, hit=hit)


# ---------------------------------------------------------------------------
# Radial exploration
# ---------------------------------------------------------------------------


def _side_of_path(domain: set[Site], blocked: set[frozenset[Site]],
                  origin: Site, exclude: Site) -> set[Site]:
    """Cells reachable from the origin without crossing a traversed edge and
    without passing through the excluded front cell.  Consumed cells are
    passable: the path is a curve along cell borders, not a fat obstacle."""
    seen = {origin}
    queue = deque([origin])
    while queue:
        s = queue.popleft()
        for t in neighbors(s):
            if t in seen or t not in domain or t == exclude:
                continue
            if frozenset((s, t)) in blocked:
                continue
            seen.add(t)
            queue.append(t)
    return seen


def _unexplored_reach(domain: set[Site], consumed: set[Site],
                      walls: set[Site], origin: Site) -> tuple[set[Site], bool]:
    """Origin's component of unconsumed cells, and whether it touches the
    domain's boundary cells.  Losing that touch is the loop-closure event."""
    seen = {origin}
    queue = deque([origin])
    touches = origin in walls
    while queue:
        s = queue.popleft()
        for t in neighbors(s):
            if t in seen or t not in domain or t in consumed:
                continue
            seen.add(t)
            if t in walls:
                touches = True
            queue.append(t)
    return seen, touches


def _wall_sites(domain: set[Site]) -> set[Site]:
    return {s for s in domain if any(t not in domain for t in neighbors(s))}


def _stage_starts(domain: set[Site], walls: set[Site],
                  origin: Site) -> list[tuple[Site, Site, Face, Face]]:
    """Candidate entry edges of a stage: adjacent wall pairs whose shared face
    pokes out of the domain.  The origin is never part of an entry pair."""
    out = []
    seen: set[frozenset[Site]] = set()
    for a in walls:
        if a == origin:
            continue
        for b in neighbors(a):
            if b not in walls or b == origin or frozenset((a, b)) in seen:
                continue
            seen.add(frozenset((a, b)))
            f1, f2 = faces_of_pair(a, b)
            third1 = next(x for x in face_sites(f1) if x not in (a, b))
            third2 = next(x for x in face_sites(f2) if x not in (a, b))
            in1 = third1 in domain
            in2 = third2 in domain
            if in1 == in2:
                continue
            outer, inner = (f2, f1) if in1 else (f1, f2)
            out.append((a, b, outer, inner))
    return out


def _angle_key(f: Face) -> tuple[float, float]:
    z = face_center(f)
    return (cmath.phase(z) % (2 * math.pi), abs(z))


_RAY = 0.2391  # reference ray angle from the origin; avoids all cell centres


def _ray_crossings(a: Site, b: Site) -> int:
    """Signed number of times the segment from cell a to cell b crosses the
    reference ray (+1 counterclockwise).  Adjacent cells subtend less than
    pi at the origin, so the lifted phase difference is unambiguous."""
    pa = (cmath.phase(to_plane(a)) - _RAY) % (2 * math.pi)
    pb = (cmath.phase(to_plane(b)) - _RAY) % (2 * math.pi)
    d = pb - pa
    if d > math.pi:
        return -1
    if d < -math.pi:
        return 1
    return 0


class _WindingForest:
    """Union-find whose edges carry winding numbers about the origin.

    Cells of one colour are inserted as they are consumed; joining two cells
    already in the same tree with an inconsistent winding means the new edge
    closes a cycle that winds around the origin.
    """

    def __init__(self) -> None:
        self.parent: dict[Site, Site] = {}
        self.offset: dict[Site, int] = {}  # winding of cell minus parent's
        self.size: dict[Site, int] = {}

    def add(self, s: Site) -> None:
        self.parent[s] = s
        self.offset[s] = 0
        self.size[s] = 1

    def find(self, s: Site) -> tuple[Site, int]:
        chain = []
        while self.parent[s] != s:
            chain.append(s)
            s = self.parent[s]
        w = 0
        for t in reversed(chain):
            w += self.offset[t]
            self.parent[t] = s
            self.offset[t] = w
        return s, w

    def union(self, a: Site, b: Site) -> bool:
        """Join a and b, where going a -> b crosses the reference ray
        _ray_crossings(a, b) times.  True if this closes a winding cycle."""
        w_ab = _ray_crossings(a, b)
        ra, wa = self.find(a)
        rb, wb = self.find(b)
        if ra == rb:
            return wa + w_ab != wb
        if self.size[ra] < self.size[rb]:
            self.parent[ra] = rb
            self.offset[ra] = wb - w_ab - wa
            self.size[rb] += self.size[ra]
        else:
            self.parent[rb] = ra
            self.offset[rb] = wa + w_ab - wb
            self.size[ra] += self.size[rb]
        return False


def radial_exploration(config: Configuration,
                       start: tuple[Site, Site] | None = None) -> ExplorationPath:
    """Explore a disc toward the origin, recording a loop event each time one
    colour's flank closes a circuit around the origin, and restarting inside
    the region the circuit encloses."""
    region = config.region
    if region.kind != "disc":
        raise ValueError("radial exploration expects a disc region")
    if region.params[0] < 2:
        raise ValueError("disc too small for radial exploration (radius < 2)")
    origin: Site = (0, 0)
    if origin not in region.sites:
        raise ValueError("origin is not in the region")
    if config.pinned_sites():
        raise ValueError("radial exploration expects no pinned boundary")

    domain = set(region.sites)
    walls = _wall_sites(domain)
    starts = _stage_starts(domain, walls, origin)
    if start is not None:
        starts = [s for s in starts if {s[0], s[1]} == set(start)]
        if not starts:
            raise ValueError(f"{start} is not an entry pair on the boundary")
        chosen = starts[0]
    else:
        chosen = min(starts, key=lambda s: _angle_key(s[2]))

    faces: list[Face] = []
    pairs: list[tuple[Site, Site]] = []
    left_cells: set[Site] = set()
    right_cells: set[Site] = set()
    loop_events: list[LoopEvent] = []
    jumps: list[int] = []
    pretend: dict[Site, Color] = {}

    assigned: dict[Site, Color] = {}       # invented colours, walls and beyond
    blocked: set[frozenset[Site]] = set()  # traversed edges of this stage
    consumed: set[Site] = set()            # domain cells whose colour is spent
    placed: dict[Site, Color] = {}         # every coloured cell of this stage
    forest = {Color.WHITE: _WindingForest(), Color.BLACK: _WindingForest()}

    def place(s: Site, c: Color) -> bool:
        """Enter a newly coloured cell into its colour's forest.  True when
        that closes a same-coloured circuit around the origin."""
        placed[s] = c
        forest[c].add(s)
        closes = False
        for t in neighbors(s):
            if placed.get(t) is c:
                closes |= forest[c].union(s, t)
        return closes

    def begin_stage(entry: tuple[Site, Site, Face, Face]) -> tuple[Site, Site, Site]:
        a, b, outer, inner = entry
        lft, rgt = _oriented_inward(a, b, outer, inner)
        assigned[lft] = pretend[lft] = Color.WHITE
        assigned[rgt] = pretend[rgt] = Color.BLACK
        consumed.update((lft, rgt))
        left_cells.add(lft)
        right_cells.add(rgt)
        place(lft, Color.WHITE)
        place(rgt, Color.BLACK)
        faces.append(outer)
        prv = next(x for x in face_sites(outer) if x not in (a, b))
        return lft, rgt, prv

    left, right, prev = begin_stage(chosen)
    start_pair = (left, right)
    budget = 8 * len(domain) + 64

    while True:
        if len(pairs) > budget:
            raise RuntimeError("radial exploration did not terminate")
        t1, t2 = _thirds(left, right)
        front = t2 if t1 == prev else t1
        faces.append(_face_of(left, right, front))
        pairs.append((left, right))
        blocked.add(frozenset((left, right)))
        if front == origin:
            break
        if front in domain and front not in walls:
            c = config.color(front)
        else:
            c = assigned.get(front)
            if c is None:
                # boundary hit: give the cell the colour that turns the
                # walker toward the side of the path holding the origin
                side = _side_of_path(domain, blocked, origin, exclude=front)
                lin = left in side
                rin = right in side
                assert not (lin and rin), "the flanks of the tip met"
                if lin != rin:
                    c = Color.BLACK if lin else Color.WHITE
                elif (left in domain) != (right in domain):
                    # the origin sits behind the front cell; either turn
                    # rounds it, but never walk off the domain's surface
                    c = Color.BLACK if left in domain else Color.WHITE
                else:
                    c = (Color.BLACK
                         if abs(to_plane(left)) <= abs(to_plane(right))
                         else Color.WHITE)
                assigned[front] = pretend[front] = c
        if front in domain:
            consumed.add(front)
            (right_cells if c is Color.BLACK else left_cells).add(front)
        closes = front not in placed and place(front, c)
        if c is Color.BLACK:
            prev, right = right, front
        else:
            prev, left = left, front
        if not closes:
            continue
        # one colour's cells now form a circuit around the origin: the walk
        # has discovered a monochromatic loop (Black loops close clockwise,
        # White ones counterclockwise) and restarts inside it
        loop_events.append(LoopEvent(len(pairs) - 1,
                                     1 if c is Color.WHITE else -1,
                                     c))
        pocket, _ = _unexplored_reach(domain, consumed, walls, origin)
        domain = pocket
        walls = _wall_sites(domain)
        assigned = {}
        blocked = set()
        consumed = set()
        placed = {}
        forest = {Color.WHITE: _WindingForest(), Color.BLACK: _WindingForest()}
        entries = _stage_starts(domain, walls, origin)
        if not entries:
            break
        tip = face_center(faces[-1])
        ref = cmath.phase(tip - face_center(faces[-2]))
        entries.sort(key=lambda e: (abs(face_center(e[2]) - tip),
                                    (cmath.phase(face_center(e[2]) - tip) - ref)
                                    % (2 * math.pi)))
        jumps.append(len(faces) - 1)
        left, right, prev = begin_stage(entries[0])
        budget += 8 * len(domain) + 64

    return ExplorationPath(region=region, kind="radial", faces=faces,
                           pairs=pairs, left_cells=left_cells,
                           right_cells=right_cells, loop_events=loop_events,
                           jumps=jumps, pretend=pretend,
                           start_pair=start_pair, end_pair=(left, right))


# ---------------------------------------------------------------------------
# Path functionals
# ---------------------------------------------------------------------------


def winding_angle(path: ExplorationPath, start: int, stop: int) -> float:
    """Net signed turning of the path between two vertex indices.

    Each honeycomb turn contributes 0 or +-pi/3.  Meaningful within one stage
    of a radial path (jump discontinuities are not honeycomb turns).
    """
    if not (0 <= start <= stop < len(path.faces)):
        raise IndexError(f"vertex range [{start}, {stop}] out of bounds")
    pts = [face_center(path.faces[i]) for i in range(start, stop + 1)]
    total = 0.0
    for k in range(1, len(pts) - 1):
        d1 = pts[k] - pts[k - 1]
        d2 = pts[k + 1] - pts[k]
        total += cmath.phase(d2 / d1)
    return total


def disconnection_time(path: ExplorationPath, z: Site) -> int | None:
    """First step count after which z's component of the region, cut along
    the traversed edges, no longer touches the arrival crack; None if it
    still does when the path ends.  Only defined for chordal paths."""
    if path.kind != "chordal":
        raise ValueError("disconnection times are defined for chordal paths")
    if z not in path.region.sites:
        raise KeyError(f"site {z} is outside the region")
    targets = set(path.end_pair)

    def connected(k: int) -> bool:
        blocked = {frozenset(p) for p in path.pairs[:k]}
        seen = {z}
        queue = deque([z])
        while queue:
            s = queue.popleft()
            if s in targets:
                return True
            for t in neighbors(s):
                if t in seen or t not in path.region.sites:
                    continue
                if frozenset((s, t)) in blocked:
                    continue
                seen.add(t)
                queue.append(t)
        return False

    n = len(path.pairs)
    if connected(n):
        return None
    lo, hi = 0, n
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if connected(mid):
            lo = mid
        else:
            hi = mid
    return hi
