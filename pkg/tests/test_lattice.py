import math
from collections import deque

import pytest

from percolab.lattice import (NEIGHBOR_STEPS, adjacent_faces, boundary_by_bfs,
                              disc, disc_annulus, face_center, face_sites,
                              faces_of_pair, faces_of_site, half_hexagon,
                              hex_annulus, hex_distance, hexagon, neighbors,
                              parallelogram, region_faces, split_arc,
                              to_plane, triangle, triangle_corners)


def _bfs_distance(a, b, limit=200):
    """Reference graph distance by breadth-first search."""
    if a == b:
        return 0
    seen = {a}
    queue = deque([(a, 0)])
    while queue:
        s, d = queue.popleft()
        for t in neighbors(s):
            if t in seen:
                continue
            if t == b:
                return d + 1
            if d + 1 < limit:
                seen.add(t)
                queue.append((t, d + 1))
    raise AssertionError("no path found")


def test_to_plane_basic_points():
    assert to_plane((0, 0)) == 0
    assert to_plane((2, 0)) == 2
    z = to_plane((1, 1))
    assert abs(z - complex(1.5, math.sqrt(3) / 2)) < 1e-12


def test_to_plane_is_additive():
    for a in [(0, 0), (2, -1), (-3, 4)]:
        for b in [(1, 0), (0, 1), (-1, 1)]:
            s = (a[0] + b[0], a[1] + b[1])
            assert abs(to_plane(s) - to_plane(a) - to_plane(b)) < 1e-12


def test_neighbors_are_unit_distance():
    for s in [(0, 0), (3, -2), (-1, 5)]:
        ts = neighbors(s)
        assert len(ts) == len(set(ts)) == 6
        for t in ts:
            assert abs(abs(to_plane(t) - to_plane(s)) - 1.0) < 1e-12
            assert hex_distance(s, t) == 1


def test_hex_distance_matches_bfs():
    for s in [(0, 0), (2, 1), (-1, 3), (4, -2), (-3, -2)]:
        assert hex_distance(s) == _bfs_distance((0, 0), s)


def test_hexagon_site_counts():
    assert len(hexagon(1).sites) == 7
    assert len(hexagon(3).sites) == 37
    for n in range(21):
        assert len(hexagon(n).sites) == 1 + 3 * n * (n + 1)


def test_parallelogram_site_count():
    for a, b in [(1, 1), (3, 2), (5, 0), (0, 4)]:
        assert len(parallelogram(a, b).sites) == (a + 1) * (b + 1)


def test_boundary_sites_have_outside_neighbor():
    regions = [parallelogram(4, 3), hexagon(4), triangle(5),
               half_hexagon(4), disc(4.0), hex_annulus(1, 4),
               disc_annulus(1.5, 4.0)]
    for region in regions:
        for s in region.boundary_sites:
            assert any(t not in region.sites for t in neighbors(s)), \
                f"{region.kind}: {s} has no outside neighbor"


def test_arcs_partition_the_bfs_boundary():
    # the named arcs, together, are exactly the sites with an outside neighbor
    regions = [parallelogram(4, 3), hexagon(6), triangle(6), half_hexagon(5)]
    for region in regions:
        seen = set()
        for name, sites in region.arcs:
            for s in sites:
                assert s not in seen, f"{region.kind}: {s} in two arcs"
                seen.add(s)
        assert seen == set(boundary_by_bfs(region))


def test_hexagon_boundary_is_the_distance_ring():
    for n in (1, 3, 7, 50):
        region = hexagon(n)
        ring = set(region.arc_sites("boundary"))
        assert ring == {s for s in region.sites if hex_distance(s) == n}
        assert ring == set(boundary_by_bfs(region))


def test_triangle_arcs_and_corners():
    n = 5
    region = triangle(n)
    assert region.arc_names == ("ab", "bc", "ca")
    # each corner belongs to the arc that starts there
    assert (0, 0) in region.arc_sites("ab")
    assert (n, 0) in region.arc_sites("bc")
    assert (0, n) in region.arc_sites("ca")
    for name in ("ab", "bc", "ca"):
        assert len(region.side_sites(name)) == n + 1
    a, b, c = triangle_corners(n)
    assert a == 0 and b == n
    assert abs(c - n * to_plane((0, 1))) < 1e-12


def test_parallelogram_sides_are_closed():
    region = parallelogram(3, 2)
    left = region.side_sites("left")
    bottom = region.side_sites("bottom")
    # closed sides share their corners
    assert (0, 0) in left and (0, 0) in bottom
    assert left == frozenset((0, v) for v in range(3))


def test_disc_membership():
    r = 3.5
    region = disc(r)
    for s in region.sites:
        assert abs(to_plane(s)) <= r + 1e-12
    # no site just outside was missed
    for s in region.arc_sites("boundary"):
        assert any(abs(to_plane(t)) > r for t in neighbors(s))


def test_hex_annulus_rings():
    region = hex_annulus(1, 4)
    for s in region.sites:
        assert 1 < hex_distance(s) <= 4
    assert set(region.arc_sites("inner")) == \
        {s for s in region.sites if hex_distance(s) == 2}
    assert set(region.arc_sites("outer")) == \
        {s for s in region.sites if hex_distance(s) == 4}


def test_degenerate_regions_raise():
    with pytest.raises(ValueError):
        parallelogram(-1, 2)
    with pytest.raises(ValueError):
        hexagon(-1)
    with pytest.raises(ValueError):
        triangle(0)
    with pytest.raises(ValueError):
        hex_annulus(3, 3)
    with pytest.raises(ValueError):
        disc(0.5)


def test_face_sites_and_centers():
    up = (2, 1, 0)
    assert set(face_sites(up)) == {(2, 1), (3, 1), (2, 2)}
    down = (2, 1, 1)
    assert set(face_sites(down)) == {(3, 1), (2, 2), (3, 2)}
    # the centre is the average of the three corners
    for f in (up, down, (0, 0, 0), (-2, 3, 1)):
        mean = sum(to_plane(s) for s in face_sites(f)) / 3.0
        assert abs(face_center(f) - mean) < 1e-12


def test_adjacent_faces_share_an_edge():
    for f in [(0, 0, 0), (0, 0, 1), (3, -2, 0), (-1, 4, 1)]:
        for g in adjacent_faces(f):
            assert g[2] != f[2]
            shared = set(face_sites(f)) & set(face_sites(g))
            assert len(shared) == 2
            assert f in adjacent_faces(g)


def test_faces_of_pair():
    f1, f2 = faces_of_pair((0, 0), (1, 0))
    assert {f1, f2} == {(0, 0, 0), (0, -1, 1)}
    with pytest.raises(ValueError):
        faces_of_pair((0, 0), (2, 0))


def test_faces_of_site_is_the_hexagon():
    for s in [(0, 0), (2, -1), (-3, 5)]:
        fs = faces_of_site(s)
        assert len(fs) == 6
        for f in fs:
            assert s in face_sites(f)
            # cell corners sit at distance 1/sqrt(3) from the site
            assert abs(abs(face_center(f) - to_plane(s)) - 1 / math.sqrt(3)) < 1e-12


def test_region_faces_of_triangle():
    # a side-n triangle triangulates into n^2 faces
    for n in (1, 2, 3, 5):
        faces = region_faces(triangle(n))
        assert len(faces) == n * n
        for f in faces:
            assert all(s in triangle(n).sites for s in face_sites(f))


def test_split_arc():
    region = parallelogram(4, 4)
    split = split_arc(region, "bottom", 2)
    names = split.arc_names
    assert "bottom_a" in names and "bottom_b" in names and "bottom" not in names
    assert split.arc_sites("bottom_a") == region.arc_sites("bottom")[:2]
    assert split.arc_sites("bottom_b") == region.arc_sites("bottom")[2:]
    assert split.boundary_sites == region.boundary_sites
    with pytest.raises(ValueError):
        split_arc(region, "bottom", 0)
    with pytest.raises(KeyError):
        region.arc_sites("nope")


def test_neighbor_steps_are_counterclockwise():
    angles = [math.atan2(to_plane(s).imag, to_plane(s).real)
              for s in NEIGHBOR_STEPS]
    diffs = [(angles[(k + 1) % 6] - angles[k]) % (2 * math.pi) for k in range(6)]
    for d in diffs:
        assert abs(d - math.pi / 3) < 1e-12
