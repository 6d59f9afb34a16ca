"""Crossings, circuits, interfaces, disjoint-path counts, pivotality.

The plain-python queries are checked three ways: against exhaustive
enumeration of every colouring on small regions, against independent
combinatorial oracles (path packing, adjacency counting, the four-arm
characterisation of pivotality), and against the compiled kernels on shared
samples.
"""

import itertools

import numpy as np
import pytest

from percolab import (Color, Configuration, cluster_at, clusters,
                      count_crossing_interfaces, count_disjoint_crossings,
                      derive_seed, has_circuit, has_path, hex_annulus,
                      hexagon, is_pivotal, parallelogram)
from percolab import kernels
from percolab.connectivity import has_crossing, interfaces_from_origin
from percolab.lattice import hex_distance, neighbors


class _TableConfig:
    """A fixed colour table over a region.

    Just enough of the Configuration surface (.region, .color, .is_black)
    for the pure-python queries, so exhaustive sweeps do not pay for
    hashing.
    """

    def __init__(self, region, table):
        self.region = region
        self._table = table

    def color(self, site):
        return self._table[site]

    def is_black(self, site):
        return self._table[site] is Color.BLACK

    def with_flip(self, site):
        table = dict(self._table)
        table[site] = Color.BLACK if table[site] is Color.WHITE else Color.WHITE
        return _TableConfig(self.region, table)


def _mask_config(region, a, b, mask):
    """Parallelogram colouring from a bitmask, kernel bit order.

    Site (u, v) sits at bit u * (b + 1) + v; a set bit means Black.
    """
    table = {}
    for u in range(a + 1):
        for v in range(b + 1):
            bit = (mask >> (u * (b + 1) + v)) & 1
            table[(u, v)] = Color.BLACK if bit else Color.WHITE
    return _TableConfig(region, table)


# -- clusters ----------------------------------------------------------------


def test_cluster_partition():
    region = hexagon(4)
    for i in range(30):
        config = Configuration(region, 0.5, derive_seed(99, i))
        black = clusters(config, Color.BLACK)
        white = clusters(config, Color.WHITE)
        covered = set()
        for c in black + white:
            assert not (covered & c)
            covered |= c
        assert covered == region.sites
        # each cluster is maximal: no same-colour neighbour outside it
        for c in black:
            for s in c:
                for t in neighbors(s):
                    if t in region.sites and config.color(t) is Color.BLACK:
                        assert t in c
        # and connected: BFS from one site recovers the whole of it
        for c in black + white:
            assert cluster_at(config, next(iter(c))) == c


def test_crossing_monochrome():
    region = parallelogram(5, 3)
    black = Configuration(region, 1.0, 7)
    white = Configuration(region, 0.0, 7)
    assert has_crossing(black, Color.BLACK)
    assert has_crossing(black, Color.BLACK, "bottom", "top")
    assert not has_crossing(black, Color.WHITE)
    assert has_crossing(white, Color.WHITE)
    assert not has_crossing(white, Color.BLACK, "bottom", "top")
    assert not has_path(black, Color.BLACK, [], region.side_sites("right"))


# -- exact duality -----------------------------------------------------------


def test_duality_exhaustive_small_rhombi():
    """Every colouring of the k x k rhombus, k <= 2: the planar alternative
    holds configuration by configuration and Black left-right crossings make
    up exactly half of all colourings."""
    for k in (1, 2):
        region = parallelogram(k, k)
        nsites = (k + 1) ** 2
        black_lr = 0
        for mask in range(1 << nsites):
            config = _mask_config(region, k, k, mask)
            blr = has_crossing(config, Color.BLACK, "left", "right")
            wtb = has_crossing(config, Color.WHITE, "bottom", "top")
            assert blr != wtb
            black_lr += blr
        assert black_lr == 1 << (nsites - 1)
        assert kernels.duality_exhaustive(k, k) == (black_lr, 0)


def test_duality_exhaustive_k3_kernel():
    nsites = 16
    black_lr, violations = kernels.duality_exhaustive(3, 3)
    assert violations == 0
    assert black_lr == 1 << (nsites - 1)
    # spot-check the python twin on a sample of the same sweep
    region = parallelogram(3, 3)
    rng = np.random.default_rng(4)
    for mask in rng.integers(0, 1 << nsites, size=400):
        config = _mask_config(region, 3, 3, int(mask))
        blr = has_crossing(config, Color.BLACK, "left", "right")
        wtb = has_crossing(config, Color.WHITE, "bottom", "top")
        assert blr != wtb


def test_duality_random_rectangles():
    """The alternative is exact for any aspect ratio, and the python crossing
    agrees with the compiled one sample by sample."""
    a, b = 7, 4
    region = parallelogram(a, b)
    seed = 31
    for i in range(200):
        config = Configuration(region, 0.5, derive_seed(seed, i))
        blr = has_crossing(config, Color.BLACK, "left", "right")
        wtb = has_crossing(config, Color.WHITE, "bottom", "top")
        assert blr != wtb
        assert kernels.crossing_open_lr_batch(seed, 0.5, a, b, i, i + 1) == int(blr)
    lr, tb, both = kernels.crossing_pair_batch(seed, 0.5, a, b, 0, 200)
    py_lr = py_tb = py_both = 0
    for i in range(200):
        config = Configuration(region, 0.5, derive_seed(seed, i))
        h = has_crossing(config, Color.BLACK, "left", "right")
        v = has_crossing(config, Color.BLACK, "bottom", "top")
        py_lr += h
        py_tb += v
        py_both += h and v
    assert (lr, tb, both) == (py_lr, py_tb, py_both)


# -- circuits ----------------------------------------------------------------


def test_circuit_needs_a_hole():
    config = Configuration(hexagon(3), 0.5, 1)
    with pytest.raises(ValueError):
        has_circuit(config, Color.BLACK)


def test_circuit_monochrome():
    region = hex_annulus(1, 3)
    black = Configuration(region, 1.0, 5)
    white = Configuration(region, 0.0, 5)
    assert has_circuit(black, Color.BLACK)
    assert not has_circuit(black, Color.WHITE)
    assert has_circuit(white, Color.WHITE)
    assert not has_circuit(white, Color.BLACK)


def test_circuit_crossing_alternative():
    """A White circuit around the hole exists iff no Black path joins the
    inner and outer boundary rings, and vice versa with colours swapped."""
    region = hex_annulus(1, 3)
    inner = region.side_sites("inner")
    outer = region.side_sites("outer")
    for i in range(400):
        config = Configuration(region, 0.5, derive_seed(17, i))
        assert has_circuit(config, Color.WHITE) == (
            not has_path(config, Color.BLACK, inner, outer))
        assert has_circuit(config, Color.BLACK) == (
            not has_path(config, Color.WHITE, inner, outer))


# -- interface counting --------------------------------------------------------


def test_interface_count_monochrome_and_sectors():
    region = hex_annulus(1, 3)
    assert count_crossing_interfaces(Configuration(region, 1.0, 3)) == 0
    assert count_crossing_interfaces(Configuration(region, 0.0, 3)) == 0
    # upper sector Black, lower sector White: exactly two crossing interfaces
    from percolab import to_plane
    table = {s: Color.BLACK if to_plane(s).imag > 0.1 else Color.WHITE
             for s in region.sites}
    assert count_crossing_interfaces(_TableConfig(region, table)) == 2


def test_interface_count_exhaustive_one_ring():
    """On the width-one annulus every interface passes between two adjacent
    ring sites of opposite colour, so the count equals the number of
    bichromatic adjacencies around the 12-cycle."""
    region = hex_annulus(1, 2)
    ring = sorted(region.sites)
    assert len(ring) == 12
    pairs = sorted({tuple(sorted((s, t))) for s in ring for t in neighbors(s)
                    if t in region.sites})
    assert len(pairs) == 12
    for mask in range(1 << 12):
        table = {s: Color.BLACK if (mask >> k) & 1 else Color.WHITE
                 for k, s in enumerate(ring)}
        config = _TableConfig(region, table)
        changes = sum(table[s] is not table[t] for s, t in pairs)
        assert count_crossing_interfaces(config) == changes


def test_interface_count_even():
    region = hex_annulus(1, 4)
    for i in range(200):
        config = Configuration(region, 0.5, derive_seed(23, i))
        assert count_crossing_interfaces(config) % 2 == 0


def test_interfaces_from_origin_parity():
    """The python tracer and the compiled one agree on whether at least
    `need` interfaces escape to distance n, sample by sample."""
    n = 5
    region = hexagon(n + 1)
    seed = 41
    for i in range(40):
        config = Configuration(region, 0.5, derive_seed(seed, i))
        count = interfaces_from_origin(config, n)
        assert count % 2 == 0
        for need in (2, 4):
            hit = kernels.origin_interfaces_batch(seed, 0.5, n, need, i, i + 1)
            assert bool(hit) == (count >= need)


def test_interfaces_from_origin_monochrome():
    config = Configuration(hexagon(5), 1.0, 2)
    assert interfaces_from_origin(config, 4) == 0


# -- disjoint crossings --------------------------------------------------------


def test_disjoint_crossings_monochrome():
    region = parallelogram(5, 3)
    black = Configuration(region, 1.0, 9)
    assert count_disjoint_crossings(black, Color.BLACK) == 4
    assert count_disjoint_crossings(black, Color.WHITE) == 0
    assert count_disjoint_crossings(black, Color.BLACK, cap=2) == 2


def _left_right_paths(config, a, b):
    """All simple Black paths from the left to the right column."""
    allowed = {s for s in config.region.sites if config.is_black(s)}
    paths = []

    def extend(site, used):
        if site[0] == a:
            paths.append(frozenset(used))
            return
        for t in neighbors(site):
            if t in allowed and t not in used:
                used.append(t)
                extend(t, used)
                used.pop()

    for v in range(b + 1):
        s = (0, v)
        if s in allowed:
            extend(s, [s])
    return paths


def _max_packing(paths, banned=frozenset(), start=0):
    best = 0
    for idx in range(start, len(paths)):
        p = paths[idx]
        if banned & p:
            continue
        best = max(best, 1 + _max_packing(paths, banned | p, idx + 1))
    return best


def test_disjoint_crossings_exhaustive_oracle():
    """Menger count == brute-force maximum packing of vertex-disjoint paths,
    for every colouring of the 3 x 3 rhombus."""
    a = b = 2
    region = parallelogram(a, b)
    for mask in range(1 << 9):
        config = _mask_config(region, a, b, mask)
        want = _max_packing(_left_right_paths(config, a, b))
        assert count_disjoint_crossings(config, Color.BLACK) == want
        assert (want >= 1) == has_crossing(config, Color.BLACK)


def test_disjoint_crossings_kernel_parity():
    a, b = 6, 4
    region = parallelogram(a, b)
    seed = 57
    n = 40
    out = np.zeros(n, np.int64)
    kernels.menger_lr_batch(seed, 0.5, a, b, True, 64, 0, n, out)
    for i in range(n):
        config = Configuration(region, 0.5, derive_seed(seed, i))
        assert count_disjoint_crossings(config, Color.BLACK) == out[i]
    kernels.menger_lr_batch(seed, 0.5, a, b, False, 64, 0, n, out)
    for i in range(n):
        config = Configuration(region, 0.5, derive_seed(seed, i))
        assert count_disjoint_crossings(config, Color.WHITE) == out[i]


# -- pivotality ----------------------------------------------------------------


def _lr_event(config):
    return has_crossing(config, Color.BLACK, "left", "right")


def test_pivotal_examples():
    region = parallelogram(4, 2)
    black = Configuration(region, 1.0, 3)
    assert not any(is_pivotal(black, s, _lr_event) for s in region.sites)
    # a single Black row: every row site is a cut point, nothing else matters
    row = [(u, 1) for u in range(5)]
    config = Configuration(region, 0.0, 3)
    for s in row:
        config = config.with_flip(s)
    for s in region.sites:
        assert is_pivotal(config, s, _lr_event) == (s in row)


def test_pivotal_four_arm_characterisation():
    """A site is pivotal for the Black left-right crossing iff made Black it
    joins left to right and made White it joins bottom to top in White."""
    a, b = 6, 4
    region = parallelogram(a, b)
    left = set(region.side_sites("left"))
    right = set(region.side_sites("right"))
    top = set(region.side_sites("top"))
    bottom = set(region.side_sites("bottom"))
    for i in range(100):
        base = Configuration(region, 0.5, derive_seed(71, i))
        table = {s: base.color(s) for s in region.sites}
        config = _TableConfig(region, table)
        for s in region.sites:
            cb = config if config.is_black(s) else _flipped(config, s)
            cw = config if not config.is_black(s) else _flipped(config, s)
            arm_black = cluster_at(cb, s)
            arm_white = cluster_at(cw, s)
            oracle = bool(arm_black & left) and bool(arm_black & right) \
                and bool(arm_white & top) and bool(arm_white & bottom)
            assert is_pivotal(config, s, _lr_event) == oracle


def test_pivotal_count_kernel_parity():
    a, b = 8, 4
    region = parallelogram(a, b)
    seed = 83
    n = 20
    out = np.zeros(n, np.int64)
    kernels.pivotal_count_batch(seed, 0.5, a, b, 0, n, out)
    for i in range(n):
        config = Configuration(region, 0.5, derive_seed(seed, i))
        count = sum(is_pivotal(config, s, _lr_event) for s in region.sites)
        assert count == out[i]


# -- correlation inequalities, sampled ------------------------------------------


def test_fkg_positive_association():
    """Left-right and bottom-top Black crossings are positively correlated."""
    seed, n = 101, 20000
    lr, tb, both = kernels.crossing_pair_batch(seed, 0.5, 10, 10, 0, n)
    p_lr, p_tb, p_both = lr / n, tb / n, both / n
    assert p_both >= p_lr * p_tb - 0.016


def test_bk_disjoint_occurrence():
    """Two or three disjoint crossings are no likelier than the product."""
    seed, n = 103, 20000
    out = np.zeros(n, np.int64)
    kernels.menger_lr_batch(seed, 0.5, 8, 8, True, 8, 0, n, out)
    p1 = np.mean(out >= 1)
    p2 = np.mean(out >= 2)
    p3 = np.mean(out >= 3)
    assert p2 <= p1 ** 2 + 0.016
    assert p3 <= p1 ** 3 + 0.016


def test_long_way_crossing_stays_bounded():
    """Crossing the 2:1 parallelogram the long way neither dies nor
    saturates as the scale doubles, and drifts only slowly with n."""
    seed, n = 107, 20000
    h16 = kernels.crossing_open_lr_batch(seed, 0.5, 32, 16, 0, n) / n
    h32 = kernels.crossing_open_lr_batch(seed + 1, 0.5, 64, 32, 0, n) / n
    for h in (h16, h32):
        assert 0.05 < h < 0.5
    sigma = np.sqrt(h16 * (1 - h16) / n) + np.sqrt(h32 * (1 - h32) / n)
    assert abs(h32 - h16) < 0.03 + 4 * sigma
