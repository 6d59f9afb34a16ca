"""Seeded site colourings.

Colours come from a counter-based hash of (seed, u, v), so a configuration
never stores its colours: any site can be queried in any order, re-runs are
bit-identical, and raising p from p1 to p2 with the same seed only ever turns
White sites Black (the uniform per site stays fixed and the threshold moves).
Boundary arcs may be pinned to a colour, which overrides the hash.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .lattice import Region, Site

_MASK = (1 << 64) - 1
_GOLD = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


class Color(enum.IntEnum):
    WHITE = 0
    BLACK = 1

    @property
    def opposite(self) -> "Color":
        return Color.WHITE if self is Color.BLACK else Color.BLACK


def _fin(x: int) -> int:
    """splitmix64 finaliser on python ints reduced mod 2**64."""
    x &= _MASK
    x ^= x >> 30
    x = (x * _MIX1) & _MASK
    x ^= x >> 27
    x = (x * _MIX2) & _MASK
    x ^= x >> 31
    return x


def site_hash(seed: int, u: int, v: int) -> int:
    h = _fin((seed & _MASK) ^ _GOLD)
    h = _fin(h ^ (u & _MASK))
    h = _fin(h ^ (v & _MASK))
    return h


def site_uniform(seed: int, site: Site) -> float:
    """The uniform variate attached to a site; colours are thresholds of it."""
    return (site_hash(seed, site[0], site[1]) >> 11) * 2.0 ** -53


def site_color(seed: int, p: float, site: Site) -> Color:
    return Color.BLACK if site_uniform(seed, site) < p else Color.WHITE


def derive_seed(seed: int, index: int) -> int:
    """Per-sample seed stream; independent of how samples are scheduled."""
    return _fin(_fin((seed & _MASK) ^ _GOLD) ^ ((index + 1) & _MASK))


def uniform_grid(seed: int, us: np.ndarray, vs: np.ndarray) -> np.ndarray:
    """Vectorised site_uniform over integer coordinate arrays."""
    u = us.astype(np.int64).astype(np.uint64)
    v = vs.astype(np.int64).astype(np.uint64)

    def fin(x: np.ndarray) -> np.ndarray:
        x = x ^ (x >> np.uint64(30))
        x = x * np.uint64(_MIX1)
        x = x ^ (x >> np.uint64(27))
        x = x * np.uint64(_MIX2)
        x = x ^ (x >> np.uint64(31))
        return x

    # uint64 multiplication wraps by design
    with np.errstate(over="ignore"):
        h = fin(np.uint64(seed & _MASK) ^ np.uint64(_GOLD))
        h = fin(h ^ u)
        h = fin(h ^ v)
    return (h >> np.uint64(11)).astype(np.float64) * 2.0 ** -53


@dataclass(frozen=True)
class Configuration:
    """A region plus the parameters that determine every colour in it.

    boundary: arc name -> Color overrides applied on the region's boundary
    partition.  Everything else follows the seeded hash at density p.
    """

    region: Region
    p: float
    seed: int
    boundary: dict[str, Color] = field(default_factory=dict)
    flips: frozenset[Site] = frozenset()
    _pinned: dict[Site, Color] = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if not (0.0 <= self.p <= 1.0):
            raise ValueError(f"p must lie in [0, 1], got {self.p}")
        pinned: dict[Site, Color] = {}
        for arc_name, color in self.boundary.items():
            for s in self.region.arc_sites(arc_name):
                pinned[s] = Color(color)
        object.__setattr__(self, "_pinned", pinned)

    def color(self, site: Site) -> Color:
        if site not in self.region.sites:
            raise KeyError(f"site {site} is outside the region")
        pin = self._pinned.get(site)
        c = pin if pin is not None else site_color(self.seed, self.p, site)
        if site in self.flips:
            return c.opposite
        return c

    def is_black(self, site: Site) -> bool:
        return self.color(site) is Color.BLACK

    def pinned_sites(self) -> dict[Site, Color]:
        return dict(self._pinned)

    def with_boundary(self, overrides: dict[str, Color]) -> "Configuration":
        merged = dict(self.boundary)
        for name, color in overrides.items():
            self.region.arc_sites(name)  # raises on unknown arc
            merged[name] = Color(color)
        return Configuration(self.region, self.p, self.seed, merged, self.flips)

    def with_flip(self, site: Site) -> "Configuration":
        """The same configuration with one site's colour inverted."""
        if site not in self.region.sites:
            raise KeyError(f"site {site} is outside the region")
        return Configuration(self.region, self.p, self.seed, self.boundary,
                             self.flips ^ {site})

    def black_sites(self) -> frozenset[Site]:
        """Materialised Black set; intended for small regions and oracles."""
        return frozenset(s for s in self.region.sites if self.is_black(s))
