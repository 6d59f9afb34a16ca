"""Crossing observables on the equilateral triangle.

The continuum triangle has corners A = 0, B = 1, C = e^{i pi/3}, labelled
A_1 = A, A_tau = B, A_tau2 = C (tau = e^{2i pi/3}); j below is the power of
tau, so j = 0, 1, 2 stand for corners A, B, C.  E_j(z) is the event that an
open simple path joins the two triangle sides meeting at A_j and cuts the
face z off from the opposite side.  Its probability converges, as the mesh
shrinks, to the harmonic limit

    H_j(z) = 2 d(z, side opposite A_j) / sqrt(3),

which is linear along each side; for X on side CA and j = 2 this is exactly
the length ratio CX/CA.  The module also carries the boundary-to-boundary
conformal map of the upper half-plane onto the triangle, whose restriction
to [0, 1] is the classical hypergeometric crossing formula in disguise.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import roots_jacobi

from . import kernels
from .estimators import Estimate, ExperimentPlan, _bernoulli, _ranges, mc_estimate
from .lattice import (Face, adjacent_faces, face_center, face_sites,
                      region_faces, triangle)
from .sampling import Configuration, derive_seed

CORNER_A = 0j
CORNER_B = 1 + 0j
CORNER_C = cmath.exp(1j * math.pi / 3)

_HEIGHT = math.sqrt(3.0) / 2.0
_EPS = 1e-12

# unit vectors along the sides opposite each corner, for point-line distances
_SIDE_DIR = (CORNER_C - CORNER_B, CORNER_A - CORNER_C, CORNER_B - CORNER_A)
_SIDE_BASE = (CORNER_B, CORNER_C, CORNER_A)


def _signed_distances(z: complex) -> tuple[float, float, float]:
    """Distances from z to the lines carrying sides BC, CA, AB; all three
    are nonnegative exactly when z lies in the closed triangle."""
    out = []
    for base, direction in zip(_SIDE_BASE, _SIDE_DIR):
        unit = direction / abs(direction)
        # interior lies to the left of each side traversed counterclockwise
        out.append((( z - base) / unit).imag)
    return tuple(out)


@dataclass(frozen=True)
class TriangleGeometry:
    """The unit triangle tied to a side-n lattice triangle."""

    n: int

    corners = (CORNER_A, CORNER_B, CORNER_C)

    def corner(self, j: int) -> complex:
        return self.corners[j]

    def contains(self, z: complex) -> bool:
        return min(_signed_distances(complex(z))) >= -_EPS

    def to_lattice(self, z: complex) -> complex:
        """Unit-triangle point in the plane of the side-n lattice."""
        return complex(z) * self.n

    def from_lattice(self, w: complex) -> complex:
        return complex(w) / self.n


def cardy_predict(z: complex, j: int) -> float:
    """Limit value H_j(z) = 2 d(z, opposite side)/sqrt(3) on the unit triangle.

    j indexes the corner (0 -> A with opposite side BC, 1 -> B / CA,
    2 -> C / AB).  Raises ValueError outside the closed triangle.
    """
    if j not in (0, 1, 2):
        raise ValueError(f"corner index must be 0, 1 or 2, got {j!r}")
    d = _signed_distances(complex(z))
    if min(d) < -_EPS:
        raise ValueError(f"point {z!r} lies outside the closed triangle")
    return max(d[j], 0.0) / _HEIGHT


def snap_to_face(z: complex, n: int) -> tuple[Face, float]:
    """Nearest lattice face to the unit-triangle point z, with the snapping
    distance in unit-triangle coordinates."""
    target = complex(z) * n
    best = None
    gap = math.inf
    for f in region_faces(triangle(n)):
        d = abs(face_center(f) - target)
        if d < gap:
            best, gap = f, d
    if best is None:
        raise ValueError(f"side-{n} triangle has no faces")
    return best, gap / n


_ON_SIDE = (
    lambda s, n: s[0] + s[1] == n,   # bc, opposite corner A
    lambda s, n: s[0] == 0,          # ca, opposite corner B
    lambda s, n: s[1] == 0,          # ab, opposite corner C
)


def _walled_sites(config: Configuration, n: int, j: int) -> set:
    """Open sites whose cluster touches both sides meeting at corner j."""
    adjacent = tuple(t for k, t in enumerate(_ON_SIDE) if k != j)
    out: set = set()
    seen: set = set()
    for start in config.region.sites:
        if start in seen or not config.is_black(start):
            continue
        comp = [start]
        seen.add(start)
        stack = [start]
        t1 = t2 = False
        while stack:
            u, v = stack.pop()
            if adjacent[0]((u, v), n):
                t1 = True
            if adjacent[1]((u, v), n):
                t2 = True
            for du, dv in ((1, 0), (0, 1), (-1, 1), (-1, 0), (0, -1), (1, -1)):
                s = (u + du, v + dv)
                if s in seen or s not in config.region.sites:
                    continue
                if config.is_black(s):
                    seen.add(s)
                    comp.append(s)
                    stack.append(s)
        if t1 and t2:
            out.update(comp)
    return out


def detect_Ej(config: Configuration, z, j: int) -> bool:
    """Is face z walled off from the side opposite corner j?

    True iff, after removing every open cluster that touches both sides
    meeting at A_j, the face of z cannot reach the opposite side; on a
    triangulation this is the same as an open simple path between the two
    adjacent sides separating z.  z may be a face triple or a unit-triangle
    point (snapped to the nearest face).
    """
    region = config.region
    if region.kind != "triangle":
        raise ValueError("E_j events are defined on the triangle region")
    if j not in (0, 1, 2):
        raise ValueError(f"corner index must be 0, 1 or 2, got {j!r}")
    n = region.params[0]
    if isinstance(z, tuple):
        face = z
    else:
        face, _ = snap_to_face(z, n)
        dists = _signed_distances(complex(z))
        if min(dists) < _EPS:
            raise ValueError("evaluation point must be interior")
    if not all(s in region.sites for s in face_sites(face)):
        raise ValueError(f"face {face!r} is not a face of the side-{n} triangle")

    walled = _walled_sites(config, n, j)
    on_opp = _ON_SIDE[j]

    seen = {face}
    stack = [face]
    while stack:
        f = stack.pop()
        fs = face_sites(f)
        for a, b in ((fs[0], fs[1]), (fs[0], fs[2]), (fs[1], fs[2])):
            if on_opp(a, n) and on_opp(b, n):
                if not (a in walled and b in walled):
                    return False
        for g in adjacent_faces(f):
            if g in seen:
                continue
            gs = face_sites(g)
            if not all(s in region.sites for s in gs):
                continue
            a, b = tuple(set(fs) & set(gs))
            if a in walled and b in walled:
                continue
            seen.add(g)
            stack.append(g)
    return True


def estimate_Hj(z, j: int, n: int, p: float = 0.5, n_samples: int = 1000,
                seed: int = 0, workers: int = 1) -> Estimate:
    """Monte Carlo estimate of P(E_j(z)) on the side-n triangle.

    z is a unit-triangle point (snapped to the nearest face) or a face
    triple.  The sampling contract matches mc_estimate: per-sample seeds are
    derived from (seed, index), so the worker count never changes the result.
    """
    face = z if isinstance(z, tuple) else snap_to_face(z, n)[0]
    plan = ExperimentPlan("cardy", p, n_samples, seed,
                          {"n": n, "jcode": j, "face": face})
    return mc_estimate(plan, workers=workers)


def _switch_neighbors(face: Face, n: int) -> tuple[Face, Face, Face]:
    """Neighbor faces (z_1, z_2, z_3) paired with the corners (A, B, C).

    For a downward face, z_j is the neighbor in the direction of the j-th
    corner of the triangle; for an upward face it is the neighbor in the
    opposite direction.  Either way the shared edge of z and z_j is the one
    opposite the face corner that anchors the j-th arm, which is the pairing
    under which the three switch probabilities agree.
    """
    region = triangle(n)
    neigh = adjacent_faces(face)
    if face[2] == 0:
        neigh = (neigh[0], neigh[2], neigh[1])
    for g in neigh:
        if not all(s in region.sites for s in face_sites(g)):
            raise ValueError(f"face {face!r} sits too close to the boundary")
    return neigh


def color_switch_check(z, n: int, n_samples: int, seed: int, p: float = 0.5,
                       workers: int = 1) -> tuple[Estimate, Estimate, Estimate]:
    """Estimate the three switch probabilities P[E_j(z_j) minus E_j(z)].

    z_1, z_2, z_3 are the neighbors of face z paired with the corners as in
    _switch_neighbors.  The three probabilities agree (exactly, config by
    config, when no corner of z lies on the side opposite its arm target;
    faces whose corners touch those boundary sides pick up a pinch term).
    Sampling on shared seeds makes the comparison paired.  Returns one
    Estimate per j.
    """
    face = z if isinstance(z, tuple) else snap_to_face(z, n)[0]
    neigh = _switch_neighbors(face, n)

    def count(i0: int, i1: int) -> np.ndarray:
        hits = np.zeros(3, dtype=np.int64)
        for i in range(i0, i1):
            s = np.uint64(derive_seed(seed, i))
            for j in range(3):
                at_z = kernels.cardy_event_single(s, p, n, j, *face)
                if at_z:
                    continue
                if kernels.cardy_event_single(s, p, n, j, *neigh[j]):
                    hits[j] += 1
        return hits

    if workers <= 1:
        totals = count(0, n_samples)
    else:
        from concurrent.futures import ThreadPoolExecutor
        totals = np.zeros(3, dtype=np.int64)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for part in pool.map(lambda r: count(*r), _ranges(n_samples, workers)):
                totals += part
    return tuple(_bernoulli(int(h), n_samples, seed) for h in totals)


# ---------------------------------------------------------------------------
# The boundary conformal map
# ---------------------------------------------------------------------------

_SC_ORDER = 48
_sc_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _sc_rule(order: int = _SC_ORDER) -> tuple[np.ndarray, np.ndarray]:
    if order not in _sc_cache:
        # weight (1+u)^(-2/3) on [-1, 1] absorbs the endpoint singularity
        _sc_cache[order] = roots_jacobi(order, 0.0, -2.0 / 3.0)
    return _sc_cache[order]


def _sc_incomplete(x: float) -> float:
    """integral_0^x t^(-2/3) (1-t)^(-2/3) dt for x in [0, 1/2]."""
    if x == 0.0:
        return 0.0
    nodes, weights = _sc_rule()
    t = x * (nodes + 1.0) / 2.0
    smooth = (1.0 - t) ** (-2.0 / 3.0)
    return (x / 2.0) ** (1.0 / 3.0) * float(np.sum(weights * smooth))


def sc_normalization() -> float:
    """1 / integral_0^1 t^(-2/3)(1-t)^(-2/3) dt, by the same quadrature."""
    return 1.0 / (2.0 * _sc_incomplete(0.5))


def schwarz_christoffel(x: float) -> float:
    """Boundary value at x in [0, 1] of the half-plane-to-triangle map.

    Normalized so the image runs from corner A = 0 to corner B = 1 along the
    real axis; symmetric about 1/2 and strictly increasing.  Solves
    3 Psi'' + 2 (1/x + 1/(x-1)) Psi' = 0.
    """
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"boundary coordinate {x} outside [0, 1]")
    half = _sc_incomplete(0.5)
    if x <= 0.5:
        return _sc_incomplete(x) / (2.0 * half)
    return 1.0 - _sc_incomplete(1.0 - x) / (2.0 * half)
