"""Loewner evolutions at desk scale.

Chordal traces from driving functions, driving extraction from discrete
curves by the vertical-slit zipper, the radial equation with Koebe
bookkeeping, and the boundary diffusion whose spectral gap gives the
one-arm decay rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .estimators import Estimate, _bernoulli, _from_values, _ranges, _run_values
from .exploration import chordal_exploration
from .lattice import parallelogram, split_arc
from .sampling import Color, Configuration, derive_seed

TWO_PI = 2.0 * math.pi


# ---------------------------------------------------------------------------
# Driving functions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DrivingSample:
    """A sampled driving function: W_k at capacities t_k (chordal) or the
    angle theta_k with zeta = e^{i theta} (radial)."""

    mode: str
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if self.mode not in ("chordal", "radial"):
            raise ValueError(f"unknown mode {self.mode!r}")
        t = np.asarray(self.times, dtype=float)
        w = np.asarray(self.values, dtype=float)
        if t.ndim != 1 or t.shape != w.shape or len(t) < 1:
            raise ValueError("times and values must be 1-d arrays of equal length")
        if t[0] != 0.0:
            raise ValueError("capacity must start at 0")
        if len(t) > 1 and not np.all(np.diff(t) > 0):
            raise ValueError("capacities must be strictly increasing")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "values", w)

    def __len__(self) -> int:
        return len(self.times)

    @property
    def horizon(self) -> float:
        return float(self.times[-1])

    def value_at(self, t) -> np.ndarray:
        return np.interp(t, self.times, self.values)


def sample_bm_driving(kappa: float, dt: float, T: float, seed: int,
                      mode: str = "chordal") -> DrivingSample:
    """W_0 = 0 and independent sqrt(kappa*dt)-scaled normal increments.

    The generator is counter-based (Philox keyed by the seed), so the sample
    is a pure function of (kappa, dt, T, seed).
    """
    if kappa < 0:
        raise ValueError("kappa must be nonnegative")
    if dt <= 0 or T <= 0:
        raise ValueError("dt and T must be positive")
    n = max(1, int(round(T / dt)))
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    steps = rng.standard_normal(n) * math.sqrt(kappa * dt)
    values = np.concatenate(([0.0], np.cumsum(steps)))
    times = np.linspace(0.0, n * dt, n + 1)
    return DrivingSample(mode, times, values)


# ---------------------------------------------------------------------------
# Vertical-slit elementary maps
# ---------------------------------------------------------------------------

def _slit_branch(s: np.ndarray, z, w: float) -> np.ndarray:
    """Pick the branch of sqrt that keeps the upper half-plane upstairs and
    leaves real points on the side of w they started on."""
    x = np.real(z) - w
    return np.where(s.imag > 0, s,
                    np.where(s.imag < 0, -s, np.where(x >= 0, s, -s)))


def forward_slit(z, w: float, dt: float):
    """One forward Loewner step: the map removing a vertical slit of
    half-plane capacity dt based at w; g(z) = w + sqrt((z-w)^2 + 4 dt)."""
    z = np.asarray(z, dtype=complex)
    s = np.sqrt((z - w) ** 2 + 4.0 * dt)
    return w + _slit_branch(s, z, w)


def inverse_slit(z, w: float, dt: float):
    """Inverse of forward_slit: opens the slit back up; sends w to the tip
    w + 2i sqrt(dt)."""
    z = np.asarray(z, dtype=complex)
    s = np.sqrt((z - w) ** 2 - 4.0 * dt)
    return w + _slit_branch(s, z, w)


def chordal_trace(driving: DrivingSample) -> np.ndarray:
    """Trace points gamma(t_k): the image of W_k under the composed inverse
    elementary maps.  Capacity at step k is exactly t_k by construction."""
    if driving.mode != "chordal":
        raise ValueError("chordal_trace needs a chordal driving sample")
    t, w = driving.times, driving.values
    dts = np.diff(t)
    n = len(dts)
    z = np.array(w[1:], dtype=complex)
    for j in range(n, 0, -1):
        z[j - 1:] = inverse_slit(z[j - 1:], w[j], dts[j - 1])
    return np.concatenate(([complex(w[0])], z))


def extract_driving(curve, drop_swallowed: bool = False) -> DrivingSample:
    """Unzip a discrete curve in the closed upper half-plane.

    curve[0] must lie on the real axis; each later point is mapped down by
    the composed normalized maps, contributing W_k = Re and dt_k = Im^2/4,
    after which the composition grows by the vertical slit at (W_k, dt_k).

    With drop_swallowed=True, points the slit approximation has already
    absorbed (image on or below the real axis, or a capacity increment that
    underflows) are skipped instead of raising.  Coarsened lattice
    interfaces brush their own hull often enough to need this.
    """
    pts = np.asarray(curve, dtype=complex)
    if len(pts) < 2:
        raise ValueError("need at least a base point and one curve point")
    if abs(pts[0].imag) > 1e-9:
        raise ValueError("curve must start on the real axis")
    z = pts[1:].copy()
    times = [0.0]
    values = [pts[0].real]
    for k in range(len(z)):
        zk = z[k]
        if zk.imag <= 0.0:
            if drop_swallowed:
                continue
            raise ValueError(f"curve point {k + 1} mapped below the real axis")
        dtk = zk.imag * zk.imag / 4.0
        if times[-1] + dtk == times[-1]:
            if drop_swallowed:
                continue
            raise ValueError(f"curve point {k + 1} adds no capacity")
        w = zk.real
        values.append(w)
        times.append(times[-1] + dtk)
        z[k + 1:] = forward_slit(z[k + 1:], w, dtk)
    return DrivingSample("chordal", np.asarray(times), np.asarray(values))


# ---------------------------------------------------------------------------
# Driving functions of lattice interfaces
# ---------------------------------------------------------------------------

def _split_parallelogram(n: int):
    region = parallelogram(2 * n, n)
    region = split_arc(region, "bottom", n)
    region = split_arc(region, "top", n)
    return region


def percolation_driving(n: int, seed: int, p: float = 0.5, coarsen: int = 3,
                        reach: float = 0.45) -> DrivingSample:
    """Driving function of one exploration interface in a 2n x n
    parallelogram with half-plane-like boundary colours.

    The interface leaves the bottom-middle crack (White pinned to its left,
    Black to its right), is truncated once it wanders reach*n away from the
    start so the domain still resembles the half-plane, coarsened to every
    `coarsen`-th vertex, and unzipped.
    """
    if n < 4:
        raise ValueError("n must be at least 4")
    region = _split_parallelogram(n)
    boundary = {"bottom_a": Color.WHITE, "left": Color.WHITE,
                "top_b": Color.WHITE, "bottom_b": Color.BLACK,
                "right": Color.BLACK, "top_a": Color.BLACK}
    config = Configuration(region, p, seed, boundary=boundary)
    stop = {s for name, arc in region.arcs if name.startswith("top") for s in arc}
    path = chordal_exploration(config, stop_cells=stop)
    verts = path.vertices[1:]
    x0 = n - 0.5
    far = np.abs(verts - x0) > reach * n
    if far.any():
        verts = verts[:int(np.argmax(far))]
    verts = verts[::max(1, coarsen)]
    if len(verts) < 8:
        raise RuntimeError(f"interface too short after truncation (seed {seed})")
    sample = extract_driving(np.concatenate(([complex(x0)], verts)),
                             drop_swallowed=True)
    if len(sample.times) < 8:
        raise RuntimeError(f"interface too short after unzipping (seed {seed})")
    return sample


def driving_ensemble(n: int, n_paths: int, seed: int, p: float = 0.5,
                     coarsen: int = 3, reach: float = 0.45) -> list[DrivingSample]:
    return [percolation_driving(n, derive_seed(seed, i), p=p, coarsen=coarsen,
                                reach=reach)
            for i in range(n_paths)]


def driving_statistics(samples: list[DrivingSample], n_grid: int = 33,
                       t_cap: float | None = None) -> dict:
    """Ensemble drift and quadratic-variation summary on a common capacity
    grid.

    The grid ends at the 5th percentile of the sample horizons so nearly
    every path covers it; shorter paths are dropped.  Returns the drift
    z-score of W at the grid end and the least-squares slope of Var(W_t)
    against t (6 for the interface scaling limit).

    For ensembles whose paths stop once W wanders a distance R from the
    start (percolation_driving with reach), pass t_cap ~ 0.02 * R**2: the
    horizon quantile alone then sits deep in the truncation regime, and
    conditioning on surviving it throws away exactly the wide excursions,
    deflating the variance slope.  The cap keeps the probability of hitting
    the truncation inside the fit window negligible.
    """
    horizons = np.array([s.horizon for s in samples])
    t_end = float(np.quantile(horizons, 0.05))
    if t_cap is not None:
        t_end = min(t_end, t_cap)
    keep = [s for s in samples if s.horizon >= t_end]
    grid = np.linspace(0.0, t_end, n_grid)
    rows = np.array([s.value_at(grid) - s.values[0] for s in keep])
    final = rows[:, -1]
    m = len(keep)
    mean = float(np.mean(final))
    stderr = float(np.std(final, ddof=1) / math.sqrt(m))
    var_t = np.mean(rows ** 2, axis=0)
    slope, intercept = np.polyfit(grid, var_t, 1)
    return {"t_end": t_end, "n_used": m, "mean_final": mean,
            "stderr_final": stderr,
            "drift_z": mean / stderr if stderr > 0 else 0.0,
            "qv_slope": float(slope), "qv_intercept": float(intercept)}


# ---------------------------------------------------------------------------
# Radial evolution
# ---------------------------------------------------------------------------

_SWALLOW = 2e-2
_NEAR = 0.15


@dataclass
class RadialChainState:
    """Snapshot of the radial chain at capacity t.

    points are the tracked interior starting positions; swallow_time[i] is
    the capacity at which point i fell into the hull (nan while alive).
    distance is dist(0, K_t union dD) read off the swallowed points, and
    history records the same distance after every accepted step.
    """

    t: float
    points: np.ndarray
    swallow_time: np.ndarray
    distance: float
    conformal_radius: float
    origin_derivative: float
    history_times: np.ndarray = field(default_factory=lambda: np.empty(0))
    history_distance: np.ndarray = field(default_factory=lambda: np.empty(0))

    def sandwich_ok(self) -> bool:
        lo = np.exp(-self.history_times) / 4.0
        hi = np.exp(-self.history_times)
        return bool(np.all((lo <= self.history_distance)
                           & (self.history_distance <= hi)))


def _radial_rhs(g: np.ndarray, zeta: complex) -> np.ndarray:
    return -g * (g + zeta) / (g - zeta)


def _rk4_radial(g: np.ndarray, h: float, z0: complex, z1: complex,
                zmid: complex) -> np.ndarray:
    k1 = _radial_rhs(g, z0)
    k2 = _radial_rhs(g + 0.5 * h * k1, zmid)
    k3 = _radial_rhs(g + 0.5 * h * k2, zmid)
    k4 = _radial_rhs(g + h * k3, z1)
    return g + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _default_points(start_angle: float, n_rays: int) -> np.ndarray:
    # geometric in depth 1-r, not in r: early hulls hug the circle, and the
    # sandwich upper bound leaves only ~2 sqrt(t) of room there
    angles = start_angle + np.linspace(0.0, TWO_PI, n_rays, endpoint=False)
    radii = 1.0 - np.geomspace(1e-3, 0.98, 80)
    return (radii[None, :] * np.exp(1j * angles[:, None])).ravel()


def solve_radial_chain(driving: DrivingSample, T: float | None = None,
                       dt: float = 1e-3, points: np.ndarray | None = None,
                       n_rays: int = 256,
                       check_sandwich: bool = True) -> RadialChainState:
    """Integrate dg/dt = -g (g+zeta)/(g-zeta) for a cloud of interior points.

    Fixed-step RK4 away from the singularity; points within _NEAR of zeta
    are advanced in 16 substeps, and within _SWALLOW they are frozen and
    recorded as part of the hull.  The hull distance after every step must
    sit in the Koebe sandwich [e^-t/4, e^-t]; violation raises RuntimeError
    when check_sandwich is on (off for bisection probes, where the point
    cloud is deliberately one-sided).
    """
    if driving.mode != "radial":
        raise ValueError("solve_radial_chain needs a radial driving sample")
    if T is None:
        T = driving.horizon
    if T > driving.horizon + 1e-12:
        raise ValueError("T exceeds the driving horizon")
    if points is None:
        points = _default_points(float(driving.values[0]), n_rays)
    z = np.asarray(points, dtype=complex)
    if np.any(np.abs(z) >= 1.0) or np.any(z == 0):
        raise ValueError("points must lie in the punctured open disc")

    g = z.copy()
    swallow = np.full(len(z), np.nan)
    alive = np.ones(len(z), dtype=bool)
    hist_t, hist_d = [], []
    dist = 1.0

    n_steps = max(1, int(math.ceil(T / dt)))
    h = T / n_steps
    for k in range(n_steps):
        t0 = k * h
        za = complex(np.exp(1j * driving.value_at(t0)))
        zb = complex(np.exp(1j * driving.value_at(t0 + 0.5 * h)))
        zc = complex(np.exp(1j * driving.value_at(t0 + h)))
        if alive.any():
            ga = g[alive]
            close = np.abs(ga - za) < _NEAR
            far_idx = np.flatnonzero(alive)[~close]
            near_idx = np.flatnonzero(alive)[close]
            if len(far_idx):
                g[far_idx] = _rk4_radial(g[far_idx], h, za, zc, zb)
            for m in range(16):
                if not len(near_idx):
                    break
                s0 = t0 + m * h / 16.0
                wa = complex(np.exp(1j * driving.value_at(s0)))
                wb = complex(np.exp(1j * driving.value_at(s0 + h / 32.0)))
                wc = complex(np.exp(1j * driving.value_at(s0 + h / 16.0)))
                g[near_idx] = _rk4_radial(g[near_idx], h / 16.0, wa, wc, wb)
                gone = np.abs(g[near_idx] - wc) < _SWALLOW
                if gone.any():
                    taken = near_idx[gone]
                    swallow[taken] = s0 + h / 16.0
                    alive[taken] = False
                    near_idx = near_idx[~gone]
            # a far point may still have skidded into the swallow zone
            if len(far_idx):
                gone = np.abs(g[far_idx] - zc) < _SWALLOW
                if gone.any():
                    taken = far_idx[gone]
                    swallow[taken] = t0 + h
                    alive[taken] = False
        eaten = ~alive
        if eaten.any():
            dist = min(1.0, float(np.min(np.abs(z[eaten]))))
        t1 = t0 + h
        hist_t.append(t1)
        hist_d.append(dist)
        if check_sandwich:
            lo, hi = math.exp(-t1) / 4.0, math.exp(-t1)
            if not lo <= dist <= hi:
                raise RuntimeError(
                    f"Koebe sandwich violated at t={t1:.6f}: "
                    f"{lo:.6f} <= {dist:.6f} <= {hi:.6f} fails")

    deriv = _origin_derivative(driving, T, h)
    return RadialChainState(t=T, points=z, swallow_time=swallow, distance=dist,
                            conformal_radius=math.exp(-T),
                            origin_derivative=deriv,
                            history_times=np.array(hist_t),
                            history_distance=np.array(hist_d))


def _origin_derivative(driving: DrivingSample, T: float, h: float) -> float:
    """g_T'(0) by Richardson extrapolation of g_T(r)/r on three tiny radii.

    The three-point table kills the r and r^2 terms of the expansion, so the
    result checks the a(K_t) = log g'(0) normalization to ~1e-8 without
    touching the (removable) singularity at 0.
    """
    radii = np.array([5e-4, 1e-3, 2e-3])
    start = float(driving.values[0])
    g = radii * np.exp(1j * (start + math.pi))  # opposite the initial growth
    n_steps = max(1, int(round(T / h)))
    for k in range(n_steps):
        t0 = k * h
        za = complex(np.exp(1j * driving.value_at(t0)))
        zb = complex(np.exp(1j * driving.value_at(t0 + 0.5 * h)))
        zc = complex(np.exp(1j * driving.value_at(t0 + h)))
        g = _rk4_radial(g, h, za, zc, zb)
    q = g / radii
    # Neville step for nodes r, 2r, 4r at r -> 0
    q01 = 2.0 * q[0] - q[1]
    q12 = 2.0 * q[1] - q[2]
    return float(np.abs(q01 + (q01 - q12) / 3.0))


def slit_distance(T: float = math.log(4.0), dt: float = 1e-4) -> float:
    """dist(0, hull) for the constant radial driving zeta = 1 at capacity T.

    The hull is the segment [x_T, 1]; x_T is found by bisecting the
    swallowing frontier on the positive real axis.  Closed form for cross
    checking: 4x/(1+x)^2 = e^{-T}.
    """
    lo, hi = 1e-3, 1.0 - 1e-3
    flat = DrivingSample("radial", np.array([0.0, T]), np.array([0.0, 0.0]))
    for _ in range(3):
        probes = np.linspace(lo, hi, 64)
        state = solve_radial_chain(flat, T=T, dt=dt,
                                   points=probes.astype(complex),
                                   check_sandwich=False)
        eaten = ~np.isnan(state.swallow_time)
        if not eaten.any() or eaten.all():
            raise RuntimeError("bisection bracket lost the frontier")
        first = int(np.argmax(eaten))
        lo = probes[first - 1] if first > 0 else probes[0]
        hi = probes[first]
    return float(0.5 * (lo + hi))


# ---------------------------------------------------------------------------
# The boundary diffusion dY = sqrt(6) dB + cot(Y/2) dt
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExponentPair:
    """(q, lambda) solving 3q^2 - q - 2b = 0 and lambda = 3q^2/4 + q/2."""

    b: float
    q: float
    lam: float

    def __post_init__(self):
        if abs(3 * self.q ** 2 - self.q - 2 * self.b) > 1e-12:
            raise ValueError("q does not solve 3q^2 - q - 2b = 0")
        if abs(self.lam - (3 * self.q ** 2 / 4 + self.q / 2)) > 1e-12:
            raise ValueError("lambda does not match 3q^2/4 + q/2")


def q_lambda(b: float) -> ExponentPair:
    if b < 0:
        raise ValueError("b must be nonnegative")
    root = math.sqrt(1.0 + 24.0 * b)
    q = (1.0 + root) / 6.0
    lam = (4.0 * b + 1.0 + root) / 8.0
    return ExponentPair(b, q, lam)


def generator_residual(b: float, xs: np.ndarray | None = None) -> float:
    """max |L f + lambda f| for f = sin(x/2)^q with
    L = 3 d^2 + cot(x/2) d - (b/2)/sin^2(x/2), using analytic derivatives."""
    pair = q_lambda(b)
    q, lam = pair.q, pair.lam
    if xs is None:
        xs = np.linspace(0.3, TWO_PI - 0.3, 257)
    s = np.sin(xs / 2.0)
    c = np.cos(xs / 2.0)
    f = s ** q
    fp = 0.5 * q * s ** (q - 1) * c
    fpp = 0.25 * q * ((q - 1) * s ** (q - 2) * c ** 2 - s ** q)
    res = 3 * fpp + (c / s) * fp - 0.5 * b * s ** (q - 2) + lam * f
    return float(np.max(np.abs(res)))


def neumann_residual(xs: np.ndarray | None = None) -> float:
    """max |L0 f + (5/48) f| for the reflected-end eigenfunction
    f = cos(x/4)^{1/3}, L0 = 3 d^2 + cot(x/2) d."""
    if xs is None:
        xs = np.linspace(1e-3, TWO_PI - 0.1, 257)
    u = np.cos(xs / 4.0)
    v = np.sin(xs / 4.0)
    f = u ** (1.0 / 3.0)
    fp = -(1.0 / 12.0) * v * u ** (-2.0 / 3.0)
    fpp = -(1.0 / 48.0) * u ** (1.0 / 3.0) - (1.0 / 72.0) * v ** 2 * u ** (-5.0 / 3.0)
    res = 3 * fpp + (np.cos(xs / 2.0) / np.sin(xs / 2.0)) * fp + (5.0 / 48.0) * f
    return float(np.max(np.abs(res)))


@dataclass
class DiffusionRun:
    """One Euler path of the diffusion with boundary handling.

    boundary is "absorb" (kill at 0 and 2pi) or "reflect" (reflect at 0,
    absorb at 2pi).  functional accumulates int ds / sin^2(Y/2).
    """

    x0: float
    b: float
    dt: float
    horizon: float
    boundary: str = "absorb"
    times: np.ndarray | None = None
    path: np.ndarray | None = None
    absorption_time: float | None = None
    functional: float = 0.0


def simulate_Y(run: DiffusionRun, seed: int) -> DiffusionRun:
    """Fill in one sampled path of dY = sqrt(6) dB + cot(Y/2) dt.

    Sub-steps shrink like min(1, Y^2, (2pi - Y)^2) near the ends, matching
    the batched kernels; the recorded path is on the irregular internal grid.
    """
    if run.boundary not in ("absorb", "reflect"):
        raise ValueError(f"unknown boundary rule {run.boundary!r}")
    if run.boundary == "absorb" and not 0.0 < run.x0 < TWO_PI:
        raise ValueError("x0 must be interior for absorb mode")
    if run.boundary == "reflect" and not 0.0 <= run.x0 < TWO_PI:
        raise ValueError("x0 must lie in [0, 2pi) for reflect mode")
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    y = run.x0
    t = 0.0
    times = [0.0]
    path = [y]
    acc = 0.0
    run.absorption_time = None
    while t < run.horizon:
        scale = min(1.0, y * y, (TWO_PI - y) ** 2)
        h = run.dt * max(scale, 1e-8)
        h = min(h, run.horizon - t)
        sh = math.sin(0.5 * y)
        if sh > 0:
            acc += h / (sh * sh)
            y = y + (math.cos(0.5 * y) / sh) * h \
                + math.sqrt(6.0 * h) * rng.standard_normal()
        else:
            y = y + math.sqrt(6.0 * h) * rng.standard_normal()
        t += h
        if run.boundary == "reflect" and y < 0.0:
            y = -y
        times.append(t)
        path.append(min(max(y, 0.0), TWO_PI))
        if y >= TWO_PI or (run.boundary == "absorb" and y <= 0.0):
            run.absorption_time = t
            break
    run.times = np.array(times)
    run.path = np.array(path)
    run.functional = acc
    return run


def f_identity(b: float, t: float, n_samples: int, seed: int,
               x0: float = math.pi, dt: float = 1e-3,
               workers: int = 1) -> Estimate:
    """Monte Carlo value of E[1_{alive} e^{-(b/2) int ds/sin^2(Y/2)}
    sin(Y_t/2)^q] started at x0; equals sin(x0/2)^q e^{-lambda t} exactly."""
    pair = q_lambda(b)
    useed = np.uint64(seed)

    def fill(i0: int, i1: int, out: np.ndarray):
        kernels.diffusion_functional_batch(useed, x0, b, pair.q, t, dt,
                                           i0, i1, out)

    values = _run_values(fill, n_samples, workers)
    return _from_values(values, seed)


def f_identity_prediction(b: float, t: float, x0: float = math.pi) -> float:
    pair = q_lambda(b)
    return math.sin(0.5 * x0) ** pair.q * math.exp(-pair.lam * t)


def survival_curve(t_grid, n_samples: int, seed: int, dt: float = 1e-3,
                   workers: int = 1) -> list[Estimate]:
    """J_t on a grid from one batch of death times of the reflected-at-0,
    absorbed-at-2pi diffusion started at 0."""
    t_grid = np.atleast_1d(np.asarray(t_grid, dtype=float))
    if np.any(t_grid < 0):
        raise ValueError("times must be nonnegative")
    tmax = float(np.max(t_grid))
    useed = np.uint64(seed)

    def fill(i0: int, i1: int, out: np.ndarray):
        kernels.diffusion_survival_batch(useed, dt, tmax, i0, i1, out)

    deaths = _run_values(fill, n_samples, workers)
    return [_bernoulli(int(np.count_nonzero(deaths > t)), n_samples, seed)
            for t in t_grid]


def estimate_Jt(t: float, n_samples: int, seed: int, dt: float = 1e-3,
                workers: int = 1) -> Estimate:
    if t == 0:
        return Estimate(1.0, 0.0, n_samples, seed)
    return survival_curve([t], n_samples, seed, dt=dt, workers=workers)[0]
