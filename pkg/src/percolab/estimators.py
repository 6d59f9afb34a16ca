"""Monte Carlo harness, exponent fits, and the near-critical pipeline.

Every estimator is a pure function of its plan, seed included.  Per-sample
randomness comes from `derive_seed(seed, index)`, so sample i sees the same
configuration no matter how the index range is split across workers; counts
aggregate by integer addition and per-sample values land in one shared array
indexed by sample, which makes parallel and sequential runs bit-identical.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .lattice import hex_annulus
from .sampling import Color, Configuration, derive_seed

# one-sided 99% normal quantile, used by the correlation-length decision rule
_Z99 = 2.3263478740408408


@dataclass(frozen=True)
class Estimate:
    """Monte Carlo mean with its standard error.

    stderr is the sample standard deviation (ddof=1) divided by sqrt(n).
    """

    mean: float
    stderr: float
    n_samples: int
    seed: int

    def ci_halfwidth(self, z: float = 4.0) -> float:
        return z * self.stderr


@dataclass(frozen=True)
class ArmSpec:
    """Which arm event to sample.

    geometry "annulus": arms cross from distance `inner` (exclusive) to
    `outer`.  With inner=0 the arms are anchored at the origin; len(colors)
    gives the family: 1 is the one-arm event, an even count means that many
    interfaces reach out from the origin cell (alternating arms), and 5 is
    the closed-center five-arm pattern averaged over a window of centers.

    geometry "halfplane": events along the base of an upper half-plane
    sample of radius `outer`; len(colors) 2 is the two-arm (open/closed to
    the arch) event, 3 the unique-lowest-cluster-point event.  Both average
    the indicator over base points in [-window, window].
    """

    geometry: str
    outer: int
    inner: int = 0
    colors: tuple[Color, ...] = (Color.BLACK,)
    anchored: bool = False
    window: int = 0

    def __post_init__(self):
        if self.geometry not in ("annulus", "halfplane"):
            raise ValueError(f"unknown arm geometry {self.geometry!r}")
        if not self.colors:
            raise ValueError("colors must be nonempty")
        if self.geometry == "annulus" and not 0 <= self.inner < self.outer:
            raise ValueError("annulus needs 0 <= inner < outer")
        k = len(self.colors)
        if self.geometry == "annulus" and self.inner == 0 and k not in (1, 5) and k % 2:
            raise ValueError("plane alternating arms need an even color count")
        if self.geometry == "halfplane" and k not in (2, 3):
            raise ValueError("half-plane families have two or three arms")


@dataclass
class ExperimentPlan:
    """A description of one Monte Carlo experiment.

    event: "crossing" (open left-right crossing of an a x b parallelogram),
    "crossing_both" (crossing in both directions at once), "circuit"
    (surrounding cycle in a hex annulus), "arm" (an ArmSpec event), "cardy"
    (wall-off event for a face of the discrete triangle), or
    "pivotal_count" (number of pivotal sites for the crossing).
    params carries the event geometry, e.g. {"a": 8, "b": 8} or
    {"spec": ArmSpec(...)}.
    """

    event: str
    p: float
    n_samples: int
    seed: int
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be at least 1")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must lie in [0, 1]")
        if self.seed < 0:
            raise ValueError("seed must be nonnegative")


@dataclass(frozen=True)
class ExponentFit:
    """Weighted log-log fit of estimates against scale.

    slope/intercept/slope_stderr come from the points with scale >= 8 (small
    scales carry the worst lattice corrections); raw_* fit all points.  When
    fewer than two points survive the cut the filtered numbers equal the raw
    ones.  The slope is signed: a decay n^(-x) fits to slope -x.
    """

    points: tuple[tuple[float, float, float], ...]
    slope: float
    intercept: float
    slope_stderr: float
    raw_slope: float
    raw_intercept: float
    raw_slope_stderr: float
    n_used: int


@dataclass(frozen=True)
class NearCriticalResult:
    """Outcome of the finite-size scale search at p > 1/2.

    L is the smallest tested n whose one-sided 99% lower confidence bound for
    the hard-way crossing probability of the 2n x n parallelogram reached
    1 - eps.  one_arm_at_L is measured at p = 1/2 (the density comparisons
    it feeds are stated at the critical point).
    """

    p: float
    eps: float
    L: int
    h_at_L: Estimate
    one_arm_at_L: Estimate


# ---------------------------------------------------------------------------
# Parallel execution helpers
# ---------------------------------------------------------------------------


def _ranges(n: int, workers: int) -> list[tuple[int, int]]:
    k = max(1, min(workers, n))
    step = -(-n // k)
    return [(i, min(i + step, n)) for i in range(0, n, step)]


def _run_counts(fn, n: int, workers: int) -> int:
    """fn(i0, i1) -> hit count over sample indices [i0, i1)."""
    if workers <= 1:
        return int(fn(0, n))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = pool.map(lambda r: fn(r[0], r[1]), _ranges(n, workers))
        return int(sum(parts))


def _run_values(fn, n: int, workers: int) -> np.ndarray:
    """fn(i0, i1, out) writes per-sample values at absolute indices."""
    out = np.zeros(n, dtype=np.float64)
    if workers <= 1:
        fn(0, n, out)
        return out
    with ThreadPoolExecutor(max_workers=workers) as pool:
        list(pool.map(lambda r: fn(r[0], r[1], out), _ranges(n, workers)))
    return out


def _bernoulli(hits: int, n: int, seed: int) -> Estimate:
    m = hits / n
    var = m * (1.0 - m) * n / (n - 1.0) if n > 1 else 0.0
    return Estimate(m, math.sqrt(var / n), n, seed)


def _from_values(values: np.ndarray, seed: int) -> Estimate:
    n = len(values)
    mean = float(np.sum(values)) / n
    if n > 1:
        var = float(np.sum((values - mean) ** 2)) / (n - 1)
    else:
        var = 0.0
    return Estimate(mean, math.sqrt(var / n), n, seed)


# ---------------------------------------------------------------------------
# The harness
# ---------------------------------------------------------------------------


def mc_estimate(plan: ExperimentPlan, workers: int = 1) -> Estimate:
    """Run a plan and return its estimate.

    The result is a pure function of the plan; worker count only affects
    wall time.
    """
    seed = np.uint64(plan.seed)
    p = float(plan.p)
    n = plan.n_samples
    q = plan.params
    ev = plan.event

    if ev == "crossing":
        a, b = int(q["a"]), int(q["b"])
        hits = _run_counts(
            lambda i0, i1: kernels.crossing_open_lr_batch(seed, p, a, b, i0, i1),
            n, workers)
        return _bernoulli(hits, n, plan.seed)

    if ev == "crossing_both":
        a, b = int(q["a"]), int(q["b"])

        def fn(i0, i1):
            return kernels.crossing_pair_batch(seed, p, a, b, i0, i1)[2]

        return _bernoulli(_run_counts(fn, n, workers), n, plan.seed)

    if ev == "circuit":
        n1, n2 = int(q["n1"]), int(q["n2"])
        color = q.get("color", Color.BLACK)
        region = hex_annulus(n1, n2)
        from .connectivity import has_circuit

        def count(i0, i1):
            h = 0
            for i in range(i0, i1):
                cfg = Configuration(region, p, derive_seed(plan.seed, i))
                if has_circuit(cfg, color):
                    h += 1
            return h

        return _bernoulli(_run_counts(count, n, workers), n, plan.seed)

    if ev == "arm":
        return arm_probability(q["spec"], p, n, plan.seed, workers=workers)

    if ev == "cardy":
        side, jcode = int(q["n"]), int(q["jcode"])
        fu, fv, fparity = (int(x) for x in q["face"])
        hits = _run_counts(
            lambda i0, i1: kernels.cardy_event_batch(
                seed, p, side, jcode, fu, fv, fparity, i0, i1),
            n, workers)
        return _bernoulli(hits, n, plan.seed)

    if ev == "pivotal_count":
        a, b = int(q["a"]), int(q["b"])
        vals = _run_values(
            lambda i0, i1, out: kernels.pivotal_count_batch(seed, p, a, b, i0, i1, out),
            n, workers)
        return _from_values(vals, plan.seed)

    raise ValueError(f"unknown experiment event {ev!r}")


def arm_probability(spec: ArmSpec, p: float, n_samples: int, seed: int,
                    workers: int = 1) -> Estimate:
    """Estimate an arm probability for the family encoded by `spec`."""
    useed = np.uint64(seed)
    k = len(spec.colors)

    if spec.geometry == "halfplane":
        xmax = spec.window if spec.window > 0 else spec.outer
        batch = (kernels.halfplane_two_arm_batch if k == 2
                 else kernels.halfplane_three_arm_batch)
        vals = _run_values(
            lambda i0, i1, out: batch(useed, p, spec.outer, xmax, i0, i1, out),
            n_samples, workers)
        return _from_values(vals, seed)

    if spec.inner == 0 and k == 5:
        vals = _run_values(
            lambda i0, i1, out: kernels.five_arm_batch(
                useed, p, spec.outer, i0, i1, out),
            n_samples, workers)
        return _from_values(vals, seed)

    if spec.inner == 0 and k == 1:
        hits = _run_counts(
            lambda i0, i1: kernels.one_arm_batch(useed, p, spec.outer, i0, i1),
            n_samples, workers)
        return _bernoulli(hits, n_samples, seed)

    if spec.inner == 0:
        hits = _run_counts(
            lambda i0, i1: kernels.origin_interfaces_batch(
                useed, p, spec.outer, k, i0, i1),
            n_samples, workers)
        return _bernoulli(hits, n_samples, seed)

    if k == 1:
        hits = _run_counts(
            lambda i0, i1: kernels.annulus_arm_batch(
                useed, p, spec.inner, spec.outer, i0, i1),
            n_samples, workers)
        return _bernoulli(hits, n_samples, seed)

    raise ValueError("multi-arm events away from the origin are not supported")


# ---------------------------------------------------------------------------
# Log-log fits
# ---------------------------------------------------------------------------


def _wls_loglog(xs, ys, ws):
    """Weighted least squares of log y on log x; returns slope, intercept,
    slope standard error from the weighted normal equations."""
    lx = np.log(xs)
    ly = np.log(ys)
    sw = float(np.sum(ws))
    mx = float(np.sum(ws * lx)) / sw
    my = float(np.sum(ws * ly)) / sw
    sxx = float(np.sum(ws * (lx - mx) ** 2))
    sxy = float(np.sum(ws * (lx - mx) * (ly - my)))
    slope = sxy / sxx
    intercept = my - slope * mx
    return slope, intercept, math.sqrt(1.0 / sxx)


def exponent_fit(points, min_scale: int = 8) -> ExponentFit:
    """Fit log(estimate) against log(scale) by weighted least squares.

    points: iterable of (scale, estimate, stderr) triples or
    (scale, Estimate) pairs.  Weights are the inverse variance of
    log(estimate), i.e. (estimate/stderr)^2; if any stderr is zero all
    points get unit weight.  Scales below min_scale are dropped from the
    headline fit; the raw fit keeps everything.
    """
    rows = []
    for pt in points:
        if len(pt) == 2 and isinstance(pt[1], Estimate):
            rows.append((float(pt[0]), pt[1].mean, pt[1].stderr))
        else:
            sc, est, se = pt
            rows.append((float(sc), float(est), float(se)))
    if len(rows) < 3:
        raise ValueError("need at least three points to fit")
    for sc, est, _ in rows:
        if est <= 0.0:
            raise ValueError(f"nonpositive estimate {est} at scale {sc}")

    arr = np.array(rows, dtype=np.float64)
    xs, ys, ses = arr[:, 0], arr[:, 1], arr[:, 2]
    if np.any(ses == 0.0):
        ws = np.ones_like(xs)
    else:
        ws = (ys / ses) ** 2

    raw = _wls_loglog(xs, ys, ws)
    keep = xs >= min_scale
    if int(np.sum(keep)) >= 2 and not bool(np.all(keep)):
        main = _wls_loglog(xs[keep], ys[keep], ws[keep])
        used = int(np.sum(keep))
    else:
        main = raw
        used = len(rows)
    return ExponentFit(tuple(map(tuple, rows)), main[0], main[1], main[2],
                       raw[0], raw[1], raw[2], used)


# ---------------------------------------------------------------------------
# Near-critical pipeline
# ---------------------------------------------------------------------------


def _wilson_lower(hits: int, n: int, z: float = _Z99) -> float:
    """One-sided lower confidence bound for a binomial proportion."""
    if n == 0:
        return 0.0
    ph = hits / n
    z2 = z * z
    center = ph + z2 / (2 * n)
    rad = z * math.sqrt(ph * (1.0 - ph) / n + z2 / (4 * n * n))
    return (center - rad) / (1.0 + z2 / n)


def hard_crossing_estimate(p: float, n: int, n_samples: int, seed: int,
                           workers: int = 1) -> Estimate:
    """Open crossing of the 2n x n parallelogram the long way."""
    plan = ExperimentPlan("crossing", p, n_samples, seed,
                          {"a": 2 * n, "b": n})
    return mc_estimate(plan, workers=workers)


def correlation_length(p: float, eps: float = 0.02, seed: int = 0,
                       budget: int = 400_000, samples_per_scale: int = 600,
                       workers: int = 1) -> NearCriticalResult:
    """Smallest tested scale where the hard-way crossing is confidently loaded.

    Doubles n until the one-sided 99% lower confidence bound of the crossing
    estimate reaches 1 - eps, then bisects down to the smallest such n in the
    bracket.  Raises RuntimeError if the sample budget runs out first.
    """
    if not p > 0.5:
        raise ValueError("correlation_length needs p > 1/2")
    if not 0.0 < eps < 0.5:
        raise ValueError("eps must lie in (0, 1/2)")

    spent = 0
    probes: dict[int, Estimate] = {}

    def probe(n: int) -> bool:
        nonlocal spent
        if spent + samples_per_scale > budget:
            raise RuntimeError(
                f"sample budget {budget} exhausted while probing n={n}")
        spent += samples_per_scale
        est = hard_crossing_estimate(p, n, samples_per_scale,
                                     derive_seed(seed, n), workers=workers)
        probes[n] = est
        hits = round(est.mean * est.n_samples)
        return _wilson_lower(hits, est.n_samples) >= 1.0 - eps

    lo, hi = 1, 2
    while not probe(hi):
        lo, hi = hi, hi * 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if probe(mid):
            hi = mid
        else:
            lo = mid

    L = hi
    one_arm = arm_probability(ArmSpec("annulus", L), 0.5, samples_per_scale,
                              derive_seed(seed, -1), workers=workers)
    return NearCriticalResult(p, eps, L, probes[L], one_arm)


def theta_density(p: float, N: int, M: int, n_samples: int, seed: int,
                  workers: int = 1) -> Estimate:
    """Fraction of the radius-N ball connected to the ring at distance M.

    A proxy for the infinite-cluster density: a site counts when an open
    path joins it to distance M >= 4N.
    """
    if M < 4 * N:
        raise ValueError("need M >= 4N for a stable density proxy")
    useed = np.uint64(seed)
    vals = _run_values(
        lambda i0, i1, out: kernels.theta_fraction_batch(
            useed, p, N, M, i0, i1, out),
        n_samples, workers)
    return _from_values(vals, seed)


def russo_derivative(n: int, p: float, n_samples: int, seed: int,
                     workers: int = 1) -> Estimate:
    """Expected number of pivotal sites for the 2n x n hard-way crossing.

    By Russo's identity this is the p-derivative of the crossing
    probability.  Pivotality per site is the flip test: the site is pivotal
    when switching its colour alone toggles the crossing, which for this
    event reduces to touching both dual blocking reaches.
    """
    if n < 2:
        raise ValueError("need n >= 2")
    plan = ExperimentPlan("pivotal_count", p, n_samples, seed,
                          {"a": 2 * n, "b": n})
    return mc_estimate(plan, workers=workers)
