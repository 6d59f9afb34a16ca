"""Command-line front door: experiment configs, dispatch, and file output.

Config files are line-oriented ``key = value`` with ``#`` comments and
lowercase snake-case keys.  Precedence is CLI flags over file values over
defaults; the PERC_SEED environment variable supplies the default seed.
Every output file (CSV, JSON-lines, SVG) embeds the resolved config, so a
result can be reproduced bit-exactly from the file alone.  Statistical
gates are always printed; with --assert a failed gate sets a nonzero exit
status.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import lattice, loewner
from .cardy import CORNER_A, CORNER_B, CORNER_C, cardy_predict, estimate_Hj, \
    snap_to_face
from .estimators import ArmSpec, ExperimentPlan, arm_probability, \
    correlation_length, exponent_fit, mc_estimate, russo_derivative, \
    theta_density
from .exploration import ExplorationPath, chordal_exploration, \
    radial_exploration
from .lattice import to_plane
from .sampling import Color, Configuration, derive_seed


class ConfigError(ValueError):
    """Anything wrong with a config: syntax, unknown key, bad value."""


# ---------------------------------------------------------------------------
# Parameter schemas
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Param:
    """One config key: its type, default, and help text.

    kind is one of int, float, prob, str, flag, ints, floats, path.  meta
    parameters steer execution or output routing without changing the
    result, so they are left out of the embedded config and of round-trip
    serialization.
    """

    kind: str
    default: object
    help: str = ""
    choices: tuple = ()
    meta: bool = False


def _io_params() -> dict:
    return {
        "out": Param("path", "", "CSV output path (stdout when empty)",
                     meta=True),
        "jsonl": Param("path", "", "JSON-lines output path", meta=True),
    }


def _mc_params(n_samples: int) -> dict:
    d = {
        "p": Param("prob", 0.5, "site colour probability"),
        "seed": Param("int", 0, "master seed"),
        "n_samples": Param("int", n_samples, "Monte Carlo sample count"),
        "workers": Param("int", 1, "worker threads for the sample loop",
                         meta=True),
    }
    d.update(_io_params())
    return d


_REGIONS = ("rhombus", "parallelogram", "triangle", "hexagon",
            "half_hexagon", "disc", "hex_annulus", "disc_annulus")

SCHEMAS: dict[str, dict[str, Param]] = {
    "sample": {
        "region": Param("str", "rhombus", "region shape", choices=_REGIONS),
        "n": Param("int", 8, "primary size (side, radius, or outer)"),
        "m": Param("int", 0, "secondary size: width for parallelogram, "
                             "inner radius for annuli (0 picks a default)"),
        "p": Param("prob", 0.5, "site colour probability"),
        "seed": Param("int", 0, "master seed"),
        "svg": Param("path", "", "also render the cells to this SVG",
                     meta=True),
        **_io_params(),
    },
    "crossing": {
        "n": Param("int", 16, "parallelogram height"),
        "hard": Param("flag", False, "use the 2n x n hard-way shape "
                                     "instead of the n x n rhombus"),
        "expect": Param("float", math.nan, "gate target for the mean"),
        "tol_sigma": Param("float", 4.0, "gate width in standard errors"),
        **_mc_params(10_000),
    },
    "arms": {
        "family": Param("str", "one", "arm event family",
                        choices=("one", "two", "four", "five",
                                 "half_two", "half_three")),
        "n_list": Param("ints", (8, 16, 32, 64), "outer scales"),
        "inner": Param("int", 0, "inner radius (one-arm annulus events)"),
        "window": Param("int", 0, "half-plane averaging window "
                                  "(0 means the full base)"),
        **_mc_params(20_000),
    },
    "cardy": {
        "n": Param("int", 64, "triangle side"),
        "j": Param("str", "tau2", "corner label anchoring the event, as a "
                                  "power of tau",
                   choices=("1", "tau", "tau2")),
        "side": Param("str", "ca", "where the probe point sits",
                      choices=("ab", "bc", "ca", "centroid")),
        "fraction": Param("float", 0.5, "position along the chosen side, "
                                        "from its first-named corner"),
        **_mc_params(20_000),
    },
    "explore": {
        "mode": Param("str", "chordal", "interface kind",
                      choices=("chordal", "radial")),
        "n": Param("int", 32, "domain size (half-width or disc radius)"),
        "p": Param("prob", 0.5, "site colour probability"),
        "seed": Param("int", 0, "master seed"),
        "svg": Param("path", "", "also render the path to this SVG",
                     meta=True),
        **_io_params(),
    },
    "driving": {
        "n": Param("int", 128, "domain half-width"),
        "n_paths": Param("int", 500, "ensemble size"),
        "coarsen": Param("int", 3, "keep every k-th interface vertex"),
        "reach": Param("float", 0.45, "truncate once the interface wanders "
                                      "reach * n from its start"),
        "t_cap": Param("float", math.nan, "capacity cap for the statistics "
                                          "grid (nan picks 0.02 (reach n)^2)"),
        "p": Param("prob", 0.5, "site colour probability"),
        "seed": Param("int", 0, "master seed"),
        **_io_params(),
    },
    "sle": {
        "mode": Param("str", "chordal", "which Loewner evolution",
                      choices=("chordal", "radial")),
        "kappa": Param("float", 6.0, "diffusivity of the driving motion"),
        "dt": Param("float", 1e-3, "driving time step"),
        "horizon": Param("float", 1.0, "capacity horizon"),
        "trace": Param("flag", False, "emit the chordal trace instead of "
                                      "the driving function"),
        "n_rays": Param("int", 256, "radial sample-cloud rays"),
        "seed": Param("int", 0, "master seed"),
        "svg": Param("path", "", "render the trace polyline to this SVG",
                     meta=True),
        **_io_params(),
    },
    "diffusion": {
        "kind": Param("str", "identity", "experiment kind",
                      choices=("identity", "survival")),
        "b": Param("float", 0.0, "strength of the killing functional"),
        "t": Param("float", 1.0, "time horizon of the identity check"),
        "x0": Param("float", math.pi, "starting point in (0, 2 pi)"),
        "dt": Param("float", 1e-3, "Euler step"),
        "t_list": Param("floats", (2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 14.0),
                        "grid for the survival curve"),
        "tol_sigma": Param("float", 3.0, "identity gate width in stderrs"),
        "seed": Param("int", 0, "master seed"),
        "n_samples": Param("int", 50_000, "Monte Carlo sample count"),
        "workers": Param("int", 1, "worker threads for the sample loop",
                         meta=True),
        **_io_params(),
    },
    "nearcritical": {
        "kind": Param("str", "length", "experiment kind",
                      choices=("length", "theta", "russo")),
        "p_list": Param("floats", (0.52, 0.54, 0.56, 0.58),
                        "supercritical p values for the length scan"),
        "eps": Param("float", 0.02, "crossing-probability margin"),
        "samples_per_scale": Param("int", 600, "samples per probed scale"),
        "budget": Param("int", 400_000, "total sample budget per p"),
        "n": Param("int", 8, "ball radius (theta) or domain height (russo)"),
        "m": Param("int", 0, "connection distance for theta "
                             "(0 picks 4n)"),
        **_mc_params(2_000),
    },
    "fit": {
        "input": Param("path", "", "CSV file with scale/estimate columns"),
        "xcol": Param("str", "n", "scale column name"),
        "ycol": Param("str", "mean", "estimate column name"),
        "ecol": Param("str", "stderr", "standard-error column name"),
        "min_scale": Param("int", 8, "drop scales below this from the "
                                     "filtered fit"),
        "slope_lo": Param("float", math.nan, "gate lower bound on the slope"),
        "slope_hi": Param("float", math.nan, "gate upper bound on the slope"),
        **_io_params(),
    },
    "render": {
        "kind": Param("str", "config", "what to draw",
                      choices=("config", "explore", "trace")),
        "region": Param("str", "rhombus", "region shape (config kind)",
                        choices=_REGIONS),
        "n": Param("int", 8, "primary size"),
        "m": Param("int", 0, "secondary size (0 picks a default)"),
        "mode": Param("str", "chordal", "interface kind (explore kind)",
                      choices=("chordal", "radial")),
        "kappa": Param("float", 6.0, "trace diffusivity (trace kind)"),
        "dt": Param("float", 1e-3, "trace time step"),
        "horizon": Param("float", 1.0, "trace capacity horizon"),
        "p": Param("prob", 0.5, "site colour probability"),
        "seed": Param("int", 0, "master seed"),
        "svg": Param("path", "render.svg", "SVG output path", meta=True),
    },
}

_HELP = {
    "sample": "draw one configuration and list its site colours",
    "crossing": "Monte Carlo crossing probability of a parallelogram",
    "arms": "arm probabilities over a list of scales",
    "cardy": "separation probability at a point of the triangle",
    "explore": "trace one exploration interface",
    "driving": "driving-function ensemble of exploration interfaces",
    "sle": "Loewner evolutions from Brownian driving",
    "diffusion": "the boundary-repelled diffusion: identities and survival",
    "nearcritical": "correlation length, density proxy, Russo derivative",
    "fit": "weighted log-log exponent fit of a results CSV",
    "render": "draw a configuration, interface, or trace as SVG",
}


# ---------------------------------------------------------------------------
# Value conversion and formatting
# ---------------------------------------------------------------------------

_TRUE = ("true", "yes", "on", "1")
_FALSE = ("false", "no", "off", "0")


def _convert(par: Param, key: str, raw: str):
    raw = raw.strip()
    try:
        if par.kind == "int":
            return int(raw)
        if par.kind == "float":
            return float(raw)
        if par.kind == "prob":
            x = float(raw)
            if not 0.0 <= x <= 1.0:
                raise ConfigError(f"{key} must lie in [0, 1], got {raw}")
            return x
        if par.kind == "flag":
            low = raw.lower()
            if low in _TRUE:
                return True
            if low in _FALSE:
                return False
            raise ConfigError(f"{key} expects true or false, got {raw!r}")
        if par.kind == "ints":
            return tuple(int(tok) for tok in raw.split(",") if tok.strip())
        if par.kind == "floats":
            return tuple(float(tok) for tok in raw.split(",") if tok.strip())
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad value for {key}: {raw!r}") from None
    if par.choices and raw not in par.choices:
        raise ConfigError(f"{key} must be one of "
                          f"{', '.join(par.choices)}; got {raw!r}")
    return raw


def _fmt(x) -> str:
    """Canonical text for a value; floats carry 17 significant digits."""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return format(x, ".17g")
    if isinstance(x, tuple):
        return ",".join(_fmt(v) for v in x)
    return str(x)


def _jsonable(x):
    if isinstance(x, np.integer):
        x = int(x)
    elif isinstance(x, np.floating):
        x = float(x)
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if isinstance(x, tuple):
        return [_jsonable(v) for v in x]
    return x


# ---------------------------------------------------------------------------
# ExperimentConfig: parse, merge, serialize
# ---------------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    """A command name plus fully resolved parameter values.

    source and digest record provenance: where the config came from and the
    sha256 of its canonical serialization.
    """

    command: str
    values: dict = field(default_factory=dict)
    source: str = "<args>"
    digest: str = ""

    def serialize(self) -> str:
        """Canonical on-disk form: command first, then sorted non-meta keys."""
        schema = SCHEMAS[self.command]
        lines = [f"command = {self.command}"]
        for key in sorted(self.values):
            if not schema[key].meta:
                lines.append(f"{key} = {_fmt(self.values[key])}")
        return "\n".join(lines) + "\n"

    def seal(self) -> "ExperimentConfig":
        self.digest = hashlib.sha256(self.serialize().encode()).hexdigest()
        return self


def _defaults(command: str) -> dict:
    values = {key: par.default for key, par in SCHEMAS[command].items()}
    env = os.environ.get("PERC_SEED")
    if env is not None and "seed" in values:
        values["seed"] = _convert(SCHEMAS[command]["seed"],
                                  "seed (from PERC_SEED)", env)
    return values


def parse_config(text: str, command: str | None = None,
                 source: str = "<config>") -> ExperimentConfig:
    """Parse ``key = value`` lines into a validated ExperimentConfig.

    The text may name its own command on a ``command = ...`` line; when the
    caller supplies one too they must agree.  Unknown keys, duplicate keys,
    malformed lines, and out-of-range values raise ConfigError with the
    offending line number.
    """
    entries = []
    for lineno, rawline in enumerate(text.splitlines(), start=1):
        line = rawline.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(
                f"{source}:{lineno}: expected key = value, got {rawline!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        if not key or not all(c.isalnum() and not c.isupper() or c == "_"
                              for c in key):
            raise ConfigError(
                f"{source}:{lineno}: keys are lowercase snake case, "
                f"got {key!r}")
        entries.append((lineno, key, val.strip()))

    cmd = command
    for lineno, key, val in entries:
        if key == "command":
            if command is not None and val != command:
                raise ConfigError(
                    f"{source}:{lineno}: config names command {val!r}, "
                    f"expected {command!r}")
            if cmd not in (None, val):
                raise ConfigError(f"{source}:{lineno}: duplicate command line")
            cmd = val
    if cmd is None:
        raise ConfigError(f"{source}: no command named")
    if cmd not in SCHEMAS:
        raise ConfigError(f"{source}: unknown command {cmd!r}")

    schema = SCHEMAS[cmd]
    values = _defaults(cmd)
    seen: set[str] = set()
    for lineno, key, val in entries:
        if key == "command":
            continue
        if key not in schema:
            raise ConfigError(
                f"{source}:{lineno}: unknown key {key!r} for {cmd}")
        if key in seen:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        seen.add(key)
        try:
            values[key] = _convert(schema[key], key, val)
        except ConfigError as exc:
            raise ConfigError(f"{source}:{lineno}: {exc}") from None
    return ExperimentConfig(cmd, values, source=source).seal()


# ---------------------------------------------------------------------------
# Output writers
# ---------------------------------------------------------------------------


def _write_text(path: str, text: str) -> None:
    if not path:
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _csv_text(cfg: ExperimentConfig, header, rows) -> str:
    buf = io.StringIO()
    for line in cfg.serialize().splitlines():
        buf.write(f"# {line}\n")
    buf.write(f"# source = {cfg.source}\n")
    buf.write(f"# sha256 = {cfg.digest}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def _jsonl_text(cfg: ExperimentConfig, header, rows) -> str:
    schema = SCHEMAS[cfg.command]
    head = {"command": cfg.command, "source": cfg.source,
            "sha256": cfg.digest,
            "config": {k: _jsonable(v) for k, v in sorted(cfg.values.items())
                       if not schema[k].meta}}
    lines = [json.dumps(head, sort_keys=True)]
    for row in rows:
        lines.append(json.dumps(
            {k: _jsonable(v) for k, v in zip(header, row)}, sort_keys=True))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# SVG rendering
# ---------------------------------------------------------------------------

# honeycomb cell of a site: corners at the six surrounding face centers
_HEX_CORNERS = np.exp(1j * (np.pi / 6 + np.pi / 3 * np.arange(6))) \
    / math.sqrt(3.0)


def _svg_cells(config: Configuration) -> tuple[list[str], np.ndarray]:
    parts = []
    centers = []
    for site in sorted(config.region.sites):
        c = to_plane(site)
        corners = c + _HEX_CORNERS
        pts = " ".join(f"{z.real:.4f},{-z.imag:.4f}" for z in corners)
        black = config.color(site) is Color.BLACK
        fill = "#1a1a1a" if black else "#f7f6f1"
        parts.append(f'<polygon points="{pts}" fill="{fill}" '
                     f'stroke="#8a8a8a" stroke-width="0.04"/>')
        centers.append(c)
    return parts, np.asarray(centers, dtype=complex)


def _svg_polyline(vertices: np.ndarray) -> tuple[list[str], np.ndarray]:
    vertices = np.asarray(vertices, dtype=complex)
    if len(vertices) == 0:
        return [], vertices
    pts = " ".join(f"{z.real:.4f},{-z.imag:.4f}" for z in vertices)
    return [f'<polyline points="{pts}" fill="none" stroke="#b3362b" '
            f'stroke-width="0.12" stroke-linejoin="round"/>'], vertices


def render_svg(obj, path: str, cfg: ExperimentConfig | None = None) -> str:
    """Write obj to path as SVG 1.1 and return the document text.

    Configurations render as one hexagonal polygon per cell; exploration
    paths and point sequences render as a single polyline.  The y axis is
    flipped so the lattice upper half-plane points up.
    """
    if isinstance(obj, Configuration):
        parts, anchors = _svg_cells(obj)
        margin = 1.0
    elif isinstance(obj, ExplorationPath):
        parts, anchors = _svg_polyline(obj.vertices)
        margin = 1.0
    else:
        parts, anchors = _svg_polyline(obj)
        margin = 0.5
    if len(anchors):
        x0, x1 = float(np.min(anchors.real)), float(np.max(anchors.real))
        y0, y1 = float(np.min(-anchors.imag)), float(np.max(-anchors.imag))
    else:
        x0 = y0 = 0.0
        x1 = y1 = 1.0
    view = (f"{x0 - margin:.4f} {y0 - margin:.4f} "
            f"{x1 - x0 + 2 * margin:.4f} {y1 - y0 + 2 * margin:.4f}")
    lines = ['<?xml version="1.0" encoding="UTF-8"?>',
             f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
             f'viewBox="{view}">']
    if cfg is not None:
        for ln in cfg.serialize().splitlines():
            lines.append(f"<!-- {ln} -->")
        lines.append(f"<!-- source = {cfg.source} -->")
        lines.append(f"<!-- sha256 = {cfg.digest} -->")
    lines.extend(parts)
    lines.append("</svg>")
    text = "\n".join(lines) + "\n"
    _write_text(path, text)
    return text


# ---------------------------------------------------------------------------
# Command runners.  Each returns (header, rows, gates); gates are
# (name, passed, detail) triples.
# ---------------------------------------------------------------------------


def _build_region(kind: str, n: int, m: int):
    if kind == "rhombus":
        return lattice.parallelogram(n, n)
    if kind == "parallelogram":
        return lattice.parallelogram(m if m > 0 else 2 * n, n)
    if kind == "triangle":
        return lattice.triangle(n)
    if kind == "hexagon":
        return lattice.hexagon(n)
    if kind == "half_hexagon":
        return lattice.half_hexagon(n)
    if kind == "disc":
        return lattice.disc(n)
    inner = m if m > 0 else max(1, n // 2)
    if kind == "hex_annulus":
        return lattice.hex_annulus(inner, n)
    if kind == "disc_annulus":
        return lattice.disc_annulus(inner, n)
    raise ConfigError(f"unknown region {kind!r}")


def _run_sample(cfg):
    v = cfg.values
    region = _build_region(v["region"], v["n"], v["m"])
    config = Configuration(region, v["p"], v["seed"])
    rows = [(u, w, int(config.color((u, w))))
            for u, w in sorted(region.sites)]
    if v["svg"]:
        render_svg(config, v["svg"], cfg)
    return ["u", "v", "color"], rows, []


def _run_crossing(cfg):
    v = cfg.values
    n = v["n"]
    a = 2 * n if v["hard"] else n
    plan = ExperimentPlan("crossing", v["p"], v["n_samples"], v["seed"],
                          {"a": a, "b": n})
    est = mc_estimate(plan, workers=v["workers"])
    header = ["quantity", "a", "b", "p", "mean", "stderr", "n_samples",
              "seed"]
    rows = [("crossing", a, n, v["p"], est.mean, est.stderr, est.n_samples,
             est.seed)]
    gates = []
    if math.isfinite(v["expect"]):
        tol = v["tol_sigma"] * est.stderr
        ok = abs(est.mean - v["expect"]) <= tol
        gates.append(("crossing_expect", ok,
                      f"|{est.mean:.6g} - {v['expect']:.6g}| <= {tol:.6g}"))
    return header, rows, gates


_ARM_COLORS = {
    "one": (Color.BLACK,),
    "two": (Color.BLACK, Color.WHITE),
    "four": (Color.BLACK, Color.WHITE, Color.BLACK, Color.WHITE),
    "five": (Color.BLACK, Color.WHITE, Color.BLACK, Color.WHITE,
             Color.WHITE),
}


def _run_arms(cfg):
    v = cfg.values
    family = v["family"]
    header = ["quantity", "n", "inner", "p", "mean", "stderr", "n_samples",
              "seed"]
    rows = []
    for idx, n in enumerate(v["n_list"]):
        if family.startswith("half_"):
            spec = ArmSpec("halfplane", n, window=v["window"],
                           colors=(Color.BLACK,) * (2 if family == "half_two"
                                                    else 3))
        else:
            spec = ArmSpec("annulus", n, inner=v["inner"],
                           colors=_ARM_COLORS[family])
        seed = derive_seed(v["seed"], idx)
        est = arm_probability(spec, v["p"], v["n_samples"], seed,
                              workers=v["workers"])
        rows.append((f"{family}_arm", n, v["inner"], v["p"], est.mean,
                     est.stderr, est.n_samples, est.seed))
    return header, rows, []


def _cardy_point(side: str, fraction: float) -> complex:
    if side == "centroid":
        return (CORNER_A + CORNER_B + CORNER_C) / 3.0
    a, b = {"ab": (CORNER_A, CORNER_B), "bc": (CORNER_B, CORNER_C),
            "ca": (CORNER_C, CORNER_A)}[side]
    return a + fraction * (b - a)


def _run_cardy(cfg):
    v = cfg.values
    j = {"1": 0, "tau": 1, "tau2": 2}[v["j"]]
    z = _cardy_point(v["side"], v["fraction"])
    face, snap_dist = snap_to_face(z, v["n"])
    predicted = cardy_predict(z, j)
    est = estimate_Hj(face, j, v["n"], p=v["p"],
                      n_samples=v["n_samples"], seed=v["seed"],
                      workers=v["workers"])
    header = ["quantity", "n", "j", "side", "fraction", "snap_distance",
              "predicted", "mean", "stderr", "n_samples", "seed"]
    rows = [("cardy", v["n"], v["j"], v["side"], v["fraction"], snap_dist,
             predicted, est.mean, est.stderr, est.n_samples, est.seed)]
    tol = 4.0 * est.stderr + 0.03
    ok = abs(est.mean - predicted) <= tol
    gates = [("cardy_prediction", ok,
              f"|{est.mean:.6g} - {predicted:.6g}| <= {tol:.6g}")]
    return header, rows, gates


def _explore_path(mode: str, n: int, p: float, seed: int) -> ExplorationPath:
    if mode == "chordal":
        region = loewner._split_parallelogram(n)
        boundary = {"bottom_a": Color.WHITE, "left": Color.WHITE,
                    "top_b": Color.WHITE, "bottom_b": Color.BLACK,
                    "right": Color.BLACK, "top_a": Color.BLACK}
        config = Configuration(region, p, seed, boundary=boundary)
        return chordal_exploration(config)
    config = Configuration(lattice.disc(n), p, seed)
    return radial_exploration(config)


def _run_explore(cfg):
    v = cfg.values
    path = _explore_path(v["mode"], v["n"], v["p"], v["seed"])
    verts = path.vertices
    rows = [(k, z.real, z.imag) for k, z in enumerate(verts)]
    if v["svg"]:
        render_svg(path, v["svg"], cfg)
    return ["step", "x", "y"], rows, []


def _run_driving(cfg):
    v = cfg.values
    samples = loewner.driving_ensemble(v["n"], v["n_paths"], v["seed"],
                                       p=v["p"], coarsen=v["coarsen"],
                                       reach=v["reach"])
    t_cap = v["t_cap"]
    if not math.isfinite(t_cap):
        t_cap = 0.02 * (v["reach"] * v["n"]) ** 2
    stats = loewner.driving_statistics(samples, t_cap=t_cap)
    header = ["quantity", "n", "n_paths", "t_end", "n_used", "mean_final",
              "stderr_final", "drift_z", "qv_slope", "qv_intercept", "seed"]
    rows = [("driving_stats", v["n"], v["n_paths"], stats["t_end"],
             stats["n_used"], stats["mean_final"], stats["stderr_final"],
             stats["drift_z"], stats["qv_slope"], stats["qv_intercept"],
             v["seed"])]
    gates = [
        ("drift_zero", abs(stats["drift_z"]) < 4.0,
         f"|z| = {abs(stats['drift_z']):.3g} < 4"),
        ("qv_slope", 4.5 <= stats["qv_slope"] <= 7.5,
         f"slope = {stats['qv_slope']:.4g} in [4.5, 7.5]"),
    ]
    return header, rows, gates


def _run_sle(cfg):
    v = cfg.values
    driving = loewner.sample_bm_driving(v["kappa"], v["dt"], v["horizon"],
                                        v["seed"], mode=v["mode"])
    if v["mode"] == "radial":
        state = loewner.solve_radial_chain(driving, n_rays=v["n_rays"])
        header = ["quantity", "kappa", "t", "distance", "conformal_radius",
                  "origin_derivative", "koebe_lower", "koebe_upper", "seed"]
        t = state.t
        rows = [("radial_chain", v["kappa"], t, state.distance,
                 state.conformal_radius, state.origin_derivative,
                 math.exp(-t) / 4.0, math.exp(-t), v["seed"])]
        gates = [("koebe_sandwich", state.sandwich_ok(),
                  f"d = {state.distance:.6g} within "
                  f"[{math.exp(-t) / 4.0:.6g}, {math.exp(-t):.6g}]")]
        return header, rows, gates
    if v["trace"]:
        pts = loewner.chordal_trace(driving)
        rows = [(t, z.real, z.imag) for t, z in zip(driving.times, pts)]
        if v["svg"]:
            render_svg(pts, v["svg"], cfg)
        return ["t", "x", "y"], rows, []
    rows = list(zip(driving.times, driving.values))
    return ["t", "w"], rows, []


def _run_diffusion(cfg):
    v = cfg.values
    if v["kind"] == "identity":
        pred = loewner.f_identity_prediction(v["b"], v["t"], v["x0"])
        est = loewner.f_identity(v["b"], v["t"], v["n_samples"], v["seed"],
                                 x0=v["x0"], dt=v["dt"],
                                 workers=v["workers"])
        half = loewner.f_identity(v["b"], v["t"], v["n_samples"],
                                  derive_seed(v["seed"], 1), x0=v["x0"],
                                  dt=v["dt"] / 2.0, workers=v["workers"])
        bias = abs(est.mean - half.mean)
        header = ["quantity", "b", "t", "x0", "dt", "predicted", "mean",
                  "stderr", "n_samples", "seed"]
        rows = [("f_identity", v["b"], v["t"], v["x0"], v["dt"], pred,
                 est.mean, est.stderr, est.n_samples, est.seed),
                ("f_identity", v["b"], v["t"], v["x0"], v["dt"] / 2.0, pred,
                 half.mean, half.stderr, half.n_samples, half.seed)]
        tol = v["tol_sigma"] * half.stderr + 2.0 * bias
        ok = abs(half.mean - pred) <= tol
        gates = [("f_identity", ok,
                  f"|{half.mean:.6g} - {pred:.6g}| <= {tol:.6g} "
                  f"(bias {bias:.2g})")]
        return header, rows, gates

    t_grid = np.asarray(v["t_list"], dtype=float)
    ests = loewner.survival_curve(t_grid, v["n_samples"], v["seed"],
                                  dt=v["dt"], workers=v["workers"])
    header = ["quantity", "t", "mean", "stderr", "n_samples", "seed"]
    rows = [("survival", float(t), e.mean, e.stderr, e.n_samples, e.seed)
            for t, e in zip(t_grid, ests)]
    rate = float("nan")
    if len(t_grid) >= 2 and all(e.mean > 0 for e in ests):
        rate = -float(np.polyfit(t_grid, np.log([e.mean for e in ests]),
                                 1)[0])
        rows.append(("survival_rate", float("nan"), rate, float("nan"),
                     v["n_samples"], v["seed"]))
    gates = []
    if math.isfinite(rate):
        gates.append(("survival_rate", 0.07 <= rate <= 0.14,
                      f"rate = {rate:.4g} in [0.07, 0.14]"))
    return header, rows, gates


def _run_nearcritical(cfg):
    v = cfg.values
    if v["kind"] == "length":
        header = ["quantity", "p", "eps", "L", "h_mean", "h_stderr",
                  "one_arm_mean", "one_arm_stderr", "n_samples", "seed"]
        rows = []
        lengths = []
        for idx, p in enumerate(v["p_list"]):
            res = correlation_length(p, eps=v["eps"],
                                     seed=derive_seed(v["seed"], idx),
                                     budget=v["budget"],
                                     samples_per_scale=v["samples_per_scale"],
                                     workers=v["workers"])
            lengths.append(res.L)
            rows.append(("correlation_length", p, v["eps"], res.L,
                         res.h_at_L.mean, res.h_at_L.stderr,
                         res.one_arm_at_L.mean, res.one_arm_at_L.stderr,
                         v["samples_per_scale"], v["seed"]))
        gates = []
        if len(lengths) >= 2:
            xs = np.log(np.asarray(v["p_list"]) - 0.5)
            slope = float(np.polyfit(xs, np.log(lengths), 1)[0])
            rows.append(("length_slope", float("nan"), v["eps"], 0, slope,
                         float("nan"), float("nan"), float("nan"),
                         v["samples_per_scale"], v["seed"]))
            gates.append(("length_slope", -1.73 <= slope <= -0.93,
                          f"slope = {slope:.4g} in [-1.73, -0.93]"))
        return header, rows, gates

    if v["kind"] == "theta":
        m = v["m"] if v["m"] > 0 else 4 * v["n"]
        est = theta_density(v["p"], v["n"], m, v["n_samples"], v["seed"],
                            workers=v["workers"])
        header = ["quantity", "p", "n", "m", "mean", "stderr", "n_samples",
                  "seed"]
        rows = [("theta", v["p"], v["n"], m, est.mean, est.stderr,
                 est.n_samples, est.seed)]
        return header, rows, []

    # russo: the pivotal-site count and its four-arm comparison
    est = russo_derivative(v["n"], v["p"], v["n_samples"], v["seed"],
                           workers=v["workers"])
    four = arm_probability(
        ArmSpec("annulus", v["n"], colors=_ARM_COLORS["four"]), v["p"],
        v["n_samples"], derive_seed(v["seed"], 1), workers=v["workers"])
    header = ["quantity", "p", "n", "mean", "stderr", "n_samples", "seed"]
    rows = [("russo_derivative", v["p"], v["n"], est.mean, est.stderr,
             est.n_samples, est.seed),
            ("four_arm", v["p"], v["n"], four.mean, four.stderr,
             four.n_samples, four.seed)]
    gates = []
    if four.mean > 0:
        ratio = est.mean / (v["n"] ** 2 * four.mean)
        rows.append(("russo_ratio", v["p"], v["n"], ratio, float("nan"),
                     v["n_samples"], v["seed"]))
        gates.append(("russo_ratio", 0.02 <= ratio <= 50.0,
                      f"ratio = {ratio:.4g} in [0.02, 50]"))
    return header, rows, gates


def _read_points_csv(path: str, xcol: str, ycol: str, ecol: str):
    with open(path, "r", encoding="utf-8", newline="") as fh:
        body = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.DictReader(io.StringIO("".join(body)))
    points = []
    for rec in reader:
        for col in (xcol, ycol):
            if rec.get(col) is None:
                raise ConfigError(f"{path}: missing column {col!r}")
        points.append((float(rec[xcol]), float(rec[ycol]),
                       float(rec[ecol]) if rec.get(ecol) else 0.0))
    if len(points) < 3:
        raise ConfigError(f"{path}: need at least 3 rows to fit")
    return points


def _run_fit(cfg):
    v = cfg.values
    if not v["input"]:
        raise ConfigError("fit needs input = <csv path>")
    points = _read_points_csv(v["input"], v["xcol"], v["ycol"], v["ecol"])
    fit = exponent_fit(points, min_scale=v["min_scale"])
    header = ["quantity", "n_points", "slope", "slope_stderr", "intercept",
              "raw_slope", "raw_slope_stderr", "raw_intercept", "n_used"]
    rows = [("exponent_fit", len(points), fit.slope, fit.slope_stderr,
             fit.intercept, fit.raw_slope, fit.raw_slope_stderr,
             fit.raw_intercept, fit.n_used)]
    gates = []
    if math.isfinite(v["slope_lo"]) or math.isfinite(v["slope_hi"]):
        lo = v["slope_lo"] if math.isfinite(v["slope_lo"]) else -math.inf
        hi = v["slope_hi"] if math.isfinite(v["slope_hi"]) else math.inf
        ok = lo <= fit.slope <= hi
        gates.append(("fit_slope", ok,
                      f"slope = {fit.slope:.4g} in [{lo:.4g}, {hi:.4g}]"))
    return header, rows, gates


def _run_render(cfg):
    v = cfg.values
    if not v["svg"]:
        raise ConfigError("render needs svg = <output path>")
    if v["kind"] == "config":
        region = _build_region(v["region"], v["n"], v["m"])
        obj = Configuration(region, v["p"], v["seed"])
    elif v["kind"] == "explore":
        obj = _explore_path(v["mode"], v["n"], v["p"], v["seed"])
    else:
        driving = loewner.sample_bm_driving(v["kappa"], v["dt"],
                                            v["horizon"], v["seed"])
        obj = loewner.chordal_trace(driving)
    render_svg(obj, v["svg"], cfg)
    return None, [], []


_RUNNERS = {
    "sample": _run_sample,
    "crossing": _run_crossing,
    "arms": _run_arms,
    "cardy": _run_cardy,
    "explore": _run_explore,
    "driving": _run_driving,
    "sle": _run_sle,
    "diffusion": _run_diffusion,
    "nearcritical": _run_nearcritical,
    "fit": _run_fit,
    "render": _run_render,
}


def run_experiment(cfg: ExperimentConfig, assert_gates: bool = False) -> int:
    """Dispatch a resolved config, write its artifacts, and report gates.

    Returns the process exit status: 0 normally, 1 when --assert is on and
    a statistical gate failed.
    """
    header, rows, gates = _RUNNERS[cfg.command](cfg)
    if header is not None:
        _write_text(cfg.values.get("out", ""), _csv_text(cfg, header, rows))
        if cfg.values.get("jsonl"):
            _write_text(cfg.values["jsonl"], _jsonl_text(cfg, header, rows))
    status = 0
    for name, ok, detail in gates:
        print(f"gate {name}: {'pass' if ok else 'FAIL'} ({detail})",
              file=sys.stderr)
        if not ok and assert_gates:
            status = 1
    return status


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="percolab",
        description="Percolation and Loewner-evolution experiments on the "
                    "triangular lattice.")
    sub = ap.add_subparsers(dest="command", required=True, metavar="command")
    for cmd, schema in SCHEMAS.items():
        sp = sub.add_parser(cmd, help=_HELP[cmd])
        sp.add_argument("--config", metavar="FILE",
                        help="key = value config file")
        sp.add_argument("--assert", dest="assert_gates", action="store_true",
                        help="exit nonzero when a statistical gate fails")
        for key, par in schema.items():
            sp.add_argument("--" + key.replace("_", "-"),
                            dest="opt_" + key, default=None, metavar="V",
                            help=f"{par.help} (default {_fmt(par.default)})")
    return ap


def resolve(args: argparse.Namespace) -> ExperimentConfig:
    """Merge defaults, config file, and CLI flags into one config."""
    cmd = args.command
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            cfg = parse_config(fh.read(), command=cmd, source=args.config)
    else:
        cfg = ExperimentConfig(cmd, _defaults(cmd))
    schema = SCHEMAS[cmd]
    for key, par in schema.items():
        raw = getattr(args, "opt_" + key)
        if raw is not None:
            cfg.values[key] = _convert(par, key, raw)
    return cfg.seal()


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve(args)
        return run_experiment(cfg, assert_gates=args.assert_gates)
    except (ConfigError, OSError) as exc:
        print(f"percolab: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
