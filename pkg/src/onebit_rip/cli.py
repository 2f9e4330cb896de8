"""Reproducible experiment driver.

Every verification in the library is exposed as a subcommand reading a strict
JSON config and writing a CSV plus a sibling manifest.  Identical (config,
seed, build) produce byte-identical CSVs no matter how many worker threads
run the trials; floats are printed with 17 significant digits so the files
round-trip exactly.

Exit codes: 0 all declared checks passed, 1 a statistical or mathematical
check failed, 2 configuration error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from datetime import datetime, timezone
from typing import Any, Callable

import numpy as np

from . import __version__
from .embedding import BitCode, NoiseVector, SensingMatrix, embed, embed_noisy
from .geometry import (
    NoiseModel,
    UnitVector,
    antipodal_gap,
    distorted_from_inner,
    geodesic_from_inner,
)
from .ripcheck import (
    PairSampler,
    geodesic_floor_check,
    scaling_fit,
    sweep_m,
    trial_stream_id,
)
from .stochastics import RngStream, gaussian_vector
from .vctool import (
    PointSet,
    is_shattered,
    lambert_w_minus1,
    packing_estimate,
    vc_lower_bound_search,
    vc_upper_bound,
)

THREADS_ENV = "ONEBIT_RIP_THREADS"

SUBCOMMANDS = ("metric-table", "embed-mc", "rip-sweep", "noisy-floor", "vc")


class ConfigError(Exception):
    """Invalid or inconsistent experiment configuration."""


# ---------------------------------------------------------------------------
# config schema machinery
# ---------------------------------------------------------------------------

def _is_u64(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool) and 0 <= v < 2**64


def _is_int(lo=None, hi=None):
    def check(v):
        if not isinstance(v, int) or isinstance(v, bool):
            return False
        if lo is not None and v < lo:
            return False
        if hi is not None and v > hi:
            return False
        return True

    return check


def _is_real(lo=None, hi=None, lo_open=False, hi_open=False):
    def check(v):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            return False
        if lo is not None and (v <= lo if lo_open else v < lo):
            return False
        if hi is not None and (v >= hi if hi_open else v > hi):
            return False
        return True

    return check


def _is_list_of(elem_check, min_len=1):
    def check(v):
        return isinstance(v, list) and len(v) >= min_len and all(elem_check(e) for e in v)

    return check


def _is_choice(*options):
    return lambda v: v in options


class Field:
    def __init__(self, check: Callable[[Any], bool], descr: str, required: bool = True, default=None):
        self.check = check
        self.descr = descr
        self.required = required
        self.default = default


def _validate_config(config: dict, schema: dict[str, Field], command: str) -> dict:
    if not isinstance(config, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(config) - set(schema))
    if unknown:
        raise ConfigError(f"unknown config keys for {command}: {', '.join(unknown)}")
    out = {}
    for name, field in schema.items():
        if name in config:
            value = config[name]
            if not field.check(value):
                raise ConfigError(f"config key {name!r}: expected {field.descr}, got {value!r}")
            out[name] = value
        elif field.required:
            raise ConfigError(f"config key {name!r} is required ({field.descr})")
        else:
            out[name] = field.default
    return out


_ASCENDING_M_GRID = Field(
    _is_list_of(_is_int(lo=1)), "ascending list of positive measurement counts"
)


def _check_m_grid(grid) -> list[int]:
    if grid != sorted(set(grid)):
        raise ConfigError("m_grid must be strictly ascending")
    return [int(m) for m in grid]


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
    os.replace(tmp, path)


def _write_manifest(path: str, payload: dict) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, path)


def _write_codes(path: str, records: list[bytes]) -> None:
    tmp = path + ".tmp"
    with open(tmp, "wb") as fh:
        for rec in records:
            fh.write(rec)
    os.replace(tmp, path)


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat()


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_metric_table(cfg: dict, seed: int, threads: int, dump: bool):
    schema = {
        "rho_grid": Field(_is_list_of(_is_real(lo=-1.0, hi=1.0)), "list of correlations in [-1, 1]"),
        "sigma_grid": Field(_is_list_of(_is_real(lo=0.0)), "list of noise levels >= 0"),
        "out": Field(lambda v: isinstance(v, str) and v, "output path", required=False),
        "seed": Field(_is_u64, "unsigned 64-bit seed", required=False, default=0),
    }
    cfg = _validate_config(cfg, schema, "metric-table")
    header = ["rho", "sigma", "d", "d_sigma", "gap", "antipodal_gap"]
    rows = []
    passed = True
    for sigma in cfg["sigma_grid"]:
        gap_sup = antipodal_gap(NoiseModel(sigma))
        for rho in cfg["rho_grid"]:
            d = geodesic_from_inner(float(rho))
            d_sigma = distorted_from_inner(float(rho), sigma)
            gap = d - d_sigma
            if gap > gap_sup + 1e-12:
                passed = False
            rows.append([rho, sigma, d, d_sigma, gap, gap_sup])
    summary = {"rows": len(rows), "max_gap_bound_respected": passed}
    return cfg, header, rows, summary, passed, []


def _correlated_pair(stream: RngStream, n: int, rho: float) -> tuple[UnitVector, UnitVector]:
    """Unit pair with exact inner product rho (needs n >= 2)."""
    x = gaussian_vector(stream, n)
    x /= np.linalg.norm(x)
    while True:
        u = gaussian_vector(stream, n)
        u -= np.dot(u, x) * x
        norm = float(np.linalg.norm(u))
        if norm > 1e-12:
            u /= norm
            break
    y = rho * x + math.sqrt(max(0.0, 1.0 - rho * rho)) * u
    return UnitVector.normalize(x), UnitVector.normalize(y)


def _cmd_embed_mc(cfg: dict, seed: int, threads: int, dump: bool):
    schema = {
        "n": Field(_is_int(lo=2), "ambient dimension >= 2"),
        "rho": Field(_is_real(lo=-1.0, hi=1.0), "correlation in [-1, 1]"),
        "sigma": Field(_is_real(lo=0.0), "noise level >= 0"),
        "m": Field(_is_int(lo=1), "measurement count >= 1"),
        "trials": Field(_is_int(lo=1), "trial count >= 1"),
        "z": Field(_is_real(lo=0.0, lo_open=True), "z multiplier > 0", required=False, default=4.0),
        "min_inside_fraction": Field(_is_real(lo=0.0, hi=1.0), "fraction in [0, 1]", required=False, default=0.95),
        "out": Field(lambda v: isinstance(v, str) and v, "output path", required=False),
        "seed": Field(_is_u64, "unsigned 64-bit seed", required=False),
    }
    cfg = _validate_config(cfg, schema, "embed-mc")
    n, rho, sigma, m, trials = cfg["n"], float(cfg["rho"]), float(cfg["sigma"]), cfg["m"], cfg["trials"]
    z = float(cfg["z"])
    predicted = distorted_from_inner(rho, sigma) if sigma > 0 else geodesic_from_inner(rho)
    half = z * math.sqrt(predicted * (1.0 - predicted) / m)
    ci_lo, ci_hi = max(0.0, predicted - half), min(1.0, predicted + half)

    header = ["trial", "empirical_hamming", "predicted", "ci_lo", "ci_hi", "inside_ci"]
    rows = []
    codes: list[bytes] = []
    inside = 0
    for trial in range(trials):
        A = SensingMatrix.gaussian(RngStream(seed, trial_stream_id(0, trial, trials, 0)), m, n)
        x, y = _correlated_pair(RngStream(seed, trial_stream_id(0, trial, trials, 2)), n, rho)
        if sigma > 0:
            eta = NoiseVector.gaussian(RngStream(seed, trial_stream_id(0, trial, trials, 1)), m, sigma)
            cx, cy = embed_noisy(A, eta, x), embed_noisy(A, eta, y)
        else:
            cx, cy = embed(A, x), embed(A, y)
        from .embedding import hamming

        emp = hamming(cx, cy)
        ok = ci_lo <= emp <= ci_hi
        inside += ok
        rows.append([trial, emp, predicted, ci_lo, ci_hi, ok])
        if dump:
            codes.append(cx.to_bytes())
            codes.append(cy.to_bytes())
    fraction = inside / trials
    passed = fraction >= float(cfg["min_inside_fraction"])
    summary = {"inside_fraction": fraction, "predicted": predicted}
    return cfg, header, rows, summary, passed, codes


def _sampler_from_cfg(cfg: dict) -> PairSampler:
    return PairSampler(
        strategy=cfg["strategy"],
        n=cfg["n"],
        s=cfg["s"],
        count=cfg["pairs_per_trial"],
        epsilon=cfg["epsilon"],
        antipodal_offset=cfg["antipodal_offset"],
    )


def _cmd_rip_sweep(cfg: dict, seed: int, threads: int, dump: bool):
    schema = {
        "n": Field(_is_int(lo=1), "ambient dimension >= 1"),
        "s": Field(_is_int(lo=1), "sparsity >= 1"),
        "sigma": Field(_is_real(lo=0.0), "noise level >= 0"),
        "m_grid": _ASCENDING_M_GRID,
        "trials": Field(_is_int(lo=1), "trial count >= 1"),
        "pairs_per_trial": Field(_is_int(lo=1), "pairs per trial >= 1"),
        "strategy": Field(_is_choice("iid-uniform", "shared-support", "disjoint-support", "near-antipodal", "epsilon-close", "mixed"), "pair strategy", required=False, default="mixed"),
        "epsilon": Field(_is_real(lo=0.0, hi=1.0, lo_open=True, hi_open=True), "epsilon in (0, 1)", required=False),
        "antipodal_offset": Field(_is_real(lo=0.0, hi=1.0, lo_open=True, hi_open=True), "offset in (0, 1)", required=False, default=0.005),
        "metric": Field(_is_choice("geodesic", "distorted"), "reference metric", required=False),
        "slope_band": Field(_is_list_of(_is_real(), min_len=2), "[lo, hi] slope band", required=False, default=[-0.6, -0.4]),
        "min_r_squared": Field(_is_real(lo=0.0, hi=1.0), "minimum r^2", required=False, default=0.95),
        "out": Field(lambda v: isinstance(v, str) and v, "output path", required=False),
        "seed": Field(_is_u64, "unsigned 64-bit seed", required=False),
    }
    cfg = _validate_config(cfg, schema, "rip-sweep")
    m_grid = _check_m_grid(cfg["m_grid"])
    if len(cfg["slope_band"]) != 2 or cfg["slope_band"][0] > cfg["slope_band"][1]:
        raise ConfigError("slope_band must be [lo, hi] with lo <= hi")
    try:
        sampler = _sampler_from_cfg(cfg)
        dumped: dict[tuple[int, int], list[bytes]] = {}
        sink = None
        if dump:
            def sink(block, trial, words, m):
                dumped[(block, trial)] = [BitCode(w, m).to_bytes() for w in words]

        points = sweep_m(
            cfg["n"], cfg["s"], float(cfg["sigma"]), m_grid, cfg["trials"], sampler, seed,
            metric=cfg["metric"], threads=threads, code_sink=sink,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    fit = scaling_fit(points)

    header = ["kind", "m", "trial", "sup_dev", "mean_dev", "q95_dev", "slope", "intercept", "r_squared"]
    rows = []
    for point in points:
        for trial, rep in enumerate(point.reports):
            rows.append(["trial", point.m, trial, rep.sup_dev, rep.mean_dev, rep.q95_dev, None, None, None])
    rows.append(["summary", None, None, None, None, None, fit.slope, fit.intercept, fit.r_squared])

    lo, hi = float(cfg["slope_band"][0]), float(cfg["slope_band"][1])
    passed = lo <= fit.slope <= hi and fit.r_squared >= float(cfg["min_r_squared"])
    summary = {
        "slope": fit.slope,
        "r_squared": fit.r_squared,
        "mean_sup_dev": {str(p.m): p.mean_sup_dev for p in points},
    }
    codes = [rec for key in sorted(dumped) for rec in dumped[key]]
    return cfg, header, rows, summary, passed, codes


def _cmd_noisy_floor(cfg: dict, seed: int, threads: int, dump: bool):
    schema = {
        "n": Field(_is_int(lo=1), "ambient dimension >= 1"),
        "s": Field(_is_int(lo=1), "sparsity >= 1"),
        "sigma": Field(_is_real(lo=0.0, lo_open=True), "noise level > 0"),
        "m_grid": _ASCENDING_M_GRID,
        "trials": Field(_is_int(lo=1), "trial count >= 1"),
        "pairs_per_trial": Field(_is_int(lo=1), "pairs per trial >= 1"),
        "strategy": Field(_is_choice("near-antipodal", "mixed"), "pair strategy", required=False, default="near-antipodal"),
        "epsilon": Field(_is_real(lo=0.0, hi=1.0, lo_open=True, hi_open=True), "epsilon in (0, 1)", required=False),
        "antipodal_offset": Field(_is_real(lo=0.0, hi=1.0, lo_open=True, hi_open=True), "offset in (0, 1)", required=False, default=0.005),
        "slack": Field(_is_real(lo=0.0, lo_open=True), "floor slack > 0", required=False, default=0.02),
        "distorted_tol": Field(_is_real(lo=0.0, lo_open=True), "distorted tolerance > 0", required=False, default=0.05),
        "out": Field(lambda v: isinstance(v, str) and v, "output path", required=False),
        "seed": Field(_is_u64, "unsigned 64-bit seed", required=False),
    }
    cfg = _validate_config(cfg, schema, "noisy-floor")
    m_grid = _check_m_grid(cfg["m_grid"])
    try:
        sampler = _sampler_from_cfg(cfg)
        report = geodesic_floor_check(
            cfg["n"], cfg["s"], float(cfg["sigma"]), m_grid, cfg["trials"], sampler, seed,
            slack=float(cfg["slack"]), distorted_tol=float(cfg["distorted_tol"]), threads=threads,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    header = ["kind", "m", "trial", "metric", "sup_dev", "mean_dev", "q95_dev", "floor", "passed"]
    rows = []
    for point in report.points:
        for trial, rep in enumerate(point.geodesic):
            rows.append(["trial", point.m, trial, "geodesic", rep.sup_dev, rep.mean_dev, rep.q95_dev, report.floor, None])
        for trial, rep in enumerate(point.distorted):
            rows.append(["trial", point.m, trial, "distorted", rep.sup_dev, rep.mean_dev, rep.q95_dev, report.floor, None])
    rows.append(["summary", None, None, None, None, None, None, report.floor, report.passed])
    summary = {
        "floor": report.floor,
        "floor_respected": report.floor_respected,
        "floor_attained": report.floor_attained,
        "distorted_ok": report.distorted_ok,
    }
    return cfg, header, rows, summary, report.passed, []


def _vc_shatter_basis(cfg: dict, seed: int):
    header = ["mode", "n", "s", "k", "dichotomy_mask", "support", "pole", "shattered", "achieved", "upper_bound"]
    rows = []
    passed = True
    for s in range(1, cfg["s_max"] + 1):
        basis = PointSet(np.eye(s))
        res = is_shattered(basis, s, cls="hemisphere")
        passed = passed and res.shattered
        bound = vc_upper_bound(s, s)
        rows.append(["shatter-basis", s, s, s, None, None, None, res.shattered, res.achieved_count, bound])
        for dich in sorted(res.witnesses, key=lambda d: d.mask):
            support, pole = res.witnesses[dich]
            rows.append([
                "witness", s, s, s, dich.mask,
                ";".join(str(i) for i in support),
                ";".join(_fmt(c) for c in pole),
                None, None, None,
            ])
    return header, rows, {"s_max": cfg["s_max"], "all_shattered": passed}, passed


def _vc_random_probes(cfg: dict, seed: int):
    header = ["mode", "n", "s", "k", "probe", "shattered", "achieved", "upper_bound"]
    rows = []
    shattered_total = 0
    for s in cfg["s_list"]:
        stream = RngStream(seed, stream_id=s)
        for probe in range(cfg["probes"]):
            pts = gaussian_vector(stream, (s + 1) * s).reshape(s + 1, s)
            pts /= np.linalg.norm(pts, axis=1, keepdims=True)
            res = is_shattered(PointSet(pts), s, cls="hemisphere")
            shattered_total += res.shattered
            rows.append(["random-probe", s, s, s + 1, probe, res.shattered, res.achieved_count, vc_upper_bound(s, s)])
    passed = shattered_total == 0
    return header, rows, {"shattered_total": shattered_total}, passed


def _vc_search(cfg: dict, seed: int):
    header = ["mode", "n", "s", "class", "size", "upper_bound", "ok"]
    rows = []
    passed = True
    stream_id = 0
    for n in range(1, cfg["n_max"] + 1):
        for s in range(1, min(n, cfg["s_max"]) + 1):
            stream = RngStream(seed, stream_id=stream_id)
            stream_id += 1
            found = vc_lower_bound_search(n, s, cfg["cls"], cfg["budget"], stream)
            bound = vc_upper_bound(n, s)
            ok = found.size <= bound
            passed = passed and ok
            rows.append(["search", n, s, cfg["cls"], found.size, bound, ok])
    return header, rows, {"all_below_bound": passed}, passed


def _vc_lambert(cfg: dict, seed: int):
    pts = cfg["grid_points"]
    xs = np.linspace(-1.0 / math.e + 1e-6, -1e-6, pts)
    ws = lambert_w_minus1(xs)
    residual = np.abs(ws * np.exp(ws) - xs)
    rel = residual / np.abs(xs)
    lower = np.log(xs * xs)
    lemma_ok = bool(np.all(ws >= lower))
    residual_ok = bool(np.all(rel <= 1e-12))
    header = ["mode", "x", "w", "relative_residual", "lower_bound", "ok"]
    rows = []
    step = max(1, pts // 20)
    for i in range(0, pts, step):
        rows.append(["lambert", float(xs[i]), float(ws[i]), float(rel[i]), float(lower[i]), bool(ws[i] >= lower[i])])
    passed = lemma_ok and residual_ok
    rows.append(["summary", None, None, float(np.max(rel)), None, passed])
    return header, rows, {"max_relative_residual": float(np.max(rel)), "lemma_ok": lemma_ok}, passed


def _vc_packing(cfg: dict, seed: int):
    header = ["mode", "n", "s", "sigma", "t", "count", "exponent_cap", "ok"]
    grid = sorted(cfg["t_grid"], reverse=True)
    counts = []
    for i, t in enumerate(grid):
        stream = RngStream(seed, stream_id=i)
        counts.append(packing_estimate(cfg["n"], cfg["s"], float(cfg["sigma"]), float(t), cfg["candidates"], cfg["empirical_points"], stream))
    cap = vc_upper_bound(cfg["n"], cfg["s"]) + 1.0
    passed = all(counts[i] <= counts[i + 1] for i in range(len(counts) - 1))
    for i in range(1, len(grid)):
        dx = math.log(1.0 / grid[i] ** 2) - math.log(1.0 / grid[i - 1] ** 2)
        dy = math.log(counts[i]) - math.log(counts[i - 1]) if counts[i - 1] > 0 else 0.0
        if dy > cap * dx + 1e-9:
            passed = False
    rows = [["packing", cfg["n"], cfg["s"], float(cfg["sigma"]), float(t), c, cap, None] for t, c in zip(grid, counts)]
    rows.append(["summary", cfg["n"], cfg["s"], float(cfg["sigma"]), None, None, cap, passed])
    return header, rows, {"counts": dict(zip(map(str, grid), counts))}, passed


def _cmd_vc(cfg: dict, seed: int, threads: int, dump: bool):
    base_schema = {
        "mode": Field(_is_choice("shatter-basis", "random-probes", "search", "lambert", "packing"), "vc mode"),
        "out": Field(lambda v: isinstance(v, str) and v, "output path", required=False),
        "seed": Field(_is_u64, "unsigned 64-bit seed", required=False),
    }
    mode_schemas = {
        "shatter-basis": {"s_max": Field(_is_int(lo=1, hi=10), "max sparsity", required=False, default=6)},
        "random-probes": {
            "s_list": Field(_is_list_of(_is_int(lo=2, hi=6)), "sparsity list", required=False, default=[2, 3]),
            "probes": Field(_is_int(lo=1), "probe count", required=False, default=1000),
        },
        "search": {
            "n_max": Field(_is_int(lo=1), "max ambient dimension", required=False, default=12),
            "s_max": Field(_is_int(lo=1), "max sparsity", required=False, default=4),
            "budget": Field(_is_int(lo=1), "search budget", required=False, default=10_000),
            "cls": Field(_is_choice("hemisphere", "wedge"), "set class", required=False, default="hemisphere"),
        },
        "lambert": {"grid_points": Field(_is_int(lo=2), "grid size", required=False, default=10_000)},
        "packing": {
            "n": Field(_is_int(lo=1), "ambient dimension"),
            "s": Field(_is_int(lo=1), "sparsity"),
            "sigma": Field(_is_real(lo=0.0), "noise level >= 0", required=False, default=0.0),
            "t_grid": Field(_is_list_of(_is_real(lo=0.0, hi=1.0, lo_open=True, hi_open=True)), "separations in (0, 1)", required=False, default=[0.5, 0.3, 0.2]),
            "candidates": Field(_is_int(lo=1), "candidate wedges", required=False, default=512),
            "empirical_points": Field(_is_int(lo=1), "cloud size", required=False, default=2048),
        },
    }
    if not isinstance(cfg, dict) or "mode" not in cfg:
        raise ConfigError("vc config requires a 'mode' key")
    mode = cfg["mode"]
    if mode not in mode_schemas:
        raise ConfigError(f"unknown vc mode {mode!r}")
    schema = dict(base_schema)
    schema.update(mode_schemas[mode])
    cfg = _validate_config(cfg, schema, f"vc/{mode}")
    runner = {
        "shatter-basis": _vc_shatter_basis,
        "random-probes": _vc_random_probes,
        "search": _vc_search,
        "lambert": _vc_lambert,
        "packing": _vc_packing,
    }[mode]
    try:
        header, rows, summary, passed = runner(cfg, seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return cfg, header, rows, summary, passed, []


_COMMANDS = {
    "metric-table": _cmd_metric_table,
    "embed-mc": _cmd_embed_mc,
    "rip-sweep": _cmd_rip_sweep,
    "noisy-floor": _cmd_noisy_floor,
    "vc": _cmd_vc,
}


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="onebit-rip", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON experiment configuration")
        p.add_argument("--seed", type=int, default=None, help="unsigned 64-bit seed (overrides config)")
        p.add_argument("--out", default=None, help="output CSV path (overrides config)")
        p.add_argument("--threads", type=int, default=None, help=f"worker threads; affects speed only (default ${THREADS_ENV} or 1)")
        p.add_argument("--dump-codes", action="store_true", help="write embedded bit codes next to the CSV")
    return parser


def _resolve_threads(flag: int | None) -> int:
    if flag is not None:
        if flag < 1:
            raise ConfigError("--threads must be >= 1")
        return flag
    env = os.environ.get(THREADS_ENV, "").strip()
    if env:
        try:
            value = int(env)
        except ValueError as exc:
            raise ConfigError(f"{THREADS_ENV} must be an integer, got {env!r}") from exc
        if value < 1:
            raise ConfigError(f"{THREADS_ENV} must be >= 1")
        return value
    return 1


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    started = _utcnow()
    try:
        try:
            with open(args.config) as fh:
                raw_cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(raw_cfg, dict):
            raise ConfigError("config must be a JSON object")

        threads = _resolve_threads(args.threads)
        seed = args.seed if args.seed is not None else raw_cfg.get("seed")
        if seed is None:
            seed = 0
        if not _is_u64(seed):
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {seed!r}")

        cfg, header, rows, summary, passed, codes = _COMMANDS[args.command](raw_cfg, seed, threads, args.dump_codes)

        out = args.out or cfg.get("out")
        if not out:
            raise ConfigError("no output path: set 'out' in the config or pass --out")
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    _write_csv(out, header, rows)
    if args.dump_codes:
        _write_codes(out + ".codes", codes)
    manifest = {
        "artifact_version": __version__,
        "command": args.command,
        "config": {k: v for k, v in cfg.items() if k != "out"},
        "seed": seed,
        "threads": threads,
        "output": os.path.basename(out),
        "started_at": started,
        "finished_at": _utcnow(),
        "summary": summary,
        "checks_passed": bool(passed),
    }
    _write_manifest(out + ".manifest.json", manifest)
    if not passed:
        print(f"{args.command}: declared checks FAILED (see {out})", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
