"""Command line driver.

    crosslab run --config exp.cfg [--out DIR] [--threads K] [--seed S] [--tolerance-scale F]
    crosslab presets

Exit status: 0 all checks passed, 1 a check failed, 2 configuration error,
3 numerical failure.  A configuration error writes nothing.
"""
from __future__ import annotations

import argparse
import csv
import json
import platform
import sys
import time
from importlib import metadata
from pathlib import Path

import numpy as np
import scipy

from . import config as cfgmod
from ._parallel import resolve_workers
from .algebra import random_kernel
from .duality import plancherel_l2_check, roundtrip_check, spectral_duality_probe, trace_duality_check
from .errors import ConfigError, NumericalError
from .presets import list_presets
from .spectral import (
    bands, energy_grid, ids_dual, ids_shubin, shubin_projection_comparison, spectral_measure_support_check,
)
from .traces import shubin_sequence, tau_kernel, trace_report

EXIT_OK, EXIT_CHECK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(bool(v)).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % v
    return str(v)


def write_csv(path: Path, header, rows, config_hash: str):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# config_sha256={config_hash}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _jsonable(o):
    if isinstance(o, dict):
        return {str(k): _jsonable(v) for k, v in o.items()}
    if isinstance(o, (list, tuple)):
        return [_jsonable(v) for v in o]
    if isinstance(o, np.ndarray):
        return _jsonable(o.tolist())
    if isinstance(o, (np.bool_, bool)):
        return bool(o)
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (complex, np.complexfloating)):
        return {"re": float(o.real), "im": float(o.imag)}
    if isinstance(o, (np.floating, float)):
        v = float(o)
        return v if np.isfinite(v) else str(v)
    return o


def write_json(path: Path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


# -- computations -------------------------------------------------------------
# each returns (json payload, {csv name: (header, rows)}, {check: bool}, {tolerance: value})

def _trace_check(cfg, a, opts):
    num = cfg.numeric
    rep = trace_report(a, x_resolution=num["x_grid"], t_resolution=num["t_grid"], mode_cutoff=num["mode_cutoff"],
                       weight_radius=num["weight_radius"], box_radius=num["box_radius"], x0=num["x"],
                       shubin_radii=num["shubin_radii"], zone_resolution=num["zone_resolution"],
                       workers=opts.workers)
    tau = rep.tau_kernel
    rows = [(n, (2 * n + 1) ** a.rank, v, abs(v - tau)) for n, v in rep.shubin_sequence]
    tol = {k: v * opts.scale for k, v in rep.tolerances.items()}
    return rep.to_dict(), {"shubin": (("n", "box_size", "value", "abs_error"), rows)}, rep.checks(opts.scale), tol


def _ids(cfg, a, opts):
    num = cfg.numeric
    E = energy_grid(a, num["energy_grid"])
    n = num["box_radius"] or 1000
    sh = ids_shubin(a, num["x"], n, E)
    payload = {"box_radius": n, "energy_range": [E[0], E[-1]], "monotone": sh.is_monotone()}
    checks = {"monotone": sh.is_monotone()}
    tol = {}
    header, cols = ["E", "ids_shubin"], [E, sh.values]
    if a.system.space.finite:
        du = ids_dual(a, energies=E, resolution=num["zone_resolution"], workers=opts.workers)
        dist = sh.sup_distance(du)
        header.append("ids_dual")
        cols.append(du.values)
        payload["sup_distance"] = dist
        tol["ids_agreement"] = num["ids_tolerance"] * opts.scale
        checks["ids_agreement"] = dist <= tol["ids_agreement"]
        checks["monotone"] = checks["monotone"] and du.is_monotone()
    return payload, {"ids": (header, list(zip(*cols)))}, checks, tol


def _bands(cfg, a, opts):
    bs = bands(a, cfg.numeric["zone_resolution"], opts.workers)
    header = [f"t_hat_{i}" for i in range(a.rank)] + [f"band_{i + 1}" for i in range(bs.count)]
    payload = {"band_union": bs.union(), "gaps": bs.gaps(), "modulus": bs.modulus(),
               "band_intervals": bs.intervals()}
    checks = {"sorted": bool(np.all(np.diff(bs.bands, axis=1) >= 0))}
    return payload, {"bands": (header, bs.rows())}, checks, {}


def _support_check(cfg, a, opts):
    num = cfg.numeric
    rep = spectral_measure_support_check(a, num["box_radius"] or 200, num["zone_resolution"], workers=opts.workers)
    tol = {"max_edge_states": num["max_edge_states"]}
    checks = {"edge_states": rep.max_edge_states <= num["max_edge_states"]}
    rows = [(i, p["hausdorff"], p["hausdorff_bulk"], p["edge_states"]) for i, p in enumerate(rep.per_x)]
    return rep.to_dict(), {"support": (("sample", "hausdorff", "hausdorff_bulk", "edge_states"), rows)}, checks, tol


def _duality_check(cfg, a, opts):
    num = cfg.numeric
    tf, tb, dev = trace_duality_check(a)
    rt = roundtrip_check(a)
    mult = plancherel_l2_check(a, a)["multiplicativity_dev"]
    rng = np.random.default_rng(opts.seed)
    rows = []
    for i in range(num["random_kernels"]):
        x = random_kernel(a.system, rng, num["random_radius"], num["random_degree"])
        y = random_kernel(a.system, rng, num["random_radius"], num["random_degree"])
        f, b, d = trace_duality_check(x)
        pl = plancherel_l2_check(x, y)
        # relative to the size of the numbers involved
        scale = max(1.0, f)
        rows.append((i, f, b, d / scale, roundtrip_check(x), pl["multiplicativity_dev"] / scale))
    tol = {"trace": 1e-12 * opts.scale, "roundtrip": 1e-12 * opts.scale, "multiplicativity": 1e-10 * opts.scale}
    worst = {k: max([r[j] for r in rows], default=0.0) for k, j in (("trace", 3), ("roundtrip", 4), ("multiplicativity", 5))}
    payload = {"tau_forward": tf, "tau_backward": tb, "deviation": dev, "roundtrip_dev": rt,
               "multiplicativity_dev": mult, "random_kernels": num["random_kernels"], "seed": opts.seed,
               "random_worst": worst}
    checks = {
        "trace": dev <= tol["trace"] * max(1.0, tf) and worst["trace"] <= tol["trace"],
        "roundtrip": rt <= tol["roundtrip"] and worst["roundtrip"] <= tol["roundtrip"],
        "multiplicativity": mult <= tol["multiplicativity"] * max(1.0, tf) and worst["multiplicativity"] <= tol["multiplicativity"],
    }
    header = ("index", "tau_forward", "tau_backward", "rel_deviation", "roundtrip_dev", "rel_multiplicativity_dev")
    return payload, {"duality": (header, rows)}, checks, tol


def _aubry_probe(cfg, a, opts):
    num = cfg.numeric
    lam = float(cfg.kernel_spec["lambda"])
    theta = float(a.system.space.matrix[0, 0])
    rep = spectral_duality_probe(lam, theta, num["x_samples"], num["t_samples"], num["n"], num["M"],
                                 energies=energy_grid(a, num["energy_grid"]), ritz_M=num["ritz_M"],
                                 workers=opts.workers)
    tol = {"rescaling_consistency": 0.03 * opts.scale, "ritz_match_min": 0.9}
    header = ("E", "ids_forward", "ids_rescaled_dual", "dual_fiber_counting")
    return rep.to_dict(), {"aubry": (header, rep.rows())}, rep.checks(opts.scale), tol


def _shubin(cfg, a, opts):
    num = cfg.numeric
    tau = tau_kernel(a)
    seq = shubin_sequence(a, num["x"], num["shubin_radii"])
    rows = [(n, (2 * n + 1) ** a.rank, v, abs(v - tau)) for n, v in seq]
    tol = {"relative_deviation_n_ge_320": 0.02 * opts.scale}
    late = [abs(v - tau) for n, v in seq if n >= 320]
    checks = {"converging": all(d <= tol["relative_deviation_n_ge_320"] * tau for d in late)}
    payload = {"tau_kernel": tau, "sequence": [list(p) for p in seq]}
    if num["interval"] is not None:
        if not a.is_selfadjoint():
            raise ConfigError("numeric.interval needs a selfadjoint kernel", "numeric.interval", None)
        comp = shubin_projection_comparison(a, num["x"], num["interval"], num["box_radius"] or 200, num["pad"])
        payload["projection_comparison"] = comp.to_dict()
    return payload, {"shubin": (("n", "box_size", "value", "abs_error"), rows)}, checks, tol


COMPUTE = {
    "trace-check": _trace_check, "ids": _ids, "bands": _bands, "support-check": _support_check,
    "duality-check": _duality_check, "aubry-probe": _aubry_probe, "shubin": _shubin,
}


class _Opts:
    def __init__(self, workers, seed, scale):
        self.workers, self.seed, self.scale = workers, seed, scale


def _versions():
    try:
        pkg = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        pkg = "unknown"
    return {"crosslab": pkg, "python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__}


def run(config_path, out=None, threads=1, seed=0, tolerance_scale=1.0, stderr=None) -> int:
    stderr = stderr or sys.stderr
    try:
        cfg = cfgmod.load_file(config_path)
        if tolerance_scale <= 0:
            raise ConfigError("must be positive", "--tolerance-scale", None)
        if seed < 0 or seed >= 2 ** 64:
            raise ConfigError("must be an unsigned 64-bit integer", "--seed", None)
        if threads < 0:
            raise ConfigError("must be >= 0 (0 = one per core)", "--threads", None)
        outdir = out or cfg.output
        if outdir is None:
            raise ConfigError("no output directory (set output or pass --out)", "output", None)
        a = cfg.build_kernel()
    except ConfigError as exc:
        print(f"config error: {exc}", file=stderr)
        return EXIT_CONFIG

    opts = _Opts(resolve_workers(threads), seed, tolerance_scale)
    outdir = Path(outdir)
    t0 = time.perf_counter()
    status, error = "ok", None
    payload, tables, checks, tol = {}, {}, {}, {}
    try:
        payload, tables, checks, tol = COMPUTE[cfg.computation](cfg, a, opts)
    except ConfigError as exc:
        print(f"config error: {exc}", file=stderr)
        return EXIT_CONFIG
    except (NumericalError, np.linalg.LinAlgError) as exc:
        status, error = "numeric failure", str(exc)
        print(f"numeric failure: {exc}", file=stderr)
    wall = time.perf_counter() - t0

    outdir.mkdir(parents=True, exist_ok=True)
    stem = cfg.computation.replace("-", "_")
    artifacts = []
    for name, (header, rows) in tables.items():
        p = outdir / f"{name}.csv"
        write_csv(p, header, rows, cfg.sha256)
        artifacts.append(p.name)
    if status == "ok":
        write_json(outdir / f"{stem}.json", payload)
        artifacts.append(f"{stem}.json")

    if status != "ok":
        code = EXIT_NUMERIC
    elif not all(checks.values()):
        code = EXIT_CHECK
        status = "check failed"
    else:
        code = EXIT_OK
    manifest = {
        "config": {"path": str(config_path), "sha256": cfg.sha256, "text": cfg.text, "parsed": cfg.echo()},
        "computation": cfg.computation, "status": status, "error": error, "exit_code": code,
        "checks": checks, "tolerances": tol, "tolerance_scale": tolerance_scale, "seed": seed,
        "threads": opts.workers, "wall_time_s": wall, "versions": _versions(), "artifacts": artifacts,
    }
    write_json(outdir / "run_manifest.json", manifest)
    for k, v in checks.items():
        print(f"{'PASS' if v else 'FAIL'}  {k}")
    print(f"{status}: {len(artifacts)} artifacts in {outdir}")
    return code


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="crosslab", description="Crossed-product kernel experiments")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run one experiment from a config file")
    r.add_argument("--config", required=True, help="flat key = value experiment file")
    r.add_argument("--out", help="output directory (overrides the config's output key)")
    r.add_argument("--threads", type=int, default=1, help="worker threads for sweeps, 0 = one per core")
    r.add_argument("--seed", type=int, default=0, help="seed for random-kernel suites")
    r.add_argument("--tolerance-scale", type=float, default=1.0, help="multiplies every assertion tolerance")
    sub.add_parser("presets", help="list the named kernels")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "presets":
        json.dump(list_presets(), sys.stdout, indent=2)
        sys.stdout.write("\n")
        return EXIT_OK
    return run(args.config, args.out, args.threads, args.seed, args.tolerance_scale)


if __name__ == "__main__":
    sys.exit(main())
