"""Command-line front end: one subcommand per artifact.

Every command writes its CSV atomically (temp file + rename), then a JSON
manifest recording the full parameter set, the cutoffs actually used,
completeness deficits, seeds, wall time, and a sha256 of every artifact.
Identical flags (and seed) give byte-identical CSV bodies; results are cached
under $CAT_TELECOR_CACHE (default .cache/) keyed by command+params+version.

Exit codes: 0 success, 2 invalid arguments, 3 cutoff exhaustion,
4 unreachable target.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
import time
from multiprocessing import get_context

import numpy as np

from . import __version__
from .algebra import mismatch_curves
from .channel import channel_fidelity, fidelity_sweep, min_iterations_scan
from .deformation import bias_table, deformation_corrected_stats
from .diagnostics import mean_error_probability
from .focklab import uncorrectable_mass
from .params import (
    CodeParams,
    CutoffExhaustionError,
    UnreachableTargetError,
    gamma_from_db,
)
from .syndromes import REFERENCE_GAMMA, SyndromeTable

CACHE_ENV = "CAT_TELECOR_CACHE"


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".12g")


def render_csv(header, rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def atomic_write(path: str, data: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-artifact-")
    try:
        with os.fdopen(fd, "w") as f:
            f.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _sha256(data: str) -> str:
    return hashlib.sha256(data.encode()).hexdigest()


class ResultCache:
    def __init__(self, enabled: bool = True):
        self.root = os.environ.get(CACHE_ENV, ".cache")
        self.enabled = enabled

    def key(self, command: str, params: dict) -> str:
        blob = json.dumps(
            {"command": command, "params": params, "version": __version__},
            sort_keys=True,
        )
        return hashlib.sha256(blob.encode()).hexdigest()

    def path(self, key: str) -> str:
        return os.path.join(self.root, key[:2], key + ".json")

    def load(self, key: str):
        if not self.enabled:
            return None
        p = self.path(key)
        if not os.path.exists(p):
            return None
        with open(p) as f:
            return json.load(f)

    def store(self, key: str, payload: dict) -> None:
        if not self.enabled:
            return
        atomic_write(self.path(key), json.dumps(payload, sort_keys=True))


def write_artifact(args, name: str, params: dict, csv_text: str, info: dict,
                   cache_key: str | None, cache: ResultCache, started: float,
                   stdout_line: str | None = None) -> None:
    out_csv = os.path.join(args.out_dir, f"{name}.csv")
    atomic_write(out_csv, csv_text)
    manifest = {
        "command": name,
        "version": __version__,
        "params": params,
        "info": info,
        "wall_time_s": round(time.time() - started, 3),
        "artifacts": [
            {"path": os.path.basename(out_csv), "sha256": _sha256(csv_text),
             "bytes": len(csv_text.encode())}
        ],
        "cache": {"enabled": cache.enabled, "key": cache_key},
    }
    atomic_write(os.path.join(args.out_dir, f"{name}_manifest.json"),
                 json.dumps(manifest, indent=2, sort_keys=True))
    if stdout_line:
        print(stdout_line)
    print(f"wrote {out_csv}")


def _resolve_gamma(args, parser, required: bool = True) -> float | None:
    db = getattr(args, "gamma_db", None)
    frac = getattr(args, "gamma", None)
    if db is not None and frac is not None:
        parser.error("give either --gamma-db or --gamma, not both")
    if db is None and frac is None:
        if required:
            parser.error("one of --gamma-db or --gamma is required")
        return None
    g = gamma_from_db(db) if db is not None else frac
    if not 0.0 <= g < 1.0:
        parser.error(f"loss fraction {g} outside [0, 1)")
    return g


def _float_list(text: str):
    try:
        return [float(t) for t in text.split(",") if t != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated float list: {text!r}")


def _int_list(text: str):
    try:
        return [int(t) for t in text.split(",") if t != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated int list: {text!r}")


def _grid(lo: float, hi: float, step: float):
    n = int(round((hi - lo) / step))
    return [round(lo + i * step, 10) for i in range(n + 1)]


# ---------------------------------------------------------------------------
# Parallel helpers (workers must stay module-level for pickling).
# ---------------------------------------------------------------------------


def _parallel_map(fn, items, jobs: int):
    """Order-preserving map; output is independent of the worker count."""
    if jobs <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    ctx = get_context("fork")
    with ctx.Pool(min(jobs, len(items))) as pool:
        return pool.map(fn, items, chunksize=1)


def _fidelity_cell(cell):
    L, alpha, N, gamma_total = cell
    f = channel_fidelity(CodeParams(int(L), float(alpha)), gamma_total, int(N))
    return f


def _table1_cell(cell):
    L, gamma_total, target, alpha_step, alpha_max, n_budget = cell
    r = min_iterations_scan(L, gamma_total, target, alpha_step=alpha_step,
                            alpha_max=alpha_max, n_budget=n_budget)
    return r


def _mep_cell(cell):
    L, alpha, gamma_total, N = cell
    return mean_error_probability(int(L), float(alpha), gamma_total, int(N))


# ---------------------------------------------------------------------------
# Subcommands.
# ---------------------------------------------------------------------------


def cmd_fock_hist(args, parser, cache: ResultCache) -> int:
    t0 = time.time()
    g = _resolve_gamma(args, parser)
    params = {"L": args.L, "alpha": args.alpha, "gamma": g, "l_cap": args.l_cap}
    key = cache.key("fock_hist", params)
    hit = cache.load(key)
    if hit:
        write_artifact(args, "fock_hist", params, hit["csv"], hit["info"], key, cache, t0)
        return 0
    code = CodeParams(args.L, args.alpha, g)
    n, p_ok, p_bad, ok_mass, bad_mass = uncorrectable_mass(code, args.J, args.l_cap)
    csv_text = render_csv(["n", "p_correctable", "p_uncorrectable"],
                          list(zip(n.tolist(), p_ok, p_bad)))
    info = {
        "gamma_total": g,
        "codeword": args.J,
        "correctable_mass": ok_mass,
        "uncorrectable_mass": bad_mass,
        "cutoffs": code.cutoffs_used(),
    }
    cache.store(key, {"csv": csv_text, "info": info})
    write_artifact(args, "fock_hist", params, csv_text, info, key, cache, t0)
    return 0


def cmd_pauli_map(args, parser, cache: ResultCache) -> int:
    t0 = time.time()
    params = {"L": args.L, "alpha": args.alpha, "n_max": args.n_max,
              "m_max": args.m_max, "reference_gamma": args.reference_gamma}
    key = cache.key("pauli_map", params)
    hit = cache.load(key)
    if hit:
        write_artifact(args, "pauli_map", params, hit["csv"], hit["info"], key, cache, t0)
        return 0
    code = CodeParams(args.L, args.alpha, args.reference_gamma)
    n_tot = max(code.n_total, args.n_max + args.m_max)
    table = SyndromeTable.build(code, n_total=n_tot)
    cls = table.classification()
    rows = []
    for n in range(args.n_max + 1):
        for m in range(args.m_max + 1):
            rows.append((n, m, bool(cls.x_flip[n, m]), bool(cls.z_flip[n, m]),
                         bool(cls.failure[n, m]), cls.deformation[n, m]))
    csv_text = render_csv(["n", "m", "x_flip", "z_flip", "failure", "deformation"], rows)
    info = {
        "reference_gamma": args.reference_gamma,
        "n_total": table.n_total,
        "completeness_deficit": table.completeness_deficit,
        "unclassifiable_cells": int(np.sum(cls.unclassifiable)),
    }
    cache.store(key, {"csv": csv_text, "info": info})
    write_artifact(args, "pauli_map", params, csv_text, info, key, cache, t0)
    return 0


def cmd_fidelity(args, parser, cache: ResultCache) -> int:
    t0 = time.time()
    g = _resolve_gamma(args, parser)
    params = {"L": args.L, "alpha": args.alpha, "gamma_total": g, "N": args.N}
    key = cache.key("fidelity", params)
    hit = cache.load(key)
    if hit:
        write_artifact(args, "fidelity", params, hit["csv"], hit["info"], key, cache, t0,
                       stdout_line=f"F_C = {hit['info']['fidelity']:.10f}")
        return 0
    f, sop = channel_fidelity(CodeParams(args.L, args.alpha), g, args.N,
                              return_superop=True)
    csv_text = render_csv(["L", "alpha", "N", "gamma_total", "F_C"],
                          [(args.L, args.alpha, args.N, g, f)])
    info = {
        "fidelity": f,
        "gamma_total": g,
        "segment_gamma": sop.code.gamma,
        "completeness_deficit": sop.completeness_deficit,
        "n_total_used": sop.n_total_used,
        "l_orders_used": sop.l_orders_used,
        "unclassifiable_cells": sop.unclassifiable_cells,
    }
    cache.store(key, {"csv": csv_text, "info": info})
    write_artifact(args, "fidelity", params, csv_text, info, key, cache, t0,
                   stdout_line=f"F_C = {f:.10f}")
    return 0


def cmd_table1(args, parser, cache: ResultCache) -> int:
    t0 = time.time()
    g = _resolve_gamma(args, parser)
    params = {"L_list": args.L_list, "gamma_total": g, "targets": args.targets,
              "alpha_step": args.alpha_step, "alpha_max": args.alpha_max,
              "n_budget": args.n_budget}
    key = cache.key("table1", params)
    hit = cache.load(key)
    if hit:
        write_artifact(args, "table1", params, hit["csv"], hit["info"], key, cache, t0)
        return 0
    cells = [(L, g, tgt, args.alpha_step, args.alpha_max, args.n_budget)
             for L in args.L_list for tgt in args.targets]
    results = _parallel_map(_table1_cell, cells, args.jobs)
    rows = [(r.L, r.f_target, r.n_min, r.alpha, r.fidelity, r.peak_alpha,
             r.peak_at_edge) for r in results]
    csv_text = render_csv(
        ["L", "F_target", "N", "alpha", "F_C", "peak_alpha", "peak_at_edge"], rows)
    info = {
        "gamma_total": g,
        "evaluations": sum(r.evaluations for r in results),
        "non_monotone": [r.non_monotone for r in results if r.non_monotone],
    }
    cache.store(key, {"csv": csv_text, "info": info})
    write_artifact(args, "table1", params, csv_text, info, key, cache, t0)
    return 0


_SWEEP_KEYS = {"L_list", "gamma_db", "gamma", "N_list", "alpha_min", "alpha_max",
               "alpha_step"}


def cmd_sweep(args, parser, cache: ResultCache) -> int:
    t0 = time.time()
    with open(args.config) as f:
        cfg = json.load(f)
    unknown = set(cfg) - _SWEEP_KEYS
    if unknown:
        parser.error(f"unknown config keys: {sorted(unknown)}")
    for req in ("L_list", "N_list"):
        if req not in cfg:
            parser.error(f"config key {req!r} is required")
    if ("gamma_db" in cfg) == ("gamma" in cfg):
        parser.error("config needs exactly one of gamma_db / gamma")
    g = gamma_from_db(cfg["gamma_db"]) if "gamma_db" in cfg else cfg["gamma"]
    alpha_grid = _grid(cfg.get("alpha_min", 1.0), cfg.get("alpha_max", 6.0),
                       cfg.get("alpha_step", 0.1))
    params = {"config": cfg}
    key = cache.key("sweep", params)
    hit = cache.load(key)
    if hit:
        write_artifact(args, "sweep", params, hit["csv"], hit["info"], key, cache, t0)
        return 0
    cells = [(L, a, N, g) for L in cfg["L_list"] for N in cfg["N_list"]
             for a in alpha_grid]
    fs = _parallel_map(_fidelity_cell, cells, args.jobs)
    rows = []
    i = 0
    for L in cfg["L_list"]:
        for N in cfg["N_list"]:
            block = fs[i:i + len(alpha_grid)]
            i += len(alpha_grid)
            kpeak = int(np.argmax(block))
            at_edge = kpeak in (0, len(block) - 1)
            for idx, (a, f) in enumerate(zip(alpha_grid, block)):
                rows.append((L, a, N, g, f, idx == kpeak, at_edge))
    csv_text = render_csv(
        ["L", "alpha", "N", "gamma_total", "F_C", "is_peak", "peak_at_edge"], rows)
    info = {"gamma_total": g, "cells": len(cells)}
    cache.store(key, {"csv": csv_text, "info": info})
    write_artifact(args, "sweep", params, csv_text, info, key, cache, t0)
    return 0


def cmd_mep(args, parser, cache: ResultCache) -> int:
    t0 = time.time()
    g = _resolve_gamma(args, parser)
    alpha_grid = args.alpha_grid
    params = {"L": args.L, "alpha_grid": alpha_grid, "gamma_total": g,
              "N_list": args.N_list}
    key = cache.key("mep", params)
    hit = cache.load(key)
    if hit:
        write_artifact(args, "mep", params, hit["csv"], hit["info"], key, cache, t0)
        return 0
    cells = [(args.L, a, g, N) for N in args.N_list for a in alpha_grid]
    ps = _parallel_map(_mep_cell, cells, args.jobs)
    rows = [(args.L, a, N, p)
            for (N, a), p in zip(((N, a) for N in args.N_list for a in alpha_grid), ps)]
    csv_text = render_csv(["L", "alpha", "N", "p_err"], rows)
    info = {"gamma_total": g}
    cache.store(key, {"csv": csv_text, "info": info})
    write_artifact(args, "mep", params, csv_text, info, key, cache, t0)
    return 0


def cmd_deform_mc(args, parser, cache: ResultCache) -> int:
    t0 = time.time()
    g = _resolve_gamma(args, parser)
    params = {"L": args.L, "alpha_opt": args.alpha_opt, "f_opt": args.f_opt,
              "fractions": args.fractions, "gamma_total": g, "N": args.N,
              "trials": args.trials, "seed": args.seed}
    key = cache.key("deform_mc", params)
    hit = cache.load(key)
    if hit:
        write_artifact(args, "deform_mc", params, hit["csv"], hit["info"], key, cache, t0)
        return 0
    rows = deformation_corrected_stats(args.L, args.alpha_opt, args.f_opt,
                                       args.fractions, g, args.N, args.trials,
                                       args.seed)
    csv_text = render_csv(
        ["L", "alpha_fraction", "alpha", "delta_f", "delta_f_opt", "pct_fail",
         "n_success", "trials"],
        [(r.L, r.fraction, r.alpha, r.delta_f, r.delta_f_opt, r.pct_fail,
          r.n_success, r.trials) for r in rows])
    info = {"gamma_total": g, "seed": args.seed, "generator": "PCG64",
            "trials": args.trials}
    cache.store(key, {"csv": csv_text, "info": info})
    write_artifact(args, "deform_mc", params, csv_text, info, key, cache, t0)
    return 0


def cmd_bias(args, parser, cache: ResultCache) -> int:
    t0 = time.time()
    g = _resolve_gamma(args, parser, required=False) or 0.0
    params = {"L": args.L, "alpha": args.alpha, "x_list": args.x, "gamma": g}
    key = cache.key("bias", params)
    hit = cache.load(key)
    if hit:
        write_artifact(args, "bias", params, hit["csv"], hit["info"], key, cache, t0)
        return 0
    rows = bias_table(args.L, args.alpha, args.x, g)
    csv_text = render_csv(["x", "p_avg", "p_0", "p_1"], rows)
    info = {"gamma": g}
    cache.store(key, {"csv": csv_text, "info": info})
    write_artifact(args, "bias", params, csv_text, info, key, cache, t0)
    return 0


def cmd_mismatch(args, parser, cache: ResultCache) -> int:
    t0 = time.time()
    alpha_grid = args.alpha_grid
    params = {"L_list": args.L_list, "alpha_grid": alpha_grid}
    key = cache.key("mismatch", params)
    hit = cache.load(key)
    if hit:
        write_artifact(args, "mismatch", params, hit["csv"], hit["info"], key, cache, t0)
        return 0
    rows = mismatch_curves(args.L_list, alpha_grid)
    csv_text = render_csv(["L", "alpha", "mismatch_ratio", "rx_overlap"], rows)
    info = {}
    cache.store(key, {"csv": csv_text, "info": info})
    write_artifact(args, "mismatch", params, csv_text, info, key, cache, t0)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="cat-telecor",
        description="Cat-code telecorrection channel simulator",
    )
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, loss=True, loss_required=True):
        sp.add_argument("--out-dir", default=".", help="artifact directory")
        sp.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                        help="worker processes (output independent of the count)")
        sp.add_argument("--no-cache", action="store_true",
                        help="bypass the result cache")
        if loss:
            sp.add_argument("--gamma-db", type=float, default=None,
                            help="total loss in dB")
            sp.add_argument("--gamma", type=float, default=None,
                            help="total loss as a fraction")

    sp = sub.add_parser("fock-hist", help="lossy-codeword Fock histogram")
    sp.add_argument("--L", type=int, required=True)
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--J", type=int, default=0, choices=(0, 1))
    sp.add_argument("--l-cap", type=int, default=10,
                    help="loss-order cutoff for the uncorrectable bin")
    common(sp)
    sp.set_defaults(func=cmd_fock_hist)

    sp = sub.add_parser("pauli-map", help="per-syndrome Pauli/failure map")
    sp.add_argument("--L", type=int, required=True)
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--n-max", type=int, default=20)
    sp.add_argument("--m-max", type=int, default=20)
    sp.add_argument("--reference-gamma", type=float, default=REFERENCE_GAMMA)
    common(sp, loss=False)
    sp.set_defaults(func=cmd_pauli_map)

    sp = sub.add_parser("fidelity", help="channel fidelity of N corrected rounds")
    sp.add_argument("--L", type=int, required=True)
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--N", type=int, required=True)
    common(sp)
    sp.set_defaults(func=cmd_fidelity)

    sp = sub.add_parser("table1", help="minimal iterations per fidelity target")
    sp.add_argument("--L-list", type=_int_list, default=[1, 2, 3])
    sp.add_argument("--targets", type=_float_list, default=[0.95, 0.99, 0.999])
    sp.add_argument("--alpha-step", type=float, default=0.1)
    sp.add_argument("--alpha-max", type=float, default=9.0)
    sp.add_argument("--n-budget", type=int, default=20000)
    common(sp)
    sp.set_defaults(func=cmd_table1)

    sp = sub.add_parser("sweep", help="fidelity sweep from a JSON config")
    sp.add_argument("--config", required=True)
    common(sp, loss=False)
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("mep", help="mean error probability curves")
    sp.add_argument("--L", type=int, required=True)
    sp.add_argument("--alpha-grid", type=_float_list, required=True)
    sp.add_argument("--N-list", type=_int_list, required=True)
    common(sp)
    sp.set_defaults(func=cmd_mep)

    sp = sub.add_parser("deform-mc", help="deformation-correction Monte Carlo")
    sp.add_argument("--L", type=int, required=True)
    sp.add_argument("--alpha-opt", type=float, required=True)
    sp.add_argument("--f-opt", type=float, required=True,
                    help="Pauli-corrected optimum fidelity, percent")
    sp.add_argument("--fractions", type=_float_list,
                    default=[1.0, 0.9, 0.8, 0.7, 0.6, 0.5])
    sp.add_argument("--N", type=int, default=10)
    sp.add_argument("--trials", type=int, default=1000)
    sp.add_argument("--seed", type=int, default=2026)
    common(sp)
    sp.set_defaults(func=cmd_deform_mc)

    sp = sub.add_parser("bias", help="biased-ancilla success probabilities")
    sp.add_argument("--L", type=int, required=True)
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--x", type=_float_list, required=True)
    common(sp, loss=True)
    sp.set_defaults(func=cmd_bias)

    sp = sub.add_parser("mismatch", help="normalisation mismatch / overlap curves")
    sp.add_argument("--L-list", type=_int_list, default=[1, 2, 3, 4])
    sp.add_argument("--alpha-grid", type=_float_list,
                    default=[round(0.5 + 0.1 * i, 10) for i in range(56)])
    common(sp, loss=False)
    sp.set_defaults(func=cmd_mismatch)

    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cache = ResultCache(enabled=not args.no_cache)
    try:
        return args.func(args, parser, cache)
    except CutoffExhaustionError as exc:
        print(f"cutoff exhaustion: {exc}", file=sys.stderr)
        return 3
    except UnreachableTargetError as exc:
        print(f"unreachable target: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
