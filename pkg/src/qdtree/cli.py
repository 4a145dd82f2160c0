"""Command-line driver.

Options come from built-in defaults, then an optional flat ``key = value``
config file (``--config``), then command-line flags.  Exit codes: 0 success,
1 configuration error, 2 numerical failure, 3 resource cap.
"""
from __future__ import annotations

import argparse
import json
import multiprocessing as mp
import sys
import time
import traceback
from pathlib import Path

import numpy as np

from . import __version__, _backend
from . import io as qio
from .bloch import ModelParams, initial_ensemble
from .clifford import CliffordState, clifford_flow, vector_field
from .coarse import (coarse_evolve, coarse_purity, deficit_exponent, figure_data,
                     fixed_point_moments, moment_predictions, spin_moments,
                     tau_averaged_purity)
from .errors import ConfigError, QDTreeError
from .exact import merge_duplicates, step_exact
from .observables import (conditional_entropy, encoding_eigenvalue, estimate_jd,
                          j_from_epsilon, loglog_slope, near_critical_purity_prediction,
                          purity, qd_stability_eigenvalue, redundancy_empirical,
                          redundancy_exponent, redundancy_prediction, scaling_collapse,
                          time_average)
from .sampler import step_biased, step_compressed, step_rng

ENGINES = ("exact", "compressed", "biased")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(ConfigError.exit_code)


# -- option tables: name -> (type, default, help) ------------------------------

COMMON = {
    "out": (str, None, "output directory (default: $QDTREE_OUTDIR or ./qdtree_out)"),
    "seed": (int, 0, "master seed"),
}

OPTIONS = {
    "evolve": {
        "variant": (str, "random", "deterministic or random"),
        "J": (float, None, "scrambling parameter in (0, 1)"),
        "k": (int, 1, "initial depth; relative fraction size 2^-k"),
        "t": (int, 3, "number of generations"),
        "engine": (str, "exact", "exact, compressed or biased"),
        "M": (int, 100_000, "sample size of the biased engine"),
        "N": (int, 300, "round size of the compressed engine (N^2 peaks)"),
        "snapshot_every": (int, 0, "write an ensemble snapshot every n steps (0: final only if --snapshot)"),
        "snapshot": (bool, False, "write the final ensemble snapshot"),
        "histogram": (bool, False, "write the 200x200 histogram of the final ensemble"),
        "merge_eps": (float, None, "merge peaks closer than eps after each exact step"),
        "peak_cap": (int, 10_000_000, "peak-count cap of the exact engine"),
        "name": (str, None, "run name (default derived from parameters)"),
    },
    "sweep": {
        "variant": (str, "deterministic", "deterministic or random"),
        "engine": (str, "compressed", "exact, compressed or biased"),
        "J_grid": (str, "", "J values: 'lo:hi:step' or comma list"),
        "k_grid": (str, "", "k values: 'lo:hi' or comma list"),
        "t_list": (str, "", "generations to record: 'lo:hi' or comma list"),
        "M": (int, 100_000, "biased sample size"),
        "N": (int, 300, "compressed round size"),
        "jobs": (int, 1, "worker processes"),
        "name": (str, "sweep", "sweep name"),
    },
    "criticality": {
        "variant": (str, "random", "deterministic or random"),
        "parts": (str, "jd,eps,collapse", "subset of jd, eps, collapse"),
        "bracket": (str, "0.3,0.45", "J bracket for the lambda_d crossing"),
        "t_converge": (int, 10, "generations before evaluating lambda_d"),
        "size": (int, None, "sampler size (M or N; engine default if unset)"),
        "tol": (float, 0.002, "bisection tolerance in J"),
        "eps_list": (str, "0.005,0.01,0.02", "epsilon values of the encoding-side check"),
        "t_long": (int, 160, "generations of the encoding-side runs"),
        "eps_k": (int, 6, "initial depth of the encoding-side runs"),
        "jd": (float, None, "J_d for the collapse (default: estimated)"),
        "collapse_t": (str, "7:10", "generations of the collapse"),
        "collapse_J": (str, "", "J grid of the collapse (default: J_d +- 0.08)"),
        "collapse_k": (int, 2, "initial depth of the collapse"),
        "collapse_N": (int, 200, "compressed round size of the collapse"),
    },
    "coarse": {
        "J": (float, None, "scrambling parameter in (0, 1)"),
        "k": (int, 2, "initial depth"),
        "t": (int, 10, "generations"),
        "tau": (int, 0, "resolve the fraction into 2^tau sub-fractions (<= 2)"),
        "exponents": (bool, False, "measure the small-J deficit exponents a(tau), tau = 0, 1, 2"),
    },
    "clifford": {
        "J": (float, None, "scrambling parameter in [0, 1]"),
        "pz0": (float, 0.5, "initial pi_z"),
        "px0": (float, 0.0, "initial pi_x"),
        "t_max": (int, 1000, "maximum generations"),
        "field_n": (int, 21, "vector-field lattice size per axis (0 disables)"),
    },
    "oracle-check": {
        "Js": (str, "0.2,0.5,0.8", "J values"),
        "n_max": (int, 4, "largest tree depth"),
    },
    "redundancy": {
        "J": (float, None, "scrambling parameter (QD phase)"),
        "delta": (float, 0.2, "information deficit threshold"),
        "env_size": (float, 1e5, "environment size |E|"),
        "variant": (str, "random", "deterministic or random"),
        "lambda_d": (float, None, "use this lambda_d instead of sampling it"),
        "empirical": (bool, False, "also scan k at fixed depth"),
        "n_grid": (str, "12:18", "depths of the empirical scan"),
        "M": (int, 100_000, "biased sample size of the empirical scan"),
    },
}


def _flag(name):
    return "--" + name.replace("_", "-")


def build_parser():
    p = _Parser(prog="qdtree", description="Quantum Darwinism tree-recursion simulator")
    p.add_argument("--version", action="version", version=f"qdtree {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for cmd, opts in OPTIONS.items():
        sp = sub.add_parser(cmd, help=(COMMANDS[cmd].__doc__ or "").strip().splitlines()[0])
        sp.add_argument("--config", default=None, help="flat key = value config file")
        for name, (typ, _default, hlp) in {**COMMON, **opts}.items():
            if typ is bool:
                sp.add_argument(_flag(name), dest=name, action="store_const", const=True,
                                default=None, help=hlp)
            else:
                sp.add_argument(_flag(name), dest=name, type=typ, default=None, help=hlp)
    return p


def _cast(typ, val, key):
    try:
        if typ is bool:
            return str(val).strip().lower() in ("1", "true", "yes", "on")
        return typ(val)
    except (TypeError, ValueError):
        raise ConfigError(f"bad value for {key}: {val!r}")


def resolve_config(cmd, ns) -> dict:
    opts = {**COMMON, **OPTIONS[cmd]}
    cfg = {k: d for k, (_, d, _) in opts.items()}
    if ns.config:
        for key, val in qio.read_config(ns.config).items():
            if key not in opts:
                raise ConfigError(f"unknown config key {key!r} for {cmd}")
            cfg[key] = _cast(opts[key][0], val, key)
    for key in opts:
        v = getattr(ns, key, None)
        if v is not None:
            cfg[key] = v
    if cfg["out"] is None:
        cfg["out"] = str(qio.default_outdir())
    return cfg


def _require(cfg, *keys):
    for k in keys:
        if cfg.get(k) is None:
            raise ConfigError(f"missing required option {_flag(k)}")


def _check_engine(variant, engine):
    if engine not in ENGINES:
        raise ConfigError(f"unknown engine {engine!r}")
    if variant not in ("deterministic", "random"):
        raise ConfigError("evolution engines cover the deterministic and random variants")
    if engine == "biased" and variant != "random":
        raise ConfigError("the biased engine is unstable for the deterministic variant")
    if engine == "compressed" and variant != "deterministic":
        raise ConfigError("the compressed engine is defined for the deterministic variant")


def _provenance_cfg(cfg):
    # output location and worker count do not affect results
    return {k: v for k, v in cfg.items() if k not in ("out", "jobs")}


# -- evolve -------------------------------------------------------------------

def observable_row(ens, params, size, seed):
    lam = ""
    if np.max(np.abs(ens.r2 - 1.0)) < 1e-6:
        try:
            lam = qd_stability_eigenvalue(ens, params)
        except QDTreeError:
            lam = ""
    return {"variant": params.variant, "J": params.J, "k": params.k, "t": ens.t,
            "M_or_N": size, "seed": seed, "purity": purity(ens),
            "chi": conditional_entropy(ens), "lambda_c": encoding_eigenvalue(params.J),
            "lambda_d": lam}


def run_evolution(params, engine, t_max, seed, M=100_000, N=300, merge_eps=None,
                  peak_cap=10_000_000, on_step=None):
    """Evolve the initial ensemble; ``on_step(ens)`` is called for t = 0..t_max."""
    _check_engine(params.variant, engine)
    ens = initial_ensemble(params)
    if on_step:
        on_step(ens)
    for s in range(t_max):
        if engine == "exact":
            ens = step_exact(ens, params, peak_cap=peak_cap)
            if merge_eps is not None:
                ens = merge_duplicates(ens, merge_eps)
        elif engine == "compressed":
            ens = step_compressed(ens, N, params, step_rng(seed, s))
        else:
            ens = step_biased(ens, M, params, step_rng(seed, s))
        if on_step:
            on_step(ens)
    return ens


def cmd_evolve(cfg):
    """Evolve one parameter point and write observables, snapshots and metadata."""
    _require(cfg, "J")
    params = ModelParams(cfg["J"], cfg["variant"], cfg["k"])
    engine = cfg["engine"]
    _check_engine(params.variant, engine)
    if cfg["t"] < 0:
        raise ConfigError("t must be nonnegative")
    size = {"exact": 0, "compressed": cfg["N"], "biased": cfg["M"]}[engine]
    name = cfg["name"] or f"{params.variant}_J{params.J:g}_k{params.k}_{engine}"
    out = Path(cfg["out"]) / name
    pcfg = _provenance_cfg(cfg)
    seed = cfg["seed"]
    t0 = time.time()
    tab = qio.CsvTable(out / "observables.csv", qio.OBSERVABLE_COLUMNS, pcfg, seed)
    every = cfg["snapshot_every"]

    def on_step(ens):
        tab.write(observable_row(ens, params, size, seed))
        if every and ens.t % every == 0:
            qio.write_snapshot(out / "snapshots" / f"t{ens.t:04d}.txt", ens, params.variant,
                               params.J, params.k, pcfg, seed)

    try:
        ens = run_evolution(params, engine, cfg["t"], seed, cfg["M"], cfg["N"],
                            cfg["merge_eps"], cfg["peak_cap"], on_step)
    finally:
        tab.close()
    if cfg["snapshot"]:
        qio.write_snapshot(out / "snapshots" / f"t{ens.t:04d}.txt", ens, params.variant,
                           params.J, params.k, pcfg, seed)
    if cfg["histogram"]:
        qio.write_histogram(out / f"histogram_t{ens.t:04d}.csv", ens, config=pcfg, seed=seed)
    meta = {"tool": f"qdtree {__version__}", "config_hash": qio.config_hash(pcfg),
            "config": pcfg, "seed": seed, "engine": engine, "M_or_N": size,
            "backend": _backend.BACKEND, "dropped_mass": ens.dropped_mass,
            "final_peaks": len(ens), "wall_time_s": round(time.time() - t0, 3)}
    qio.append_metadata(out / "meta.jsonl", meta)
    return {"out": str(out), "t": ens.t, "purity": purity(ens),
            "chi": conditional_entropy(ens), "peaks": len(ens)}


# -- sweep --------------------------------------------------------------------

def _sweep_point(job):
    cfg, J, k, idx = job
    seed = int(np.random.SeedSequence([cfg["seed"], idx]).generate_state(1)[0])
    params = ModelParams(J, cfg["variant"], k)
    t_list = set(cfg["_t_list"])
    size = {"exact": 0, "compressed": cfg["N"], "biased": cfg["M"]}[cfg["engine"]]
    rows = []

    def on_step(ens):
        if ens.t in t_list:
            rows.append(observable_row(ens, params, size, seed))

    run_evolution(params, cfg["engine"], max(t_list), seed, cfg["M"], cfg["N"],
                  on_step=on_step)
    return rows


def _sweep_worker(job):
    cfg, J, k, idx = job
    try:
        return job, _sweep_point(job), None
    except Exception as exc:  # recorded, sweep continues
        return job, None, f"{type(exc).__name__}: {exc}"


def cmd_sweep(cfg):
    """Evolve a grid of (J, k) points; resumable through per-point markers."""
    Js = qio.parse_grid(cfg["J_grid"], float)
    ks = qio.parse_grid(cfg["k_grid"], int)
    ts = qio.parse_grid(cfg["t_list"], int)
    for J in Js:
        ModelParams(J, cfg["variant"], 1)
    if any(k < 1 for k in ks):
        raise ConfigError("k values must be >= 1")
    _check_engine(cfg["variant"], cfg["engine"])
    out = Path(cfg["out"]) / cfg["name"]
    pts_dir = out / "points"
    pts_dir.mkdir(parents=True, exist_ok=True)
    pcfg = _provenance_cfg(cfg)
    jobs = []
    if ts:
        for i, J in enumerate(Js):
            for k in ks:
                key = f"J{J:.6f}_k{k}"
                if (pts_dir / f"{key}.done").exists():
                    continue
                jobs.append(({**cfg, "_t_list": ts}, J, k, i * 1000 + k))
    failures = []

    def handle(result):
        (c, J, k, idx), rows, err = result
        key = f"J{J:.6f}_k{k}"
        if err is not None:
            failures.append({"J": J, "k": k, "error": err})
            qio.append_metadata(out / "failures.jsonl", {"J": J, "k": k, "error": err},
                                pcfg, cfg["seed"])
            return
        with qio.CsvTable(pts_dir / f"{key}.csv", qio.OBSERVABLE_COLUMNS, pcfg, cfg["seed"]) as tab:
            for r in rows:
                tab.write(r)
        (pts_dir / f"{key}.done").write_text("ok\n")

    if cfg["jobs"] > 1 and len(jobs) > 1:
        with mp.get_context("spawn").Pool(cfg["jobs"]) as pool:
            for res in pool.imap_unordered(_sweep_worker, jobs):
                handle(res)
    else:
        for job in jobs:
            handle(_sweep_worker(job))
    # single-writer aggregation in grid order
    n_rows = 0
    with qio.CsvTable(out / "sweep.csv", qio.OBSERVABLE_COLUMNS, pcfg, cfg["seed"]) as tab:
        if ts:
            for J in Js:
                for k in ks:
                    f = pts_dir / f"J{J:.6f}_k{k}.csv"
                    if (pts_dir / f"J{J:.6f}_k{k}.done").exists() and f.exists():
                        for r in qio.read_csv(f):
                            tab.write(r)
                            n_rows += 1
    return {"out": str(out / "sweep.csv"), "rows": n_rows, "failures": failures}


# -- criticality ----------------------------------------------------------------

def encoding_side_check(eps_list, t_long=160, k=3, M=100_000, seed=0):
    """Time-averaged <r^2> of the random model against 8 eps."""
    rows = []
    for eps in eps_list:
        J = j_from_epsilon(eps)
        params = ModelParams(J, "random", k)
        series = []
        run_evolution(params, "biased", t_long, seed, M=M,
                      on_step=lambda e: series.append(purity(e)))
        avg = time_average(series, t_long)
        pred = near_critical_purity_prediction(J)
        rows.append({"eps": eps, "J": J, "purity_avg": avg, "prediction": pred,
                     "ratio": avg / pred})
    x = np.array([r["prediction"] for r in rows])
    y = np.array([r["purity_avg"] for r in rows])
    slope = float(np.dot(x, y) / np.dot(x, x)) if len(rows) else float("nan")
    return {"rows": rows, "slope": slope}


def collapse_data(J_d, Js, ts, k=2, N=200, seed=0):
    """Purity of the deterministic model on a J grid at generations ``ts``."""
    curves = {t: ([], []) for t in ts}
    for J in Js:
        params = ModelParams(J, "deterministic", k)

        def on_step(e, J=J):
            if e.t in curves:
                curves[e.t][0].append(J)
                curves[e.t][1].append(purity(e))

        run_evolution(params, "compressed", max(ts), seed, N=N, on_step=on_step)
    return curves


def cmd_criticality(cfg):
    """Transition estimates: lambda_d crossing, encoding-side law, scaling collapse."""
    parts = {p.strip() for p in cfg["parts"].split(",") if p.strip()}
    unknown = parts - {"jd", "eps", "collapse"}
    if unknown:
        raise ConfigError(f"unknown parts {sorted(unknown)}")
    variant = cfg["variant"]
    if variant not in ("deterministic", "random"):
        raise ConfigError("criticality needs the deterministic or random variant")
    out = Path(cfg["out"]) / f"criticality_{variant}"
    pcfg = _provenance_cfg(cfg)
    report = {"variant": variant, "config_hash": qio.config_hash(pcfg), "seed": cfg["seed"],
              "tool": f"qdtree {__version__}"}
    try:
        lo, hi = (float(x) for x in cfg["bracket"].split(","))
    except ValueError:
        raise ConfigError("bracket must be 'lo,hi'")
    J_d = cfg["jd"]
    if "jd" in parts:
        est = estimate_jd(ModelParams(0.5 * (lo + hi), variant, 1), cfg["t_converge"], (lo, hi),
                          tol=cfg["tol"], size=cfg["size"], seed=cfg["seed"])
        report["jd"] = est.as_dict()
        J_d = est.J_d if J_d is None else J_d
        with qio.CsvTable(out / "lambda_curve.csv", ("J", "lambda_d", "converged"),
                          pcfg, cfg["seed"]) as tab:
            for row in est.curve:
                tab.write(row)
    if "eps" in parts:
        if variant != "random":
            raise ConfigError("the encoding-side check uses the random model")
        eps = qio.parse_grid(cfg["eps_list"], float)
        res = encoding_side_check(eps, cfg["t_long"], cfg["eps_k"], cfg["size"] or 100_000,
                                  cfg["seed"])
        report["eps"] = res
    if "collapse" in parts:
        if J_d is None:
            raise ConfigError("collapse needs --jd or the jd part")
        ts = qio.parse_grid(cfg["collapse_t"], int)
        Js = qio.parse_grid(cfg["collapse_J"], float) or list(np.round(J_d + np.linspace(-0.08, 0.08, 17), 6))
        cur = collapse_data(J_d, Js, ts, cfg["collapse_k"], cfg["collapse_N"], cfg["seed"])
        col = scaling_collapse({t: cur[t] for t in ts}, J_d)
        report["collapse"] = {"J_d": J_d, "max_spread": col["max_spread"],
                              "relative_spread": col["relative_spread"]}
        with qio.CsvTable(out / "collapse.csv", ("t", "J", "x", "y", "purity"),
                          pcfg, cfg["seed"]) as tab:
            for t in ts:
                for J, r2 in zip(*cur[t]):
                    tab.write((t, J, (J - J_d) * t, (1 - r2) * t, r2))
    qio.write_json(out / "report.json", report, pcfg, cfg["seed"])
    summary = {"out": str(out)}
    if "jd" in report:
        summary["J_d"] = report["jd"]["J_d"]
    if "eps" in report:
        summary["eps_slope"] = report["eps"]["slope"]
    if "collapse" in report:
        summary["collapse_relative_spread"] = report["collapse"]["relative_spread"]
    return summary


# -- coarse -------------------------------------------------------------------

def cmd_coarse(cfg):
    """Total-spin recursion: triple arrays, figure data, moments and predictions."""
    _require(cfg, "J")
    params = ModelParams(cfg["J"], "deterministic", cfg["k"])
    if cfg["t"] < 0:
        raise ConfigError("t must be nonnegative")
    out = Path(cfg["out"]) / f"coarse_J{params.J:g}_k{params.k}_t{cfg['t']}"
    pcfg = _provenance_cfg(cfg)
    tr = coarse_evolve(params, cfg["t"])
    qio.write_triple(out / "triple.csv", tr, pcfg, cfg["seed"])
    fig = figure_data(tr)
    with qio.CsvTable(out / "figure.csv", ("M", "m", "p", "density", "r2", "angle"),
                      pcfg, cfg["seed"]) as tab:
        for row in zip(*(fig[c] for c in ("M", "m", "p", "density", "r2", "angle"))):
            tab.write(row)
    _, avg = coarse_purity(tr)
    summary = {"averaged_purity": avg, "moments": spin_moments(tr) if cfg["t"] > 0 else None,
               "predictions": moment_predictions(params.J, params.k, cfg["t"])}
    if 0 < params.J < 0.5:
        summary["fixed_point_moments"] = fixed_point_moments(params.J)
    if cfg["tau"]:
        val, se = tau_averaged_purity(params, cfg["t"], cfg["tau"], seed=cfg["seed"])
        summary["tau_purity"] = {"tau": cfg["tau"], "value": val, "stderr": se}
    if cfg["exponents"]:
        summary["deficit_exponents"] = {
            str(tau): deficit_exponent(tau, js, t, params.k)[0]
            for tau, js, t in ((0, (0.02, 0.04, 0.08), 10), (1, (0.02, 0.04, 0.08), 10),
                               (2, (0.05, 0.1, 0.2), 8))}
    qio.write_json(out / "summary.json", summary, pcfg, cfg["seed"])
    return {"out": str(out), "averaged_purity": avg}


# -- clifford -----------------------------------------------------------------

def cmd_clifford(cfg):
    """Clifford-model flow: trajectory, vector field and limit classification."""
    _require(cfg, "J")
    if not 0.0 <= cfg["J"] <= 1.0:
        raise ConfigError("J must lie in [0, 1]")
    try:
        s0 = CliffordState(cfg["pz0"], cfg["px0"])
    except ValueError as exc:
        raise ConfigError(str(exc))
    out = Path(cfg["out"]) / f"clifford_J{cfg['J']:g}"
    pcfg = _provenance_cfg(cfg)
    flow = clifford_flow(s0, cfg["J"], cfg["t_max"])
    with qio.CsvTable(out / "trajectory.csv", qio.CLIFFORD_COLUMNS, pcfg, cfg["seed"]) as tab:
        for t, (z, x) in enumerate(flow.trajectory):
            tab.write((t, z, x))
    if cfg["field_n"]:
        with qio.CsvTable(out / "field.csv", ("pi_z", "pi_x", "d_pi_z", "d_pi_x"),
                          pcfg, cfg["seed"]) as tab:
            for row in vector_field(cfg["J"], cfg["field_n"]):
                tab.write(row)
    res = {"out": str(out), "limit": [flow.limit.pi_z, flow.limit.pi_x],
           "classification": flow.classification, "converged": flow.converged,
           "steps": len(flow.trajectory) - 1}
    qio.write_json(out / "summary.json", res, pcfg, cfg["seed"])
    return res


# -- oracle-check ------------------------------------------------------------

def cmd_oracle_check(cfg):
    """Certify the recursion engines against dense statevector enumeration."""
    from .oracle import N_MAX, certification_matrix

    Js = qio.parse_grid(cfg["Js"], float)
    if not 1 <= cfg["n_max"] <= N_MAX:
        raise ConfigError(f"n_max must lie in 1..{N_MAX}")
    out = Path(cfg["out"])
    report = out / "oracle_report.jsonl"
    if report.exists():
        report.unlink()
    n_pass = n_fail = 0
    worst = 0.0
    for case in certification_matrix(Js, cfg["n_max"]):
        qio.append_metadata(report, case, _provenance_cfg(cfg), cfg["seed"])
        print(json.dumps(case, sort_keys=True), flush=True)
        n_pass += case["pass"]
        n_fail += not case["pass"]
        worst = max(worst, case["max_deviation"])
    res = {"passed": n_pass, "failed": n_fail, "max_deviation": worst, "report": str(report)}
    if n_fail:
        res["_exit"] = 2
    return res


# -- redundancy -----------------------------------------------------------------

def cmd_redundancy(cfg):
    """Redundancy scaling: analytic prediction and optional empirical k-scan."""
    _require(cfg, "J")
    ModelParams(cfg["J"], cfg["variant"], 1)
    out = Path(cfg["out"]) / f"redundancy_J{cfg['J']:g}"
    R = redundancy_prediction(cfg["J"], cfg["delta"], cfg["env_size"], cfg["lambda_d"],
                              cfg["variant"], seed=cfg["seed"])
    res = {"J": cfg["J"], "delta": cfg["delta"], "env_size": cfg["env_size"], "R": R,
           "exponent": redundancy_exponent(cfg["J"])}
    if cfg["empirical"]:
        emp = redundancy_empirical(cfg["J"], cfg["delta"], qio.parse_grid(cfg["n_grid"], int),
                                   cfg["variant"], cfg["M"], cfg["seed"])
        res["empirical"] = emp
    qio.write_json(out / "report.json", res, _provenance_cfg(cfg), cfg["seed"])
    res["out"] = str(out)
    return res


COMMANDS = {
    "evolve": cmd_evolve,
    "sweep": cmd_sweep,
    "criticality": cmd_criticality,
    "coarse": cmd_coarse,
    "clifford": cmd_clifford,
    "oracle-check": cmd_oracle_check,
    "redundancy": cmd_redundancy,
}


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        cfg = resolve_config(ns.command, ns)
        res = COMMANDS[ns.command](cfg)
    except QDTreeError as exc:
        print(f"qdtree {ns.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except MemoryError as exc:
        print(f"qdtree {ns.command}: out of memory: {exc}", file=sys.stderr)
        return 3
    except (FileNotFoundError, IsADirectoryError, PermissionError) as exc:
        print(f"qdtree {ns.command}: {exc}", file=sys.stderr)
        return 1
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        traceback.print_exc()
        return 2
    code = res.pop("_exit", 0)
    if ns.command != "oracle-check":
        print(json.dumps(res, sort_keys=True, default=qio._json_default))
    else:
        print(json.dumps(res, sort_keys=True), file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
