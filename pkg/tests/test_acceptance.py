"""Acceptance criteria 1-11.

Each check returns (passed, detail).  Under pytest one line per criterion is
printed in the terminal summary; ``python3 tests/test_acceptance.py`` runs
them directly and prints the same lines.
"""
from __future__ import annotations

import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from qdtree import ModelParams
from qdtree.cli import collapse_data, encoding_side_check
from qdtree.clifford import CliffordState, clifford_flow, fixed_line, step_arrays
from qdtree.coarse import (coarse_evolve, coarse_initial, coarse_step, fixed_point_moments,
                           j4_prefactor_ratio, m2_exact, small_theta_deficits, spin_moments)
from qdtree.observables import (encoding_amplification, encoding_eigenvalue, estimate_jd,
                                evolve_qd, loglog_slope, purity, qd_lambda,
                                redundancy_empirical, redundancy_prediction, scaling_collapse)
from qdtree.oracle import certification_matrix

RESULTS: dict = {}
_cache: dict = {}


def _line(n, ok, detail):
    return f"CRITERION {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"


def record(n, ok, detail):
    RESULTS[n] = (bool(ok), detail)
    print(_line(n, ok, detail), flush=True)
    return ok, detail


def check_1():
    t0 = time.time()
    cases = list(certification_matrix((0.2, 0.5, 0.8), 4))
    dt = time.time() - t0
    bad = [c for c in cases if not c["pass"]]
    worst = max(c["max_deviation"] for c in cases)
    ok = not bad and dt < 300
    return record(1, ok, f"{len(cases)} cases, {len(bad)} failed, max deviation {worst:.2e}, "
                         f"{dt:.0f} s (limit 300 s)")


def check_2():
    exact = abs(encoding_eigenvalue(0.5) - 1.0)
    parts = []
    ok = exact < 1e-15
    for variant in ("deterministic", "random"):
        for J in (0.55, 0.6, 0.7, 0.8):
            ratio, r2 = encoding_amplification(ModelParams(J, variant, 3))
            rel = ratio / encoding_eigenvalue(J) - 1.0
            ok &= abs(rel) < 0.01 and r2 < 1e-4
            parts.append(f"{variant[0]}{J}:{rel:+.1e}")
    return record(2, ok, f"|lambda_c(1/2)-1| = {exact:.0e}; measured/lambda_c - 1 (r2 < 1e-4): "
                         + " ".join(parts))


def check_3():
    res = encoding_side_check((0.005, 0.01, 0.02), t_long=160, k=6, M=100_000, seed=0)
    ratios = [r["ratio"] for r in res["rows"]]
    ok = all(0.8 <= x <= 1.2 for x in ratios)
    return record(3, ok, "<r2>/(8 eps) for eps = 0.005, 0.01, 0.02: "
                         + ", ".join(f"{x:.3f}" for x in ratios) + " (target [0.8, 1.2])")


def _jd(variant):
    if variant not in _cache:
        size = 100_000 if variant == "random" else 300
        _cache[variant] = estimate_jd(ModelParams(0.4, variant, 1), 10, (0.3, 0.45),
                                      tol=0.002, size=size, seed=0)
    return _cache[variant].J_d


def check_4():
    jr = _jd("random")
    jdet = _jd("deterministic")
    ok_r = abs(jr - 0.375) <= 0.010
    ok_d = abs(jdet - 0.35) <= 0.02
    return record(4, ok_r and ok_d, f"random J_d = {jr:.4f} (0.375 +- 0.010: {'ok' if ok_r else 'out'}); "
                                    f"deterministic J_d = {jdet:.4f} (0.35 +- 0.02: {'ok' if ok_d else 'out'})")


def check_5():
    jd = _jd("random")
    t = np.arange(1, 161)
    slopes = {}
    for J in (jd - 0.002, jd, jd + 0.002):
        curves = []
        for seed in range(6):
            r = []
            evolve_qd(ModelParams(J, "random", 2), 160, 100_000, seed,
                      callback=lambda e: r.append(purity(e)), k=2)
            curves.append(r)
        slopes[J] = loglog_slope(t, 1.0 - np.mean(curves, axis=0), 40, 160)
    ok = any(abs(s + 1.0) <= 0.15 for s in slopes.values())
    return record(5, ok, "slope of 1-<r2> over t in [40,160] at J_d-0.002, J_d, J_d+0.002: "
                         + ", ".join(f"{s:.3f}" for s in slopes.values()) + " (target -1 +- 0.15)")


def check_6():
    Js = list(np.round(np.arange(0.25, 0.5001, 0.025), 3))
    ts = [7, 8, 9, 10]
    cur = collapse_data(0.35, Js, ts, k=2, N=200, seed=0)
    res = scaling_collapse({t: cur[t] for t in ts}, 0.35, window=0.5)
    ok = res["relative_spread"] < 0.15
    return record(6, ok, f"J_d = 0.35 (not adjusted), |x| <= 0.5: max spread / range = "
                         f"{res['relative_spread']:.3f} (target < 0.15)")


def check_7():
    ratio = j4_prefactor_ratio(0.02, 11, 2)
    ok_a = 0.9 <= ratio <= 1.1
    th = 1e-3
    devs = []
    for t in (3, 4):
        d = small_theta_deficits(t, th)
        devs.append(abs(d[0] - 1.0))
        devs.append(abs(d[2 ** (t - 2)] - 2 / 3))
        devs.append(abs(d[-(2 ** (t - 2))] - 2 / 3))
    ok_b = max(devs) < 1e-3
    return record(7, ok_a and ok_b,
                  f"total deficit / (7/4)(J pi/2)^4 at J=0.02,t=11,k=2 = {ratio:.4f} "
                  f"(target [0.9, 1.1]: {'ok' if ok_a else 'out'}); deficit ratios 1 and 2/3 "
                  f"at theta=1e-3, t=3,4: max error {max(devs):.1e} ({'ok' if ok_b else 'out'})")


def check_8():
    worst = 0.0
    for J in (0.2, 0.3, 0.5, 0.7):
        tr = coarse_initial(ModelParams(J, "deterministic", 2))
        for t in range(15):
            worst = max(worst, abs(spin_moments(tr)["M2"] / m2_exact(J, 2, t) - 1.0))
            if t < 14:
                tr = coarse_step(tr, 0.5 * np.pi * J)
    ok_a = worst < 1e-10
    mom = spin_moments(coarse_evolve(ModelParams(0.3, "deterministic", 2), 16))
    pred = fixed_point_moments(0.3)
    rel = {k: abs(mom[k] / pred[k] - 1.0) for k in pred}
    ok_b = max(rel.values()) < 0.02
    enc = spin_moments(coarse_evolve(ModelParams(0.6, "deterministic", 2), 12))
    sk, ek = abs(enc["skewness"]), abs(enc["excess_kurtosis_negative"])
    ok_c = sk < 0.05 and ek < 0.05
    return record(8, ok_a and ok_b and ok_c,
                  f"<M2> vs closed form t<=14: rel {worst:.1e}; fixed point J=0.3 t=16 rel errors "
                  + ", ".join(f"{k}={v:.1e}" for k, v in rel.items())
                  + f"; J=0.6 t=12 |skew|={sk:.3f} |excess kurt|={ek:.3f}")


def check_9():
    s0 = CliffordState(0.5, 0.0)
    lo = clifford_flow(s0, 0.45, 1000, tol=0.0).limit.total
    hi = clifford_flow(s0, 0.55, 1000, tol=0.0).limit.total
    a = np.linspace(0.0, 1.0, 1001)
    z, x = a - a * a / 4, a * a / 4
    nz, nx = step_arrays(z, x, 0.5)
    line = float(np.max(np.maximum(np.abs(nz - z), np.abs(nx - x))))
    fixed_line(0.3)
    ok = abs(lo - 1.0) < 1e-10 and abs(hi) < 1e-10 and line < 1e-12
    return record(9, ok, f"limit total J=0.45: |1-tot| = {abs(lo - 1):.1e}; J=0.55: tot = {hi:.1e}; "
                         f"fixed line at J=1/2 residual {line:.1e}")


def check_10():
    path = Path(__file__).with_name("test_properties.py")
    proc = subprocess.run([sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", str(path)],
                          capture_output=True, text=True, cwd=path.parent)
    tail = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr[-200:]
    return record(10, proc.returncode == 0, f"property suite (1e5-case fuzzing): {tail}")


def check_11():
    lam_d, _ = qd_lambda(ModelParams(0.2, "random", 1), 10, 100_000, 0)
    r20 = redundancy_prediction(0.2, 0.2, 1e5, lambda_d=0.75)
    r10 = redundancy_prediction(0.2, 0.1, 1e3, lambda_d=0.75)
    ok_a = abs(r20 / 256 - 1) <= 0.25 and abs(r10 / 0.5 - 1) <= 0.25
    emp = redundancy_empirical(0.2, 0.2, range(12, 19), "random", 100_000, 0)
    rel = abs(emp["exponent"] / emp["predicted_exponent"] - 1)
    ok_b = rel <= 0.15
    return record(11, ok_a and ok_b,
                  f"lambda_d = 0.75 (sampled {lam_d:.3f}): R_20%(1e5) = {r20:.0f} vs 256, "
                  f"R_10%(1e3) = {r10:.2f} vs 0.5; empirical |E| exponent {emp['exponent']:.3f} "
                  f"vs {emp['predicted_exponent']:.3f} (rel {rel:.1%}, limit 15%)")


CHECKS = [check_1, check_2, check_3, check_4, check_5, check_6, check_7, check_8, check_9,
          check_10, check_11]


@pytest.mark.slow
@pytest.mark.parametrize("n", range(1, 12))
def test_criterion(n):
    ok, detail = CHECKS[n - 1]()
    assert ok, detail


if __name__ == "__main__":
    for chk in CHECKS:
        chk()
    n_pass = sum(ok for ok, _ in RESULTS.values())
    print(f"{n_pass}/{len(RESULTS)} criteria pass")
