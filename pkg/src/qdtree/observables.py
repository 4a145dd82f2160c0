"""Scalar functionals of ensembles and analytic predictions."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .bloch import ModelParams, WeightedEnsemble, initial_ensemble, rotate_arrays
from .errors import ConfigError, DegenerateEnsembleError, NoSignChangeError, NumericalError

LN2 = np.log(2.0)


def purity(ens: WeightedEnsemble) -> float:
    return float(np.dot(ens.w, ens.r2) / np.sum(ens.w))


def binary_entropy_gain(r):
    """ln2 + sum_s (1+sr)/2 ln((1+sr)/2), i.e. ln2 minus the entropy of (1 +- r)/2."""
    r = np.clip(np.asarray(r, dtype=np.float64), 0.0, 1.0)
    out = np.empty_like(r)
    near = r > 1.0 - 1e-8
    x = r[~near]
    hp = 0.5 * (1.0 + x)
    hm = 0.5 * (1.0 - x)
    out[~near] = LN2 + hp * np.log(hp) + hm * np.log(hm)
    # d = (1-r)/2 -> 0: (1-d) ln(1-d) + d ln d = d ln d - d + d^2/2 + O(d^3)
    d = 0.5 * (1.0 - r[near])
    with np.errstate(divide="ignore", invalid="ignore"):
        dlnd = np.where(d > 0, d * np.log(np.where(d > 0, d, 1.0)), 0.0)
    out[near] = LN2 + dlnd - d + 0.5 * d * d
    return out


def conditional_entropy(ens: WeightedEnsemble) -> float:
    """Average entropy decrease chi(F;R) of the reference qubit, in nats."""
    h = binary_entropy_gain(np.sqrt(ens.r2))
    return float(np.clip(np.dot(ens.w, h) / np.sum(ens.w), 0.0, LN2))


def encoding_eigenvalue(J: float) -> float:
    """lambda_c = 2 cos^2(J pi / 2), the growth factor of <u^2> near the encoding point."""
    if not 0.0 < J < 1.0:
        raise ConfigError("J must lie in (0, 1)")
    return 2.0 * np.cos(0.5 * np.pi * J) ** 2


def encoding_amplification(params: ModelParams, r2_max: float = 1e-4, relax: int = 5,
                           size: int | None = None, n_peaks: int = 300, seed: int = 0,
                           t_max: int = 200):
    """Measured one-step growth of <r^2> on a dynamically reached near-encoding ensemble.

    The variant's sampler runs until <r^2> < r2_max and then ``relax`` more
    steps, so that v has decayed to second order in u.  The ensemble is then
    compressed to ``n_peaks`` peaks, recentred, and stepped exactly once.
    Returns (ratio, r2_before).
    """
    from .exact import step_exact
    from .sampler import compress, step_rng, tilt_weights

    size = size or default_size(params.variant)
    out = {}

    def stop(ens):
        if "t_cross" not in out and purity(ens) < r2_max:
            out["t_cross"] = ens.t
        if "t_cross" in out and ens.t >= out["t_cross"] + relax:
            out["ens"] = ens
            raise StopIteration

    try:
        evolve_qd(params, t_max, size, seed, callback=stop, k=params.k)
    except StopIteration:
        pass
    if "ens" not in out:
        raise NumericalError(f"<r^2> did not settle below {r2_max} within {t_max} steps")
    ens = compress(out["ens"], n_peaks, step_rng(seed, 10_000, 1))
    ens = ens.replace(w=tilt_weights(ens.w, ens.u, ens.v))
    before = purity(ens)
    after = purity(step_exact(ens, params))
    return after / before, before


@dataclass
class StabilityReport:
    lambda_c: float
    lambda_d: float
    J: float
    t: int
    converged: bool = True


def qd_stability_eigenvalue(ens: WeightedEnsemble, params: ModelParams,
                            circle_tol: float = 0.01) -> float:
    """lambda_d = 2 <1 - u^2> / <1 - u'^2> evaluated on a QD-side ensemble."""
    if np.max(np.abs(ens.r2 - 1.0)) >= circle_tol:
        raise ConfigError("lambda_d needs an ensemble on the unit circle (k = 1 flow)")
    w = ens.w / ens.w.sum()
    num = np.dot(w, 1.0 - ens.u ** 2)
    ang = params.heisenberg_angle
    up, _ = rotate_arrays(ens.u, ens.v, ang)
    if params.variant == "random":
        um, _ = rotate_arrays(ens.u, ens.v, -ang)
        den = 0.5 * (np.dot(w, 1.0 - up ** 2) + np.dot(w, 1.0 - um ** 2))
    else:
        den = np.dot(w, 1.0 - up ** 2)
    if den < 1e-12:
        raise DegenerateEnsembleError("<1 - u'^2> vanishes")
    return float(2.0 * num / den)


def stability_report(ens, params) -> StabilityReport:
    return StabilityReport(encoding_eigenvalue(params.J),
                           qd_stability_eigenvalue(ens, params), params.J, ens.t)


def near_critical_purity_prediction(J: float) -> float:
    """8 eps with eps = cos^2(J pi/2) - 1/2; leading order on the encoding side."""
    if not 0.0 < J <= 0.5:
        raise ConfigError("prediction applies for 0 < J <= 1/2")
    return 8.0 * (np.cos(0.5 * np.pi * J) ** 2 - 0.5)


def j_from_epsilon(eps: float) -> float:
    return float(2.0 / np.pi * np.arccos(np.sqrt(0.5 + eps)))


def time_average(series, t_end=None, frac=0.9):
    """Mean of series[t] over t in [frac * t_end, t_end]."""
    s = np.asarray(series, dtype=np.float64)
    if t_end is None:
        t_end = len(s) - 1
    lo = int(np.ceil(frac * t_end))
    return float(np.mean(s[lo:t_end + 1]))


def loglog_slope(t, y, t_min=None, t_max=None):
    t = np.asarray(t, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    m = np.ones(len(t), dtype=bool)
    if t_min is not None:
        m &= t >= t_min
    if t_max is not None:
        m &= t <= t_max
    m &= y > 0
    slope, _ = np.polyfit(np.log(t[m]), np.log(y[m]), 1)
    return float(slope)


# -- QD-side fixed point and the transition estimate -------------------------

def evolve_qd(params: ModelParams, t: int, size: int, seed: int,
              callback: Callable | None = None, k: int = 1) -> WeightedEnsemble:
    """Evolve the depth-k initial condition (default k=1) with the variant's sampler."""
    from .sampler import step_biased, step_compressed, step_rng

    p1 = params.with_(k=k)
    ens = initial_ensemble(p1)
    for s in range(t):
        rng = step_rng(seed, s)
        if p1.variant == "random":
            ens = step_biased(ens, size, p1, rng)
        elif p1.variant == "deterministic":
            ens = step_compressed(ens, size, p1, rng)
        else:
            raise ConfigError("no sampler for the clifford variant")
        if callback is not None:
            callback(ens)
    return ens


def default_size(variant: str) -> int:
    return 100_000 if variant == "random" else 300


def qd_lambda(params: ModelParams, t_converge: int = 10, size: int | None = None,
              seed: int = 0, window: int = 2, drift_tol: float = 1e-3):
    """lambda_d of the converged k=1 flow, averaged over the last ``window`` steps.

    Returns (lambda_d, converged) where converged reports the gate
    max|r^2 - 1| < 1e-6 and |lambda(t) - lambda(t-1)| < drift_tol.
    """
    size = size or default_size(params.variant)
    lams = []

    def record(e):
        if e.t > t_converge - window:
            lams.append(qd_stability_eigenvalue(e, params))
        record.last = e

    evolve_qd(params, t_converge, size, seed, callback=record)
    ens = record.last
    on_circle = float(np.max(np.abs(ens.r2 - 1.0))) < 1e-6
    drift = abs(lams[-1] - lams[-2]) if len(lams) > 1 else 0.0
    return float(np.mean(lams)), bool(on_circle and drift < drift_tol)


@dataclass
class JdEstimate:
    J_d: float
    curve: list = field(default_factory=list)  # (J, lambda_d, converged)

    def as_dict(self):
        return {"J_d": self.J_d,
                "curve": [{"J": j, "lambda_d": l, "converged": c} for j, l, c in self.curve]}


def estimate_jd(template: ModelParams, t_converge: int = 10, bracket=(0.3, 0.45),
                tol: float = 1e-3, size: int | None = None, seed: int = 0,
                grid: int = 0) -> JdEstimate:
    """Locate lambda_d(J) = 1 by bisection (optionally seeded by a coarse grid).

    All evaluations share the seed, so sampler noise is common to the
    compared points and the bisection sees a smooth function of J.
    """
    curve = []

    def f(J):
        lam, ok = qd_lambda(template.with_(J=J, k=1), t_converge, size, seed)
        curve.append((float(J), lam, ok))
        return lam - 1.0

    lo, hi = bracket
    if grid:
        js = np.linspace(lo, hi, grid)
        vals = [f(j) for j in js]
        sgn = np.sign(vals)
        ch = np.nonzero(sgn[:-1] != sgn[1:])[0]
        if len(ch) == 0:
            raise NoSignChangeError(f"lambda_d - 1 has no sign change in {bracket}")
        i = ch[0]
        lo, hi, flo = js[i], js[i + 1], vals[i]
    else:
        flo, fhi = f(lo), f(hi)
        if np.sign(flo) == np.sign(fhi):
            raise NoSignChangeError(f"lambda_d - 1 has no sign change in {bracket}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if np.sign(fm) == np.sign(flo):
            lo, flo = mid, fm
        else:
            hi = mid
    # linear interpolation inside the final bracket
    pts = sorted(curve)
    J_d = 0.5 * (lo + hi)
    for (j0, l0, _), (j1, l1, _) in zip(pts, pts[1:]):
        if j0 >= lo - 1e-15 and j1 <= hi + 1e-15 and (l0 - 1) * (l1 - 1) <= 0 and l1 != l0:
            J_d = j0 + (1 - l0) * (j1 - j0) / (l1 - l0)
            break
    return JdEstimate(float(J_d), sorted(curve))


# -- redundancy ----------------------------------------------------------------

def redundancy_prediction(J: float, delta: float, env_size: float,
                          lambda_d: float | None = None, variant: str = "random",
                          t_converge: int = 10, seed: int = 0) -> float:
    """R_delta ~ |E|^(ln lc / ln 2) (delta / |ln delta|)^(ln lc / |ln ld|).

    ``lambda_d`` defaults to the sampled value at the converged QD fixed point.
    """
    if not 0.0 < delta < 1.0:
        raise ConfigError("delta must lie in (0, 1)")
    lc = encoding_eigenvalue(J)
    if lambda_d is None:
        lambda_d, _ = qd_lambda(ModelParams(J, variant, 1), t_converge, seed=seed)
    if lambda_d >= 1.0:
        raise NumericalError(f"lambda_d = {lambda_d:.4f} >= 1: not in the QD phase")
    a = np.log(lc) / np.log(2.0)
    b = np.log(lc) / abs(np.log(lambda_d))
    return float(env_size ** a * (delta / abs(np.log(delta))) ** b)


def redundancy_exponent(J: float) -> float:
    """Exponent of |E| in R_delta: ln(lambda_c) / ln 2."""
    return float(np.log(encoding_eigenvalue(J)) / np.log(2.0))


def chi_vs_k(J: float, n: int, variant: str = "random", M: int = 100_000,
             seed: int = 0, k_max: int | None = None):
    """chi(F_{n-k,k}) for k = 1..k_max at fixed tree depth n."""
    from .sampler import step_biased, step_compressed, step_rng

    k_max = k_max or n
    out = []
    for k in range(1, k_max + 1):
        p = ModelParams(J, variant, k)
        ens = initial_ensemble(p)
        for s in range(n - k):
            rng = step_rng(seed + 7919 * k, s)
            if variant == "random":
                ens = step_biased(ens, M, p, rng)
            else:
                ens = step_compressed(ens, int(round(np.sqrt(M))), p, rng)
        out.append((k, conditional_entropy(ens)))
    return out


def redundancy_empirical(J: float, delta: float, n_values, variant: str = "random",
                         M: int = 100_000, seed: int = 0):
    """Scan k at fixed depth n for the smallest fraction reaching (1-delta) ln2.

    k_* is the largest k with chi >= (1-delta) ln2, refined by log-linear
    interpolation of ln2 - chi between neighbouring k; R = 2^(k_*) is the
    inverse of the minimal relative fraction size.  Returns per-n records and
    the fitted exponent of |E| = 2^n.
    """
    target = (1.0 - delta) * LN2
    rows = []
    for n in n_values:
        chis = chi_vs_k(J, n, variant, M, seed)
        ks = np.array([k for k, _ in chis], dtype=float)
        cs = np.array([c for _, c in chis])
        k_star = np.nan
        for i in range(len(ks) - 1):
            if cs[i] >= target > cs[i + 1]:
                # interpolate log(ln2 - chi) linearly in k
                y0, y1 = np.log(LN2 - cs[i]), np.log(LN2 - cs[i + 1])
                yt = np.log(LN2 - target)
                k_star = ks[i] + (yt - y0) / (y1 - y0)
                break
        R = 2.0 ** k_star if np.isfinite(k_star) else np.nan
        rows.append({"n": int(n), "k_star": float(k_star), "R": float(R),
                     "chi": cs.tolist()})
    ns = np.array([r["n"] for r in rows], dtype=float)
    Rs = np.array([r["R"] for r in rows])
    ok = np.isfinite(Rs)
    slope = float(np.polyfit(ns[ok], np.log2(Rs[ok]), 1)[0]) if ok.sum() >= 2 else np.nan
    return {"rows": rows, "exponent": slope, "predicted_exponent": redundancy_exponent(J)}


# -- scaling collapse ---------------------------------------------------------

def scaling_collapse(curves: dict, J_d: float, window: float = 0.5, n_grid: int = 41):
    """Collapse (1 - <r^2>_t) t against x = (J - J_d) t.

    ``curves`` maps t to (J array, purity array).  Each curve is interpolated
    on a common x grid inside |x| <= window; the returned spread is the largest
    vertical spread between curves divided by the y-range of the data there.
    """
    xs = {}
    ys = {}
    for t, (Js, r2) in curves.items():
        Js = np.asarray(Js, dtype=float)
        order = np.argsort(Js)
        xs[t] = (Js[order] - J_d) * t
        ys[t] = (1.0 - np.asarray(r2, dtype=float)[order]) * t
    lo = max(-window, max(x.min() for x in xs.values()))
    hi = min(window, min(x.max() for x in xs.values()))
    if hi <= lo:
        raise ConfigError("curves do not overlap inside the collapse window")
    grid = np.linspace(lo, hi, n_grid)
    Y = np.array([np.interp(grid, xs[t], ys[t]) for t in sorted(xs)])
    spread = Y.max(axis=0) - Y.min(axis=0)
    yrange = Y.max() - Y.min()
    return {"x": grid, "y": Y, "t": sorted(xs),
            "max_spread": float(spread.max()),
            "relative_spread": float(spread.max() / yrange) if yrange > 0 else 0.0}
