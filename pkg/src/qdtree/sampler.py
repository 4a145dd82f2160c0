"""Monte Carlo engines: compressed resampling (deterministic model) and the
biased, symmetrized sampler (random model)."""
from __future__ import annotations

import numpy as np

from . import _backend
from .bloch import (DROP_TOL, PHI_MIN, ModelParams, WeightedEnsemble, clip_to_disk,
                    rotate_arrays)
from .errors import ConfigError, DegenerateEnsembleError, NumericalError


def step_rng(seed: int, t: int, stream: int = 0) -> np.random.Generator:
    """Generator keyed by (master seed, generation, stream)."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(t), int(stream)]))


def systematic_indices(w, n_out, rng, permute=True):
    """Systematic resampling; optional random permutation first to break order effects."""
    w = np.asarray(w, dtype=np.float64)
    order = rng.permutation(len(w)) if permute else np.arange(len(w))
    cum = np.cumsum(w[order])
    pos = (rng.random() + np.arange(n_out)) * (cum[-1] / n_out)
    idx = np.minimum(np.searchsorted(cum, pos, side="right"), len(w) - 1)
    return order[idx]


def multinomial_indices(w, n_out, rng):
    w = np.asarray(w, dtype=np.float64)
    return rng.choice(len(w), size=n_out, p=w / w.sum())


def compress(ens: WeightedEnsemble, n_out: int, rng: np.random.Generator,
             scheme: str = "systematic") -> WeightedEnsemble:
    """Draw ``n_out`` equal-weight peaks proportionally to weight."""
    if n_out < 1:
        raise ConfigError("n_out must be at least 1")
    if scheme == "systematic":
        idx = systematic_indices(ens.w, n_out, rng)
    elif scheme == "multinomial":
        idx = multinomial_indices(ens.w, n_out, rng)
    else:
        raise ConfigError(f"unknown resampling scheme {scheme!r}")
    return ens.replace(w=np.full(n_out, 1.0 / n_out), u=ens.u[idx], v=ens.v[idx])


def tilt_weights(w, u, v, tol=1e-15, max_iter=50):
    """Exponentially tilted weights w exp(a u + b v) with zero first moments.

    Minimal-divergence reweighting that restores <u> = <v> = 0; fails when the
    origin is outside the convex hull of the support.
    """
    X = np.stack([u, v], axis=1)
    lam = np.zeros(2)
    logw = np.log(np.where(w > 0, w, 1.0))
    mask = w > 0
    e = w / w.sum()
    for _ in range(max_iter):
        z = X @ lam + logw
        z = np.where(mask, z - z[mask].max(), -np.inf)
        e = np.exp(z)
        e /= e.sum()
        m = e @ X
        if np.abs(m).max() < tol:
            return e
        d = X - m
        C = d.T @ (d * e[:, None])
        # directions without spread carry no mean either
        C += 1e-300 * np.eye(2) + np.diag(np.where(np.diag(C) < 1e-30, 1.0, 0.0))
        lam -= np.linalg.solve(C, m)
    if np.abs(m).max() > 1e-10:
        raise NumericalError(f"mean recentering did not converge (residual {np.abs(m).max():.2e})")
    return e


def step_compressed(ens: WeightedEnsemble, N: int, params: ModelParams,
                    rng: np.random.Generator, recenter: bool = True) -> WeightedEnsemble:
    """Compressed-resampling step for the deterministic model.

    Each of N rounds draws an N-sample (stratified, on one random ordering of
    the input per step), forms all N^2 ordered pairs weighted by phi and keeps
    N of them by stratified selection along the pair order.  The union of
    rounds is the N^2-peak output.  With ``recenter`` the output weights are
    tilted so that <u> = <v> = 0 holds exactly, which suppresses the unstable
    mean mode of the finite-sample recursion.
    """
    if params.variant != "deterministic":
        raise ConfigError("step_compressed is defined for the deterministic variant")
    if N < 2:
        raise ConfigError("N must be at least 2")
    u, v = rotate_arrays(ens.u, ens.v, params.heisenberg_angle)
    perm = rng.permutation(len(ens.w)).astype(np.intp)
    cum = np.cumsum(ens.w[perm])
    off_sample = rng.random((N, N))
    off_pair = rng.random((N, N))
    U, V, dropped = _backend.get("compressed_rounds")(
        np.ascontiguousarray(u), np.ascontiguousarray(v), cum, perm,
        off_sample, off_pair, PHI_MIN)
    if dropped > DROP_TOL:
        raise NumericalError(f"dropped branch mass {dropped:.3e} exceeds {DROP_TOL:g}")
    clip_to_disk(U, V)
    w = np.full(len(U), 1.0 / len(U))
    if recenter:
        w = tilt_weights(w, U, V)
    meta = dict(ens.meta)
    meta["engine"] = "compressed"
    return WeightedEnsemble(w, U, V, t=ens.t + 1,
                            dropped_mass=ens.dropped_mass + dropped, meta=meta)


def expand(ens: WeightedEnsemble, M: int, rng: np.random.Generator) -> WeightedEnsemble:
    """Equal-weight M-peak version of ``ens`` (exact when weights are multiples of 1/M)."""
    counts = ens.w * M
    if np.allclose(counts, np.round(counts), atol=1e-9) and round(counts.sum()) == M:
        idx = np.repeat(np.arange(len(ens.w)), np.round(counts).astype(np.intp))
        return ens.replace(w=np.full(M, 1.0 / M), u=ens.u[idx], v=ens.v[idx])
    return compress(ens, M, rng)


def step_biased(ens: WeightedEnsemble, M: int, params: ModelParams,
                rng: np.random.Generator, scheme: str = "systematic") -> WeightedEnsemble:
    """Biased, symmetrized sampling step for the random model.

    The 2M rotated copies (+-theta) are weighted by (1 + u'); M/4 left and
    M/4 right peaks are drawn independently from that bias, paired, and each
    pair is emitted as the four reflections (+-u, +-v).
    """
    if params.variant != "random":
        raise ConfigError("step_biased is defined for the random variant only")
    if M < 4 or M % 4:
        raise ConfigError("M must be a positive multiple of 4")
    if len(ens.w) != M or not np.allclose(ens.w, 1.0 / M, rtol=1e-9, atol=0):
        ens = expand(ens, M, rng)
    ang = params.heisenberg_angle
    up, vp = rotate_arrays(ens.u, ens.v, ang)
    um, vm = rotate_arrays(ens.u, ens.v, -ang)
    U = np.concatenate([up, um])
    V = np.concatenate([vp, vm])
    bias = np.maximum(1.0 + U, 0.0)
    if bias.sum() <= 0.0:
        raise DegenerateEnsembleError("bias weight 1 + u' vanishes on every peak")
    q = M // 4
    if scheme == "systematic":
        left = systematic_indices(bias, q, rng)
        right = systematic_indices(bias, q, rng)
    elif scheme == "multinomial":
        left = multinomial_indices(bias, q, rng)
        right = multinomial_indices(bias, q, rng)
    else:
        raise ConfigError(f"unknown resampling scheme {scheme!r}")
    right = right[rng.permutation(q)]
    bu, bv = _backend.get("branch_pairs")(
        np.ascontiguousarray(U[left]), np.ascontiguousarray(V[left]),
        np.ascontiguousarray(U[right]), np.ascontiguousarray(V[right]))
    clip_to_disk(bu, bv)
    out_u = np.concatenate([bu, -bu, bu, -bu])
    out_v = np.concatenate([bv, bv, -bv, -bv])
    meta = dict(ens.meta)
    meta["engine"] = "biased"
    return WeightedEnsemble(np.full(M, 1.0 / M), out_u, out_v, t=ens.t + 1,
                            dropped_mass=ens.dropped_mass, meta=meta)
