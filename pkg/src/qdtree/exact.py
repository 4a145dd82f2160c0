"""Brute-force evolution of the full delta-peak distribution."""
from __future__ import annotations

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from . import _backend
from .bloch import (DROP_TOL, PHI_MIN, ModelParams, WeightedEnsemble, clip_to_disk,
                    rotate_arrays)
from .errors import ConfigError, NumericalError, ResourceCapError

PEAK_CAP = 10_000_000


def rotated_copies(ens: WeightedEnsemble, params: ModelParams):
    """Peaks after the site rotation; the random variant splits into +-theta halves."""
    ang = params.heisenberg_angle
    if params.variant == "deterministic":
        u, v = rotate_arrays(ens.u, ens.v, ang)
        return ens.w, u, v
    if params.variant == "random":
        up, vp = rotate_arrays(ens.u, ens.v, ang)
        um, vm = rotate_arrays(ens.u, ens.v, -ang)
        w = 0.5 * ens.w
        return np.concatenate([w, w]), np.concatenate([up, um]), np.concatenate([vp, vm])
    raise ConfigError("the exact engine covers the deterministic and random variants")


def _normalize(W, U, V, dropped, t, prev_dropped, meta):
    total = W.sum()
    if total <= 0.0 or not np.isfinite(total):
        raise NumericalError("all branch weight vanished")
    frac = dropped / (total + dropped)
    if frac > DROP_TOL:
        raise NumericalError(f"dropped branch mass {frac:.3e} exceeds {DROP_TOL:g}")
    U, V = clip_to_disk(np.asarray(U, dtype=np.float64), np.asarray(V, dtype=np.float64))
    return WeightedEnsemble(W / total, U, V, t=t, dropped_mass=prev_dropped + frac,
                            meta=meta)


def step_exact(ens: WeightedEnsemble, params: ModelParams, peak_cap: int = PEAK_CAP,
               chunks: int = 1) -> WeightedEnsemble:
    """One exact application of the branching recursion.

    ``chunks`` splits the left index range into blocks that are processed
    independently and concatenated; the result does not depend on it.
    """
    w, u, v = rotated_copies(ens, params)
    n = len(w)
    if n * n > peak_cap:
        raise ResourceCapError(f"{n * n} peaks exceed the cap of {peak_cap}")
    pair_branch = _backend.get("pair_branch")
    if chunks <= 1:
        W, U, V, dropped = pair_branch(u, v, w, PHI_MIN)
    else:
        parts = [_pair_block(u, v, w, blk) for blk in np.array_split(np.arange(n), chunks)]
        W = np.concatenate([p[0] for p in parts])
        U = np.concatenate([p[1] for p in parts])
        V = np.concatenate([p[2] for p in parts])
        dropped = sum(p[3] for p in parts)
    return _normalize(W, U, V, dropped, ens.t + 1, ens.dropped_mass, dict(ens.meta))


def _pair_block(u, v, w, rows):
    # rows x all columns, in row-major order
    phi = 1.0 + np.multiply.outer(u[rows], u)
    Wb = np.multiply.outer(w[rows], w) * phi
    keep = phi >= PHI_MIN
    dropped = float(Wb[~keep].sum())
    U = np.add.outer(u[rows], u)[keep] / phi[keep]
    V = np.multiply.outer(v[rows], v)[keep] / phi[keep]
    return Wb[keep], U, V, dropped


def evolve_exact(ens: WeightedEnsemble, params: ModelParams, steps: int,
                 merge_eps: float | None = None, peak_cap: int = PEAK_CAP):
    out = [ens]
    for _ in range(steps):
        ens = step_exact(ens, params, peak_cap=peak_cap)
        if merge_eps is not None:
            ens = merge_duplicates(ens, merge_eps)
        out.append(ens)
    return out


def merge_duplicates(ens: WeightedEnsemble, eps: float) -> WeightedEnsemble:
    """Merge peaks closer than ``eps`` (transitively); weights add, positions average."""
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    pts = np.stack([ens.u, ens.v], axis=1)
    _, first, inv = np.unique(pts, axis=0, return_index=True, return_inverse=True)
    inv = inv.reshape(-1)
    labels = inv
    if eps > 0 and len(first) > 1:
        tree = cKDTree(pts[first])
        pairs = tree.query_pairs(eps, output_type="ndarray")
        if len(pairs):
            m = len(first)
            g = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(m, m))
            _, comp = connected_components(g, directed=False)
            labels = comp[inv]
    # order clusters by first appearance for a stable output
    _, order_first, lab = np.unique(labels, return_index=True, return_inverse=True)
    lab = lab.reshape(-1)
    rank = np.empty(len(order_first), dtype=np.intp)
    rank[np.argsort(order_first, kind="stable")] = np.arange(len(order_first))
    lab = rank[lab]
    k = len(order_first)
    W = np.bincount(lab, weights=ens.w, minlength=k)
    wu = np.bincount(lab, weights=ens.w * ens.u, minlength=k)
    wv = np.bincount(lab, weights=ens.w * ens.v, minlength=k)
    # clusters of zero weight keep the plain average position
    cnt = np.bincount(lab, minlength=k)
    pu = np.bincount(lab, weights=ens.u, minlength=k) / cnt
    pv = np.bincount(lab, weights=ens.v, minlength=k) / cnt
    nz = W > 0
    U = np.where(nz, wu / np.where(nz, W, 1.0), pu)
    V = np.where(nz, wv / np.where(nz, W, 1.0), pv)
    clip_to_disk(U, V)
    return ens.replace(w=W, u=U, v=V)


def tree_ensemble(params: ModelParams, t: int, signs=None) -> WeightedEnsemble:
    """Exact ensemble for one fixed assignment of rotation signs.

    The tree has depth n = t + k; ``signs`` is indexed in heap order (root 1,
    children 2i, 2i+1) and gives the sign of the rotation on the edge into
    each internal vertex at depth 1..n-1.  Only the vertices on the paths to
    the measured fraction (first leaf of every 2^k block) matter.  With
    ``signs=None`` every sign is +1, i.e. the deterministic model.
    """
    n = t + params.k
    if signs is None:
        signs = np.ones(2 ** n, dtype=int)
    ang = params.heisenberg_angle
    x = params.c ** (params.k - 1)

    def node(vid, depth):
        # returns (w, u, v) for the subtree rooted at vid (depth from the root)
        if depth == t:
            return np.array([0.5, 0.5]), np.array([-x, x]), np.zeros(2)
        kids = []
        for child in (2 * vid, 2 * vid + 1):
            w, u, v = node(child, depth + 1)
            u, v = rotate_arrays(u, v, signs[child] * ang)
            kids.append((w, u, v))
        (wl, ul, vl), (wr, ur, vr) = kids
        phi = 1.0 + np.multiply.outer(ul, ur)
        W = np.multiply.outer(wl, wr) * phi
        keep = phi >= PHI_MIN
        U = np.add.outer(ul, ur)[keep] / phi[keep]
        V = np.multiply.outer(vl, vr)[keep] / phi[keep]
        W = W[keep]
        clip_to_disk(U, V)
        return W / W.sum(), U, V

    w, u, v = node(1, 0)
    return WeightedEnsemble(w, u, v, t=t)
