"""Pure-numpy implementations of the hot kernels.

Same call signatures as the compiled module; selected by ``qdtree._backend``
when the extension is missing or QDTREE_BACKEND=python.
"""
import numpy as np


def pair_branch(u, v, w, phi_min):
    """All ordered pairs of rotated peaks.

    Returns (W, U, V, dropped) in row-major pair order, where W = w_i w_j phi_ij
    is unnormalized and pairs with phi < phi_min are removed; their mass is
    returned in ``dropped``.
    """
    phi = 1.0 + np.multiply.outer(u, u)
    W = np.multiply.outer(w, w) * phi
    keep = phi >= phi_min
    if keep.all():
        dropped = 0.0
        U = np.add.outer(u, u) / phi
        V = np.multiply.outer(v, v) / phi
        return W.ravel(), U.ravel(), V.ravel(), dropped
    dropped = float(W[~keep].sum())
    phik = phi[keep]
    U = np.add.outer(u, u)[keep] / phik
    V = np.multiply.outer(v, v)[keep] / phik
    return W[keep], U, V, dropped


def stratified_pick(cum, offsets):
    """Stratified selection on a cumulative weight array.

    Position i is (i + offsets[i]) / n of the total; returns selected indices.
    """
    n = len(offsets)
    total = cum[-1]
    pos = (np.arange(n) + offsets) * (total / n)
    idx = np.searchsorted(cum, pos, side="right")
    return np.minimum(idx, len(cum) - 1)


def compressed_rounds(u, v, cum, perm, off_sample, off_pair, phi_min):
    """Run all rounds of the compressed branching step.

    u, v: rotated peaks; cum: cumulative weights in ``perm`` order;
    off_sample, off_pair: (rounds, N) uniform offsets.  Each round draws an
    N-sample, forms its N^2 ordered pairs weighted by phi and keeps N of them.
    Returns (U, V, dropped_fraction) with rounds * N entries.
    """
    rounds, n = off_sample.shape
    U = np.empty(rounds * n)
    V = np.empty(rounds * n)
    dropped = 0.0
    for r in range(rounds):
        idx = perm[stratified_pick(cum, off_sample[r])]
        a = u[idx]
        b = v[idx]
        phi = 1.0 + np.multiply.outer(a, a)
        bad = phi < phi_min
        if bad.any():
            dropped += phi[bad].sum() / phi.sum()
            phi[bad] = 0.0
        flat = phi.ravel()
        sel = stratified_pick(np.cumsum(flat), off_pair[r])
        i, j = np.divmod(sel, n)
        f = flat[sel]
        U[r * n:(r + 1) * n] = (a[i] + a[j]) / f
        V[r * n:(r + 1) * n] = b[i] * b[j] / f
    return U, V, dropped / max(rounds, 1)


def branch_pairs(ul, vl, ur, vr):
    phi = 1.0 + ul * ur
    return (ul + ur) / phi, vl * vr / phi


def coarse_convolve(p, a, b):
    """Return (p*p + a*a, 2 p*a, b*b) with * the full discrete convolution."""
    return (np.convolve(p, p) + np.convolve(a, a),
            2.0 * np.convolve(p, a),
            np.convolve(b, b))
