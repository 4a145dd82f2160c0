"""Dense statevector oracle for trees of depth n <= 4.

V_1 = Y = |00><0| + |11><1| and V_{n+1} = (V_n (x) V_n)(U (x) U) Y with the
site rotation U = exp(-i sy theta/2).  Leaves are ordered left to right and
leaf 0 is the most significant bit of the environment index; bit 0 is the
+1 eigenstate of sz.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .bloch import ModelParams, WeightedEnsemble
from .coarse import SpinResolvedTriple
from .errors import ConfigError, ResourceCapError

N_MAX = 4


def site_gate(theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]])


Y = np.zeros((4, 2))
Y[0, 0] = 1.0
Y[3, 1] = 1.0


@dataclass
class DenseIsometry:
    n: int
    matrix: np.ndarray  # (2^(2^n), 2)
    params: ModelParams
    signs: np.ndarray

    def check(self, tol=1e-12):
        g = self.matrix.T @ self.matrix
        return float(np.abs(g - np.eye(2)).max()) < tol


def all_plus(n: int) -> np.ndarray:
    return np.ones(2 ** n, dtype=int)


def relevant_vertices(n: int, t: int, k: int) -> list:
    """Heap ids of rotated vertices on the paths to the measured fraction."""
    out = []
    for j in range(2 ** t):
        leaf = j * 2 ** k
        vid = 1
        for depth in range(1, n):
            bit = (leaf >> (n - depth)) & 1
            vid = 2 * vid + bit
            out.append(vid)
    return sorted(set(out))


def build_isometry(n: int, params: ModelParams, signs=None) -> DenseIsometry:
    """Assemble V_n; ``signs`` (heap order, length >= 2^n) gives the rotation sign per vertex."""
    if n > N_MAX:
        raise ResourceCapError(f"dense isometry limited to n <= {N_MAX}")
    if n < 1:
        raise ConfigError("n must be at least 1")
    if signs is None:
        signs = all_plus(n)
    signs = np.asarray(signs)
    gates = {1: site_gate(params.theta), -1: site_gate(-params.theta)}

    def build(vid, depth):
        if depth == n - 1:
            return Y
        Vl = build(2 * vid, depth + 1) @ gates[int(signs[2 * vid])]
        Vr = build(2 * vid + 1, depth + 1) @ gates[int(signs[2 * vid + 1])]
        cols = [np.kron(Vl[:, i], Vr[:, i]) for i in range(2)]
        return np.stack(cols, axis=1)

    return DenseIsometry(n, build(1, 0), params, signs)


def fraction_leaves(n: int, t: int, k: int) -> list:
    if t < 0 or k < 1 or t + k != n:
        raise ConfigError(f"inconsistent (t={t}, k={k}, n={n})")
    return [j * 2 ** k for j in range(2 ** t)]


def outcome_operators(iso: DenseIsometry, leaves) -> np.ndarray:
    """Q_m = V^T pi_m V for every bit pattern m of the given leaves, shape (2^|F|, 2, 2)."""
    nq = 2 ** iso.n
    T = iso.matrix.reshape((2,) * nq + (2,))
    rest = [q for q in range(nq) if q not in leaves]
    T = np.transpose(T, list(leaves) + rest + [nq])
    T = T.reshape(2 ** len(leaves), 2 ** len(rest), 2)
    return np.einsum("mri,mrj->mij", T, T)


def operators_to_ensemble(Q, t=0, p_min=0.0) -> WeightedEnsemble:
    """Normalize Q_m = p_m (1 + u sz + v sx) into peaks; p_m = tr(Q_m)/2."""
    p = 0.5 * (Q[:, 0, 0] + Q[:, 1, 1])
    keep = p > p_min
    p = p[keep]
    u = 0.5 * (Q[keep, 0, 0] - Q[keep, 1, 1]) / p
    v = Q[keep, 0, 1] / p
    return WeightedEnsemble(p, u, v, t=t)


def enumerate_measurement(iso: DenseIsometry, t: int, k: int, p_min: float = 1e-300):
    leaves = fraction_leaves(iso.n, t, k)
    return operators_to_ensemble(outcome_operators(iso, leaves), t=t, p_min=p_min)


def enumerate_total_spin(iso: DenseIsometry, t: int, k: int) -> SpinResolvedTriple:
    """Sum Q_m over outcomes of equal total spin M = sum_i m_i."""
    leaves = fraction_leaves(iso.n, t, k)
    Q = outcome_operators(iso, leaves)
    nf = len(leaves)
    L = nf + 1
    p = np.zeros(L)
    a = np.zeros(L)
    b = np.zeros(L)
    for m in range(2 ** nf):
        ones = bin(m).count("1")  # bits set are m_i = -1
        M = nf - 2 * ones
        i = (M + nf) // 2
        p[i] += 0.5 * (Q[m, 0, 0] + Q[m, 1, 1])
        a[i] += 0.5 * (Q[m, 0, 0] - Q[m, 1, 1])
        b[i] += Q[m, 0, 1]
    return SpinResolvedTriple(t, p, a, b)


def _entropy(rho):
    ev = np.linalg.eigvalsh(rho)
    ev = ev[ev > 1e-15]
    return float(-np.sum(ev * np.log(ev)))


def cj_state(iso: DenseIsometry) -> np.ndarray:
    """(1 (x) V)|I>/sqrt 2 as a tensor with axes (R, leaf_0, ..., leaf_last)."""
    psi = iso.matrix.T / np.sqrt(2.0)  # rows: reference basis
    return psi.reshape((2,) + (2,) * 2 ** iso.n)


def mutual_information(iso: DenseIsometry, leaves) -> float:
    psi = cj_state(iso)
    nq = 2 ** iso.n
    axes_f = [1 + q for q in leaves]
    rest = [1 + q for q in range(nq) if q not in leaves]
    T = np.transpose(psi, [0] + axes_f + rest).reshape(2, 2 ** len(leaves), -1)
    rho_rf = np.einsum("afr,bgr->afbg", T, T).reshape(2 * 2 ** len(leaves), -1)
    rho_r = np.einsum("afr,bfr->ab", T, T)
    rho_f = np.einsum("afr,agr->fg", T, T)
    return _entropy(rho_r) + _entropy(rho_f) - _entropy(rho_rf)


@dataclass
class DiscordReport:
    mutual_information: float
    chi: float

    @property
    def discord(self):
        return self.mutual_information - self.chi

    @property
    def passed(self):
        return abs(self.discord) < 1e-10


def verify_discord_free(iso: DenseIsometry, t: int, k: int) -> DiscordReport:
    from .observables import conditional_entropy

    leaves = fraction_leaves(iso.n, t, k)
    ens = enumerate_measurement(iso, t, k)
    return DiscordReport(mutual_information(iso, leaves), conditional_entropy(ens))


def sign_assignments(n: int, t: int, k: int, limit: int | None = None, seed: int = 0):
    """Sign vectors over the relevant vertices: all of them, or ``limit`` random ones."""
    rel = relevant_vertices(n, t, k)
    base = all_plus(n)
    if limit is None:
        for bits in itertools.product((1, -1), repeat=len(rel)):
            s = base.copy()
            s[rel] = bits
            yield s
    else:
        rng = np.random.default_rng(seed)
        for _ in range(limit):
            s = base.copy()
            s[rel] = rng.choice((1, -1), size=len(rel))
            yield s


def averaged_ensemble(params: ModelParams, t: int, signs_iter) -> WeightedEnsemble:
    """Equal-weight mixture of oracle ensembles over the given sign vectors."""
    n = t + params.k
    ws, us, vs = [], [], []
    count = 0
    for s in signs_iter:
        e = enumerate_measurement(build_isometry(n, params, s), t, params.k)
        ws.append(e.w)
        us.append(e.u)
        vs.append(e.v)
        count += 1
    return WeightedEnsemble(np.concatenate(ws) / count, np.concatenate(us),
                            np.concatenate(vs), t=t)


def compare_ensembles(a: WeightedEnsemble, b: WeightedEnsemble, merge_eps: float = 1e-10):
    """Per-peak comparison after merging coincident peaks in both ensembles.

    Returns max |dw|, max position error, and the total variation of weights
    (inf if the merged supports do not match one-to-one).
    """
    from scipy.spatial import cKDTree

    from .exact import merge_duplicates

    a = merge_duplicates(a.normalized(), merge_eps)
    b = merge_duplicates(b.normalized(), merge_eps)
    res = {"peaks_a": len(a), "peaks_b": len(b)}
    if len(a) != len(b):
        res.update(max_dw=np.inf, max_dpos=np.inf, tv=np.inf)
        return res
    tree = cKDTree(np.stack([b.u, b.v], 1))
    d, j = tree.query(np.stack([a.u, a.v], 1))
    if len(np.unique(j)) != len(j):
        res.update(max_dw=np.inf, max_dpos=float(d.max()), tv=np.inf)
        return res
    dw = np.abs(a.w - b.w[j])
    res.update(max_dw=float(dw.max()), max_dpos=float(d.max()), tv=float(0.5 * dw.sum()))
    return res


# -- certification matrix -----------------------------------------------------

FULL_AVERAGE_LIMIT = 2 ** 10
SAMPLED_REALIZATIONS = 200
TOL = 1e-9


def _case(kind, passed, **info):
    d = {"case": kind, "pass": bool(passed)}
    d.update(info)
    return d


def certify_microscopic(J: float, variant: str, t: int, k: int, tol: float = TOL,
                        seed: int = 0) -> list:
    """Compare the exact recursion against dense enumeration for one (J, t, k)."""
    from .bloch import initial_ensemble
    from .exact import step_exact, tree_ensemble

    params = ModelParams(J, variant, k)
    n = t + k
    info = dict(variant=variant, J=J, t=t, k=k)
    out = []
    if variant == "deterministic":
        ens = initial_ensemble(params)
        for _ in range(t):
            ens = step_exact(ens, params)
        iso = build_isometry(n, params)
        ref = enumerate_measurement(iso, t, k)
        r = compare_ensembles(ens, ref)
        dev = max(r["max_dw"], r["max_dpos"])
        out.append(_case("exact-vs-oracle", dev < tol, max_deviation=dev, **info))
        return out
    rel = relevant_vertices(n, t, k)
    if 2 ** len(rel) <= FULL_AVERAGE_LIMIT:
        ens = initial_ensemble(params)
        for _ in range(t):
            ens = step_exact(ens, params)
        ref = averaged_ensemble(params, t, sign_assignments(n, t, k))
        r = compare_ensembles(ens, ref)
        dev = max(r["max_dw"], r["max_dpos"])
        out.append(_case("exact-vs-oracle-average", dev < tol, max_deviation=dev,
                         sign_sets=2 ** len(rel), **info))
    # per-realization agreement on a seeded finite sign set
    worst = 0.0
    ws, us, vs, wo, uo, vo = [], [], [], [], [], []
    for s in sign_assignments(n, t, k, limit=SAMPLED_REALIZATIONS, seed=seed):
        mine = tree_ensemble(params, t, s)
        ref = enumerate_measurement(build_isometry(n, params, s), t, k)
        r = compare_ensembles(mine, ref)
        worst = max(worst, r["max_dw"], r["max_dpos"])
        ws.append(mine.w); us.append(mine.u); vs.append(mine.v)
        wo.append(ref.w); uo.append(ref.u); vo.append(ref.v)
    mix_a = WeightedEnsemble(np.concatenate(ws), np.concatenate(us), np.concatenate(vs), t=t)
    mix_b = WeightedEnsemble(np.concatenate(wo), np.concatenate(uo), np.concatenate(vo), t=t)
    r = compare_ensembles(mix_a, mix_b)
    worst = max(worst, r["max_dw"], r["max_dpos"])
    out.append(_case("signed-recursion-vs-oracle", worst < tol, max_deviation=worst,
                     sign_sets=SAMPLED_REALIZATIONS, **info))
    return out


def certify_structure(J: float, t: int, k: int, variant: str = "deterministic",
                      seed: int = 0) -> list:
    """Isometry, completeness, positivity, discord and total-spin checks."""
    from .coarse import coarse_evolve

    params = ModelParams(J, variant, k)
    n = t + k
    signs = next(sign_assignments(n, t, k, limit=1, seed=seed)) if variant == "random" else None
    iso = build_isometry(n, params, signs)
    info = dict(variant=variant, J=J, t=t, k=k)
    out = []
    dev = float(np.abs(iso.matrix.T @ iso.matrix - np.eye(2)).max())
    out.append(_case("isometry", dev < 1e-12, max_deviation=dev, **info))
    Q = outcome_operators(iso, fraction_leaves(n, t, k))
    dev = float(np.abs(Q.sum(axis=0) - np.eye(2)).max())
    out.append(_case("completeness", dev < 1e-12, max_deviation=dev, **info))
    ev = np.linalg.eigvalsh(Q)
    out.append(_case("positivity", ev.min() > -1e-12, max_deviation=float(max(0.0, -ev.min())),
                     **info))
    rep = verify_discord_free(iso, t, k)
    out.append(_case("discord-free", rep.passed, max_deviation=abs(rep.discord), **info))
    if variant == "deterministic":
        tr = enumerate_total_spin(iso, t, k)
        ref = coarse_evolve(params, t)
        dev = float(max(np.abs(tr.p - ref.p).max(), np.abs(tr.a - ref.a).max(),
                        np.abs(tr.b - ref.b).max()))
        out.append(_case("total-spin-vs-coarse", dev < 1e-10, max_deviation=dev, **info))
    return out


def certification_matrix(Js=(0.2, 0.5, 0.8), n_max: int = N_MAX):
    """Yield one report record per certification case."""
    for J in Js:
        for n in range(1, n_max + 1):
            for k in range(1, n + 1):
                t = n - k
                for variant in ("deterministic", "random"):
                    yield from certify_microscopic(J, variant, t, k)
                    yield from certify_structure(J, t, k, variant)
