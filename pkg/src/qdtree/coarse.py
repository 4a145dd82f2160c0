"""Total-spin (coarse-grained) measurement recursion and its analytics.

Outcomes of a fraction of 2^t qubits are summarized by the total spin
M in {-2^t, -2^t + 2, ..., 2^t}; array index i corresponds to M = 2i - 2^t.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _backend
from .bloch import PHI_MIN, ModelParams, rotate_arrays
from .errors import ConfigError, NumericalError, ResourceCapError

P_FLOOR = 1e-300
TAU_MAX = 2
TABLE_CAP = 50_000_000


@dataclass
class SpinResolvedTriple:
    t: int
    p: np.ndarray
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=np.float64)
        self.a = np.asarray(self.a, dtype=np.float64)
        self.b = np.asarray(self.b, dtype=np.float64)
        L = 2 ** self.t + 1
        if not (len(self.p) == len(self.a) == len(self.b) == L):
            raise ValueError(f"arrays must have length 2^t + 1 = {L}")

    @property
    def grid(self) -> np.ndarray:
        return 2 * np.arange(len(self.p), dtype=np.int64) - 2 ** self.t

    def index(self, M: int) -> int:
        i, r = divmod(M + 2 ** self.t, 2)
        if r or not 0 <= i < len(self.p):
            raise KeyError(M)
        return i

    def check(self, tol=1e-10):
        """Raise if a conservation law or posterior bound is violated."""
        if abs(self.p.sum() - 1.0) > tol:
            raise NumericalError(f"sum p = {self.p.sum()!r}")
        if abs(self.a.sum()) > tol or abs(self.b.sum()) > tol:
            raise NumericalError("sum a or sum b is nonzero")
        if np.any(self.p < 0):
            raise NumericalError("negative outcome probability")
        live = self.p > P_FLOOR
        r2 = (self.a[live] / self.p[live]) ** 2 + (self.b[live] / self.p[live]) ** 2
        if np.any(r2 > 1.0 + 1e-9):
            raise NumericalError("posterior outside the Bloch disk")


def _clean(p, a, b):
    # clip round-off negatives and subnormal underflow to exact zeros
    if np.any(p < -1e-14 * max(1.0, np.abs(p).max())):
        raise NumericalError("outcome probability below -1e-14")
    dead = p < P_FLOOR
    p = np.where(dead, 0.0, p)
    a = np.where(dead, 0.0, a)
    b = np.where(dead, 0.0, b)
    # |a|, |b| <= p up to round-off
    a = np.clip(a, -p, p)
    b = np.clip(b, -p, p)
    return p, a, b


def coarse_initial(params: ModelParams) -> SpinResolvedTriple:
    x = 0.5 * params.c ** (params.k - 1)
    return SpinResolvedTriple(0, [0.5, 0.5], [-x, x], [0.0, 0.0])


def rotate_ab(a, b, theta):
    """Primed arrays for the deterministic site rotation of angle theta."""
    return rotate_arrays(a, b, -theta)


def coarse_step(triple: SpinResolvedTriple, theta: float) -> SpinResolvedTriple:
    """p' = p*p + a'*a', a' = 2 p*a', b' = b'*b' with * the convolution over M."""
    ap, bp = rotate_ab(triple.a, triple.b, theta)
    P, A, B = _backend.get("coarse_convolve")(
        np.ascontiguousarray(triple.p), np.ascontiguousarray(ap), np.ascontiguousarray(bp))
    P, A, B = _clean(np.asarray(P), np.asarray(A), np.asarray(B))
    return SpinResolvedTriple(triple.t + 1, P, A, B)


def coarse_evolve(params: ModelParams, t: int, callback=None) -> SpinResolvedTriple:
    if params.variant != "deterministic":
        raise ConfigError("the total-spin recursion is defined for the deterministic variant")
    tr = coarse_initial(params)
    for _ in range(t):
        tr = coarse_step(tr, params.theta)
        if callback is not None:
            callback(tr)
    return tr


def coarse_purity(triple: SpinResolvedTriple):
    """Per-outcome r^2 (NaN where p is below the floor) and the p-weighted average."""
    live = triple.p > P_FLOOR
    r2 = np.full(len(triple.p), np.nan)
    pl = triple.p[live]
    # ratios first: p**2 underflows for p near the floor
    r2[live] = (triple.a[live] / pl) ** 2 + (triple.b[live] / pl) ** 2
    avg = float(np.sum(pl * r2[live]))
    return r2, avg


def deficits(triple: SpinResolvedTriple) -> np.ndarray:
    """p_M (1 - r_M^2) = p - (a^2 + b^2)/p per outcome (zero where p vanishes)."""
    live = triple.p > P_FLOOR
    d = np.zeros(len(triple.p))
    pl = triple.p[live]
    d[live] = pl * (1.0 - (triple.a[live] / pl) ** 2 - (triple.b[live] / pl) ** 2)
    return d


def small_theta_deficits(t: int, theta: float, power: int = 4) -> dict:
    """Deficits p_M(1 - r_M^2) / theta^power for the k=1 flow at small theta.

    The leading imperfections scale as theta^4: ratio 1 at M = 0 and 2/3 at
    M = +-2^(t-2), all other outcomes being of higher order.
    """
    if t < 2:
        raise ConfigError("t must be at least 2")
    if theta > 0.05:
        raise ConfigError("small-theta analysis needs theta <= 0.05")
    tr = SpinResolvedTriple(0, [0.5, 0.5], [-0.5, 0.5], [0.0, 0.0])
    for _ in range(t):
        tr = coarse_step(tr, theta)
    d = deficits(tr) / theta ** power
    return {int(M): float(x) for M, x in zip(tr.grid, d)}


def total_deficit(triple: SpinResolvedTriple) -> float:
    return float(deficits(triple).sum())


def j4_prefactor_ratio(J: float = 0.02, t: int = 11, k: int = 2) -> float:
    """Total deficit divided by (7/4)(J pi/2)^4."""
    tr = coarse_evolve(ModelParams(J, "deterministic", k), t)
    return total_deficit(tr) / (1.75 * (0.5 * np.pi * J) ** 4)


# -- moments ------------------------------------------------------------------

def spin_moments(triple: SpinResolvedTriple) -> dict:
    """Moments of M and of the rescaled m = M / sqrt(<M^2>)."""
    M = triple.grid.astype(np.float64)
    p = triple.p
    m2 = float(np.dot(p, M * M))
    sig = np.sqrt(m2)
    m = M / sig
    return {
        "mean": float(np.dot(p, M)),
        "M2": m2,
        "Mu": float(np.dot(triple.a, M)),
        "Mv": float(np.dot(triple.b, M)),
        "skewness": float(np.dot(p, m ** 3)),
        "kurtosis": float(np.dot(p, m ** 4)),
        "excess_kurtosis_negative": float(3.0 - np.dot(p, m ** 4)),
        "covariance_mu": float(np.dot(triple.a, m)),
    }


def m2_exact(J: float, k: int, t: int) -> float:
    """Closed solution of <M^2>_{t+1} = 2 <M^2>_t + 2 c^2 <Mu>_t^2, <M^2>_0 = 1."""
    c = np.cos(0.5 * np.pi * J)
    q = 2.0 * c * c
    if abs(q - 1.0) < 1e-14:
        geo = float(t)
    else:
        geo = (q ** t - 1.0) / (q - 1.0)
    return 2.0 ** t * (1.0 + c ** (2 * k) * geo)


def m2_recursion(J: float, k: int, t: int) -> np.ndarray:
    """<M^2>_s for s = 0..t by iterating the linear recursion."""
    c = np.cos(0.5 * np.pi * J)
    out = np.empty(t + 1)
    out[0] = 1.0
    for s in range(t):
        mu = c ** (k - 1) * (2 * c) ** s
        out[s + 1] = 2.0 * out[s] + 2.0 * (c * mu) ** 2
    return out


def moment_predictions(J: float, k: int, t: int) -> dict:
    """<Mu>_t, <M^2>_t and the leading asymptotics of <M^2>_t.

    For J > 1/2, <M^2>_t / 2^t -> 1 + c^(2k) / (1 - 2c^2); for J < 1/2,
    <M^2>_t / (2c)^(2t) -> c^(2k) / (2c^2 - 1); at J = 1/2,
    <M^2>_t = 2^t (1 + t / 2^k) grows as t 2^t.
    """
    c = np.cos(0.5 * np.pi * J)
    rec = {"Mu": c ** (k - 1) * (2 * c) ** t, "M2": m2_exact(J, k, t)}
    q = 2 * c * c
    if abs(q - 1.0) < 1e-12:
        rec["regime"] = "critical"
        rec["prefactor"] = c ** (2 * k)  # <M^2>_t = 2^t (1 + c^(2k) t)
        rec["asymptotic"] = 2.0 ** t * (1.0 + c ** (2 * k) * t)
    elif q < 1.0:
        rec["regime"] = "encoding"
        rec["prefactor"] = 1.0 + c ** (2 * k) / (1.0 - q)
        rec["asymptotic"] = rec["prefactor"] * 2.0 ** t
    else:
        rec["regime"] = "qd"
        rec["prefactor"] = c ** (2 * k) / (q - 1.0)
        rec["asymptotic"] = rec["prefactor"] * (2 * c) ** (2 * t)
    return rec


def fixed_point_moments(J: float) -> dict:
    """Closed forms for the rescaled spin moments at the QD-side fixed point."""
    if not 0.0 < J < 0.5:
        raise ConfigError("closed forms hold for 0 < J < 1/2")
    th = 0.5 * np.pi * J
    c = np.cos(th)
    skew = 3.0 * np.cos(2 * th) ** 1.5 * np.tan(th) ** 3 / ((2 * c - 1) * (4 * c ** 3 - 1))
    g = (16 * c ** 10 - 8 * c ** 9 + 14 * c ** 8 - c ** 7 - 6 * c ** 6 - 11 * c ** 5
         + 4 * c ** 4 + 7 * c ** 3 + 2 * c ** 2 - c - 2)
    kneg = 3 * (2 * c * c - 1) ** 2 * g / (c ** 7 * (2 * c - 1) ** 2 * (2 * c + 1) * (8 * c ** 4 - 1))
    mu = np.sqrt(2.0 - 1.0 / c ** 2)
    return {"skewness": float(skew), "excess_kurtosis_negative": float(kneg),
            "covariance_mu": float(mu)}


def figure_data(triple: SpinResolvedTriple) -> dict:
    """Rescaled outcome m, density, r^2 and posterior angle per outcome."""
    mom = spin_moments(triple)
    sig = np.sqrt(mom["M2"])
    r2, _ = coarse_purity(triple)
    live = triple.p > P_FLOOR
    u = np.where(live, triple.a / np.where(live, triple.p, 1.0), np.nan)
    v = np.where(live, triple.b / np.where(live, triple.p, 1.0), np.nan)
    return {"M": triple.grid, "m": triple.grid / sig, "p": triple.p,
            "density": triple.p * sig / 2.0, "r2": r2, "angle": np.arctan2(v, u)}


# -- tau-resolved refinement ----------------------------------------------------

@dataclass
class TauResolvedArray:
    """Outcome table resolved into the total spins of 2^tau sub-fractions.

    ``p``, ``a``, ``b`` have one axis per sub-fraction, each of length
    2^(t - tau) + 1 (index i <-> sub-spin 2i - 2^(t - tau)).
    """

    t: int
    tau: int
    p: np.ndarray
    a: np.ndarray
    b: np.ndarray

    @classmethod
    def from_triple(cls, tr: SpinResolvedTriple):
        return cls(tr.t, 0, tr.p.copy(), tr.a.copy(), tr.b.copy())

    def marginalize(self) -> SpinResolvedTriple:
        """Sum entries with equal total spin, giving the tau = 0 triple."""
        L = 2 ** self.t + 1
        p = np.zeros(L)
        a = np.zeros(L)
        b = np.zeros(L)
        if self.tau == 0:
            return SpinResolvedTriple(self.t, self.p, self.a, self.b)
        sub = self.p.shape[0]
        idx = np.zeros(self.p.shape, dtype=np.intp)
        for ax in range(self.p.ndim):
            shape = [1] * self.p.ndim
            shape[ax] = sub
            idx = idx + np.arange(sub).reshape(shape)
        # total spin index: sum of sub-indices (each sub-spin 2i - 2^(t-tau))
        np.add.at(p, idx.ravel(), self.p.ravel())
        np.add.at(a, idx.ravel(), self.a.ravel())
        np.add.at(b, idx.ravel(), self.b.ravel())
        return SpinResolvedTriple(self.t, p, a, b)

    def purity(self) -> float:
        live = self.p > P_FLOOR
        pl = self.p[live]
        return float(np.sum(pl * ((self.a[live] / pl) ** 2 + (self.b[live] / pl) ** 2)))


def tau_refined_step(left, right, theta: float, cap: int = TABLE_CAP) -> TauResolvedArray:
    """Branch two tables (or triples) into a table with tau + 1."""
    if isinstance(left, SpinResolvedTriple):
        left = TauResolvedArray.from_triple(left)
    if isinstance(right, SpinResolvedTriple):
        right = TauResolvedArray.from_triple(right)
    if left.t != right.t or left.tau != right.tau:
        raise ConfigError("tables must share t and tau")
    tau = left.tau + 1
    if tau > TAU_MAX:
        raise ResourceCapError(f"tau = {tau} exceeds the supported depth {TAU_MAX}")
    if left.p.size * right.p.size > cap:
        raise ResourceCapError(f"table of {left.p.size * right.p.size} entries exceeds cap {cap}")
    al, bl = rotate_ab(left.a, left.b, theta)
    ar, br = rotate_ab(right.a, right.b, theta)
    o = np.multiply.outer
    P = o(left.p, right.p) + o(al, ar)
    A = o(left.p, ar) + o(al, right.p)
    B = o(bl, br)
    P, A, B = _clean(P, A, B)
    return TauResolvedArray(left.t + 1, tau, P, A, B)


def _table_to_peaks(p, a, b):
    live = p > P_FLOOR
    w = p[live]
    return w, a[live] / w, b[live] / w


def tau_averaged_purity(params: ModelParams, t: int, tau: int, cap: int = 20_000_000,
                        n_samples: int = 4_000_000, seed: int = 0):
    """Averaged purity when the fraction is resolved into 2^tau sub-fractions.

    The tau-resolved outcomes at t are the branching of tau-1 resolved
    outcomes at t-1, so the average is computed with the exact pair sum when
    the number of pairs is below ``cap`` and with an unbiased Monte Carlo
    estimate over pairs otherwise.  Returns (value, standard_error).
    """
    if tau < 0 or tau > t:
        raise ConfigError("need 0 <= tau <= t")
    base = coarse_evolve(params, t - tau)
    if tau == 0:
        return coarse_purity(base)[1], 0.0
    w, u, v = _table_to_peaks(base.p, base.a, base.b)
    ang = params.heisenberg_angle
    # exact pair expansion for all but the last level
    for _ in range(tau - 1):
        ur, vr = rotate_arrays(u, v, ang)
        if len(w) ** 2 > cap:
            raise ResourceCapError("intermediate tau table too large")
        W, U, V, _ = _backend.get("pair_branch")(ur, vr, w, PHI_MIN)
        keep = W > P_FLOOR
        w, u, v = W[keep] / W[keep].sum(), U[keep], V[keep]
    ur, vr = rotate_arrays(u, v, ang)
    if len(w) ** 2 <= cap:
        W, U, V, _ = _backend.get("pair_branch")(ur, vr, w, PHI_MIN)
        return float(np.dot(W, U * U + V * V) / W.sum()), 0.0
    rng = np.random.default_rng(seed)
    cw = np.cumsum(w)
    i = np.minimum(np.searchsorted(cw, rng.random(n_samples) * cw[-1], side="right"), len(w) - 1)
    j = np.minimum(np.searchsorted(cw, rng.random(n_samples) * cw[-1], side="right"), len(w) - 1)
    phi = 1.0 + ur[i] * ur[j]
    f = phi * (((ur[i] + ur[j]) / phi) ** 2 + (vr[i] * vr[j] / phi) ** 2)
    # E[phi] = 1 + <u'>^2 = 1 exactly for a centred input
    est = f.mean() / phi.mean()
    se = f.std() / np.sqrt(n_samples)
    return float(est), float(se)


def deficit_exponent(tau: int, Js=(0.02, 0.04, 0.08), t: int = 10, k: int = 2):
    """Exponent a(tau) in 1 - <r^2> ~ J^a at small J, from a log-log fit.

    Returns (a, deficits).  tau = 2 needs smaller t (exact pair sums only).
    """
    d = np.array([1.0 - tau_averaged_purity(ModelParams(J, "deterministic", k), t, tau)[0]
                  for J in Js])
    if np.any(d <= 0):
        raise NumericalError("deficit below round-off; use larger J")
    a = float(np.polyfit(np.log(Js), np.log(d), 1)[0])
    return a, d
