"""Domain types and the elementary branching kernel.

A posterior is stored as Q~ = 1 + u sz + v sx, i.e. the point (u, v) in the
unit disk.  Ensembles keep their peaks as three parallel float64 arrays.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ForbiddenBranchError

VARIANTS = ("deterministic", "random", "clifford")
NORM_SLACK = 1e-12
PHI_MIN = 1e-14
DROP_TOL = 1e-12


@dataclass(frozen=True)
class ModelParams:
    J: float
    variant: str = "random"
    k: int = 1

    def __post_init__(self):
        if not (0.0 < self.J < 1.0) or not np.isfinite(self.J):
            raise ConfigError(f"J must lie in (0, 1), got {self.J}")
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}")
        if int(self.k) != self.k or self.k < 1:
            raise ConfigError(f"k must be an integer >= 1, got {self.k}")
        object.__setattr__(self, "k", int(self.k))
        theta = 0.5 * np.pi * self.J
        object.__setattr__(self, "_theta", theta)
        object.__setattr__(self, "_c", np.cos(theta))

    @property
    def theta(self) -> float:
        return self._theta

    @property
    def c(self) -> float:
        return self._c

    @property
    def perfectly_qd(self) -> bool:
        return self.k == 1

    @property
    def heisenberg_angle(self) -> float:
        """Angle by which conjugation U^T Q U turns the (u, v) vector.

        U = [[cos t/2, -sin t/2], [sin t/2, cos t/2]] maps Q~ = 1 + u sz + v sx
        to 1 + (c u + s v) sz + (-s u + c v) sx, a rotation by -theta.
        """
        return -self._theta

    def with_(self, **kw) -> "ModelParams":
        d = dict(J=self.J, variant=self.variant, k=self.k)
        d.update(kw)
        return ModelParams(**d)


@dataclass(frozen=True)
class BlochPoint:
    u: float
    v: float

    def __post_init__(self):
        if not (np.isfinite(self.u) and np.isfinite(self.v)):
            raise ValueError("non-finite Bloch point")
        if self.u * self.u + self.v * self.v > 1.0 + NORM_SLACK:
            raise ValueError(f"({self.u}, {self.v}) lies outside the unit disk")

    @property
    def r2(self) -> float:
        return self.u * self.u + self.v * self.v


def _as_array(x):
    return np.ascontiguousarray(np.asarray(x, dtype=np.float64).reshape(-1))


@dataclass
class WeightedEnsemble:
    """Finite mixture of delta peaks sum_i w_i delta(u - u_i, v - v_i)."""

    w: np.ndarray
    u: np.ndarray
    v: np.ndarray
    t: int = 0
    dropped_mass: float = 0.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.w = _as_array(self.w)
        self.u = _as_array(self.u)
        self.v = _as_array(self.v)
        if not (len(self.w) == len(self.u) == len(self.v)):
            raise ValueError("w, u, v must have equal length")
        if len(self.w) == 0:
            raise ValueError("empty ensemble")
        if np.any(self.w < 0) or not np.all(np.isfinite(self.w)):
            raise ValueError("weights must be finite and nonnegative")
        if np.any(self.u * self.u + self.v * self.v > 1.0 + NORM_SLACK):
            raise ValueError("peak outside the unit disk")

    def __len__(self):
        return len(self.w)

    @classmethod
    def from_peaks(cls, peaks, t=0, normalize=False):
        arr = np.asarray([(w, p.u, p.v) if isinstance(p, BlochPoint) else (w, *p)
                          for w, p in peaks], dtype=np.float64)
        w = arr[:, 0]
        if normalize:
            w = w / w.sum()
        return cls(w, arr[:, 1], arr[:, 2], t=t)

    @classmethod
    def delta(cls, u=0.0, v=0.0, t=0):
        return cls([1.0], [u], [v], t=t)

    @property
    def peaks(self):
        return [(float(w), BlochPoint(float(u), float(v)))
                for w, u, v in zip(self.w, self.u, self.v)]

    @property
    def r2(self) -> np.ndarray:
        return self.u * self.u + self.v * self.v

    def total(self) -> float:
        return float(np.sum(self.w))

    def mean(self):
        return float(np.dot(self.w, self.u)), float(np.dot(self.w, self.v))

    def normalized(self) -> "WeightedEnsemble":
        return self.replace(w=self.w / self.w.sum())

    def replace(self, **kw) -> "WeightedEnsemble":
        d = dict(w=self.w, u=self.u, v=self.v, t=self.t,
                 dropped_mass=self.dropped_mass, meta=dict(self.meta))
        d.update(kw)
        return WeightedEnsemble(**d)


def rotate(p: BlochPoint, theta: float) -> BlochPoint:
    c, s = np.cos(theta), np.sin(theta)
    u = p.u * c - p.v * s
    v = p.u * s + p.v * c
    # clip the last-ulp excursion of unit-norm inputs
    n2 = u * u + v * v
    if n2 > 1.0:
        u, v = u / np.sqrt(n2), v / np.sqrt(n2)
    return BlochPoint(u, v)


def rotate_arrays(u, v, theta):
    c, s = np.cos(theta), np.sin(theta)
    return u * c - v * s, u * s + v * c


def branch_weight(left: BlochPoint, right: BlochPoint) -> float:
    """phi = 1 + u'_l u'_r for already rotated inputs."""
    return 1.0 + left.u * right.u


def branch_map(left: BlochPoint, right: BlochPoint) -> BlochPoint:
    """Posterior of the parent given posteriors of the two rotated children."""
    phi = branch_weight(left, right)
    if phi < PHI_MIN:
        raise ForbiddenBranchError(f"branch weight {phi:g} is zero")
    u = (left.u + right.u) / phi
    v = left.v * right.v / phi
    n2 = u * u + v * v
    if n2 > 1.0:
        u, v = u / np.sqrt(n2), v / np.sqrt(n2)
    return BlochPoint(u, v)


def branch_arrays(ul, vl, ur, vr):
    """Vectorized (phi, mu_u, mu_v); entries with phi < PHI_MIN give mu = 0."""
    phi = 1.0 + ul * ur
    ok = phi >= PHI_MIN
    inv = np.where(ok, 1.0 / np.where(ok, phi, 1.0), 0.0)
    return phi, (ul + ur) * inv, vl * vr * inv


def clip_to_disk(u, v):
    """Project points with r^2 > 1 (round-off at tiny phi) back onto the circle, in place."""
    r2 = u * u + v * v
    over = r2 > 1.0
    if over.any():
        s = 1.0 / np.sqrt(r2[over])
        u[over] *= s
        v[over] *= s
    return u, v


def initial_ensemble(params: ModelParams) -> WeightedEnsemble:
    x = params.c ** (params.k - 1)
    return WeightedEnsemble([0.5, 0.5], [-x, x], [0.0, 0.0], t=0)
