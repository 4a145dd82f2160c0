"""Two-parameter recursion of the Clifford (stabilizer) tree model.

With probability 1-J a site maps (u, v) -> (u, v), with probability J it
maps (u, v) -> (-v, u); the distribution of posteriors then lives on the
three points 0, (+-1, 0), (0, +-1), weighted by (1 - pz - px, pz, px).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

SLACK = 1e-15


@dataclass(frozen=True)
class CliffordState:
    pi_z: float
    pi_x: float

    def __post_init__(self):
        if self.pi_z < -SLACK or self.pi_x < -SLACK or self.pi_z + self.pi_x > 1 + SLACK:
            raise ValueError(f"({self.pi_z}, {self.pi_x}) outside the simplex")

    @property
    def total(self) -> float:
        return self.pi_z + self.pi_x

    def as_array(self):
        return np.array([self.pi_z, self.pi_x])


def step_arrays(pz, px, J):
    """Vectorized step; works on scalars or arrays."""
    A = pz * (1 - J) + px * J
    B = px * (1 - J) + pz * J
    return 2 * A - A * A, B * B


def clifford_step(s: CliffordState, J: float) -> CliffordState:
    if not 0.0 <= J <= 1.0:
        raise ConfigError("J must lie in [0, 1]")
    z, x = step_arrays(s.pi_z, s.pi_x, J)
    # keep the simplex bound exact against round-off
    z = min(max(z, 0.0), 1.0)
    x = min(max(x, 0.0), 1.0 - z)
    return CliffordState(z, x)


def fixed_line(a: float) -> CliffordState:
    """Point (a - a^2/4, a^2/4) of the line of fixed points at J = 1/2."""
    return CliffordState(a - a * a / 4, a * a / 4)


@dataclass
class CliffordFlow:
    trajectory: np.ndarray  # (steps + 1, 2)
    J: float
    converged: bool
    classification: str  # "qd", "encoding", "critical" or "unresolved"

    @property
    def limit(self) -> CliffordState:
        z, x = self.trajectory[-1]
        return CliffordState(z, x)


def classify(state: CliffordState, J: float, tol: float = 1e-10) -> str:
    tot = state.total
    if abs(J - 0.5) < 1e-15:
        return "critical"
    if tot < tol:
        return "encoding"
    if abs(tot - 1.0) < tol:
        return "qd"
    return "unresolved"


def clifford_flow(s0: CliffordState, J: float, t_max: int = 1000,
                  tol: float = 1e-12) -> CliffordFlow:
    traj = [s0.as_array()]
    s = s0
    converged = False
    for _ in range(t_max):
        s_new = clifford_step(s, J)
        traj.append(s_new.as_array())
        if max(abs(s_new.pi_z - s.pi_z), abs(s_new.pi_x - s.pi_x)) < tol:
            s = s_new
            converged = True
            break
        s = s_new
    return CliffordFlow(np.array(traj), J, converged, classify(s, J))


def flow_limit_total(J: float, s0: CliffordState | None = None, t_max: int = 1000) -> float:
    s0 = s0 or CliffordState(0.5, 0.0)
    return clifford_flow(s0, J, t_max, tol=0.0).limit.total


def vector_field(J: float, n: int = 21):
    """Grid of states in the simplex with their one-step displacement."""
    g = np.linspace(0.0, 1.0, n)
    Z, X = np.meshgrid(g, g, indexing="ij")
    m = Z + X <= 1.0 + 1e-12
    z, x = Z[m], X[m]
    nz, nx = step_arrays(z, x, J)
    return np.stack([z, x, nz - z, nx - x], axis=1)


def fixed_point_residuals(J: float, n: int = 1000):
    """|step(s) - s|_inf on an n x n lattice of the simplex."""
    g = (np.arange(n) + 0.5) / n
    Z, X = np.meshgrid(g, g, indexing="ij")
    m = Z + X <= 1.0
    z, x = Z[m], X[m]
    nz, nx = step_arrays(z, x, J)
    return z, x, np.maximum(np.abs(nz - z), np.abs(nx - x))
