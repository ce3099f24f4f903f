"""Model coefficients, first-moment dynamics, and grid-sampled densities.

The drift felt by the density is ``effective_drift @ x`` plus a feedback
term ``mean_feedback @ X(t)`` where ``X(t)`` is the density's own first
moment.  ``X(t)`` closes on itself: it solves the linear ODE
``dX/dt = -(effective_drift + mean_feedback) X``, so it is known in
closed form before the density is.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import ConfigurationError, DegenerateMomentError, InputError

ZERO_MASS_TOL = 1e-12


def _square_matrix(a, name: str) -> np.ndarray:
    m = np.atleast_2d(np.asarray(a, dtype=float))
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ConfigurationError(f"{name} must be a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ConfigurationError(f"{name} contains non-finite entries")
    return m


def _vector(x, n: int, name: str = "vector") -> np.ndarray:
    v = np.atleast_1d(np.asarray(x, dtype=float))
    if v.shape != (n,):
        raise ConfigurationError(f"{name} must have shape ({n},), got {v.shape}")
    return v


@dataclass(frozen=True)
class ModelParams:
    """Coefficients of the mean-coupled drift-diffusion model.

    drift          : local linear drift matrix (acts on x)
    coupling_state : interaction coupling to the running state x
    coupling_mean  : interaction coupling to the density's first moment
    diffusion      : scalar diffusion strength, > 0
    coupling       : interaction strength multiplying both couplings
    """

    drift: np.ndarray
    coupling_state: np.ndarray
    coupling_mean: np.ndarray
    diffusion: float
    coupling: float = 0.0

    def __post_init__(self):
        d = _square_matrix(self.drift, "drift")
        cs = _square_matrix(self.coupling_state, "coupling_state")
        cm = _square_matrix(self.coupling_mean, "coupling_mean")
        if cs.shape != d.shape or cm.shape != d.shape:
            raise ConfigurationError(
                f"coupling matrices must match drift shape {d.shape}, "
                f"got {cs.shape} and {cm.shape}"
            )
        if not (np.isfinite(self.diffusion) and self.diffusion > 0):
            raise ConfigurationError(f"diffusion must be positive, got {self.diffusion}")
        if not np.isfinite(self.coupling):
            raise ConfigurationError("coupling must be finite")
        object.__setattr__(self, "drift", d)
        object.__setattr__(self, "coupling_state", cs)
        object.__setattr__(self, "coupling_mean", cm)
        object.__setattr__(self, "diffusion", float(self.diffusion))
        object.__setattr__(self, "coupling", float(self.coupling))

    @property
    def dim(self) -> int:
        return self.drift.shape[0]

    @property
    def effective_drift(self) -> np.ndarray:
        # recomputed on access so it can never go stale
        return self.drift + self.coupling * self.coupling_state

    @property
    def mean_feedback(self) -> np.ndarray:
        return self.coupling * self.coupling_mean

    @property
    def moment_rate(self) -> np.ndarray:
        return -(self.effective_drift + self.mean_feedback)

    def moment_trajectory(self, x0, t0: float = 0.0) -> "MomentTrajectory":
        return MomentTrajectory(t0=float(t0), x0=_vector(x0, self.dim, "x0"),
                                rate=self.moment_rate)


def effective_drift(params: ModelParams) -> np.ndarray:
    """Drift matrix acting on x once the mean-field term is folded in."""
    return params.effective_drift


@dataclass(frozen=True)
class MomentTrajectory:
    """Closed-form solution of the constant-coefficient moment ODE dX/dt = rate @ X."""

    t0: float
    x0: np.ndarray
    rate: np.ndarray

    def at(self, t: float) -> np.ndarray:
        tau = float(t) - self.t0
        if tau == 0.0:
            return self.x0.copy()
        return expm(tau * self.rate) @ self.x0


def moment_at(traj: MomentTrajectory, t: float) -> np.ndarray:
    return traj.at(t)


@dataclass
class SampledDensity:
    """Field sampled on a uniform tensor grid.

    ``values`` has one axis per space dimension; axis i runs over
    ``x_min[i] + dx[i] * arange(values.shape[i])``.  Mass is always the
    trapezoid integral of the stored values, never assumed to be 1.
    """

    x_min: np.ndarray
    dx: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.size == 0:
            raise InputError("empty grid")
        self.x_min = np.atleast_1d(np.asarray(self.x_min, dtype=float))
        self.dx = np.atleast_1d(np.asarray(self.dx, dtype=float))
        n = self.values.ndim
        if self.x_min.shape != (n,) or self.dx.shape != (n,):
            raise InputError(
                f"x_min/dx must have one entry per value axis ({n}), "
                f"got {self.x_min.shape} and {self.dx.shape}"
            )
        if np.any(self.dx <= 0):
            raise InputError("grid spacing must be positive")
        if not np.all(np.isfinite(self.values)):
            raise InputError("sampled values must be finite")

    @property
    def dim(self) -> int:
        return self.values.ndim

    def axis(self, i: int = 0) -> np.ndarray:
        return self.x_min[i] + self.dx[i] * np.arange(self.values.shape[i])

    def axes(self) -> list[np.ndarray]:
        return [self.axis(i) for i in range(self.dim)]

    def points(self) -> np.ndarray:
        """All grid nodes as an (N, dim) array in C order."""
        grids = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=-1)

    def total_mass(self) -> float:
        v = self.values
        for ax in range(v.ndim - 1, -1, -1):
            v = np.trapezoid(v, dx=self.dx[ax], axis=ax)
        return float(v)

    def first_moment(self, normalized: bool = False) -> np.ndarray:
        moment = np.empty(self.dim)
        for i in range(self.dim):
            shape = [1] * self.dim
            shape[i] = self.values.shape[i]
            coord = self.axis(i).reshape(shape)
            v = self.values * coord
            for ax in range(v.ndim - 1, -1, -1):
                v = np.trapezoid(v, dx=self.dx[ax], axis=ax)
            moment[i] = v
        if not normalized:
            return moment
        mass = self.total_mass()
        if abs(mass) <= ZERO_MASS_TOL:
            raise DegenerateMomentError(
                f"normalized moment undefined: mass {mass:.3e} is below {ZERO_MASS_TOL:.0e}"
            )
        return moment / mass

    def edge_max(self) -> float:
        """Largest absolute value on any boundary face of the grid."""
        worst = 0.0
        for ax in range(self.dim):
            worst = max(worst,
                        float(np.max(np.abs(np.take(self.values, 0, axis=ax)))),
                        float(np.max(np.abs(np.take(self.values, -1, axis=ax)))))
        return worst

    def copy(self) -> "SampledDensity":
        return SampledDensity(self.x_min.copy(), self.dx.copy(), self.values.copy())

    @classmethod
    def from_callable(cls, f, x_min, x_max, nodes) -> "SampledDensity":
        """Sample ``f`` on a uniform grid; f takes an (N, dim) point array."""
        x_min = np.atleast_1d(np.asarray(x_min, dtype=float))
        x_max = np.atleast_1d(np.asarray(x_max, dtype=float))
        nodes = np.atleast_1d(np.asarray(nodes, dtype=int))
        if np.any(nodes < 2):
            raise InputError("need at least 2 nodes per axis")
        dx = (x_max - x_min) / (nodes - 1)
        axes = [x_min[i] + dx[i] * np.arange(nodes[i]) for i in range(len(nodes))]
        grids = np.meshgrid(*axes, indexing="ij")
        pts = np.stack([g.ravel() for g in grids], axis=-1)
        vals = np.asarray(f(pts), dtype=float).reshape(tuple(nodes))
        return cls(x_min, dx, vals)


def total_mass(d: SampledDensity) -> float:
    return d.total_mass()


def grid_first_moment(d: SampledDensity, normalized: bool = False) -> np.ndarray:
    return d.first_moment(normalized=normalized)
