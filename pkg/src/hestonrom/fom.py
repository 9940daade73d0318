"""Backward Euler time stepping of the full-order system."""

import time
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sparse
import scipy.sparse.linalg as spla

from .errors import ConfigurationError, NumericalError


@dataclass(frozen=True)
class TimeGrid:
    """Uniform subdivision t_n = n dt, n = 0..n_steps."""

    dt: float
    n_steps: int

    def __post_init__(self):
        if self.dt <= 0:
            raise ConfigurationError("time step must be positive")
        if self.n_steps < 1:
            raise ConfigurationError("need at least one time step")

    @classmethod
    def for_horizon(cls, T, dt):
        n = int(round(T / dt))
        if n < 1 or abs(n * dt - T) > 1e-12 * max(1.0, abs(T)):
            raise ConfigurationError(
                f"dt={dt} does not evenly divide the horizon T={T}"
            )
        return cls(dt=dt, n_steps=n)

    @property
    def times(self):
        return self.dt * np.arange(self.n_steps + 1)

    @property
    def final_time(self):
        return self.dt * self.n_steps


@dataclass(frozen=True)
class SnapshotSet:
    """Trajectory columns u^0..u^J plus stepping-loop wall time (seconds).

    Column 0 is the supplied initial coefficient vector; `wall_time` covers
    only the time loop, the one-off factorization is reported separately.
    """

    states: np.ndarray  # (n_dofs, n_steps + 1)
    grid: TimeGrid
    wall_time: float
    factor_time: float = 0.0

    def __post_init__(self):
        if self.states.shape[1] != self.grid.n_steps + 1:
            raise ValueError("snapshot count does not match the time grid")

    @property
    def n_dofs(self):
        return self.states.shape[0]

    def matrix(self, include_initial=True):
        return self.states if include_initial else self.states[:, 1:]


class StepOperator:
    """Factorized (M + dt A); supports repeated deterministic solves."""

    def __init__(self, system, dt):
        if dt <= 0:
            raise ConfigurationError("time step must be positive")
        self.dt = dt
        mat = (system.mass + dt * system.stiffness).tocsc()
        try:
            self._lu = spla.splu(mat)
        except RuntimeError as err:
            raise NumericalError(
                f"step matrix factorization failed ({err}); "
                f"1-norm {spla.norm(mat, 1):.3e}, nnz {mat.nnz}"
            ) from None
        diag = np.abs(self._lu.U.diagonal())
        if diag.min() == 0.0:
            raise NumericalError("step matrix is singular (zero pivot)")
        # cheap conditioning diagnostic for error reporting
        self.pivot_ratio = float(diag.max() / diag.min())

    def solve(self, rhs):
        return self._lu.solve(rhs)


def step_matrix(system, dt):
    return StepOperator(system, dt)


def solve_fom(system, u0, grid, loads=None):
    """March (M + dt A) u^{n+1} = M u^n + dt l^{n+1} with one factorization.

    `loads` may carry the precomputed columns l(t_1)..l(t_J); otherwise they
    are assembled from `system.load` up front so the timed loop measures only
    matrix-vector work and triangular solves.
    """
    u0 = np.asarray(u0, dtype=float)
    n_dofs = system.mass.shape[0]
    if u0.shape != (n_dofs,):
        raise ValueError("initial vector does not match the system dimension")
    J = grid.n_steps
    if loads is None:
        loads = np.column_stack([system.load(t) for t in grid.times[1:]])
    loads = np.asarray(loads, dtype=float)
    if loads.shape != (n_dofs, J):
        raise ValueError("load table must have one column per time step")

    t0 = time.perf_counter()
    op = step_matrix(system, grid.dt)
    factor_time = time.perf_counter() - t0

    mass = system.mass.tocsr()
    dt = grid.dt
    states = np.empty((n_dofs, J + 1))
    states[:, 0] = u0
    u = u0
    t0 = time.perf_counter()
    for n in range(J):
        rhs = mass @ u + dt * loads[:, n]
        u = op.solve(rhs)
        states[:, n + 1] = u
    wall = time.perf_counter() - t0
    return SnapshotSet(
        states=states, grid=grid, wall_time=wall, factor_time=factor_time
    )


def precompute_loads(system, grid):
    """Load columns l(t_1)..l(t_J) as a dense (n_dofs, J) table."""
    return np.column_stack([system.load(t) for t in grid.times[1:]])


def mass_norm(mass, u):
    """Discrete L2 norm induced by the mass matrix."""
    return float(np.sqrt(u @ (mass @ u)))
