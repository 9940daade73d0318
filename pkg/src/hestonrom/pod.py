"""Mass-weighted POD basis extraction and the Galerkin-reduced solver.

The basis solves the snapshot-approximation problem in the inner product
induced by the mass matrix: with R the upper-triangular Cholesky factor
(R^T R = M), the SVD of R S yields weighted modes U = R^{-1} Uhat with
U^T M U = I. The SVD is taken of R S directly rather than of the correlation
matrix, which is numerically stabler and identical in exact arithmetic.
"""

import time
import warnings
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sparse

from .errors import NumericalError

RANK_CUTOFF = 1e-12  # singular values below this multiple of sigma_1 are noise


@dataclass(frozen=True)
class PODBasis:
    """M-orthonormal reduced modes with their singular-value spectrum."""

    modes: np.ndarray  # (n_dofs, n_modes)
    singular_values: np.ndarray  # all s retained values, nonincreasing
    mass_chol: sparse.spmatrix  # upper-triangular R with R^T R = M
    energy_tol: float

    @property
    def n_modes(self):
        return self.modes.shape[1]

    @property
    def rank(self):
        return self.singular_values.size

    def truncate(self, n_modes):
        if not 1 <= n_modes <= self.n_modes:
            raise ValueError(f"cannot truncate to {n_modes} of {self.n_modes} modes")
        return replace(self, modes=self.modes[:, :n_modes])

    def information_content(self):
        """I(N) for N = 1..s over the retained spectrum."""
        energy = np.cumsum(self.singular_values**2)
        return energy / energy[-1]


@dataclass(frozen=True)
class ReducedSystem:
    """Galerkin projection of the full-order operator onto a POD basis."""

    stiffness_r: np.ndarray  # (N, N)
    loads_r: np.ndarray  # (N, J)
    u0_r: np.ndarray  # (N,)

    @property
    def n_modes(self):
        return self.stiffness_r.shape[0]


def _block_cholesky(mass, block_size):
    """Upper-triangular Cholesky of a block-diagonal SPD matrix."""
    n = mass.shape[0]
    bsr = mass.tobsr(blocksize=(block_size, block_size))
    n_blocks = n // block_size
    if bsr.nnz != n_blocks * block_size * block_size or np.any(
        bsr.indices != np.arange(n_blocks)
    ):
        raise ValueError("mass matrix is not block diagonal at this block size")
    blocks = np.ascontiguousarray(bsr.data)
    lower = np.linalg.cholesky(blocks)
    upper = lower.transpose(0, 2, 1)
    r = sparse.block_diag([*upper], format="csr")
    return r, upper


def _generic_cholesky(mass):
    dense = mass.toarray() if sparse.issparse(mass) else np.asarray(mass)
    upper = sla.cholesky(dense, lower=False)
    return sparse.csr_matrix(upper), None


def compute_pod_basis(
    snapshots,
    mass,
    eps,
    max_modes=None,
    include_initial=True,
    block_size=None,
):
    """POD basis truncated by the relative-information-content criterion.

    The mode count N is the smallest integer with
    I(N) = sum_{i<=N} sigma_i^2 / sum_{i<=s} sigma_i^2 >= 1 - eps^2,
    where s is the numerical rank (sigma_i > 1e-12 sigma_1); `max_modes`
    caps N afterwards. Pass `block_size` (the local space dimension) to
    exploit the block-diagonal mass structure in the Cholesky factorization.
    """
    s_mat = snapshots.matrix(include_initial) if hasattr(snapshots, "matrix") else (
        np.asarray(snapshots, dtype=float)
    )
    if s_mat.shape[1] < 2:
        raise ValueError("need at least two snapshot columns")
    mass = sparse.csr_matrix(mass)

    if block_size is not None:
        r_factor, r_blocks = _block_cholesky(mass, block_size)
    else:
        diag = mass.diagonal()
        if mass.nnz == np.count_nonzero(diag) and (mass - sparse.diags(diag)).nnz == 0:
            r_factor = sparse.diags(np.sqrt(diag), format="csr")
            r_blocks = None
        else:
            r_factor, r_blocks = _generic_cholesky(mass)

    weighted = r_factor @ s_mat
    u_hat, sigma, _ = sla.svd(weighted, full_matrices=False)
    if sigma.size == 0 or sigma[0] == 0.0:
        raise ValueError("snapshot matrix is zero; no basis can be formed")
    s_rank = int(np.count_nonzero(sigma > RANK_CUTOFF * sigma[0]))
    sigma = sigma[:s_rank]
    u_hat = u_hat[:, :s_rank]

    energy = np.cumsum(sigma**2)
    info = energy / energy[-1]
    n_modes = int(np.searchsorted(info, 1.0 - eps**2) + 1)
    n_modes = min(n_modes, s_rank)
    if max_modes is not None:
        n_modes = min(n_modes, int(max_modes))

    if r_blocks is not None:
        n_k = r_blocks.shape[1]
        modes = np.linalg.solve(
            r_blocks, u_hat.reshape(-1, n_k, u_hat.shape[1])
        ).reshape(u_hat.shape)
    else:
        modes = sparse.linalg.spsolve_triangular(
            r_factor.tocsr(), u_hat, lower=False
        )
    return PODBasis(
        modes=np.ascontiguousarray(modes[:, :n_modes]),
        singular_values=sigma,
        mass_chol=r_factor,
        energy_tol=float(eps),
    )


def reduce_system(system, loads, basis, u0):
    """Offline projection: A_r = U^T A U, l_r = U^T l, u0_r = U^T M u0."""
    u = basis.modes
    if loads.shape[0] != u.shape[0] or u0.shape[0] != u.shape[0]:
        raise ValueError("dimension mismatch between basis, loads and state")
    stiffness_r = u.T @ (system.stiffness @ u)
    loads_r = u.T @ loads
    u0_r = u.T @ (system.mass @ u0)
    return ReducedSystem(stiffness_r=stiffness_r, loads_r=loads_r, u0_r=u0_r)


def solve_rom(red, grid):
    """Backward Euler on the reduced system; returns (trajectory, loop time).

    The reduced mass is the identity by M-orthonormality, so each step solves
    (I + dt A_r) u_r^{n+1} = u_r^n + dt l_r^{n+1} against one dense LU
    factorization. The wall time covers only the stepping loop.
    """
    n = red.n_modes
    J = grid.n_steps
    if red.loads_r.shape[1] != J:
        raise ValueError("reduced load table does not match the time grid")
    dt = grid.dt
    lu, piv = sla.lu_factor(np.eye(n) + dt * red.stiffness_r)
    if np.abs(np.diag(lu)).min() == 0.0:
        raise NumericalError("reduced step matrix (I + dt A_r) is singular")
    traj = np.empty((n, J + 1))
    traj[:, 0] = red.u0_r
    u = red.u0_r
    loads = red.loads_r
    t0 = time.perf_counter()
    for k in range(J):
        u = sla.lu_solve((lu, piv), u + dt * loads[:, k], check_finite=False)
        traj[:, k + 1] = u
    wall = time.perf_counter() - t0
    return traj, wall


def lift(basis, reduced_traj):
    """Expand reduced coefficients back to the full broken-polynomial space."""
    return basis.modes @ reduced_traj
