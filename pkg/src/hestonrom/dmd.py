"""Exact and Gram-matrix DMD with optimal or initial amplitude selection.

Both routes fit a best linear propagator between shifted snapshot blocks
S0 = [u^0..u^{J-1}] and S1 = [u^1..u^J]: a thin SVD S0 = U Sigma V* feeds
the reduced operator Atilde = U* S1 V Sigma^{-1}, whose eigenpairs
(lambda_j, W) yield the exact modes Phi = S1 V Sigma^{-1} W. The variant
route obtains the same SVD factors from the Gram matrix S0^T S0, which
squares the condition number and is flagged when that matters.

Reconstruction is the equation-free exponential sum
u(t) = Re( sum_j alpha_j phi_j exp(omega_j t) ),  omega_j = log(lambda_j)/dt
on the principal branch (eigenvalues on the negative real axis carry the
usual Nyquist ambiguity and are not disambiguated).
"""

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

SV_CUTOFF = 1e-10  # relative singular-value cutoff defining the usable rank


@dataclass(frozen=True)
class DMDModel:
    """Modes, Ritz values and amplitudes extracted from one snapshot window.

    Modes are ordered by descending amplitude magnitude. `conj_pairs` lists
    (i, j) index pairs of detected complex-conjugate mode partners and
    `unpaired` all remaining columns; batch reconstruction exploits that
    structure, the single-time path does not need it.
    """

    modes: np.ndarray  # complex (n_dofs, r)
    eigenvalues: np.ndarray  # complex (r,)
    omegas: np.ndarray  # complex (r,), log(lambda)/dt
    amplitudes: np.ndarray  # complex (r,)
    dt: float
    rank: int
    algorithm: str  # "tu" | "chen"
    amplitude_rule: str  # "optimal" | "initial"
    rank_truncated: bool = False
    gram_ill_conditioned: bool = False
    conj_pairs: tuple = field(default=(), repr=False)
    unpaired: tuple = field(default=(), repr=False)
    # SVD factors (V, sigma, W) retained for amplitude recomputation
    svd_factors: tuple = field(default=(), repr=False)
    snapshot_count: int = 0
    # contiguous real-arithmetic blocks cached for batch reconstruction
    recon_blocks: object = field(default=None, repr=False)

    @property
    def n_dofs(self):
        return self.modes.shape[0]


def vandermonde(eigenvalues, n_columns):
    """Rows (1, lambda_i, lambda_i^2, ...) over the snapshot window."""
    lam = np.asarray(eigenvalues)
    out = np.empty((lam.size, n_columns), dtype=complex)
    out[:, 0] = 1.0
    for k in range(1, n_columns):
        out[:, k] = out[:, k - 1] * lam
    return out


def _snapshot_matrix(snapshots, include_initial):
    if hasattr(snapshots, "matrix"):
        return snapshots.matrix(include_initial), snapshots.grid.dt
    return np.asarray(snapshots, dtype=float), None


def _resolve_rank(sigma, rank):
    if sigma.size == 0 or sigma[0] == 0.0:
        raise ValueError("zero snapshot matrix; DMD is undefined")
    numerical = int(np.count_nonzero(sigma > SV_CUTOFF * sigma[0]))
    truncated = False
    if rank is None:
        r = numerical
    elif isinstance(rank, (int, np.integer)):
        if rank < 1:
            raise ValueError("requested rank must be positive")
        r = min(int(rank), numerical)
        truncated = r < rank
    else:  # energy tolerance eps in (0, 1)
        eps = float(rank)
        if not 0.0 < eps < 1.0:
            raise ValueError("energy tolerance must lie in (0, 1)")
        energy = np.cumsum(sigma[:numerical] ** 2)
        r = int(np.searchsorted(energy / energy[-1], 1.0 - eps**2) + 1)
    if truncated:
        warnings.warn(
            f"requested rank {rank} exceeds the numerical rank {numerical}; truncated",
            stacklevel=3,
        )
    return r, truncated


def _reconstruction_blocks(eigenvalues, omegas, modes, amplitudes, pairs,
                           unpaired):
    """Stacked real mode matrix for single-GEMM batch reconstruction.

    Modes with a positive real eigenvalue and a (to roundoff) real mode
    vector contribute one real column phi with coefficient Re(alpha) e^{w t};
    a conjugate pair collapses to its representative with doubled amplitude;
    every remaining complex column contributes (Re phi, Im phi) with
    coefficients (Re c, -Im c). Stacking all of it into one contiguous
    matrix keeps the per-call work at a single real matrix product whose
    width is about the mode count for real snapshot data.
    """
    tol = 1e-12
    real_cols, cplx_cols, factors = [], [], []
    n_zero = 0
    for i in unpaired:
        lam = eigenvalues[i]
        if lam == 0.0:
            n_zero += 1
            continue
        col = modes[:, i]
        col_scale = np.abs(col).max() + 1.0
        if (
            lam.real > 0.0
            and abs(lam.imag) <= tol * (abs(lam) + 1.0)
            and np.abs(col.imag).max() <= tol * col_scale
        ):
            real_cols.append(i)
        else:
            cplx_cols.append(i)
            factors.append(1.0)
    for i, _ in pairs:
        cplx_cols.append(i)
        factors.append(2.0)

    parts = []
    blocks = {"n_zero": n_zero}
    if real_cols:
        idx = np.asarray(real_cols)
        parts.append(modes[:, idx].real)
        blocks["real"] = (omegas[idx].real.copy(), amplitudes[idx].real.copy())
    if cplx_cols:
        idx = np.asarray(cplx_cols)
        parts.append(modes[:, idx].real)
        parts.append(modes[:, idx].imag)
        blocks["cplx"] = (omegas[idx].copy(),
                          amplitudes[idx] * np.asarray(factors))
    if parts:
        blocks["phi_stack"] = np.ascontiguousarray(np.hstack(parts))
    return blocks


def _detect_pairs(eigenvalues, modes, amplitudes, tol=1e-9):
    """Match complex-conjugate mode partners for fast real reconstruction."""
    r = eigenvalues.size
    scale = np.abs(eigenvalues) + 1.0
    used = np.zeros(r, dtype=bool)
    pairs, unpaired = [], []
    for i in range(r):
        if used[i]:
            continue
        if abs(eigenvalues[i].imag) <= tol * scale[i]:
            used[i] = True
            unpaired.append(i)
            continue
        partner = -1
        for j in range(i + 1, r):
            if used[j]:
                continue
            if abs(eigenvalues[j] - np.conj(eigenvalues[i])) <= tol * scale[i]:
                partner = j
                break
        if partner >= 0 and (
            abs(amplitudes[partner] - np.conj(amplitudes[i]))
            <= tol * (abs(amplitudes[i]) + 1.0)
            and np.abs(modes[:, partner] - np.conj(modes[:, i])).max()
            <= tol * (np.abs(modes[:, i]).max() + 1.0)
        ):
            used[i] = used[partner] = True
            pairs.append((i, partner))
        else:
            used[i] = True
            unpaired.append(i)
    return tuple(pairs), tuple(unpaired)


def _build_model(s_mat, dt, rank, algorithm, amplitude_rule):
    s0 = s_mat[:, :-1]
    s1 = s_mat[:, 1:]
    gram_warn = False
    if algorithm == "tu":
        u, sigma, vh = sla.svd(s0, full_matrices=False)
        v = vh.conj().T
        r, truncated = _resolve_rank(sigma, rank)
        u, sigma, v = u[:, :r], sigma[:r], v[:, :r]
    elif algorithm == "chen":
        gram = s0.T @ s0
        evals, vfull = sla.eigh(gram)
        order = np.argsort(evals)[::-1]
        evals = np.maximum(evals[order], 0.0)
        sigma = np.sqrt(evals)
        r, truncated = _resolve_rank(sigma, rank)
        # directions with evals at the Gram roundoff floor are unusable:
        # squaring the data limits the resolvable condition number (the
        # factor 64 gives headroom over eigensolver noise ~ eps * ||G||)
        r_gram = int(
            np.count_nonzero(evals > 64.0 * np.finfo(float).eps * evals[0])
        )
        if r > r_gram:
            gram_warn = True
            cond2 = (sigma[0] / sigma[r - 1]) ** 2 if sigma[r - 1] > 0 else np.inf
            warnings.warn(
                "Gram-matrix route is ill conditioned "
                f"(squared condition number {cond2:.2e}); rank cut to {r_gram}",
                stacklevel=3,
            )
            r = r_gram
        sigma = sigma[:r]
        v = vfull[:, order[:r]]
        u = (s0 @ v) / sigma
    else:
        raise ValueError(f"unknown DMD algorithm {algorithm!r}")

    projected = (s1 @ v) / sigma  # S1 V Sigma^{-1}, reused for the modes
    atilde = u.conj().T @ projected
    lam, w = np.linalg.eig(atilde)
    phi = projected @ w

    if amplitude_rule == "optimal":
        alpha = _optimal_amplitudes(phi, lam, s_mat)
    elif amplitude_rule == "initial":
        alpha = _initial_amplitudes(phi, s_mat[:, 0])
    else:
        raise ValueError(f"unknown amplitude rule {amplitude_rule!r}")

    # deterministic ordering: by |alpha| descending, eigenvalue as tiebreak
    order = np.lexsort((lam.imag, lam.real, -np.abs(alpha)))
    lam, alpha, phi, w = lam[order], alpha[order], phi[:, order], w[:, order]

    with np.errstate(divide="ignore", invalid="ignore"):
        omega = np.where(lam != 0.0, np.log(np.where(lam != 0.0, lam, 1.0)) / dt,
                         np.nan + 0j)
    pairs, unpaired = _detect_pairs(lam, phi, alpha)
    return DMDModel(
        modes=phi,
        eigenvalues=lam,
        omegas=omega,
        amplitudes=alpha,
        dt=dt,
        rank=int(lam.size),
        algorithm=algorithm,
        amplitude_rule=amplitude_rule,
        rank_truncated=truncated,
        gram_ill_conditioned=gram_warn,
        conj_pairs=pairs,
        unpaired=unpaired,
        svd_factors=(v, sigma, w),
        snapshot_count=s_mat.shape[1],
        recon_blocks=_reconstruction_blocks(lam, omega, phi, alpha, pairs,
                                            unpaired),
    )


def dmd_exact(snapshots, rank=None, dt=None, amplitude_rule="optimal",
              include_initial=True):
    """Exact DMD from thin SVD of the first snapshot block.

    `rank` may be an integer mode count (truncated to the numerical rank
    with a warning), an energy tolerance in (0, 1), or None for the default
    singular-value cutoff.
    """
    s_mat, grid_dt = _snapshot_matrix(snapshots, include_initial)
    if s_mat.shape[1] < 2:
        raise ValueError("DMD needs at least two snapshot columns")
    dt = grid_dt if dt is None else dt
    if dt is None or dt <= 0:
        raise ValueError("a positive snapshot spacing dt is required")
    return _build_model(s_mat, dt, rank, "tu", amplitude_rule)


def dmd_variant(snapshots, rank=None, dt=None, amplitude_rule="optimal",
                include_initial=True):
    """Gram-matrix DMD variant; algebraically equivalent to `dmd_exact` but
    with the squared condition number of the snapshot block."""
    s_mat, grid_dt = _snapshot_matrix(snapshots, include_initial)
    if s_mat.shape[1] < 2:
        raise ValueError("DMD needs at least two snapshot columns")
    dt = grid_dt if dt is None else dt
    if dt is None or dt <= 0:
        raise ValueError("a positive snapshot spacing dt is required")
    return _build_model(s_mat, dt, rank, "chen", amplitude_rule)


def _optimal_amplitudes(phi, lam, s_mat):
    """Normal-equation solution of min_alpha ||S - Phi D_alpha Vand||_F."""
    vand = vandermonde(lam, s_mat.shape[1])
    p = (phi.conj().T @ phi) * np.conj(vand @ vand.conj().T)
    q = np.conj(np.einsum("ik,ki->i", vand, s_mat.conj().T @ phi))
    try:
        return np.linalg.solve(p, q)
    except np.linalg.LinAlgError:
        warnings.warn("singular amplitude system; least-squares fallback",
                      stacklevel=3)
        return np.linalg.lstsq(p, q, rcond=None)[0]


def _initial_amplitudes(phi, u_first):
    return np.linalg.lstsq(phi, u_first.astype(complex), rcond=None)[0]


def optimal_amplitudes(model, snapshots, include_initial=True):
    """Amplitudes minimizing the Frobenius misfit over the snapshot window."""
    s_mat, _ = _snapshot_matrix(snapshots, include_initial)
    return _optimal_amplitudes(model.modes, model.eigenvalues, s_mat)


def initial_amplitudes(model, u_first):
    """Least-squares coefficients of the first snapshot in the mode span."""
    return _initial_amplitudes(model.modes, np.asarray(u_first))


def with_amplitudes(model, snapshots=None, rule="optimal", include_initial=True):
    """Copy of the model re-fitted with the requested amplitude rule."""
    from dataclasses import replace

    if rule == "optimal":
        alpha = optimal_amplitudes(model, snapshots, include_initial)
    elif rule == "initial":
        s_mat, _ = _snapshot_matrix(snapshots, include_initial)
        alpha = _initial_amplitudes(model.modes, s_mat[:, 0])
    else:
        raise ValueError(f"unknown amplitude rule {rule!r}")
    pairs, unpaired = _detect_pairs(model.eigenvalues, model.modes, alpha)
    blocks = _reconstruction_blocks(
        model.eigenvalues, model.omegas, model.modes, alpha, pairs, unpaired
    )
    return replace(model, amplitudes=alpha, amplitude_rule=rule,
                   conj_pairs=pairs, unpaired=unpaired, recon_blocks=blocks)


def _active(model):
    keep = model.eigenvalues != 0.0
    if not keep.all():
        warnings.warn(
            "modes with lambda = 0 are dropped from continuous-time "
            "reconstruction (their frequency is undefined)",
            stacklevel=3,
        )
    return keep


def reconstruct(model, t):
    """Real part of the exponential mode sum at one time t >= 0."""
    if t < 0:
        raise ValueError("reconstruction time must be nonnegative")
    keep = _active(model)
    weights = model.amplitudes[keep] * np.exp(model.omegas[keep] * t)
    return (model.modes[:, keep] @ weights).real


def reconstruct_series(model, times):
    """Real trajectory (n_dofs, len(times)) of the exponential mode sum.

    Purely real modes contribute through a single real matrix product and
    conjugate pairs collapse to one doubled representative, so on real
    snapshot data the cost matches one real GEMM of the full mode count.
    The result equals `reconstruct` applied per time up to roundoff.
    """
    times = np.asarray(times, dtype=float)
    blocks = model.recon_blocks
    if blocks is None:
        blocks = _reconstruction_blocks(
            model.eigenvalues, model.omegas, model.modes, model.amplitudes,
            model.conj_pairs, model.unpaired,
        )
    if blocks["n_zero"]:
        warnings.warn(
            "modes with lambda = 0 are dropped from continuous-time "
            "reconstruction (their frequency is undefined)",
            stacklevel=2,
        )
    if "phi_stack" not in blocks:
        return np.zeros((model.n_dofs, times.size))
    rows = []
    if "real" in blocks:
        omega_r, alpha_r = blocks["real"]
        rows.append(alpha_r[:, None] * np.exp(np.outer(omega_r, times)))
    if "cplx" in blocks:
        omega_c, alpha_c = blocks["cplx"]
        coeff = alpha_c[:, None] * np.exp(np.outer(omega_c, times))
        rows.append(coeff.real)
        rows.append(-coeff.imag)
    return blocks["phi_stack"] @ np.vstack(rows)
