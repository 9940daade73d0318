"""Acceptance suite: one test per criterion, each prints a pass/fail line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines; every tolerance is pinned here.
"""

import dataclasses
import time
import warnings

import numpy as np
import pytest
import scipy.sparse.linalg as spla
from scipy.optimize import linear_sum_assignment

from hestonrom import (
    BoundaryData,
    DGSpace,
    RectDomain,
    assemble_load,
    assemble_stiffness,
    build_structured_mesh,
    classify_edges,
    compute_pod_basis,
    dmd_exact,
    dmd_variant,
    lift,
    reconstruct_series,
    reduce_system,
    solve_rom,
    vandermonde,
)
from hestonrom.assembly import assemble_source
from hestonrom.fom import mass_norm
from hestonrom.harness import (
    config_from_preset,
    evaluation_point,
    price_series_csv_lines,
    run_experiment,
    solve_full_order,
    sweep_csv_lines,
)
from hestonrom.heston import coefficients, preset
from hestonrom.oracle import reference_price_heston_cf

DESK = dict(n_v=24, n_x=48, dt=0.01)


def report(criterion, passed, detail):
    line = f"ACCEPTANCE {criterion}: {'PASS' if passed else 'FAIL'} ({detail})"
    print(line)
    assert passed, line


def fom_price(config):
    space, _, _, _, _, snaps, _ = solve_full_order(config)
    dofs, weights = space.point_weights(*evaluation_point(config))
    return float(weights @ snaps.states[dofs, -1])


def test_criterion_1_fom_accuracy_oracle():
    t0 = time.time()
    ref = reference_price_heston_cf(preset("european-call").params)
    paper = fom_price(config_from_preset("european-call", timing_repeats=1))
    err_paper = abs(paper - ref) / ref
    desk = fom_price(config_from_preset("european-call", timing_repeats=1,
                                        **DESK))
    err_desk = abs(desk - ref) / ref
    elapsed = time.time() - t0
    report(
        1,
        err_paper <= 0.015 and err_desk <= 0.05 and elapsed <= 300.0,
        f"paper-grid err {err_paper:.3%} (<=1.5%), desk err {err_desk:.3%} "
        f"(<=5%), oracle {ref:.6f}, runtime {elapsed:.1f}s",
    )


def test_criterion_2_spatial_convergence():
    t0 = time.time()
    par = preset("european-call").params
    fld = coefficients(par)
    kap, th, sig, rho = par.kappa, par.theta, par.sigma, par.rho
    drift = par.r_d - par.r_f

    def u_exact(v, x):
        return np.exp(v) * np.sin(x)

    def source(v, x):
        u = np.exp(v) * np.sin(x)
        u_v = u
        u_vv = u
        u_x = np.exp(v) * np.cos(x)
        u_vx = u_x
        u_xx = -u
        div_a = (
            0.5 * sig * sig * (u_v + v * u_vv)
            + 0.5 * rho * sig * (u_x + 2.0 * v * u_vx)
            + 0.5 * v * u_xx
        )
        b_v = kap * v - kap * th + 0.5 * sig * sig
        b_x = 0.5 * v - drift + 0.5 * rho * sig
        return -div_a + b_v * u_v + b_x * u_x + par.r_d * u

    domain = RectDomain(0.05, 0.5, -1.0, 1.0)
    tags = {s: "dirichlet" for s in ("v_min", "v_max", "x_min", "x_max")}
    bc = BoundaryData(dirichlet=lambda side, t, v, x: u_exact(v, x),
                      neumann=lambda side, t, v, x: np.zeros_like(v))
    errors, sizes = [], []
    for n in (4, 8, 16, 32):
        mesh = classify_edges(build_structured_mesh(domain, n, 2 * n), fld, tags)
        space = DGSpace(mesh, degree=1)
        a_h = assemble_stiffness(space, fld)
        rhs = assemble_source(space, source) + assemble_load(space, fld, bc, 0.0)
        u = spla.spsolve(a_h.tocsc(), rhs)
        pts = space.element_quad_points
        u_h = np.einsum("qi,ei->eq", space.basis_at_quad, u[space.element_dofs])
        diff2 = (u_h - u_exact(pts[..., 0], pts[..., 1])) ** 2
        errors.append(np.sqrt(
            np.einsum("q,eq,e->", space.quad_weights, diff2, space.detB)))
        sizes.append(1.0 / n)
    slope = np.polyfit(np.log(sizes), np.log(errors), 1)[0]
    elapsed = time.time() - t0
    report(
        2,
        slope >= 1.7 and elapsed <= 120.0,
        f"L2 slope {slope:.3f} (>=1.7) over errors "
        + "/".join(f"{e:.2e}" for e in errors)
        + f", runtime {elapsed:.1f}s",
    )


def test_criterion_3_temporal_self_convergence():
    finals, mass = {}, None
    for dt in (0.04, 0.02, 0.01):
        cfg = config_from_preset("butterfly", n_v=12, n_x=24, dt=dt,
                                 timing_repeats=1)
        _, system, _, _, _, snaps, _ = solve_full_order(cfg)
        finals[dt] = snaps.states[:, -1]
        mass = system.mass
    e1 = mass_norm(mass, finals[0.04] - finals[0.02])
    e2 = mass_norm(mass, finals[0.02] - finals[0.01])
    slope = np.log2(e1 / e2)
    report(3, 0.8 <= slope <= 1.2,
           f"self-convergence slope {slope:.3f} in [0.8, 1.2]")


def test_criterion_4_pod_optimality_suite():
    cfg = config_from_preset("butterfly", n_v=8, n_x=16, dt=0.02,
                             timing_repeats=1)
    space, system, loads, u0, grid, snaps, _ = solve_full_order(cfg)
    basis = compute_pod_basis(snaps, system.mass, eps=0.0,
                              block_size=space.n_k)
    ortho = np.abs(
        basis.modes.T @ (system.mass @ basis.modes) - np.eye(basis.n_modes)
    ).max()
    # weighted reconstruction error equals the singular-value tail
    weighted = (basis.mass_chol @ snaps.states)
    u_hat, sigma, _ = np.linalg.svd(weighted, full_matrices=False)
    sigma = sigma[: basis.rank]
    tail_ok = True
    for n in (1, 3, basis.n_modes - 1):
        proj = u_hat[:, :n] @ (u_hat[:, :n].T @ weighted)
        err2 = np.linalg.norm(weighted - proj) ** 2
        tail = np.sum(sigma[n:] ** 2)
        tail_ok &= abs(err2 - tail) <= 1e-8 * tail + 1e-12
    info = basis.information_content()
    monotone = np.all(np.diff(info) >= -1e-15) and info[-1] == 1.0
    red = reduce_system(system, loads, basis, u0)
    traj, _ = solve_rom(red, grid)
    rel = np.linalg.norm(lift(basis, traj) - snaps.states) / np.linalg.norm(
        snaps.states)
    report(
        4,
        ortho < 1e-10 and tail_ok and monotone and rel < 1e-6,
        f"orthonormality {ortho:.1e} (<1e-10), tail identity {tail_ok}, "
        f"I(N) monotone {monotone}, full-rank ROM err {rel:.1e} (<1e-6)",
    )


def linear_snapshots(n, rank, n_snaps, seed):
    rng = np.random.default_rng(seed)
    x, _ = np.linalg.qr(rng.standard_normal((n, rank)))
    b = rng.standard_normal((rank, rank))
    b *= 0.92 / np.max(np.abs(np.linalg.eigvals(b)))
    c = rng.standard_normal(rank)
    cols = [x @ c]
    for _ in range(n_snaps - 1):
        c = b @ c
        cols.append(x @ c)
    return np.column_stack(cols), np.linalg.eigvals(b)


def test_criterion_5_dmd_exact_recovery_suite():
    worst = dict(eig=0.0, recon=0.0, agree=0.0, amp=0.0)
    for n, rank, n_snaps, seed in [
        (8, 2, 20, 101),
        (16, 8, 30, 102),
        (32, 12, 40, 103),
        (64, 16, 50, 104),
        (24, 5, 25, 105),
    ]:
        snaps, want = linear_snapshots(n, rank, n_snaps, seed)
        dt = 0.05
        tu = dmd_exact(snaps, rank=rank, dt=dt)
        chen = dmd_variant(snaps, rank=rank, dt=dt)
        cost = np.abs(tu.eigenvalues[:, None] - want[None, :])
        r, c = linear_sum_assignment(cost)
        worst["eig"] = max(worst["eig"], cost[r, c].max())
        times = dt * np.arange(n_snaps)
        recon = reconstruct_series(tu, times)
        worst["recon"] = max(
            worst["recon"],
            np.linalg.norm(recon - snaps) / np.linalg.norm(snaps),
        )
        cost2 = np.abs(tu.eigenvalues[:, None] - chen.eigenvalues[None, :])
        r2, c2 = linear_sum_assignment(cost2)
        worst["agree"] = max(worst["agree"], cost2[r2, c2].max())
        vand = vandermonde(tu.eigenvalues, n_snaps)
        design = np.stack(
            [np.outer(tu.modes[:, j], vand[j]).ravel() for j in range(rank)],
            axis=1,
        )
        direct = np.linalg.lstsq(design, snaps.ravel().astype(complex),
                                 rcond=None)[0]
        worst["amp"] = max(worst["amp"],
                           np.abs(tu.amplitudes - direct).max())
    report(
        5,
        worst["eig"] < 1e-8 and worst["recon"] < 1e-6
        and worst["agree"] < 1e-6 and worst["amp"] < 1e-8,
        f"eig {worst['eig']:.1e} (<1e-8), recon {worst['recon']:.1e} (<1e-6), "
        f"tu/chen {worst['agree']:.1e} (<1e-6), amplitudes {worst['amp']:.1e} "
        f"(<1e-8)",
    )


@pytest.fixture(scope="module")
def desk_reports():
    out = {}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for name in ("european-call", "butterfly", "digital"):
            cfg = config_from_preset(name, modes=tuple(range(1, 21)),
                                     timing_repeats=5, **DESK)
            out[name] = run_experiment(cfg)
    return out


def first_reaching(rows, tol=1e-3):
    for row in rows:
        if row.frobenius_rel_err <= tol:
            return row.n_modes
    return np.inf


def test_criterion_6_paper_behavior_reproduction(desk_reports):
    details, ok = [], True
    for name, rep in desk_reports.items():
        pod = rep.rows_for("pod")
        monotone = all(
            b.frobenius_rel_err <= a.frobenius_rel_err * (1 + 1e-6)
            for a, b in zip(pod, pod[1:])
        )
        n_pod = first_reaching(pod)
        reaches = n_pod <= 20
        ok &= monotone and reaches
        details.append(f"{name}: pod monotone {monotone}, N(1e-3)={n_pod}")
        for method in ("dmd_tu", "dmd_chen"):
            n_dmd = first_reaching(rep.rows_for(method))
            ok &= n_dmd >= n_pod
            details.append(f"{method} N(1e-3)={n_dmd}>={n_pod}")
        worst_speedup = min(r.speedup for r in rep.rows if r.n_modes <= 20)
        ok &= worst_speedup >= 50.0
        details.append(f"min speedup {worst_speedup:.0f}(>=50)")
        pod_by_n = {r.n_modes: r for r in pod}
        for method in ("dmd_tu", "dmd_chen"):
            for row in rep.rows_for(method):
                if row.n_modes >= 10 and row.n_modes in pod_by_n:
                    ok &= row.online_s <= pod_by_n[row.n_modes].online_s
    report(6, ok, "; ".join(details))


def test_criterion_7_error_peaks_near_the_money(desk_reports):
    # the pointwise error relative to the local solution scale (floored at
    # 1% of the strike so vanishing deep-out-of-the-money values cannot
    # dominate) must peak at the money; the unnormalized field instead peaks
    # at the x_max boundary where the solution itself is ~150x the strike
    rep = desk_reports["european-call"]
    cfg = rep.config
    space, system, loads, u0, grid, snaps, _ = solve_full_order(
        dataclasses.replace(cfg, timing_repeats=1))
    basis = compute_pod_basis(snaps, system.mass, eps=0.0, max_modes=8,
                              block_size=space.n_k)
    red = reduce_system(system, loads, basis, u0)
    traj, _ = solve_rom(red, grid)
    diff = np.abs(lift(basis, traj)[:, -1] - snaps.states[:, -1])
    scale = np.maximum(np.abs(snaps.states[:, -1]), 1e-2 * cfg.params.K)
    mesh = space.mesh
    dof_x = mesh.vertices[mesh.triangles].reshape(-1, 2)[:, 1]
    x_at_max = dof_x[int(np.argmax(diff / scale))]
    dx = (cfg.domain.x_max - cfg.domain.x_min) / cfg.n_x
    report(
        7,
        abs(x_at_max) <= 3.0 * dx + 1e-12,
        f"max relative ROM-FOM error at x={x_at_max:.4f}, allowed "
        f"|x|<={3 * dx:.4f} (8 POD modes)",
    )


def test_matched_accuracy_online_time_invariant(desk_reports):
    # at matched 1e-3 relative Frobenius accuracy the equation-free DMD
    # evaluation is at least as fast as the reduced implicit solves
    checked = 0
    for name, rep in desk_reports.items():
        pod_rows = rep.rows_for("pod")
        n_pod = first_reaching(pod_rows)
        pod_online = {r.n_modes: r.online_s for r in pod_rows}
        if n_pod not in pod_online:
            continue
        for method in ("dmd_tu", "dmd_chen"):
            rows = {r.n_modes: r for r in rep.rows_for(method)}
            n_dmd = first_reaching(rep.rows_for(method))
            if n_dmd in rows:
                assert rows[n_dmd].online_s <= pod_online[n_pod]
                checked += 1
    assert checked >= 2  # european and butterfly attain 1e-3 for both routes


def test_criterion_8_sweep_determinism(tmp_path):
    cfg = config_from_preset("digital", n_v=6, n_x=12, dt=0.05,
                             modes=(1, 2, 3, 4), timing_repeats=1)
    rep1 = run_experiment(cfg)
    rep2 = run_experiment(cfg)
    sweep1 = [",".join(line.split(",")[:4]) for line in sweep_csv_lines(rep1)]
    sweep2 = [",".join(line.split(",")[:4]) for line in sweep_csv_lines(rep2)]
    series_equal = price_series_csv_lines(rep1) == price_series_csv_lines(rep2)
    report(
        8,
        sweep1 == sweep2 and series_equal,
        f"sweep numeric columns identical {sweep1 == sweep2}, "
        f"price series identical {series_equal}",
    )
