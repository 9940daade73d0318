import struct

import numpy as np
import pytest
import scipy.sparse as sparse
import scipy.sparse.linalg as spla

from hestonrom import (
    AssembledSystem,
    NumericalError,
    SnapshotSet,
    TimeGrid,
    solve_fom,
    step_matrix,
)
from hestonrom import io as container
from hestonrom.fom import mass_norm, precompute_loads
from hestonrom.harness import config_from_preset, solve_full_order


def scalar_system(m=1.0, a=1.0):
    return AssembledSystem(
        mass=sparse.csr_matrix(np.array([[m]])),
        stiffness=sparse.csr_matrix(np.array([[a]])),
        load=lambda t: np.zeros(1),
        penalty_constant=3.0,
    )


def random_system(n, seed, spd=True):
    rng = np.random.default_rng(seed)
    q = rng.standard_normal((n, n))
    a = q @ q.T / n + np.eye(n) if spd else q
    m = rng.standard_normal((n, n))
    m = m @ m.T / n + 2 * np.eye(n)
    return AssembledSystem(
        mass=sparse.csr_matrix(m),
        stiffness=sparse.csr_matrix(a),
        load=lambda t: np.zeros(n),
        penalty_constant=3.0,
    )


def test_time_grid_validation():
    grid = TimeGrid.for_horizon(1.0, 0.01)
    assert grid.n_steps == 100
    assert grid.final_time == pytest.approx(1.0)
    assert np.allclose(grid.times, 0.01 * np.arange(101))
    from hestonrom import ConfigurationError

    with pytest.raises(ConfigurationError):
        TimeGrid.for_horizon(1.0, 0.03)
    with pytest.raises(ConfigurationError):
        TimeGrid(dt=-0.1, n_steps=10)


def test_scalar_backward_euler_iterates():
    grid = TimeGrid(dt=0.1, n_steps=2)
    snaps = solve_fom(scalar_system(), np.ones(1), grid)
    assert snaps.states[0, 0] == 1.0
    assert snaps.states[0, 1] == pytest.approx(1.0 / 1.1, abs=1e-15)
    assert snaps.states[0, 2] == pytest.approx(1.0 / 1.21, abs=1e-15)


def test_zero_initial_and_zero_load_stays_zero():
    sys5 = random_system(5, seed=1)
    snaps = solve_fom(sys5, np.zeros(5), TimeGrid(dt=0.05, n_steps=8))
    assert np.all(snaps.states == 0.0)


def test_zero_stiffness_gives_identity_dynamics():
    rng = np.random.default_rng(2)
    m = rng.standard_normal((6, 6))
    m = m @ m.T + 6 * np.eye(6)
    system = AssembledSystem(
        mass=sparse.csr_matrix(m),
        stiffness=sparse.csr_matrix((6, 6)),
        load=lambda t: np.zeros(6),
        penalty_constant=3.0,
    )
    u0 = rng.standard_normal(6)
    snaps = solve_fom(system, u0, TimeGrid(dt=0.1, n_steps=5))
    for n in range(6):
        assert np.allclose(snaps.states[:, n], u0, atol=1e-12)


def test_linearity_in_initial_condition():
    system = random_system(8, seed=3)
    grid = TimeGrid(dt=0.02, n_steps=10)
    rng = np.random.default_rng(4)
    u0 = rng.standard_normal(8)
    one = solve_fom(system, u0, grid).states
    scaled = solve_fom(system, 3.5 * u0, grid).states
    assert np.allclose(scaled, 3.5 * one, rtol=1e-12, atol=1e-14)


def test_step_matrix_contract():
    system = random_system(10, seed=5)
    op = step_matrix(system, 0.1)
    rng = np.random.default_rng(6)
    full = (system.mass + 0.1 * system.stiffness).toarray()
    y = rng.standard_normal(10)
    assert np.linalg.norm(op.solve(full @ y) - y) / np.linalg.norm(y) < 1e-10
    rhs = rng.standard_normal(10)
    x = op.solve(rhs)
    assert np.linalg.norm(full @ x - rhs) / np.linalg.norm(rhs) < 1e-12
    # identity mass, zero stiffness: solve returns rhs unchanged
    ident = AssembledSystem(
        mass=sparse.identity(4, format="csr"),
        stiffness=sparse.csr_matrix((4, 4)),
        load=lambda t: np.zeros(4),
        penalty_constant=3.0,
    )
    rhs4 = rng.standard_normal(4)
    assert np.array_equal(step_matrix(ident, 0.3).solve(rhs4), rhs4)


def test_step_matrix_reuse_is_bitwise_deterministic():
    system = random_system(12, seed=7)
    rhs = np.random.default_rng(8).standard_normal(12)
    op = step_matrix(system, 0.05)
    baseline = op.solve(rhs)
    for _ in range(100):
        assert np.array_equal(op.solve(rhs), baseline)
    fresh = step_matrix(system, 0.05).solve(rhs)
    assert np.array_equal(fresh, baseline)


def test_singular_step_matrix_raises():
    singular = AssembledSystem(
        mass=sparse.csr_matrix(np.array([[1.0, 0.0], [0.0, 0.0]])),
        stiffness=sparse.csr_matrix((2, 2)),
        load=lambda t: np.zeros(2),
        penalty_constant=3.0,
    )
    with pytest.raises(NumericalError):
        step_matrix(singular, 0.1)


def test_factorization_reuse_matches_per_step_refactorization():
    system = random_system(9, seed=9)
    grid = TimeGrid(dt=0.04, n_steps=12)
    rng = np.random.default_rng(10)
    u0 = rng.standard_normal(9)
    loads = rng.standard_normal((9, 12))
    snaps = solve_fom(system, u0, grid, loads=loads)
    mat = (system.mass + grid.dt * system.stiffness).tocsc()
    u = u0.copy()
    for n in range(grid.n_steps):
        lu = spla.splu(mat)  # fresh factorization each step
        u = lu.solve(system.mass @ u + grid.dt * loads[:, n])
        assert np.allclose(snaps.states[:, n + 1], u, rtol=1e-12, atol=1e-14)


def test_snapshot_shape_and_wall_time():
    system = random_system(5, seed=11)
    grid = TimeGrid(dt=0.1, n_steps=7)
    snaps = solve_fom(system, np.ones(5), grid)
    assert snaps.states.shape == (5, 8)
    assert snaps.wall_time >= 0.0
    assert snaps.factor_time >= 0.0
    with pytest.raises(ValueError):
        SnapshotSet(states=np.zeros((5, 3)), grid=grid, wall_time=0.0)


def test_butterfly_mass_norm_bounded():
    cfg = config_from_preset("butterfly", n_v=8, n_x=16, dt=0.02,
                             timing_repeats=1)
    space, system, loads, u0, grid, snaps, _ = solve_full_order(cfg)
    assert np.abs(loads).max() == 0.0  # homogeneous BCs feed no load
    norm0 = mass_norm(system.mass, snaps.states[:, 0])
    norms = [mass_norm(system.mass, snaps.states[:, n])
             for n in range(grid.n_steps + 1)]
    assert max(norms) <= 1.05 * norm0


def test_snapshot_container_round_trip(tmp_path):
    system = random_system(6, seed=12)
    grid = TimeGrid(dt=0.25, n_steps=4)
    snaps = solve_fom(system, np.arange(6.0), grid)
    path = tmp_path / "snap.bin"
    container.write_snapshots(path, snaps)
    raw = path.read_bytes()
    assert raw[:5] == b"HROM1"
    n_dofs, n_steps, dt = struct.unpack("<qqd", raw[5:29])
    assert (n_dofs, n_steps, dt) == (6, 4, 0.25)
    # payload is column-major little-endian float64
    first_col = np.frombuffer(raw[29 : 29 + 48], dtype="<f8")
    assert np.array_equal(first_col, np.arange(6.0))
    back = container.read_snapshots(path)
    assert np.array_equal(back.states, snaps.states)
    assert back.grid == grid


def test_snapshot_csv_export(tmp_path):
    system = random_system(3, seed=13)
    snaps = solve_fom(system, np.ones(3), TimeGrid(dt=0.5, n_steps=2))
    path = tmp_path / "snap.csv"
    container.snapshots_to_csv(path, snaps)
    lines = path.read_text().splitlines()
    assert lines[0] == "dof,t0,t1,t2"
    assert len(lines) == 4  # header + one row per dof


def test_precompute_loads_matches_load_callable():
    calls = []

    def load(t):
        calls.append(t)
        return np.full(3, t)

    system = AssembledSystem(
        mass=sparse.identity(3, format="csr"),
        stiffness=sparse.csr_matrix((3, 3)),
        load=load,
        penalty_constant=3.0,
    )
    grid = TimeGrid(dt=0.5, n_steps=3)
    table = precompute_loads(system, grid)
    assert table.shape == (3, 3)
    assert calls == [0.5, 1.0, 1.5]
    assert np.allclose(table[0], [0.5, 1.0, 1.5])
