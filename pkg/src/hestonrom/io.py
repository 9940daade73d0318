"""Binary containers for snapshots, POD bases and DMD models, plus CSV dumps.

All container headers use 8-byte little-endian fields (int64 for counts,
float64 for time steps) after a 5-byte ASCII magic. Matrix payloads are
stored column-major as little-endian float64, complex data interleaved
re/im (the native complex128 layout).
"""

import struct

import numpy as np

MAGIC_SNAPSHOTS = b"HROM1"
MAGIC_POD = b"HPOD1"
MAGIC_DMD = b"HDMD1"


def _read_exact(fh, n):
    data = fh.read(n)
    if len(data) != n:
        raise OSError("truncated container file")
    return data


def write_snapshots(path, snapshots):
    with open(path, "wb") as fh:
        fh.write(MAGIC_SNAPSHOTS)
        fh.write(struct.pack("<qqd", snapshots.n_dofs, snapshots.grid.n_steps,
                             snapshots.grid.dt))
        fh.write(snapshots.states.astype("<f8").tobytes(order="F"))


def read_snapshots(path):
    from .fom import SnapshotSet, TimeGrid

    with open(path, "rb") as fh:
        if _read_exact(fh, 5) != MAGIC_SNAPSHOTS:
            raise OSError(f"{path} is not a snapshot container")
        n_dofs, n_steps, dt = struct.unpack("<qqd", _read_exact(fh, 24))
        raw = _read_exact(fh, 8 * n_dofs * (n_steps + 1))
    states = np.frombuffer(raw, dtype="<f8").reshape(
        (n_dofs, n_steps + 1), order="F"
    ).copy()
    return SnapshotSet(states=states, grid=TimeGrid(dt=dt, n_steps=n_steps),
                       wall_time=0.0)


def write_pod_basis(path, basis):
    n_dofs, n_modes = basis.modes.shape
    with open(path, "wb") as fh:
        fh.write(MAGIC_POD)
        fh.write(struct.pack("<qq", n_dofs, n_modes))
        fh.write(basis.modes.astype("<f8").tobytes(order="F"))
        fh.write(np.ascontiguousarray(basis.singular_values).astype("<f8").tobytes())


def read_pod_basis(path):
    """(modes, singular_values); the trailing float block holds the values."""
    with open(path, "rb") as fh:
        if _read_exact(fh, 5) != MAGIC_POD:
            raise OSError(f"{path} is not a POD container")
        n_dofs, n_modes = struct.unpack("<qq", _read_exact(fh, 16))
        raw = _read_exact(fh, 8 * n_dofs * n_modes)
        tail = fh.read()
    modes = np.frombuffer(raw, dtype="<f8").reshape((n_dofs, n_modes), order="F")
    sigma = np.frombuffer(tail, dtype="<f8")
    return modes.copy(), sigma.copy()


def write_dmd_model(path, model):
    n_dofs, rank = model.modes.shape
    with open(path, "wb") as fh:
        fh.write(MAGIC_DMD)
        fh.write(struct.pack("<qqd", n_dofs, rank, model.dt))
        fh.write(model.modes.astype("<c16").tobytes(order="F"))
        fh.write(np.ascontiguousarray(model.eigenvalues).astype("<c16").tobytes())
        fh.write(np.ascontiguousarray(model.amplitudes).astype("<c16").tobytes())


def read_dmd_model(path):
    """(modes, eigenvalues, amplitudes, dt) from a DMD container."""
    with open(path, "rb") as fh:
        if _read_exact(fh, 5) != MAGIC_DMD:
            raise OSError(f"{path} is not a DMD container")
        n_dofs, rank, dt = struct.unpack("<qqd", _read_exact(fh, 24))
        modes = np.frombuffer(
            _read_exact(fh, 16 * n_dofs * rank), dtype="<c16"
        ).reshape((n_dofs, rank), order="F")
        lam = np.frombuffer(_read_exact(fh, 16 * rank), dtype="<c16")
        amp = np.frombuffer(_read_exact(fh, 16 * rank), dtype="<c16")
    return modes.copy(), lam.copy(), amp.copy(), dt


def snapshots_to_csv(path, snapshots):
    """Debug dump: one row per degree of freedom, one column per time."""
    header = "dof," + ",".join(f"t{n}" for n in range(snapshots.grid.n_steps + 1))
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for i, row in enumerate(snapshots.states):
            fh.write(str(i) + "," + ",".join(f"{v:.17g}" for v in row) + "\n")
