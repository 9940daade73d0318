"""Error metrics and the speed-up ratio used in the experiment reports."""

import numpy as np

from .errors import DomainError

PRICE_FLOOR = 1e-12


def relative_price_error(fom, rom_traj, space, point, floor=PRICE_FLOOR):
    """Per-step relative error of the point value at (v0, x0).

    Returns e_n = |P_rom(t_n) - P_fom(t_n)| / max(|P_fom(t_n)|, floor); the
    final entry e_J is the headline number.
    """
    dofs, weights = space.point_weights(point[0], point[1])
    p_fom = weights @ fom.states[dofs, :]
    p_rom = weights @ np.asarray(rom_traj)[dofs, :]
    return np.abs(p_rom - p_fom) / np.maximum(np.abs(p_fom), floor)


def relative_frobenius_error(fom, rom_traj):
    """|| S_fom - S_rom ||_F / || S_fom ||_F over all trajectory columns."""
    ref = fom.states if hasattr(fom, "states") else np.asarray(fom)
    rom = np.asarray(rom_traj)
    if ref.shape != rom.shape:
        raise ValueError(
            f"trajectory shapes differ: {ref.shape} vs {rom.shape}"
        )
    denom = np.linalg.norm(ref)
    if denom == 0.0:
        raise DomainError("reference trajectory has zero norm; metric undefined")
    return float(np.linalg.norm(ref - rom) / denom)


def benchmark_speedup(fom_time, rom_online_time):
    """Ratio of full-order stepping time to reduced-order online time."""
    if fom_time <= 0 or rom_online_time <= 0:
        raise ValueError("speed-up requires positive timings")
    return fom_time / rom_online_time
