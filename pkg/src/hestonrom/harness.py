"""Experiment driver: FOM -> POD / DMD pipelines and report files.

`run_experiment` solves the full-order problem once, sweeps the requested
mode counts for the POD-Galerkin and both DMD reduced models, and collects
the two paper-style error metrics together with offline/online timings.
Timing is sequential by design; online numbers take the best of
`timing_repeats` identical repetitions.
"""

import dataclasses
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import dmd as dmd_mod
from .assembly import assemble_mass, assemble_stiffness, assemble_load, l2_project
from .assembly import AssembledSystem, DEFAULT_PENALTY
from .errors import ConfigurationError
from .fom import TimeGrid, solve_fom
from .heston import (
    ButterflySpread,
    DigitalCall,
    EuropeanCall,
    HestonParams,
    PRESET_NAMES,
    bc_tags,
    boundary_data,
    coefficients,
    log_transform,
    payoff_function,
    preset,
)
from .mesh import RectDomain, build_structured_mesh, classify_edges
from .metrics import benchmark_speedup, relative_frobenius_error, relative_price_error
from .pod import compute_pod_basis, lift, reduce_system, solve_rom
from .space import DGSpace

DEFAULT_DOMAIN = RectDomain(v_min=0.0025, v_max=0.5, x_min=-5.0, x_max=5.0)
PRESET_GRIDS = {
    "european-call": dict(n_v=48, n_x=96, dt=0.01),
    "butterfly": dict(n_v=48, n_x=96, dt=0.01),
    "digital": dict(n_v=32, n_x=128, dt=0.01),
}
DEFAULT_MODES = tuple(range(1, 20))
METHODS = ("pod", "dmd_tu", "dmd_chen")


@dataclass(frozen=True)
class ExperimentConfig:
    option: object  # OptionSpec
    domain: RectDomain = DEFAULT_DOMAIN
    n_v: int = 48
    n_x: int = 96
    dt: float = 0.01
    modes: tuple = DEFAULT_MODES
    pod_eps: float = 1e-3
    dmd_algorithm: str = "both"  # "tu" | "chen" | "both"
    amplitude_rule: str = "optimal"
    include_initial: bool = True
    alt_bc: bool = False
    penalty_constant: float = DEFAULT_PENALTY
    out_dir: str | None = None
    seed: int = 0  # consumed by property tests only
    timing_repeats: int = 3
    preset_name: str | None = None

    def __post_init__(self):
        if self.n_v < 1 or self.n_x < 1:
            raise ConfigurationError("cell counts must be positive")
        if self.dt <= 0:
            raise ConfigurationError("dt must be positive")
        if not self.modes or any(n < 1 for n in self.modes):
            raise ConfigurationError("mode sweep must contain positive counts")
        if self.dmd_algorithm not in ("tu", "chen", "both"):
            raise ConfigurationError("dmd_algorithm must be tu, chen or both")
        if self.amplitude_rule not in ("optimal", "initial"):
            raise ConfigurationError("amplitude_rule must be optimal or initial")
        if not 0.0 <= self.pod_eps < 1.0:
            raise ConfigurationError("pod_eps must lie in [0, 1)")
        if self.timing_repeats < 1:
            raise ConfigurationError("timing_repeats must be positive")
        if self.domain.v_min <= 0.0:
            raise ConfigurationError(
                "Heston experiments need v_min > 0 (degenerate diffusion at 0)"
            )

    @property
    def params(self):
        return self.option.params


def config_from_preset(name, **overrides):
    option = preset(name)
    base = dict(PRESET_GRIDS[name])
    base.update(overrides)
    return ExperimentConfig(option=option, preset_name=name, **base)


@dataclass
class SweepRow:
    method: str
    n_modes: int
    frobenius_rel_err: float
    price_rel_err_T: float
    offline_s: float
    online_s: float
    speedup: float


@dataclass
class ErrorReport:
    config: ExperimentConfig
    point: tuple
    fom_price: float
    fom_assembly_s: float
    fom_factor_s: float
    fom_stepping_s: float
    rows: list = field(default_factory=list)
    price_series: dict = field(default_factory=dict)

    def rows_for(self, method):
        return [r for r in self.rows if r.method == method]


def build_discretization(config):
    """Mesh, space, coefficient field and assembled operators for a config."""
    fld = coefficients(config.params)
    mesh = build_structured_mesh(config.domain, config.n_v, config.n_x)
    mesh = classify_edges(mesh, fld, bc_tags(config.option))
    space = DGSpace(mesh, degree=1)
    bdata = boundary_data(config.option, config.domain, alt_bc=config.alt_bc)

    t0 = time.perf_counter()
    mass = assemble_mass(space)
    stiffness = assemble_stiffness(space, fld, config.penalty_constant)
    grid = TimeGrid.for_horizon(config.params.T, config.dt)
    loads = np.column_stack(
        [
            assemble_load(space, fld, bdata, t, config.penalty_constant)
            for t in grid.times[1:]
        ]
    )
    u0 = l2_project(space, payoff_function(config.option))
    assembly_s = time.perf_counter() - t0

    def load(t):
        return assemble_load(space, fld, bdata, t, config.penalty_constant)

    system = AssembledSystem(
        mass=mass, stiffness=stiffness, load=load,
        penalty_constant=config.penalty_constant,
    )
    return space, system, loads, u0, grid, assembly_s


def solve_full_order(config):
    """FOM snapshots plus everything needed by the reduction stages."""
    space, system, loads, u0, grid, assembly_s = build_discretization(config)
    snapshots = solve_fom(system, u0, grid, loads)
    return space, system, loads, u0, grid, snapshots, assembly_s


def evaluation_point(config):
    x0, _ = log_transform(config.params, config.params.S0, 0.0)
    return (config.params.v0, x0)


def _metric_columns(config, fom_states, rom_states):
    if config.include_initial:
        return fom_states, rom_states
    return fom_states[:, 1:], rom_states[:, 1:]


def run_experiment(config):
    """Full sweep over mode counts; returns the report and writes artifacts."""
    space, system, loads, u0, grid, fom, assembly_s = solve_full_order(config)
    point = evaluation_point(config)
    dofs, weights = space.point_weights(*point)
    fom_price = float(weights @ fom.states[dofs, -1])
    report = ErrorReport(
        config=config,
        point=point,
        fom_price=fom_price,
        fom_assembly_s=assembly_s,
        fom_factor_s=fom.factor_time,
        fom_stepping_s=fom.wall_time,
    )
    max_modes = max(config.modes)

    # --- POD sweep ------------------------------------------------------
    t0 = time.perf_counter()
    basis_full = compute_pod_basis(
        fom,
        system.mass,
        eps=0.0,
        max_modes=max_modes,
        include_initial=config.include_initial,
        block_size=space.n_k,
    )
    basis_s = time.perf_counter() - t0
    for n in config.modes:
        if n > basis_full.n_modes:
            break
        t0 = time.perf_counter()
        basis = basis_full.truncate(n)
        red = reduce_system(system, loads, basis, u0)
        offline = basis_s + (time.perf_counter() - t0)
        online = math.inf
        for _ in range(config.timing_repeats):
            traj, loop_s = solve_rom(red, grid)
            t0 = time.perf_counter()
            lifted = lift(basis, traj)
            online = min(online, loop_s + time.perf_counter() - t0)
        _append_row(report, config, fom, lifted, space, point, "pod", n,
                    offline, online)

    # --- DMD sweeps -----------------------------------------------------
    algorithms = (
        ("tu", "chen") if config.dmd_algorithm == "both"
        else (config.dmd_algorithm,)
    )
    builders = {"tu": dmd_mod.dmd_exact, "chen": dmd_mod.dmd_variant}
    for alg in algorithms:
        seen_ranks = set()
        for n in config.modes:
            t0 = time.perf_counter()
            model = builders[alg](
                fom,
                rank=n,
                amplitude_rule=config.amplitude_rule,
                include_initial=config.include_initial,
            )
            offline = time.perf_counter() - t0
            if model.rank in seen_ranks:  # requested rank beyond data rank
                continue
            seen_ranks.add(model.rank)
            times = grid.times if config.include_initial else (
                grid.times[1:] - grid.dt
            )
            online = math.inf
            for _ in range(config.timing_repeats):
                t0 = time.perf_counter()
                recon = dmd_mod.reconstruct_series(model, times)
                online = min(online, time.perf_counter() - t0)
            if not config.include_initial:
                recon = np.column_stack([fom.states[:, 0], recon])
            _append_row(report, config, fom, recon, space, point,
                        f"dmd_{alg}", model.rank, offline, online)

    if config.out_dir is not None:
        write_report(report)
    return report


def _append_row(report, config, fom, rom_states, space, point, method, n,
                offline, online):
    ref, rom = _metric_columns(config, fom.states, rom_states)
    frob = relative_frobenius_error(ref, rom)
    series = relative_price_error(fom, rom_states, space, point)
    report.rows.append(
        SweepRow(
            method=method,
            n_modes=n,
            frobenius_rel_err=frob,
            price_rel_err_T=float(series[-1]),
            offline_s=offline,
            online_s=online,
            speedup=benchmark_speedup(report.fom_stepping_s, online),
        )
    )
    report.price_series[(method, n)] = series


CSV_HEADER = "method,n_modes,frobenius_rel_err,price_rel_err_T,offline_s,online_s,speedup"


def sweep_csv_lines(report):
    lines = [CSV_HEADER]
    for r in report.rows:
        lines.append(
            f"{r.method},{r.n_modes},{r.frobenius_rel_err:.12g},"
            f"{r.price_rel_err_T:.12g},{r.offline_s:.6g},{r.online_s:.6g},"
            f"{r.speedup:.6g}"
        )
    return lines


def price_series_csv_lines(report):
    dt = report.config.dt
    lines = ["method,n_modes,step,time,price_rel_err"]
    for (method, n), series in report.price_series.items():
        for k, err in enumerate(series):
            lines.append(f"{method},{n},{k},{k * dt:.12g},{err:.12g}")
    return lines


def summary_lines(report):
    cfg = report.config
    lines = [
        f"preset: {cfg.preset_name or 'custom'}",
        f"option: {type(cfg.option).__name__}",
        f"grid: n_v={cfg.n_v} n_x={cfg.n_x} dt={cfg.dt} "
        f"domain=[{cfg.domain.v_min},{cfg.domain.v_max}]x"
        f"[{cfg.domain.x_min},{cfg.domain.x_max}]",
        f"dofs: {6 * cfg.n_v * cfg.n_x}",
        f"amplitude rule: {cfg.amplitude_rule}   include-initial: "
        f"{'on' if cfg.include_initial else 'off'}   alt-bc: "
        f"{'on' if cfg.alt_bc else 'off'}",
        f"evaluation point (v0, x0): ({report.point[0]:.6g}, {report.point[1]:.6g})",
        f"FOM value at the point, t=T: {report.fom_price:.10g}",
        f"FOM assembly {report.fom_assembly_s:.3f}s, factorization "
        f"{report.fom_factor_s:.3f}s, stepping {report.fom_stepping_s:.3f}s",
        "",
        f"{'method':9s} {'N':>3s} {'frob_err':>12s} {'price_err_T':>12s} "
        f"{'offline_s':>10s} {'online_s':>10s} {'speedup':>8s}",
    ]
    for r in report.rows:
        lines.append(
            f"{r.method:9s} {r.n_modes:3d} {r.frobenius_rel_err:12.4e} "
            f"{r.price_rel_err_T:12.4e} {r.offline_s:10.4f} {r.online_s:10.6f} "
            f"{r.speedup:8.1f}"
        )
    return lines


def write_report(report):
    out = Path(report.config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep.csv").write_text("\n".join(sweep_csv_lines(report)) + "\n")
    (out / "price_error_series.csv").write_text(
        "\n".join(price_series_csv_lines(report)) + "\n"
    )
    (out / "summary.txt").write_text("\n".join(summary_lines(report)) + "\n")
    return out


# ----------------------------------------------------------------------
# flat key = value configuration files
# ----------------------------------------------------------------------

_FLOAT_KEYS = {
    "v_min", "v_max", "x_min", "x_max", "dt", "pod_eps", "penalty_constant",
    "lambda_blend", "kappa", "theta", "sigma", "rho", "r_d", "r_f", "T", "K",
    "S0", "v0", "k1", "k2", "k3",
}
_INT_KEYS = {"n_v", "n_x", "seed", "timing_repeats"}
_STR_KEYS = {"preset", "option", "dmd_algorithm", "amplitude_rule", "out_dir"}
_BOOL_KEYS = {"include_initial", "alt_bc"}
_KNOWN_KEYS = _FLOAT_KEYS | _INT_KEYS | _STR_KEYS | _BOOL_KEYS | {"modes"}


def parse_modes(text):
    text = text.strip()
    try:
        if ".." in text:
            lo, hi = text.split("..")
            values = tuple(range(int(lo), int(hi) + 1))
        else:
            values = tuple(int(p) for p in text.split(","))
    except ValueError:
        raise ConfigurationError(f"cannot parse mode sweep {text!r}") from None
    if not values or any(v < 1 for v in values):
        raise ConfigurationError(f"invalid mode sweep {text!r}")
    return values


def _parse_bool(key, text):
    lowered = text.strip().lower()
    if lowered in ("on", "true", "yes", "1"):
        return True
    if lowered in ("off", "false", "no", "0"):
        return False
    raise ConfigurationError(f"cannot parse boolean {key} = {text!r}")


def parse_config_text(text):
    """Flat `key = value` entries to a dict; unknown keys are errors."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected key = value")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in _KNOWN_KEYS:
            raise ConfigurationError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigurationError(f"line {lineno}: duplicate key {key!r}")
        try:
            if key in _FLOAT_KEYS:
                values[key] = float(val)
            elif key in _INT_KEYS:
                values[key] = int(val)
            elif key in _BOOL_KEYS:
                values[key] = _parse_bool(key, val)
            elif key == "modes":
                values[key] = parse_modes(val)
            else:
                values[key] = val
        except ValueError:
            raise ConfigurationError(
                f"line {lineno}: cannot parse value for {key!r}"
            ) from None
    return values


_PARAM_FIELDS = ("kappa", "theta", "sigma", "rho", "r_d", "r_f", "T", "K",
                 "S0", "v0")


def _build_option(values, base_option):
    """Option spec after applying parameter overrides from a config dict."""
    kind = values.get("option")
    if base_option is not None and kind is None:
        params = base_option.params
        updates = {k: values[k] for k in _PARAM_FIELDS if k in values}
        if updates:
            params = dataclasses.replace(params, **updates)
        if isinstance(base_option, EuropeanCall):
            blend = values.get("lambda_blend", base_option.blend)
            return EuropeanCall(params, blend=blend)
        if isinstance(base_option, ButterflySpread):
            return ButterflySpread(
                params,
                k1=values.get("k1", base_option.k1),
                k2=values.get("k2", base_option.k2),
                k3=values.get("k3", base_option.k3),
            )
        return DigitalCall(params)
    if kind is None:
        raise ConfigurationError("config needs either a preset or an option kind")
    missing = [k for k in _PARAM_FIELDS if k not in values]
    if missing:
        raise ConfigurationError(f"explicit option requires keys {missing}")
    params = HestonParams(**{k: values[k] for k in _PARAM_FIELDS})
    if kind == "european-call":
        return EuropeanCall(params, blend=values.get("lambda_blend", 0.5))
    if kind == "butterfly":
        for k in ("k1", "k2", "k3"):
            if k not in values:
                raise ConfigurationError("butterfly requires k1, k2 and k3")
        return ButterflySpread(params, values["k1"], values["k2"], values["k3"])
    if kind == "digital":
        return DigitalCall(params)
    raise ConfigurationError(f"unknown option kind {kind!r}")


def config_from_values(values, overrides=None):
    """ExperimentConfig from a parsed config dict plus CLI overrides."""
    values = dict(values)
    if overrides:
        values.update({k: v for k, v in overrides.items() if v is not None})
    preset_name = values.get("preset")
    base_option = None
    grid = {}
    if preset_name is not None:
        if preset_name not in PRESET_NAMES:
            raise ConfigurationError(f"unknown preset {preset_name!r}")
        base_option = preset(preset_name)
        grid = dict(PRESET_GRIDS[preset_name])
    option = _build_option(values, base_option)
    domain_kwargs = {
        k: values[k] for k in ("v_min", "v_max", "x_min", "x_max") if k in values
    }
    domain = (
        dataclasses.replace(DEFAULT_DOMAIN, **domain_kwargs)
        if domain_kwargs
        else DEFAULT_DOMAIN
    )
    kwargs = dict(
        option=option,
        domain=domain,
        preset_name=preset_name,
    )
    for key in ("n_v", "n_x", "dt"):
        kwargs[key] = values.get(key, grid.get(key, getattr(ExperimentConfig, key)))
    for key in ("modes", "pod_eps", "dmd_algorithm", "amplitude_rule",
                "include_initial", "alt_bc", "penalty_constant", "out_dir",
                "seed", "timing_repeats"):
        if key in values:
            kwargs[key] = values[key]
    return ExperimentConfig(**kwargs)
