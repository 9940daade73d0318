"""Command-line driver for the pricing and model-reduction workbench.

Subcommands: solve-fom, build-pod, build-dmd, evaluate, sweep, oracle-price.
Exit codes: 0 success, 2 configuration error, 3 numerical failure, 4 I/O
failure.
"""

import argparse
import dataclasses
import sys
from pathlib import Path

import numpy as np

from . import dmd as dmd_mod
from . import io as container
from .errors import ConfigurationError, DomainError, NumericalError
from .fom import TimeGrid
from .harness import (
    config_from_values,
    evaluation_point,
    parse_config_text,
    parse_modes,
    run_experiment,
    solve_full_order,
    summary_lines,
    sweep_csv_lines,
)
from .heston import PRESET_NAMES
from .oracle import reference_price_heston_cf
from .pod import compute_pod_basis


def _add_common(parser):
    parser.add_argument("--preset", choices=PRESET_NAMES)
    parser.add_argument("--config", metavar="FILE")
    parser.add_argument("--modes", metavar="A..B")
    parser.add_argument("--dmd-alg", choices=("tu", "chen"), dest="dmd_alg")
    parser.add_argument("--amplitudes", choices=("optimal", "initial"))
    parser.add_argument("--out", metavar="DIR")
    parser.add_argument("--include-initial", choices=("on", "off"),
                        dest="include_initial")
    parser.add_argument("--alt-bc", action="store_true", default=None,
                        dest="alt_bc")
    parser.add_argument("--snapshots", metavar="FILE",
                        help="reuse a previously written snapshot container")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="hestonrom",
        description="Heston dG pricing with POD/DMD model order reduction",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, descr in (
        ("solve-fom", "run the full-order solver and store snapshots"),
        ("build-pod", "compute a POD basis from snapshots"),
        ("build-dmd", "compute a DMD model from snapshots"),
        ("evaluate", "error metrics of the reduced models against the FOM"),
        ("sweep", "full mode-count sweep with CSV reports"),
        ("oracle-price", "semi-analytic European call reference price"),
    ):
        _add_common(sub.add_parser(name, help=descr))
    return parser


def _load_config(args):
    values = {}
    if args.config:
        path = Path(args.config)
        if not path.exists():
            raise OSError(f"config file {path} not found")
        values = parse_config_text(path.read_text())
    overrides = {
        "preset": args.preset,
        "out_dir": args.out,
        "dmd_algorithm": args.dmd_alg,
        "amplitude_rule": args.amplitudes,
        "alt_bc": args.alt_bc,
    }
    if args.modes:
        overrides["modes"] = parse_modes(args.modes)
    if args.include_initial is not None:
        overrides["include_initial"] = args.include_initial == "on"
    if not values.get("preset") and not overrides.get("preset") and (
        "option" not in values
    ):
        raise ConfigurationError(
            "specify --preset or a --config file defining the problem"
        )
    return config_from_values(values, overrides)


def _out_dir(config):
    out = Path(config.out_dir) if config.out_dir else Path("hestonrom-out")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _fom_snapshots(config, args):
    """Snapshots from --snapshots if given, otherwise a fresh FOM solve."""
    if args.snapshots:
        snaps = container.read_snapshots(args.snapshots)
        expected = TimeGrid.for_horizon(config.params.T, config.dt)
        if snaps.grid != expected or snaps.n_dofs != 6 * config.n_v * config.n_x:
            raise ConfigurationError(
                "snapshot container does not match the configured grid"
            )
        return None, snaps
    space, system, loads, u0, grid, snaps, assembly_s = solve_full_order(config)
    return (space, system, loads, u0, grid, assembly_s), snaps


def cmd_solve_fom(args):
    config = _load_config(args)
    space, system, loads, u0, grid, snaps, assembly_s = solve_full_order(config)
    out = _out_dir(config)
    path = out / "snapshots.bin"
    container.write_snapshots(path, snaps)
    point = evaluation_point(config)
    dofs, weights = space.point_weights(*point)
    price = float(weights @ snaps.states[dofs, -1])
    print(f"snapshots written to {path}")
    print(f"dofs {snaps.n_dofs}, steps {grid.n_steps}, dt {grid.dt}")
    print(
        f"assembly {assembly_s:.3f}s, factorization {snaps.factor_time:.3f}s, "
        f"stepping {snaps.wall_time:.3f}s"
    )
    print(f"value at (v0, x0) and t=T: {price:.10g}")
    return 0


def cmd_build_pod(args):
    config = _load_config(args)
    _, snaps = _fom_snapshots(config, args)
    basis = compute_pod_basis(
        snaps,
        _mass_for(config),
        eps=config.pod_eps,
        max_modes=max(config.modes),
        include_initial=config.include_initial,
        block_size=3,
    )
    out = _out_dir(config)
    path = out / "pod.bin"
    container.write_pod_basis(path, basis)
    info = basis.information_content()
    print(f"POD basis written to {path}")
    print(f"retained {basis.n_modes} of rank {basis.rank} modes "
          f"(eps {config.pod_eps:g})")
    print("I(N):", " ".join(f"{v:.8f}" for v in info[: basis.n_modes]))
    return 0


def cmd_build_dmd(args):
    config = _load_config(args)
    _, snaps = _fom_snapshots(config, args)
    algs = ("tu", "chen") if config.dmd_algorithm == "both" else (
        config.dmd_algorithm,
    )
    out = _out_dir(config)
    builders = {"tu": dmd_mod.dmd_exact, "chen": dmd_mod.dmd_variant}
    for alg in algs:
        model = builders[alg](
            snaps,
            rank=max(config.modes),
            amplitude_rule=config.amplitude_rule,
            include_initial=config.include_initial,
        )
        path = out / f"dmd_{alg}.bin"
        container.write_dmd_model(path, model)
        lam = model.eigenvalues
        print(f"DMD ({alg}) model written to {path}")
        print(f"rank {model.rank}, amplitude rule {model.amplitude_rule}")
        print("|lambda|:", " ".join(f"{abs(v):.6f}" for v in lam))
    return 0


def _mass_for(config):
    from .assembly import assemble_mass
    from .mesh import build_structured_mesh
    from .space import DGSpace

    mesh = build_structured_mesh(config.domain, config.n_v, config.n_x)
    return assemble_mass(DGSpace(mesh, degree=1))


def cmd_evaluate(args):
    config = _load_config(args)
    report = run_experiment(dataclasses.replace(config, out_dir=None))
    for line in summary_lines(report):
        print(line)
    return 0


def cmd_sweep(args):
    config = _load_config(args)
    if config.out_dir is None:
        config = dataclasses.replace(config, out_dir="hestonrom-out")
    report = run_experiment(config)
    print("\n".join(sweep_csv_lines(report)))
    print(f"\nartifacts written to {config.out_dir}")
    return 0


def cmd_oracle_price(args):
    config = _load_config(args)
    price = reference_price_heston_cf(config.params)
    print(f"{price:.10g}")
    return 0


_COMMANDS = {
    "solve-fom": cmd_solve_fom,
    "build-pod": cmd_build_pod,
    "build-dmd": cmd_build_dmd,
    "evaluate": cmd_evaluate,
    "sweep": cmd_sweep,
    "oracle-price": cmd_oracle_price,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (NumericalError, np.linalg.LinAlgError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 3
    except (ConfigurationError, DomainError, ValueError) as err:
        print(f"configuration error: {err}", file=sys.stderr)
        return 2
    except OSError as err:
        print(f"i/o failure: {err}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
