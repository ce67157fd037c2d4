"""Command-line front end.

Every command validates its configuration before computing anything, writes
plot-ready CSV tables plus a JSON manifest into ``<output_dir>/<command>/``,
and exits with 0 on success, 1 on configuration errors, 2 when a resource cap
refuses the request and 3 on a mathematical halt.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np
from pydantic import ValidationError

from .config import get_config
from .core.nls import InitialLaw
from .core.trees import catalan3
from .core.wke import solve
from .models.errors import BlowupError, ConfigError, HaltError
from .models.schemas import CensusRow, InitialSpectrum, ObjectKind, RunManifest, RunStatus
from .tools import combinatorics, kinetics, simulation
from .tools.export import export_to_csv, export_to_jsonl, write_manifest, write_summary

logger = logging.getLogger(__name__)
config = get_config()

GROUPS = ("enumeration", "diagram", "wke", "sim", "gap", "server", "output")


class ArgumentParser(argparse.ArgumentParser):
    """Reports malformed flags as configuration errors instead of exiting with 2."""

    def error(self, message: str):
        raise ConfigError(f"{self.prog}: {message}")


# -- parsing helpers ---------------------------------------------------------


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from e


def _signature(text: str) -> list[int]:
    signs = {"+": 1, "-": -1, "1": 1, "-1": -1}
    try:
        return [signs[x.strip()] for x in text.split(",")]
    except KeyError as e:
        raise argparse.ArgumentTypeError(f"expected a list of + and -, got {text!r}") from e


def _pair(text: str) -> tuple[int, int]:
    try:
        i, j = (int(x) for x in text.split(","))
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected two mode indices i,j, got {text!r}") from e
    return i, j


def _quadruple(text: str) -> tuple[int, int, int, int]:
    try:
        i, j, k, m = (int(x) for x in text.split(","))
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected four mode indices, got {text!r}") from e
    return i, j, k, m


# -- configuration -----------------------------------------------------------


def _update_group(name: str, values: dict[str, Any]) -> None:
    """Replace a config group by a validated copy with ``values`` applied."""
    current = getattr(config, name)
    try:
        setattr(config, name, type(current).model_validate({**current.model_dump(), **values}))
    except ValidationError as e:
        raise ConfigError(f"Invalid {name} configuration: {e}") from e


def load_config_file(path: Path) -> None:
    """Apply a JSON file whose top-level keys name configuration groups."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"Cannot read config file {path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError("Config file must hold a JSON object of groups")
    for name, values in data.items():
        if name not in GROUPS or not isinstance(values, dict):
            raise ConfigError(f"Unknown configuration group {name!r}")
        _update_group(name, values)


def _overrides(args: argparse.Namespace, fields: dict[str, str]) -> dict[str, Any]:
    return {f: getattr(args, a) for a, f in fields.items() if getattr(args, a, None) is not None}


SIM_FLAGS = {
    "dimension": "dimension",
    "box_size": "box_size",
    "gamma": "gamma",
    "delta": "delta",
    "k_max": "k_max",
    "dt_factor": "dt_factor",
    "ensemble_size": "ensemble_size",
    "seed": "master_seed",
    "threads": "threads",
    "quadruple": "quadruples",
}
WKE_FLAGS = {
    "dtau": "dtau",
    "spacing": "spacing",
    "half_width": "box_half_width",
    "radial_nodes": "radial_nodes",
    "angular_nodes": "angular_nodes",
    "plane_nodes": "plane_nodes",
}


def apply_arguments(args: argparse.Namespace) -> None:
    """Config file first, then command-line flags."""
    if args.config is not None:
        load_config_file(args.config)
    if args.output_dir is not None:
        _update_group("output", {"output_dir": args.output_dir})
    if args.log_level is not None:
        _update_group("server", {"log_level": args.log_level})
    _update_group("sim", _overrides(args, SIM_FLAGS))
    _update_group("wke", _overrides(args, WKE_FLAGS))


def _manifest(args: argparse.Namespace, **kwargs) -> RunManifest:
    params = {
        k: (str(v) if isinstance(v, Path) else v)
        for k, v in sorted(vars(args).items())
        if k not in ("func", "command") and not callable(v)
    }
    return RunManifest(
        schema_version=config.output.schema_version,
        command=args.command,
        parameters=params,
        config=config.group_dump(),
        **kwargs,
    )


def _finish(out: Path, manifest: RunManifest) -> None:
    manifest.outputs = sorted({*manifest.outputs, "manifest.json", "summary.txt"})
    write_manifest(manifest, out / "manifest.json")
    write_summary(manifest, out / "summary.txt")
    print(f"{manifest.command}: {manifest.status.value}, outputs in {out}")


# -- commands ----------------------------------------------------------------


def cmd_enumerate(args: argparse.Namespace, out: Path) -> int:
    kind = ObjectKind(args.kind)
    orders = range(args.max_order + 1) if args.max_order is not None else [args.order]
    objects, counts = [], []
    for n in orders:
        rows = combinatorics.list_objects(kind, n, args.signature, args.depth)
        objects.extend(rows)
        expected = catalan3(n) if kind == ObjectKind.TREES else None
        counts.append(CensusRow(order=n, count=len(rows), expected=expected))
    export_to_csv(objects, out / f"{kind.value}.csv")
    export_to_csv(counts, out / f"{kind.value}_counts.csv")
    _finish(
        out,
        _manifest(
            args,
            diagnostics={"total": len(objects), "counts": [c.count for c in counts]},
            outputs=[f"{kind.value}.csv", f"{kind.value}_counts.csv"],
        ),
    )
    return 0


def cmd_molecule(args: argparse.Namespace, out: Path) -> int:
    analysis = combinatorics.analyze(args.garden)
    (out / "analysis.json").write_text(analysis.model_dump_json(indent=2) + "\n", encoding="utf-8")
    combinatorics.molecule_graphml(args.garden, out / "molecule.graphml")
    export_to_csv(analysis.vines, out / "vines.csv")
    _finish(
        out,
        _manifest(
            args,
            diagnostics={
                "atoms": analysis.molecule.atoms,
                "bonds": analysis.molecule.bonds,
                "circuit_rank": analysis.molecule.circuit_rank,
                "regular": analysis.regular,
                "vines": len(analysis.vines),
            },
            outputs=["analysis.json", "molecule.graphml", "vines.csv"],
        ),
    )
    return 0


def _write_spectrum(phi, path: Path) -> None:
    rows = [{"k": k.tolist(), "phi": float(v)} for k, v in zip(phi.grid.points, phi.flat)]
    export_to_csv(rows, path)


def cmd_wke(args: argparse.Namespace, out: Path) -> int:
    dimension = config.sim.dimension
    phi0 = kinetics.initial_grid_spectrum(
        dimension, kinetics.spectrum_function(args.spectrum, args.amplitude, args.width)
    )
    status, error, code = RunStatus.SUCCESS, None, 0
    try:
        traj = solve(phi0, args.tau, config.wke, args.radial)
    except BlowupError as e:
        logger.error(f"Kinetic solve halted: {e}")
        traj, status, error, code = e.partial, RunStatus.HALTED, str(e), e.exit_code
    export_to_csv(kinetics.snapshots(traj), out / "snapshots.csv")
    _write_spectrum(traj.spectra[0], out / "initial.csv")
    _write_spectrum(traj.final, out / "final.csv")
    diagnostics = kinetics.wke_diagnostics(traj)
    _finish(
        out,
        _manifest(
            args,
            status=status,
            error=error,
            diagnostics=diagnostics,
            warnings=diagnostics["flags"],
            outputs=["snapshots.csv", "initial.csv", "final.csv"],
        ),
    )
    return code


def cmd_nls(args: argparse.Namespace, out: Path) -> int:
    sim = config.sim
    phi = kinetics.spectrum_function(args.spectrum, args.amplitude, args.width)
    times = simulation.snapshot_times(args.tau, args.snapshots, sim.delta)
    seeds = {"master_seed": sim.master_seed, "trajectories": sim.ensemble_size}
    try:
        system, stats = simulation.run_statistics(
            phi, times, sim, InitialLaw(args.law), args.mode_pair or ()
        )
    except HaltError as e:
        logger.error(f"Ensemble halted: {e}")
        _finish(out, _manifest(args, status=RunStatus.HALTED, error=str(e), seeds=seeds))
        return e.exit_code
    rows = simulation.mode_rows(stats, system)
    outputs = []
    per_snapshot = len(system.grid)
    for j in range(len(stats.times)):
        name = f"snapshot_{j:03d}.csv"
        export_to_csv(rows[j * per_snapshot : (j + 1) * per_snapshot], out / name)
        outputs.append(name)
    m0 = stats.mass[:, :1]
    drift = np.max(np.abs(stats.mass - m0) / np.maximum(m0, 1e-300), axis=1)
    mass_rows = [
        {"trajectory": n, "initial_mass": float(m0[i, 0]), "max_relative_drift": float(d)}
        for i, (n, d) in enumerate(zip(stats.kept, drift))
    ]
    export_to_csv(mass_rows, out / "mass.csv")
    _finish(
        out,
        _manifest(
            args,
            seeds=seeds,
            diagnostics={
                **simulation.ensemble_diagnostics(stats),
                "times": stats.times.tolist(),
                "t_kin": system.scaling.t_kin,
            },
            outputs=[*outputs, "mass.csv"],
        ),
    )
    return 0


def cmd_kinetic_compare(args: argparse.Namespace, out: Path) -> int:
    sim = config.sim
    if sim.ensemble_size < 2:
        raise ConfigError("kinetic-compare needs an ensemble of at least two trajectories")
    phi = kinetics.spectrum_function(args.spectrum, args.amplitude, args.width)
    rows = simulation.kinetic_compare_rows(
        args.box_sizes, args.tau, phi, sim, config.wke, args.snapshots
    )
    export_to_csv(rows, out / "comparison.csv")
    failed = sorted({r.box_size for r in rows if r.status != RunStatus.SUCCESS})
    final = {r.box_size: r for r in rows if r.status == RunStatus.SUCCESS}
    errors = [final[big_l].sup_error for big_l in sorted(final)]
    ok = len(failed) < len(set(args.box_sizes))
    _finish(
        out,
        _manifest(
            args,
            status=RunStatus.SUCCESS if ok else RunStatus.HALTED,
            seeds={"master_seed": sim.master_seed, "trajectories": sim.ensemble_size},
            diagnostics={
                "failed_box_sizes": failed,
                "final_sup_errors": errors,
                "non_increasing": all(b <= a for a, b in zip(errors, errors[1:])),
            },
            warnings=[f"L={r.box_size}: {r.error}" for r in rows if r.error],
            outputs=["comparison.csv"],
        ),
    )
    return 0 if ok else 3


def cmd_demo_arrow(args: argparse.Namespace, out: Path) -> int:
    rows = kinetics.arrow_table(args.box_sizes, args.delta, args.dimension, args.gamma)
    export_to_csv(rows, out / "arrow.csv")
    forward = [r.forward_abs for r in rows]
    _finish(
        out,
        _manifest(
            args,
            diagnostics={
                "limit": rows[-1].limit,
                "forward_decreasing": all(b < a for a, b in zip(forward, forward[1:])),
                "final_relative_error": rows[-1].relative_error,
            },
            outputs=["arrow.csv"],
        ),
    )
    return 0


def cmd_diagrams_verify(args: argparse.Namespace, out: Path) -> int:
    reports = combinatorics.verify_all(args.max_order, args.depth)
    export_to_jsonl(reports, out / "reports.jsonl")
    outputs = ["reports.jsonl"]
    diagnostics: dict[str, Any] = {r.check: len(r.violations) for r in reports}
    if args.identity:
        sim = config.sim
        phi = kinetics.spectrum_function(args.spectrum, args.amplitude, args.width)
        rows = kinetics.identity_table(
            args.identity,
            [0.0] * sim.dimension,
            phi,
            sim.dimension,
            sim.gamma,
            sim.delta,
            params=config.wke,
        )
        export_to_csv(rows, out / "identity.csv")
        outputs.append("identity.csv")
        diagnostics["identity_relative_errors"] = [r.relative_error for r in rows]
    passed = all(r.passed for r in reports)
    _finish(
        out,
        _manifest(
            args,
            status=RunStatus.SUCCESS if passed else RunStatus.FAILED,
            diagnostics=diagnostics,
            warnings=[v for r in reports for v in r.violations[:20]],
            outputs=outputs,
        ),
    )
    return 0 if passed else 3


# -- parser ------------------------------------------------------------------


def _common() -> argparse.ArgumentParser:
    p = ArgumentParser(add_help=False)
    p.add_argument("--config", type=Path, help="JSON file with configuration groups")
    p.add_argument("--output-dir", type=Path, help="Directory receiving the command's folder")
    p.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    p.add_argument("--threads", type=int, help="Worker threads; results do not depend on it")
    return p


def _spectrum_opts() -> argparse.ArgumentParser:
    p = ArgumentParser(add_help=False)
    p.add_argument(
        "--spectrum", choices=[s.value for s in InitialSpectrum], default="gaussian"
    )
    p.add_argument("--amplitude", type=float, default=1.0, help="phi(0)")
    p.add_argument("--width", type=float, default=1.0, help="Decay length of the spectrum")
    return p


def _sim_opts() -> argparse.ArgumentParser:
    p = ArgumentParser(add_help=False)
    p.add_argument("--dimension", type=int)
    p.add_argument("--box-size", type=float, help="Torus side L")
    p.add_argument("--gamma", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--k-max", type=float, help="Mode cutoff |k|_inf <= k_max")
    p.add_argument("--dt-factor", type=float)
    p.add_argument("--ensemble-size", type=int)
    p.add_argument("--seed", type=int, help="Master seed")
    return p


def _wke_opts() -> argparse.ArgumentParser:
    p = ArgumentParser(add_help=False)
    p.add_argument("--dtau", type=float, help="Kinetic time step")
    p.add_argument("--spacing", type=float, help="Spectrum grid spacing")
    p.add_argument("--half-width", type=float, help="Spectrum grid half width")
    p.add_argument("--radial-nodes", type=int)
    p.add_argument("--angular-nodes", type=int)
    p.add_argument("--plane-nodes", type=int)
    return p


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(
        prog="wavekit",
        description="Feynman-diagram combinatorics, kinetic equation and NLS ensembles",
    )
    parser.add_argument("--version", action="version", version=config.server.server_version)
    sub = parser.add_subparsers(dest="command", required=True)
    common, spectrum, sim, wke = _common(), _spectrum_opts(), _sim_opts(), _wke_opts()

    p = sub.add_parser("enumerate", parents=[common], help="Enumerate trees, gardens, layerings")
    p.add_argument("--kind", choices=[k.value for k in ObjectKind], required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--order", type=int)
    group.add_argument("--max-order", type=int)
    p.add_argument("--signature", type=_signature, help="Garden signs, e.g. +,-,+,-")
    p.add_argument("--depth", type=int, default=1, help="Layer bound for canonical layerings")
    p.set_defaults(func=cmd_enumerate)

    p = sub.add_parser("molecule", parents=[common], help="Analyze the molecule of a garden")
    p.add_argument("--garden", required=True, help='e.g. "+(...) -(...) | 0-3,1-4,2-5"')
    p.set_defaults(func=cmd_molecule)

    p = sub.add_parser("wke", parents=[common, spectrum, sim, wke], help="Solve the WKE")
    p.add_argument("--tau", type=float, required=True, help="Final kinetic time")
    p.add_argument("--radial", action="store_true", help="Evaluate once per |k| shell")
    p.set_defaults(func=cmd_wke)

    p = sub.add_parser("nls", parents=[common, spectrum, sim], help="Run an NLS ensemble")
    p.add_argument("--tau", type=float, required=True, help="Final kinetic time")
    p.add_argument("--snapshots", type=int, default=1)
    p.add_argument("--law", choices=[x.value for x in InitialLaw], default="gaussian")
    p.add_argument("--mode-pair", type=_pair, action="append", help="Mode index pair i,j")
    p.add_argument(
        "--quadruple", type=_quadruple, action="append", help="Cumulant quadruple i,j,k,l"
    )
    p.set_defaults(func=cmd_nls)

    p = sub.add_parser(
        "kinetic-compare", parents=[common, spectrum, sim, wke], help="Ensemble against WKE"
    )
    p.add_argument("--box-sizes", type=_floats, default=[6.0, 9.0, 12.0])
    p.add_argument("--tau", type=float, default=0.1)
    p.add_argument("--snapshots", type=int, default=1)
    p.set_defaults(func=cmd_kinetic_compare)

    p = sub.add_parser("demo-arrow", parents=[common], help="Forward/backward iterate sums")
    p.add_argument("--box-sizes", type=_floats, default=[8.0, 16.0, 32.0])
    p.add_argument("--delta", type=float, default=1.0, help="Length of each time interval")
    p.add_argument("--dimension", type=int, default=3)
    p.add_argument("--gamma", type=float, default=0.5)
    p.set_defaults(func=cmd_demo_arrow)

    p = sub.add_parser(
        "diagrams-verify", parents=[common, spectrum, sim, wke], help="Exhaustive checks"
    )
    p.add_argument("--max-order", type=int, default=3)
    p.add_argument("--depth", type=int, default=1)
    p.add_argument(
        "--identity", type=_floats, help="Box sizes for the order-two couple-sum identity"
    )
    p.set_defaults(func=cmd_diagrams_verify)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run one command; configuration changes are undone before returning."""
    saved = {name: getattr(config, name) for name in GROUPS}
    try:
        args = build_parser().parse_args(argv)
        apply_arguments(args)
        logging.basicConfig(
            level=getattr(logging, config.server.log_level),
            format=config.server.log_format,
            force=True,
        )
        for warning in config.validate():
            logger.warning(warning)
        config._create_directories()
        out = config.output.output_dir / args.command
        out.mkdir(parents=True, exist_ok=True)
        logger.info(f"Running {args.command}, writing to {out}")
        return args.func(args, out)
    except KeyboardInterrupt:
        logger.info("Interrupted")
        return 1
    except Exception as e:
        code = getattr(e, "exit_code", 1)
        print(f"error: {e}", file=sys.stderr)
        logger.debug("Command failed", exc_info=True)
        return code
    finally:
        for name, group in saved.items():
            setattr(config, name, group)


if __name__ == "__main__":
    sys.exit(main())
