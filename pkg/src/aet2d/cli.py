"""Command line front end: config files, experiment drivers, field export.

Configs are flat `key = value` text with dotted key names; unknown or
duplicate keys are rejected before anything runs.  All files are written
atomically (temp file, then rename) and all floats at 17 significant digits,
so a repeated run with the same config and seed reproduces every output
byte for byte.

Exit codes: 0 success, 1 configuration or I/O problem, 2 numerical failure
(the message carries the solver's residual report).
"""
from __future__ import annotations

import argparse
import os
import re
import sys
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import (
    ContractError,
    DomainError,
    NumericalError,
    ParameterError,
    SingularSystemError,
)
from .fem import ScalarField
from .forward import PowerDensity
from .mesh import Mesh, read_mesh, write_mesh
from .metrics import (
    noise_sweep,
    record_from_run,
    records_to_csv,
    render_table,
    table_gamma_sweep,
    table_mesh_sweep,
)
from .noise import NoiseSpec
from .pipeline import (
    ForwardData,
    PipelineResult,
    RunConfig,
    base_mesh,
    forward_stage,
    recon_stage,
    run_pipeline,
)
from .recon import ReconResult

_FORMATS = ("csv", "vtk")

_FLOAT_KEYS = {
    "mesh.target_h": "target_h",
    "sigma.constant_value": "constant_value",
    "noise.alpha_percent": "alpha_percent",
    "noise.eig_floor": "eig_floor",
    "data.eps_d": "eps_d",
    "solver.tol": "tol",
}
_INT_KEYS = {
    "mesh.refine_levels": "refine_levels",
    "noise.seed": "seed",
    "solver.max_iter": "max_iter",
}
_STR_KEYS = {
    "gamma.preset": "gamma",
    "sigma.case": "case",
}
_ARC_KEYS = {
    "gamma.arcs": "gamma_arcs",
    "recon.unwrap_arcs": "unwrap_arcs",
}
_NOISE_FIELDS = ("alpha_percent", "seed", "eig_floor")
_ALL_KEYS = (set(_FLOAT_KEYS) | set(_INT_KEYS) | set(_STR_KEYS) | set(_ARC_KEYS)
             | {"output.dir", "output.formats"})


@dataclass(frozen=True)
class Job:
    """A parsed config: the run itself plus where and how to write it."""

    config: RunConfig
    out_dir: Path = Path("out")
    formats: tuple[str, ...] = ("csv",)


def _convert(key: str, value: str, kind):
    try:
        return kind(value)
    except ValueError as exc:
        raise ParameterError(f"config key {key!r}: {exc}") from None


def _parse_arcs(key: str, value: str) -> tuple[tuple[float, float], ...]:
    parts = [p for p in re.split(r"[,;\s]+", value) if p]
    if not parts or len(parts) % 2:
        raise ParameterError(f"config key {key!r}: need an even number of "
                             "angle endpoints")
    ends = [_convert(key, p, float) for p in parts]
    return tuple((ends[i], ends[i + 1]) for i in range(0, len(ends), 2))


def _parse_formats(value: str) -> tuple[str, ...]:
    names = [p.strip().lower() for p in value.split(",") if p.strip()]
    unknown = [n for n in names if n not in _FORMATS]
    if unknown or not names:
        raise ParameterError(f"config key 'output.formats': expected a subset "
                             f"of {_FORMATS}, got {value!r}")
    return tuple(dict.fromkeys(names))


def parse_config(text: str) -> Job:
    """Flat dotted-key config text to a validated Job."""
    seen: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key or not value:
            raise ParameterError(f"config line {lineno}: expected 'key = value'")
        if key not in _ALL_KEYS:
            raise ParameterError(f"unknown config key {key!r} (line {lineno})")
        if key in seen:
            raise ParameterError(f"duplicate config key {key!r} (line {lineno})")
        seen[key] = value

    kwargs = {}
    noise_kwargs = {}
    for key, value in seen.items():
        if key in _FLOAT_KEYS:
            name, parsed = _FLOAT_KEYS[key], _convert(key, value, float)
        elif key in _INT_KEYS:
            name, parsed = _INT_KEYS[key], _convert(key, value, int)
        elif key in _STR_KEYS:
            name, parsed = _STR_KEYS[key], value
        elif key in _ARC_KEYS:
            name, parsed = _ARC_KEYS[key], _parse_arcs(key, value)
        else:
            continue
        if name in _NOISE_FIELDS:
            noise_kwargs[name] = parsed
        else:
            kwargs[name] = parsed

    config = RunConfig(noise=NoiseSpec(**noise_kwargs), **kwargs)
    return Job(config=config,
               out_dir=Path(seen.get("output.dir", "out")),
               formats=_parse_formats(seen.get("output.formats", "csv")))


def _atomic_text(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="ascii")
    os.replace(tmp, path)


def _field_csv(field: ScalarField) -> str:
    mesh = field.mesh
    lines = ["node_id,x,y,value"]
    lines += [f"{i},{x:.17g},{y:.17g},{v:.17g}"
              for i, ((x, y), v) in enumerate(zip(mesh.vertices, field.values))]
    return "\n".join(lines) + "\n"


def _vtk_text(field: ScalarField, name: str) -> str:
    mesh = field.mesh
    lines = ["# vtk DataFile Version 3.0", name, "ASCII",
             "DATASET UNSTRUCTURED_GRID",
             f"POINTS {mesh.n_vertices} double"]
    lines += [f"{x:.17g} {y:.17g} 0" for x, y in mesh.vertices]
    lines.append(f"CELLS {mesh.n_triangles} {4 * mesh.n_triangles}")
    lines += [f"3 {i} {j} {k}" for i, j, k in mesh.triangles]
    lines.append(f"CELL_TYPES {mesh.n_triangles}")
    lines += ["5"] * mesh.n_triangles
    lines += [f"POINT_DATA {mesh.n_vertices}", f"SCALARS {name} double 1",
              "LOOKUP_TABLE default"]
    lines += [f"{v:.17g}" for v in field.values]
    return "\n".join(lines) + "\n"


def export_field(field: ScalarField, path, fmt: str = "csv", *,
                 name: str = "value") -> None:
    """One nodal field to disk, as `node_id,x,y,value` CSV or legacy VTK."""
    if fmt == "csv":
        _atomic_text(Path(path), _field_csv(field))
    elif fmt == "vtk":
        _atomic_text(Path(path), _vtk_text(field, name))
    else:
        raise ParameterError(f"unknown export format {fmt!r}")


def read_field_csv(path, mesh: Mesh) -> ScalarField:
    """Read a field export back onto the mesh it came from, bit exact."""
    lines = Path(path).read_text(encoding="ascii").splitlines()
    if not lines or lines[0] != "node_id,x,y,value":
        raise ContractError(f"{path}: not a field export")
    if len(lines) - 1 != mesh.n_vertices:
        raise ContractError(f"{path}: {len(lines) - 1} rows for a mesh with "
                            f"{mesh.n_vertices} nodes")
    values = np.empty(mesh.n_vertices)
    for row, line in enumerate(lines[1:]):
        try:
            node, x, y, value = line.split(",")
            node = int(node)
            x, y, values[row] = float(x), float(y), float(value)
        except ValueError:
            raise ContractError(f"{path}: malformed row {row}") from None
        if node != row:
            raise ContractError(f"{path}: node ids out of order at row {row}")
        if x != mesh.vertices[row, 0] or y != mesh.vertices[row, 1]:
            raise ContractError(f"{path}: node {row} coordinates do not match "
                                "the mesh")
    return ScalarField(mesh, values)


def _write_fields(job: Job, fields: dict[str, ScalarField]) -> None:
    for name, field in fields.items():
        for fmt in job.formats:
            export_field(field, job.out_dir / f"{name}.{fmt}", fmt, name=name)


def _write_results(job: Job, fwd: ForwardData, recon: ReconResult,
                   forward_seconds: float, recon_seconds: float,
                   quiet: bool) -> None:
    record = record_from_run(
        job.config, PipelineResult(fwd, recon, forward_seconds, recon_seconds))
    _atomic_text(job.out_dir / "record.csv", records_to_csv([record]))
    _write_fields(job, {"sigma_recon": recon.sigma, "theta_recon": recon.theta,
                        "sigma_true": fwd.sigma_true,
                        "theta_true": fwd.theta_true})
    if not quiet:
        print(render_table([record]), end="")
        print(f"wrote {job.out_dir}")


def _cmd_run(job: Job, quiet: bool) -> int:
    result = run_pipeline(job.config)
    _write_results(job, result.forward, result.recon,
                   result.forward_seconds, result.recon_seconds, quiet)
    return 0


def _cmd_forward(job: Job, quiet: bool) -> int:
    fwd = forward_stage(job.config)
    tmp = job.out_dir / "mesh.txt.tmp"
    write_mesh(fwd.recon_mesh, tmp)
    os.replace(tmp, job.out_dir / "mesh.txt")
    _write_fields(replace(job, formats=("csv",)),
                  {"h11": fwd.H.h11, "h12": fwd.H.h12, "h22": fwd.H.h22,
                   "sigma_true": fwd.sigma_true, "theta_true": fwd.theta_true})
    flagged = " ".join(str(int(n)) for n in fwd.theta_flagged)
    _atomic_text(job.out_dir / "meta.txt",
                 f"n_data {fwd.n_data}\nflagged {flagged}\n".replace(" \n", "\n"))
    if not quiet:
        print(f"wrote forward data ({fwd.n_data} data nodes, "
              f"{fwd.recon_mesh.n_vertices} reconstruction nodes) to {job.out_dir}")
    return 0


def _read_meta(path: Path) -> tuple[int, np.ndarray]:
    n_data = None
    flagged = np.empty(0, dtype=np.intp)
    for line in path.read_text(encoding="ascii").splitlines():
        name, _, rest = line.partition(" ")
        if name == "n_data":
            n_data = int(rest)
        elif name == "flagged":
            flagged = np.array([int(t) for t in rest.split()], dtype=np.intp)
    if n_data is None:
        raise ContractError(f"{path}: missing n_data")
    return n_data, flagged


def _cmd_reconstruct(job: Job, quiet: bool) -> int:
    mesh = read_mesh(job.out_dir / "mesh.txt")
    h11, h12, h22, sigma_true, theta_true = (
        read_field_csv(job.out_dir / f"{name}.csv", mesh)
        for name in ("h11", "h12", "h22", "sigma_true", "theta_true"))
    n_data, flagged = _read_meta(job.out_dir / "meta.txt")
    fwd = ForwardData(recon_mesh=mesh, n_data=n_data, sigma_true=sigma_true,
                      theta_true=theta_true,
                      H=PowerDensity(h11, h12, h22, eps_d=job.config.eps_d),
                      theta_flagged=flagged)
    t0 = time.perf_counter()
    recon = recon_stage(job.config, fwd)
    _write_results(job, fwd, recon, 0.0, time.perf_counter() - t0, quiet)
    return 0


def _run_sweep(job: Job, quiet: bool, sweep, filename: str) -> int:
    records = sweep(job.config)
    _atomic_text(job.out_dir / filename, records_to_csv(records))
    if not quiet:
        print(render_table(records), end="")
        print(f"wrote {job.out_dir / filename}")
    return 0


def _cmd_table1(job: Job, quiet: bool) -> int:
    return _run_sweep(job, quiet, table_gamma_sweep, "table1.csv")


def _cmd_table2(job: Job, quiet: bool) -> int:
    return _run_sweep(job, quiet, table_mesh_sweep, "table2.csv")


def _cmd_noise_sweep(job: Job, quiet: bool) -> int:
    return _run_sweep(job, quiet, noise_sweep, "noise_sweep.csv")


def _cmd_export_mesh(job: Job, quiet: bool) -> int:
    mesh = base_mesh(job.config)
    tmp = job.out_dir / "mesh.txt.tmp"
    write_mesh(mesh, tmp)
    os.replace(tmp, job.out_dir / "mesh.txt")
    if "vtk" in job.formats:
        controlled = np.zeros(mesh.n_vertices)
        controlled[mesh.dirichlet_nodes] = 1.0
        export_field(ScalarField(mesh, controlled), job.out_dir / "mesh.vtk",
                     "vtk", name="dirichlet")
    if not quiet:
        print(f"wrote mesh ({mesh.n_vertices} nodes, {mesh.n_triangles} "
              f"triangles) to {job.out_dir}")
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "forward": _cmd_forward,
    "reconstruct": _cmd_reconstruct,
    "table1": _cmd_table1,
    "table2": _cmd_table2,
    "noise-sweep": _cmd_noise_sweep,
    "export-mesh": _cmd_export_mesh,
}


class _Parser(argparse.ArgumentParser):
    # usage problems are config errors (exit 1), not argparse's default 2
    def error(self, message):
        raise ParameterError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="aet2d",
                     description="Power-density conductivity imaging runs.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="config file path")
        p.add_argument("--out", help="output directory (overrides output.dir)")
        p.add_argument("--seed", type=int,
                       help="noise seed (overrides noise.seed)")
        p.add_argument("--quiet", action="store_true")
    return parser


def _load_job(args) -> Job:
    job = parse_config(Path(args.config).read_text(encoding="ascii"))
    if args.out is not None:
        job = replace(job, out_dir=Path(args.out))
    if args.seed is not None:
        job = replace(job, config=replace(
            job.config, noise=replace(job.config.noise, seed=args.seed)))
    return job


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        job = _load_job(args)
        job.out_dir.mkdir(parents=True, exist_ok=True)
        return _COMMANDS[args.command](job, args.quiet)
    except (ParameterError, ContractError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (DomainError, NumericalError, SingularSystemError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
