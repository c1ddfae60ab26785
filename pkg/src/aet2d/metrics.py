"""Experiment records and sweep tables for the limited-view benchmarks.

Published reference values for the same experiments ride along as metadata.
They were produced on unstructured meshes with different node counts, so they
are comparison points, never assertion targets; the acceptance suite asserts
trends and brackets instead.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import NamedTuple

from .errors import ContractError
from .noise import NoiseSpec
from .pipeline import PipelineResult, RunConfig, run_pipeline


@dataclass(frozen=True)
class ExperimentRecord:
    """One pipeline run flattened to the numbers the tables report."""

    case: str
    gamma: str
    n_data: int
    n_recon: int
    min_det: float
    cos2theta_error: float
    sin2theta_error: float
    sigma_error: float
    alpha_percent: float
    noise_seed: int
    eig_floor: float
    forward_seconds: float
    recon_seconds: float

    def __post_init__(self):
        if self.n_data <= self.n_recon:
            raise ContractError("data mesh must be finer than reconstruction mesh")
        bad = [n for n in ("cos2theta_error", "sin2theta_error", "sigma_error")
               if getattr(self, n) < 0.0]
        if bad:
            raise ContractError(f"negative error fields: {bad}")


class ReferenceRow(NamedTuple):
    min_det: float
    cos2theta_error: float
    sin2theta_error: float
    sigma_error: float


# published limited-view errors at N_data = 44880, N_recon = 20100
REFERENCE_GAMMA = {
    ("case1", "large"): ReferenceRow(3.94e-06, 0.0079, 0.0204, 0.3202),
    ("case1", "medium"): ReferenceRow(3.87e-10, 0.0140, 0.0201, 1.04),
    ("case1", "small"): ReferenceRow(9.94e-18, 0.0224, 0.0237, 1.77),
    ("case2", "large"): ReferenceRow(2.94e-06, 0.0077, 0.0186, 0.3362),
    ("case2", "medium"): ReferenceRow(3.57e-10, 0.0141, 0.0197, 1.08),
    ("case2", "small"): ReferenceRow(1.07e-17, 0.0225, 0.0233, 1.80),
}

# published mesh sweep for case 1 over Gamma_medium: (n_data, n_recon, sigma error)
REFERENCE_MESH = (
    (44880, 20100, 1.037),
    (79281, 44880, 0.8638),
    (124265, 79281, 0.7885),
)

NOISE_LADDER = ((1.0, 1e-6), (5.0, 1e-5), (10.0, 1e-5))


def record_from_run(config: RunConfig, result: PipelineResult) -> ExperimentRecord:
    m = result.recon.metrics
    if m is None:
        raise ContractError("pipeline result carries no metrics")
    return ExperimentRecord(
        case=config.case,
        gamma=config.gamma,
        n_data=result.forward.n_data,
        n_recon=result.forward.recon_mesh.n_vertices,
        min_det=result.recon.diagnostics.min_det,
        cos2theta_error=m.cos2theta_error,
        sin2theta_error=m.sin2theta_error,
        sigma_error=m.sigma_error,
        alpha_percent=config.noise.alpha_percent,
        noise_seed=config.noise.seed,
        eig_floor=config.noise.eig_floor,
        forward_seconds=result.forward_seconds,
        recon_seconds=result.recon_seconds)


def table_gamma_sweep(config: RunConfig) -> list[ExperimentRecord]:
    """Both cases against shrinking control arcs, noiseless."""
    records = []
    for case in ("case1", "case2"):
        for gamma in ("large", "medium", "small"):
            cfg = replace(config, case=case, gamma=gamma, gamma_arcs=None,
                          noise=NoiseSpec())
            records.append(record_from_run(cfg, run_pipeline(cfg)))
    return records


def table_mesh_sweep(config: RunConfig) -> list[ExperimentRecord]:
    """Case 1 over the medium arc at three nested resolutions, noiseless.

    Each level reuses the previous level's data mesh as its reconstruction
    mesh, which is what stepping refine_levels does here.
    """
    records = []
    for step in range(3):
        cfg = replace(config, case="case1", gamma="medium", gamma_arcs=None,
                      refine_levels=config.refine_levels + step, noise=NoiseSpec())
        records.append(record_from_run(cfg, run_pipeline(cfg)))
    return records


def noise_sweep(config: RunConfig) -> list[ExperimentRecord]:
    """Case 2 over the medium arc at the published noise/floor ladder."""
    records = []
    for alpha, floor in NOISE_LADDER:
        cfg = replace(config, case="case2", gamma="medium", gamma_arcs=None,
                      noise=NoiseSpec(alpha_percent=alpha, seed=config.noise.seed,
                                      eig_floor=floor))
        records.append(record_from_run(cfg, run_pipeline(cfg)))
    return records


CSV_HEADER = ("case,gamma,n_data,n_recon,min_det,cos2theta_error,"
              "sin2theta_error,sigma_error,alpha_percent,noise_seed,eig_floor")

_CSV_FLOATS = ("min_det", "cos2theta_error", "sin2theta_error", "sigma_error",
               "alpha_percent", "eig_floor")


def records_to_csv(records: list[ExperimentRecord]) -> str:
    """Byte-stable table: runtimes are excluded, every float at 17 digits."""
    lines = [CSV_HEADER]
    for r in records:
        fields = {name: f"{getattr(r, name):.17g}" for name in _CSV_FLOATS}
        lines.append(",".join((
            r.case, r.gamma, str(r.n_data), str(r.n_recon), fields["min_det"],
            fields["cos2theta_error"], fields["sin2theta_error"],
            fields["sigma_error"], fields["alpha_percent"], str(r.noise_seed),
            fields["eig_floor"])))
    return "\n".join(lines) + "\n"


_TABLE_COLUMNS = (
    ("case", lambda r: r.case),
    ("gamma", lambda r: r.gamma),
    ("n_data", lambda r: str(r.n_data)),
    ("n_recon", lambda r: str(r.n_recon)),
    ("min_det", lambda r: f"{r.min_det:.3e}"),
    ("cos2t_err", lambda r: f"{r.cos2theta_error:.4f}"),
    ("sin2t_err", lambda r: f"{r.sin2theta_error:.4f}"),
    ("sigma_err", lambda r: f"{r.sigma_error:.4f}"),
    ("alpha%", lambda r: f"{r.alpha_percent:g}"),
    ("seed", lambda r: str(r.noise_seed)),
    ("floor", lambda r: f"{r.eig_floor:g}"),
    ("fwd_s", lambda r: f"{r.forward_seconds:.2f}"),
    ("rec_s", lambda r: f"{r.recon_seconds:.2f}"),
)


def render_table(records: list[ExperimentRecord]) -> str:
    """Aligned plain-text rendering, runtimes included."""
    cells = [[name for name, _ in _TABLE_COLUMNS]]
    cells += [[fmt(r) for _, fmt in _TABLE_COLUMNS] for r in records]
    widths = [max(len(row[k]) for row in cells) for k in range(len(_TABLE_COLUMNS))]
    out = []
    for row in cells:
        out.append("  ".join(cell.rjust(w) for cell, w in zip(row, widths)))
    return "\n".join(out) + "\n"
