"""Conductivity imaging from interior power densities on the unit disk.

The package synthesizes power-density data for a conductivity equation under
partial boundary control, corrupts it with seeded multiplicative noise, and
reconstructs the conductivity through two Poisson solves driven by the data's
transfer-matrix vector fields.
"""

from .fem import (
    ScalarField,
    SolveInfo,
    VectorField,
    assemble_conductivity,
    element_gradient,
    l2_norm,
    l2_relative_error,
    project_to_nodes,
    solve_mixed,
    solve_poisson_weak_div,
)
from .forward import (
    CASE1,
    CASE2,
    PowerDensity,
    TestCaseConductivity,
    constant_conductivity,
    coordinate_bcs,
    det_diagnostics,
    power_density,
    transfer,
    true_theta,
)
from .mesh import (
    BoundarySpec,
    DIRICHLET,
    GAMMA_FULL,
    GAMMA_LARGE,
    GAMMA_MEDIUM,
    GAMMA_PRESETS,
    GAMMA_SMALL,
    Mesh,
    NEUMANN,
    build_disk_mesh,
    read_mesh,
    refine,
    tag_boundary,
    write_mesh,
)
from .metrics import (
    ExperimentRecord,
    noise_sweep,
    record_from_run,
    records_to_csv,
    render_table,
    table_gamma_sweep,
    table_mesh_sweep,
)
from .noise import (
    NoiseSpec,
    clamp_eigenvalues,
    floor_symmetric_2x2,
    perturb,
    symmetrize,
)
from .pipeline import (
    ForwardData,
    PipelineResult,
    RunConfig,
    apply_noise,
    forward_stage,
    recon_stage,
    run_pipeline,
)
from .recon import (
    ReconDiagnostics,
    ReconMetrics,
    ReconResult,
    TransferFields,
    angle_gradient,
    boundary_theta,
    reconstruct_sigma,
    reconstruct_theta,
    run_algorithm1,
    sigma_rhs,
    vector_fields,
)

__version__ = "0.1.0"

__all__ = [
    "BoundarySpec",
    "CASE1",
    "CASE2",
    "DIRICHLET",
    "ExperimentRecord",
    "ForwardData",
    "GAMMA_FULL",
    "GAMMA_LARGE",
    "GAMMA_MEDIUM",
    "GAMMA_PRESETS",
    "GAMMA_SMALL",
    "Mesh",
    "NEUMANN",
    "NoiseSpec",
    "PipelineResult",
    "PowerDensity",
    "ReconDiagnostics",
    "ReconMetrics",
    "ReconResult",
    "RunConfig",
    "TransferFields",
    "ScalarField",
    "SolveInfo",
    "TestCaseConductivity",
    "VectorField",
    "angle_gradient",
    "apply_noise",
    "assemble_conductivity",
    "boundary_theta",
    "build_disk_mesh",
    "clamp_eigenvalues",
    "constant_conductivity",
    "coordinate_bcs",
    "det_diagnostics",
    "element_gradient",
    "floor_symmetric_2x2",
    "forward_stage",
    "l2_norm",
    "l2_relative_error",
    "noise_sweep",
    "perturb",
    "power_density",
    "project_to_nodes",
    "read_mesh",
    "recon_stage",
    "record_from_run",
    "records_to_csv",
    "reconstruct_sigma",
    "reconstruct_theta",
    "refine",
    "render_table",
    "run_algorithm1",
    "run_pipeline",
    "sigma_rhs",
    "solve_mixed",
    "solve_poisson_weak_div",
    "symmetrize",
    "table_gamma_sweep",
    "table_mesh_sweep",
    "tag_boundary",
    "transfer",
    "true_theta",
    "vector_fields",
    "write_mesh",
]
