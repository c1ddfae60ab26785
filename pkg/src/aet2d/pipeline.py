"""End-to-end experiment driver: synthesize, corrupt, reconstruct.

Data is synthesized on one refinement of the reconstruction mesh, so every
reconstruction node coincides with a data node and the nodal transfer between
the two grids is an exact pickup.  Noise and the eigenvalue floor are applied
after the transfer, to the matrix the reconstruction actually consumes; a
noiseless run touches neither.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError, ParameterError
from .fem import ScalarField, solve_mixed
from .forward import (
    CASE1,
    CASE2,
    PowerDensity,
    TestCaseConductivity,
    constant_conductivity,
    coordinate_bcs,
    power_density,
    transfer,
    true_theta,
)
from .mesh import GAMMA_PRESETS, BoundarySpec, Mesh, build_disk_mesh, refine, tag_boundary
from .noise import NoiseSpec, clamp_eigenvalues, perturb, symmetrize
from .recon import ReconResult, boundary_theta, run_algorithm1

_CASE_NAMES = ("case1", "case2", "constant")


@dataclass(frozen=True)
class RunConfig:
    """Everything a run depends on; validated on construction.

    `gamma` names a preset unless `gamma_arcs` gives explicit intervals, in
    which case the name is kept only as a label for records.  `refine_levels`
    counts extra refinements of the reconstruction mesh; the data mesh is
    always one refinement finer.  `unwrap_arcs` of None selects automatic
    unwrapping of the boundary angle.
    """

    case: str = "case1"
    constant_value: float = 2.0
    gamma: str = "medium"
    gamma_arcs: tuple[tuple[float, float], ...] | None = None
    target_h: float = 0.03
    refine_levels: int = 0
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    eps_d: float = 1e-14
    unwrap_arcs: tuple[tuple[float, float], ...] | None = None
    tol: float = 1e-10
    max_iter: int = 20_000

    def __post_init__(self):
        if self.case not in _CASE_NAMES:
            raise ParameterError(f"unknown conductivity case {self.case!r}")
        if self.case == "constant" and not self.constant_value > 0.0:
            raise ParameterError("constant conductivity must be positive")
        if self.gamma_arcs is None and self.gamma not in GAMMA_PRESETS:
            raise ParameterError(f"unknown boundary preset {self.gamma!r}")
        if not 0.0 < self.target_h <= 1.0:
            raise ParameterError("target_h must lie in (0, 1]")
        if not 0 <= int(self.refine_levels) <= 6:
            raise ParameterError("refine_levels must lie in 0..6")
        if not isinstance(self.noise, NoiseSpec):
            raise ParameterError("noise must be a NoiseSpec")
        if not self.eps_d > 0.0:
            raise ParameterError("eps_d must be positive")
        if not self.tol > 0.0:
            raise ParameterError("solver tolerance must be positive")
        if self.max_iter < 1:
            raise ParameterError("max_iter must be at least 1")
        if self.gamma_arcs is not None:
            object.__setattr__(self, "gamma_arcs",
                               tuple((float(a), float(b)) for a, b in self.gamma_arcs))
            BoundarySpec(self.gamma_arcs)
        if self.unwrap_arcs is not None:
            object.__setattr__(self, "unwrap_arcs",
                               tuple((float(a), float(b)) for a, b in self.unwrap_arcs))

    def boundary_spec(self) -> BoundarySpec:
        if self.gamma_arcs is not None:
            return BoundarySpec(self.gamma_arcs)
        return GAMMA_PRESETS[self.gamma]

    def conductivity(self) -> TestCaseConductivity:
        if self.case == "case1":
            return CASE1
        if self.case == "case2":
            return CASE2
        return constant_conductivity(self.constant_value)


@dataclass(frozen=True)
class ForwardData:
    """Synthesized inputs for one reconstruction, on the reconstruction mesh.

    `theta_flagged` lists nodes where the angle truth is undefined (degenerate
    gradient); it is empty for the shipped boundary conditions.
    """

    recon_mesh: Mesh
    n_data: int
    sigma_true: ScalarField
    theta_true: ScalarField
    H: PowerDensity
    theta_flagged: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.intp))


def _tangency_override(mesh: Mesh, u_rim: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Exact angle truth on the no-flux arc: the gradient is tangent there.

    Zero normal flux leaves only the tangential component, so the angle at an
    uncontrolled rim node is the tangent direction, oriented by the sign of
    the tangential derivative of the potential.  Near a rim stagnation point
    that sign is not resolvable and the averaged-gradient value is kept; it
    also bridges the genuine pi jump the angle makes there.  Returns the node
    ids that were overridden.
    """
    loop = mesh.boundary_loop
    off_gamma = ~np.isin(loop, mesh.dirichlet_nodes)
    if not off_gamma.any():
        return np.empty(0, dtype=np.intp)
    u_loop = u_rim[loop]
    ahead = np.roll(u_loop, -1) - u_loop
    behind = u_loop - np.roll(u_loop, 1)
    du = ahead + behind
    # a node straddling a tangential extremum of u reports disagreeing
    # one-sided slopes; orienting the tangent there is a coin flip that
    # can derail the boundary unwrap, so such nodes keep the data value
    scale = np.median(np.abs(du[off_gamma]))
    sure = (off_gamma & (np.abs(du) > 0.05 * scale)
            & (np.sign(ahead) == np.sign(behind)))
    if not sure.any():
        return np.empty(0, dtype=np.intp)
    t = np.arctan2(mesh.vertices[loop[sure], 1], mesh.vertices[loop[sure], 0])
    s = np.sign(du[sure])
    tangent_angle = np.arctan2(s * np.cos(t), -s * np.sin(t))
    tangent_angle[tangent_angle <= -np.pi] = np.pi
    theta[loop[sure]] = tangent_angle
    return loop[sure]


def base_mesh(config: RunConfig) -> Mesh:
    """The tagged reconstruction mesh the config describes."""
    mesh = build_disk_mesh(config.target_h)
    for _ in range(int(config.refine_levels)):
        mesh = refine(mesh)
    return tag_boundary(mesh, config.boundary_spec())


def forward_stage(config: RunConfig) -> ForwardData:
    """Solve the two boundary problems on the data mesh and pull back the data.

    The matrix components and the angle truth travel to the reconstruction
    mesh by nodal transfer (exact, since the grids are nested); the
    conductivity truth is re-evaluated there in closed form.
    """
    recon_mesh = base_mesh(config)
    data_mesh = refine(recon_mesh)

    case = config.conductivity()
    sigma_data = case.on_mesh(data_mesh)
    f1, f2 = coordinate_bcs(data_mesh)
    u1 = solve_mixed(data_mesh, sigma_data, f1, tol=config.tol, max_iter=config.max_iter)
    u2 = solve_mixed(data_mesh, sigma_data, f2, tol=config.tol, max_iter=config.max_iter)

    H_data = power_density(data_mesh, sigma_data, u1, u2, config.eps_d)
    theta_data, flagged = true_theta(data_mesh, u1)

    h11, h12, h22 = (transfer(c, recon_mesh) for c in (H_data.h11, H_data.h12, H_data.h22))
    H = PowerDensity(h11, h12, h22, eps_d=config.eps_d)

    # the angle cannot be averaged across its branch cut, its cosine and
    # sine can; on nested grids the pickup keeps them exactly unit-norm
    cos_t = transfer(ScalarField(data_mesh, np.cos(theta_data.values)), recon_mesh)
    sin_t = transfer(ScalarField(data_mesh, np.sin(theta_data.values)), recon_mesh)
    theta = np.arctan2(sin_t.values, cos_t.values)
    theta[theta <= -np.pi] = np.pi

    u1_rim = transfer(u1, recon_mesh).values
    overridden = _tangency_override(recon_mesh, u1_rim, theta)

    flagged = flagged[flagged < recon_mesh.n_vertices]
    return ForwardData(
        recon_mesh=recon_mesh,
        n_data=data_mesh.n_vertices,
        sigma_true=case.on_mesh(recon_mesh),
        theta_true=ScalarField(recon_mesh, theta),
        H=H,
        theta_flagged=np.setdiff1d(flagged, overridden),
    )


def apply_noise(H: PowerDensity, spec: NoiseSpec) -> PowerDensity:
    """Corruption and regularization as one stage.

    Noiseless data passes through untouched; the eigenvalue floor exists to
    repair what the noise broke, so flooring exact data would only bias it.
    A positive alpha with a zero floor is allowed and means deliberate
    under-regularization.
    """
    if spec.alpha_percent == 0.0:
        return H
    H = symmetrize(perturb(H, spec))
    if spec.eig_floor > 0.0:
        H = clamp_eigenvalues(H, spec.eig_floor)
    return H


def recon_stage(config: RunConfig, fwd: ForwardData) -> ReconResult:
    """Corrupt per config, rebuild boundary data from the truth, reconstruct."""
    mesh = fwd.recon_mesh
    boundary = mesh.boundary_nodes
    if np.isin(fwd.theta_flagged, boundary).any():
        raise NumericalError("angle truth is undefined on reconstruction boundary nodes")

    H = apply_noise(fwd.H, config.noise)
    theta_raw = {int(n): float(fwd.theta_true.values[n]) for n in boundary}
    theta_bc = boundary_theta(mesh, theta_raw, config.unwrap_arcs)
    sigma_bc = {int(n): float(fwd.sigma_true.values[n]) for n in boundary}
    return run_algorithm1(mesh, H, theta_bc, sigma_bc,
                          truth=(fwd.theta_true, fwd.sigma_true),
                          tol=config.tol, max_iter=config.max_iter)


@dataclass(frozen=True)
class PipelineResult:
    forward: ForwardData
    recon: ReconResult
    forward_seconds: float
    recon_seconds: float


def run_pipeline(config: RunConfig) -> PipelineResult:
    """Both stages with wall-clock accounting."""
    t0 = time.perf_counter()
    fwd = forward_stage(config)
    t1 = time.perf_counter()
    result = recon_stage(config, fwd)
    t2 = time.perf_counter()
    return PipelineResult(fwd, result, t1 - t0, t2 - t1)
