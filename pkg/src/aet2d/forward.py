"""Interior power-density data synthesized from boundary-driven potentials.

Two potentials, driven by the coordinate functions on the controlled arc,
are combined into the symmetric matrix field with entries
sigma * grad(u_i) . grad(u_j).  This module evaluates that field and its
determinant diagnostics, extracts the gradient angle of the first
potential, and moves nodal fields between meshes of different resolution.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.spatial import cKDTree

from .errors import ContractError, DomainError, ParameterError
from .fem import ScalarField, _basis_geometry, element_gradient, project_to_nodes
from .mesh import Mesh

# barycentric slack below which a point counts as inside a triangle
_CONTAIN_TOL = 1e-12


@dataclass(frozen=True)
class TestCaseConductivity:
    """Closed-form conductivity phantom with a guaranteed value range.

    `bounds` is checked on every mesh evaluation so a typo in a phantom
    definition fails loudly instead of producing a plausible field.
    """

    label: str
    bounds: tuple[float, float]
    evaluate: Callable[[np.ndarray, np.ndarray], np.ndarray]

    def __call__(self, x, y) -> np.ndarray:
        return self.evaluate(np.asarray(x, dtype=float), np.asarray(y, dtype=float))

    def on_mesh(self, mesh: Mesh) -> ScalarField:
        values = self(mesh.vertices[:, 0], mesh.vertices[:, 1])
        lo, hi = self.bounds
        if values.min() < lo - 1e-9 or values.max() > hi + 1e-9:
            raise DomainError(
                f"conductivity '{self.label}' leaves [{lo}, {hi}]: "
                f"range [{values.min():.6g}, {values.max():.6g}]")
        return ScalarField(mesh, values)


def _single_bump(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return 1.0 + np.exp(-5.0 * (x * x + y * y))


def _three_bumps(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return (1.0
            + np.exp(-20.0 * ((x + 0.5) ** 2 + y * y))
            + np.exp(-20.0 * (x * x + (y + 0.5) ** 2))
            + np.exp(-50.0 * ((x - 0.5) ** 2 + (y - 0.5) ** 2)))


# centered inclusion; off-center inclusions with a smaller feature scale
CASE1 = TestCaseConductivity("case1", (1.0, 4.0), _single_bump)
CASE2 = TestCaseConductivity("case2", (1.0, 4.0), _three_bumps)


def constant_conductivity(value: float) -> TestCaseConductivity:
    if not np.isfinite(value) or value <= 0.0:
        raise ParameterError(f"conductivity level must be positive, got {value}")

    def evaluate(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.full(np.broadcast(x, y).shape, value, dtype=float)

    return TestCaseConductivity("constant", (value, value), evaluate)


def coordinate_bcs(mesh: Mesh) -> tuple[dict[int, float], dict[int, float]]:
    """Dirichlet data (x, y) restricted to the controlled boundary nodes."""
    nodes = mesh.dirichlet_nodes
    f1 = {int(i): float(mesh.vertices[i, 0]) for i in nodes}
    f2 = {int(i): float(mesh.vertices[i, 1]) for i in nodes}
    return f1, f2


@dataclass(frozen=True)
class PowerDensity:
    """Symmetric 2x2 matrix field stored by its three nodal components.

    The square-root determinant `d` is floored at `eps_d`; nodes where the
    floor fired are recorded in `d_clamp_nodes` so silent data degradation
    stays visible.  `eig_floor_nodes` is filled by the noise stage when
    eigenvalue regularization modifies entries, empty otherwise.
    """

    h11: ScalarField
    h12: ScalarField
    h22: ScalarField
    eps_d: float = 1e-14
    eig_floor_nodes: np.ndarray = field(
        default_factory=lambda: np.empty(0, dtype=np.intp))

    d: ScalarField = field(init=False)
    d_clamp_nodes: np.ndarray = field(init=False)

    def __post_init__(self) -> None:
        mesh = self.h11.mesh
        if self.h12.mesh is not mesh or self.h22.mesh is not mesh:
            raise ContractError("power density components live on different meshes")
        if not (np.isfinite(self.eps_d) and self.eps_d > 0.0):
            raise ParameterError(f"eps_d must be positive, got {self.eps_d}")
        det = self.h11.values * self.h22.values - self.h12.values ** 2
        floor = self.eps_d ** 2
        definite = det >= floor
        bad = definite & ((self.h11.values <= 0.0) | (self.h22.values <= 0.0))
        if bad.any():
            raise DomainError(
                "nonpositive diagonal despite positive determinant at nodes "
                f"{np.flatnonzero(bad)[:8].tolist()}")
        clamped = np.flatnonzero(~definite)
        clamped.setflags(write=False)
        object.__setattr__(self, "d_clamp_nodes", clamped)
        object.__setattr__(self, "d",
                           ScalarField(mesh, np.sqrt(np.maximum(det, floor))))
        hits = np.array(self.eig_floor_nodes, dtype=np.intp)
        hits.setflags(write=False)
        object.__setattr__(self, "eig_floor_nodes", hits)

    @property
    def mesh(self) -> Mesh:
        return self.h11.mesh

    def determinant(self) -> np.ndarray:
        """Raw nodal determinant, no floor applied."""
        return self.h11.values * self.h22.values - self.h12.values ** 2

    def components(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return self.h11.values, self.h12.values, self.h22.values


def power_density(mesh: Mesh, sigma: ScalarField, u1: ScalarField,
                  u2: ScalarField, eps_d: float = 1e-14) -> PowerDensity:
    """Nodal matrix data sigma * grad(u_i).grad(u_j) from two potentials.

    Gradients are constant per element; sigma is sampled at the element
    centroid, one value per constant-gradient cell.  Element products are
    carried to nodes by area-weighted projection.
    """
    for f in (sigma, u1, u2):
        if f.mesh is not mesh:
            raise ContractError("sigma and potentials must live on the given mesh")
    g1 = element_gradient(mesh, u1).vectors
    g2 = element_gradient(mesh, u2).vectors
    sig = sigma.values[mesh.triangles].mean(axis=1)
    e11 = sig * (g1 * g1).sum(axis=1)
    e12 = sig * (g1 * g2).sum(axis=1)
    e22 = sig * (g2 * g2).sum(axis=1)
    return PowerDensity(
        ScalarField(mesh, project_to_nodes(mesh, e11)),
        ScalarField(mesh, project_to_nodes(mesh, e12)),
        ScalarField(mesh, project_to_nodes(mesh, e22)),
        eps_d=eps_d)


def true_theta(mesh: Mesh, u1: ScalarField) -> tuple[ScalarField, np.ndarray]:
    """Angle of the first potential's gradient, carried to nodes.

    Unit directions are averaged componentwise and the angle re-extracted,
    which is stable across the branch cut at pi; averaging raw angles is
    not.  Returns the nodal angle field in (-pi, pi] together with the
    nodes where the direction is undefined (a zero-gradient element in the
    star, or cancellation in the average); flagged nodes carry angle 0.
    """
    if u1.mesh is not mesh:
        raise ContractError("potential must live on the given mesh")
    g = element_gradient(mesh, u1).vectors
    norms = np.hypot(g[:, 0], g[:, 1])
    # a gradient below the roundoff bound of its own assembly has no
    # trustworthy direction; the bound scales with the nodal magnitudes
    areas, b, c = _basis_geometry(mesh)
    mags = np.abs(u1.values[mesh.triangles])
    noise_floor = 1e-13 * (mags * np.hypot(b, c)).sum(axis=1) / (2.0 * areas)
    degenerate = norms <= noise_floor
    unit = np.zeros_like(g)
    ok = ~degenerate
    unit[ok] = g[ok] / norms[ok, None]
    averaged = project_to_nodes(mesh, unit)

    flagged = np.zeros(mesh.n_vertices, dtype=bool)
    flagged[np.unique(mesh.triangles[degenerate])] = True
    flagged |= np.hypot(averaged[:, 0], averaged[:, 1]) <= 1e-12

    theta = np.arctan2(averaged[:, 1], averaged[:, 0])
    theta[theta <= -np.pi] = np.pi
    theta[flagged] = 0.0
    return ScalarField(mesh, theta), np.flatnonzero(flagged)


def _barycentric(corners: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Barycentric coordinates of `points` in triangles `corners` (..., 3, 2)."""
    a = corners[..., 0, :]
    v0 = corners[..., 1, :] - a
    v1 = corners[..., 2, :] - a
    v2 = points - a
    denom = v0[..., 0] * v1[..., 1] - v0[..., 1] * v1[..., 0]
    b1 = (v2[..., 0] * v1[..., 1] - v2[..., 1] * v1[..., 0]) / denom
    b2 = (v0[..., 0] * v2[..., 1] - v0[..., 1] * v2[..., 0]) / denom
    return np.stack([1.0 - b1 - b2, b1, b2], axis=-1)


def transfer(source: ScalarField, target: Mesh) -> ScalarField:
    """Evaluate the piecewise-linear interpolant of `source` at target nodes.

    Containing triangles are found through escalating nearest-centroid
    candidate sets.  Target nodes outside the source triangulation (the
    sliver between two polygonal approximations of the circle) snap onto
    the best candidate by clamping barycentric coordinates to the simplex.
    A target node that coincides with a source vertex picks up that nodal
    value exactly, so transfers between nested meshes are lossless.
    """
    mesh = source.mesh
    if target is mesh:
        return ScalarField(target, source.values.copy())
    points = target.vertices
    corners = mesh.vertices[mesh.triangles]
    tree = cKDTree(corners.mean(axis=1))

    n = len(points)
    best_tri = np.zeros(n, dtype=np.intp)
    best_score = np.full(n, -np.inf)
    pending = np.arange(n)
    for k in (1, 4, 16, 64):
        kk = min(k, mesh.n_triangles)
        _, cand = tree.query(points[pending], k=kk)
        cand = np.asarray(cand).reshape(len(pending), kk)
        bary = _barycentric(corners[cand], points[pending][:, None, :])
        score = bary.min(axis=2)
        pick = score.argmax(axis=1)
        rows = np.arange(len(pending))
        better = score[rows, pick] > best_score[pending]
        upd = pending[better]
        best_score[upd] = score[rows, pick][better]
        best_tri[upd] = cand[rows, pick][better]
        pending = pending[best_score[pending] < -_CONTAIN_TOL]
        if pending.size == 0 or kk == mesh.n_triangles:
            break

    bary = _barycentric(corners[best_tri], points)
    outside = np.flatnonzero(best_score < -_CONTAIN_TOL)
    if outside.size:
        clamped = np.clip(bary[outside], 0.0, None)
        bary[outside] = clamped / clamped.sum(axis=1, keepdims=True)
    nodal = source.values[mesh.triangles[best_tri]]
    return ScalarField(target, (bary * nodal).sum(axis=1))


def det_diagnostics(H: PowerDensity) -> tuple[float, ScalarField]:
    """Minimum raw determinant and the nodal log-determinant field.

    The log argument is floored at eps_d^2 so collapsed regions render as
    a flat plateau instead of -inf.
    """
    det = H.determinant()
    log_det = np.log(np.maximum(det, H.eps_d ** 2))
    return float(det.min()), ScalarField(H.mesh, log_det)
