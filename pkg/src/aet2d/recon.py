"""Angle and conductivity reconstruction from power-density data.

The matrix data is reduced to three element vector fields and the
determinant root.  The gradient angle of the first potential solves a
Poisson problem driven by those fields; the log conductivity solves a
second one whose right side rotates the same fields by twice the angle.
Both solves need Dirichlet data: the angle on the whole boundary and the
conductivity on the whole boundary.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import log
from typing import Sequence

import numpy as np

from .errors import ContractError, DomainError
from .fem import (
    ScalarField,
    SolveInfo,
    VectorField,
    _basis_geometry,
    element_gradient,
    l2_norm,
    l2_relative_error,
    solve_poisson_weak_div,
)
from .forward import PowerDensity, det_diagnostics
from .mesh import TWO_PI, Mesh


def _rot90(v: np.ndarray) -> np.ndarray:
    """Counterclockwise quarter turn of stacked 2-vectors."""
    return np.stack([-v[:, 1], v[:, 0]], axis=1)


def angle_gradient(mesh: Mesh, theta: ScalarField) -> VectorField:
    """Element gradient of an angle field, blind to the 2 pi branch cut.

    Differentiating principal-range values across the cut manufactures a
    spurious gradient of order 2 pi / h along it.  Folding each corner value
    onto the branch of its element's first corner changes nothing where the
    field is continuous and removes the cut where it is not.  Corners that
    genuinely spread more than pi within one element stay ambiguous; the
    folded reading is kept.
    """
    if theta.mesh is not mesh:
        raise ContractError("field lives on a different mesh")
    areas, b, c = _basis_geometry(mesh)
    v = theta.values[mesh.triangles]
    d = v - v[:, :1]
    v = v[:, :1] + (d - TWO_PI * np.round(d / TWO_PI))
    gx = (v * b).sum(axis=1) / (2.0 * areas)
    gy = (v * c).sum(axis=1) / (2.0 * areas)
    return VectorField(mesh, np.column_stack((gx, gy)))


@dataclass(frozen=True)
class TransferFields:
    """Element vector fields extracted from the data matrix.

    `v12` vanishes identically for the orthonormalization chosen here and
    is not stored.  `f` is the field whose divergence drives the angle
    solve; it equals half of (-v21 - rot90(grad log d)).
    """

    d: ScalarField
    v11: VectorField
    v21: VectorField
    v22: VectorField
    f: VectorField

    def __post_init__(self) -> None:
        mesh = self.d.mesh
        for v in (self.v11, self.v21, self.v22, self.f):
            if v.mesh is not mesh:
                raise ContractError("transfer fields live on different meshes")

    @property
    def mesh(self) -> Mesh:
        return self.d.mesh


def vector_fields(H: PowerDensity) -> TransferFields:
    """Reduce the matrix data to the fields the reconstruction needs.

    Rational and logarithmic compositions are formed nodally first and
    differentiated once; differentiating factors separately would amplify
    noise through the product rule.  The first-diagonal-over-root
    prefactor of `v21` is evaluated at element centroids, where the
    gradient it multiplies lives.
    """
    mesh = H.mesh
    h11, h12, _ = H.components()
    d = H.d.values
    bad = (h11 <= 0.0) | (d <= 0.0)
    if bad.any():
        raise DomainError(
            f"data matrix not usable at nodes {np.flatnonzero(bad)[:8].tolist()}: "
            "first diagonal entry or determinant root is nonpositive")

    def grad(values: np.ndarray) -> np.ndarray:
        return element_gradient(mesh, ScalarField(mesh, values)).vectors

    log_h11 = np.log(h11)
    log_d = np.log(d)
    v11 = -0.5 * grad(log_h11)
    prefactor = (h11 / d)[mesh.triangles].mean(axis=1)
    v21 = -prefactor[:, None] * grad(h12 / h11)
    v22 = grad(0.5 * log_h11 - log_d)
    f = 0.5 * (-v21 - _rot90(grad(log_d)))
    return TransferFields(
        d=H.d,
        v11=VectorField(mesh, v11),
        v21=VectorField(mesh, v21),
        v22=VectorField(mesh, v22),
        f=VectorField(mesh, f))


def boundary_theta(mesh: Mesh, raw: dict[int, float],
                   intervals: Sequence[tuple[float, float]] | None = None) -> dict[int, float]:
    """Continuous representative of principal-range angles on the boundary.

    `raw` must hold a value in [-pi, pi] for every boundary node.  Without
    `intervals` the loop is walked counterclockwise and each jump larger
    than pi folds the running branch by 2 pi; a jump of exactly pi is
    directionally ambiguous and raises.  With `intervals`, 2 pi is added
    at exactly the nodes whose boundary position angle falls in one of the
    closed windows, which reproduces a hand-picked unwrapping rule.
    """
    loop = mesh.boundary_loop
    missing = [int(i) for i in loop if int(i) not in raw]
    if missing:
        raise ContractError(f"angle data missing at boundary nodes {missing[:8]}")
    values = np.array([raw[int(i)] for i in loop], dtype=float)
    if not np.all(np.isfinite(values)) or np.abs(values).max() > np.pi + 1e-9:
        raise ContractError("raw angles must lie in the principal range")

    if intervals is None:
        jumps = np.diff(values)
        if np.any(np.abs(jumps) == np.pi):
            raise ContractError(
                "consecutive angle jump of exactly pi is ambiguous; "
                "pass explicit unwrap intervals")
        folds = TWO_PI * ((jumps < -np.pi).astype(float) - (jumps > np.pi))
        unwrapped = values + np.concatenate([[0.0], np.cumsum(folds)])
    else:
        xy = mesh.vertices[loop]
        t = np.arctan2(xy[:, 1], xy[:, 0])
        lift = np.zeros(len(loop), dtype=bool)
        for a, b in intervals:
            width = np.mod(b - a, TWO_PI)
            lift |= np.mod(t - a, TWO_PI) <= width
        unwrapped = values + TWO_PI * lift

    return {int(i): float(v) for i, v in zip(loop, unwrapped)}


def reconstruct_theta(mesh: Mesh, fields: TransferFields, boundary: dict[int, float],
                      *, tol: float = 1e-10, max_iter: int = 20000,
                      return_info: bool = False):
    """Angle field from its boundary trace and the divergence of `fields.f`."""
    if fields.mesh is not mesh:
        raise ContractError("transfer fields live on a different mesh")
    return solve_poisson_weak_div(mesh, fields.f, boundary,
                                  tol=tol, max_iter=max_iter, return_info=return_info)


def sigma_rhs(theta: ScalarField, fields: TransferFields) -> VectorField:
    """Right-hand-side field for the log-conductivity solve.

    The base field combines the transfer fields through the reflection
    U = diag(1, -1); the angle enters only through cos/sin of its double,
    sampled at element centroids where the vector fields live.
    """
    mesh = fields.mesh
    if theta.mesh is not mesh:
        raise ContractError("angle field lives on a different mesh")
    dv = fields.v11.vectors - fields.v22.vectors
    v21 = fields.v21.vectors
    base = np.stack([dv[:, 0] + v21[:, 1], -dv[:, 1] + v21[:, 0]], axis=1)
    doubled = 2.0 * theta.values[mesh.triangles].mean(axis=1)
    cos2 = np.cos(doubled)[:, None]
    sin2 = np.sin(doubled)[:, None]
    return VectorField(mesh, cos2 * base + sin2 * _rot90(base))


def reconstruct_sigma(mesh: Mesh, G: VectorField, sigma_boundary: dict[int, float],
                      *, tol: float = 1e-10, max_iter: int = 20000,
                      return_info: bool = False):
    """Conductivity from its boundary trace and the divergence of `G`.

    The solve runs in log space, so the returned field is positive by
    construction whatever the data quality.
    """
    bad = [n for n, v in sigma_boundary.items() if not v > 0.0]
    if bad:
        raise DomainError(f"boundary conductivity must be positive, offending nodes {bad[:8]}")
    log_bc = {n: log(v) for n, v in sigma_boundary.items()}
    solved = solve_poisson_weak_div(mesh, G, log_bc,
                                    tol=tol, max_iter=max_iter, return_info=True)
    w, info = solved
    sigma = ScalarField(mesh, np.exp(w.values))
    return (sigma, info) if return_info else sigma


@dataclass(frozen=True)
class ReconDiagnostics:
    min_det: float
    d_clamp_count: int
    eig_floor_count: int
    theta_solve: SolveInfo
    sigma_solve: SolveInfo


@dataclass(frozen=True)
class ReconMetrics:
    """L2 errors against supplied ground truth.

    The angle is compared through cos and sin of its double, which are
    blind to 2 pi branch choices.  Errors are relative; when a truth
    component vanishes identically (sin of a zero angle field, say) the
    absolute L2 norm of the difference is reported instead.
    """

    cos2theta_error: float
    sin2theta_error: float
    sigma_error: float


def _l2_error(mesh: Mesh, got: np.ndarray, want: np.ndarray) -> float:
    # a reference norm this small is itself roundoff (the compared fields
    # are O(1) by construction); report the absolute error instead of a
    # ratio of noise
    reference = ScalarField(mesh, want)
    if l2_norm(reference) <= 1e-12:
        return l2_norm(ScalarField(mesh, got - want))
    return l2_relative_error(ScalarField(mesh, got), reference)


@dataclass(frozen=True)
class ReconResult:
    theta: ScalarField
    sigma: ScalarField
    fields: TransferFields
    diagnostics: ReconDiagnostics
    metrics: ReconMetrics | None


def run_algorithm1(mesh: Mesh, H: PowerDensity, theta_boundary: dict[int, float],
                   sigma_boundary: dict[int, float],
                   truth: tuple[ScalarField, ScalarField] | None = None,
                   *, tol: float = 1e-10, max_iter: int = 20000) -> ReconResult:
    """Full reconstruction: fields, angle solve, conductivity solve.

    Low-determinant regions are assumed handled upstream (the data's root
    floor and any eigenvalue regularization); here they only show up in
    the diagnostics, never as an abort.
    """
    if H.mesh is not mesh:
        raise ContractError("data lives on a different mesh")
    fields = vector_fields(H)
    theta, theta_info = reconstruct_theta(mesh, fields, theta_boundary,
                                          tol=tol, max_iter=max_iter, return_info=True)
    G = sigma_rhs(theta, fields)
    sigma, sigma_info = reconstruct_sigma(mesh, G, sigma_boundary,
                                          tol=tol, max_iter=max_iter, return_info=True)
    min_det, _ = det_diagnostics(H)
    diagnostics = ReconDiagnostics(
        min_det=min_det,
        d_clamp_count=int(H.d_clamp_nodes.size),
        eig_floor_count=int(H.eig_floor_nodes.size),
        theta_solve=theta_info,
        sigma_solve=sigma_info)

    metrics = None
    if truth is not None:
        theta_true, sigma_true = truth
        doubled = 2.0 * theta.values
        doubled_true = 2.0 * theta_true.values
        metrics = ReconMetrics(
            cos2theta_error=_l2_error(mesh, np.cos(doubled), np.cos(doubled_true)),
            sin2theta_error=_l2_error(mesh, np.sin(doubled), np.sin(doubled_true)),
            sigma_error=_l2_error(mesh, sigma.values, sigma_true.values))
    return ReconResult(theta=theta, sigma=sigma, fields=fields,
                       diagnostics=diagnostics, metrics=metrics)
