"""P1 finite-element machinery on disk triangulations.

Gradients of P1 functions are constant per triangle, so vector data lives on
elements and scalar data on vertices. The conductivity enters assembly through
vertex quadrature, which is exact for P1 sigma against the constant gradient
products. Dirichlet conditions are eliminated symmetrically so the free block
stays positive definite for conjugate gradients.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import (
    ContractError,
    DomainError,
    NumericalError,
    SingularSystemError,
)
from .mesh import Mesh, triangle_areas

# Below this many free unknowns a sparse direct factorization is cheaper and
# exact; above it the diagonally preconditioned CG takes over.
DIRECT_SOLVE_LIMIT = 3000


@dataclass(frozen=True)
class ScalarField:
    """One value per mesh vertex."""

    mesh: Mesh
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64).reshape(-1)
        if v.shape[0] != self.mesh.n_vertices:
            raise ContractError(
                f"expected {self.mesh.n_vertices} nodal values, got {v.shape[0]}")
        if not np.all(np.isfinite(v)):
            raise ContractError("nodal values must be finite")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class VectorField:
    """One constant 2-vector per triangle."""

    mesh: Mesh
    vectors: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=np.float64).reshape(-1, 2)
        if v.shape[0] != self.mesh.n_triangles:
            raise ContractError(
                f"expected {self.mesh.n_triangles} element vectors, got {v.shape[0]}")
        if not np.all(np.isfinite(v)):
            raise ContractError("element vectors must be finite")
        object.__setattr__(self, "vectors", v)


@dataclass
class SparseSpdSystem:
    """Symmetric stiffness matrix with optional Dirichlet constraints."""

    matrix: sp.csr_matrix
    rhs: np.ndarray
    constrained: np.ndarray
    constrained_values: np.ndarray


@dataclass(frozen=True)
class SolveInfo:
    method: str
    iterations: int
    relative_residual: float


def _basis_geometry(mesh: Mesh):
    """Per-triangle areas and the (b, c) coefficients with grad phi_i = (b_i, c_i)/(2A)."""
    p = mesh.vertices[mesh.triangles]
    x, y = p[..., 0], p[..., 1]
    b = np.stack((y[:, 1] - y[:, 2], y[:, 2] - y[:, 0], y[:, 0] - y[:, 1]), axis=1)
    c = np.stack((x[:, 2] - x[:, 1], x[:, 0] - x[:, 2], x[:, 1] - x[:, 0]), axis=1)
    return triangle_areas(mesh), b, c


# ---------------------------------------------------------------------------
# Assembly
# ---------------------------------------------------------------------------

def local_stiffness(coords: np.ndarray, sigma_vertices: np.ndarray) -> np.ndarray:
    """Element stiffness of one or many triangles.

    Parameters
    ----------
    coords : (..., 3, 2) vertex coordinates, counterclockwise.
    sigma_vertices : (..., 3) conductivity at the vertices; vertex quadrature
        reduces to scaling the constant-sigma matrix by the vertex mean.

    Returns
    -------
    (..., 3, 3) symmetric element matrices.
    """
    coords = np.asarray(coords, dtype=np.float64)
    sigma_vertices = np.asarray(sigma_vertices, dtype=np.float64)
    x, y = coords[..., 0], coords[..., 1]
    b = np.stack((y[..., 1] - y[..., 2], y[..., 2] - y[..., 0], y[..., 0] - y[..., 1]), axis=-1)
    c = np.stack((x[..., 2] - x[..., 1], x[..., 0] - x[..., 2], x[..., 1] - x[..., 0]), axis=-1)
    area = 0.5 * ((x[..., 1] - x[..., 0]) * (y[..., 2] - y[..., 0])
                  - (x[..., 2] - x[..., 0]) * (y[..., 1] - y[..., 0]))
    scale = sigma_vertices.mean(axis=-1) / (4.0 * area)
    return (b[..., :, None] * b[..., None, :]
            + c[..., :, None] * c[..., None, :]) * scale[..., None, None]


def assemble_conductivity(mesh: Mesh, sigma: ScalarField) -> SparseSpdSystem:
    """Assemble the stiffness matrix of -div(sigma grad u).

    Entries are integral sigma grad(phi_i).grad(phi_j) with sigma interpolated
    P1 and integrated by vertex quadrature. Row sums are zero before
    constraints (the pure-Neumann operator annihilates constants).

    Raises
    ------
    DomainError
        If sigma is not strictly positive at every node.
    """
    if sigma.mesh is not mesh:
        raise ContractError("sigma lives on a different mesh")
    if np.any(sigma.values <= 0.0):
        bad = np.flatnonzero(sigma.values <= 0.0)
        raise DomainError(f"sigma must be positive; offending nodes {bad[:10].tolist()}")
    local = local_stiffness(mesh.vertices[mesh.triangles], sigma.values[mesh.triangles])
    rows = np.repeat(mesh.triangles, 3, axis=1).ravel()
    cols = np.tile(mesh.triangles, (1, 3)).ravel()
    n = mesh.n_vertices
    matrix = sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    return SparseSpdSystem(matrix, np.zeros(n), np.empty(0, dtype=np.int64), np.empty(0))


def mass_matrix(mesh: Mesh) -> sp.csr_matrix:
    """Consistent P1 mass matrix (exact for products of P1 functions)."""
    areas = triangle_areas(mesh)
    local = np.array([[2.0, 1.0, 1.0], [1.0, 2.0, 1.0], [1.0, 1.0, 2.0]]) / 12.0
    local = local[None, :, :] * areas[:, None, None]
    rows = np.repeat(mesh.triangles, 3, axis=1).ravel()
    cols = np.tile(mesh.triangles, (1, 3)).ravel()
    n = mesh.n_vertices
    return sp.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()


# ---------------------------------------------------------------------------
# Linear solvers
# ---------------------------------------------------------------------------

def _pcg(A: sp.csr_matrix, rhs: np.ndarray, tol: float, max_iter: int):
    """Conjugate gradients with Jacobi preconditioning on an SPD matrix."""
    diag = A.diagonal()
    if np.any(diag <= 0.0):
        raise SingularSystemError("system diagonal has non-positive entries")
    inv_diag = 1.0 / diag
    bnorm = np.linalg.norm(rhs)
    if bnorm == 0.0:
        return np.zeros_like(rhs), 0
    x = np.zeros_like(rhs)
    r = rhs.copy()
    z = inv_diag * r
    p = z.copy()
    rz = float(r @ z)
    for it in range(1, max_iter + 1):
        Ap = A @ p
        pAp = float(p @ Ap)
        if pAp <= 0.0:
            raise SingularSystemError("matrix is not positive definite")
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        if np.linalg.norm(r) <= tol * bnorm:
            return x, it
        z = inv_diag * r
        rz_next = float(r @ z)
        p = z + (rz_next / rz) * p
        rz = rz_next
    raise NumericalError(
        f"conjugate gradients stalled: residual {np.linalg.norm(r) / bnorm:.3e} "
        f"(target {tol:.1e}) after {max_iter} iterations")


def _solve_constrained(system: SparseSpdSystem, tol: float, max_iter: int):
    """Eliminate constraints symmetrically, solve the free block, reassemble."""
    A, b = system.matrix, system.rhs
    n = A.shape[0]
    fixed, g = system.constrained, system.constrained_values
    free_mask = np.ones(n, dtype=bool)
    free_mask[fixed] = False
    free = np.flatnonzero(free_mask)

    x = np.zeros(n)
    x[fixed] = g
    if len(free) == 0:
        return x, SolveInfo("trivial", 0, 0.0)

    A_ff = A[free][:, free].tocsr()
    b_f = b[free] - A[free][:, fixed] @ g

    if len(free) < DIRECT_SOLVE_LIMIT:
        x_f = spla.spsolve(A_ff.tocsc(), b_f)
        iterations = 0
        method = "direct"
    else:
        x_f, iterations = _pcg(A_ff, b_f, tol, max_iter)
        method = "pcg"
    if not np.all(np.isfinite(x_f)):
        raise NumericalError("linear solve produced non-finite values")

    bnorm = np.linalg.norm(b_f)
    res = np.linalg.norm(A_ff @ x_f - b_f) / (bnorm if bnorm > 0 else 1.0)
    if res > 100.0 * max(tol, 1e-14):
        raise NumericalError(f"linear solve inaccurate: relative residual {res:.3e}")
    x[free] = x_f
    return x, SolveInfo(method, iterations, float(res))


def _check_boundary_map(mesh: Mesh, values: dict) -> tuple[np.ndarray, np.ndarray]:
    nodes = np.fromiter(values.keys(), dtype=np.int64, count=len(values))
    vals = np.fromiter(values.values(), dtype=np.float64, count=len(values))
    if not np.all(np.isfinite(vals)):
        raise ContractError("boundary values must be finite")
    rim = mesh.boundary_nodes
    member = np.isin(nodes, rim)
    if not member.all():
        raise ContractError(
            f"nodes {nodes[~member][:10].tolist()} are not boundary nodes")
    return nodes, vals


def solve_mixed(mesh: Mesh, sigma: ScalarField, dirichlet_values: dict,
                *, tol: float = 1e-10, max_iter: int = 20_000,
                return_info: bool = False):
    """Solve -div(sigma grad u) = 0 with u prescribed on part of the boundary.

    The no-flux condition on untagged boundary edges is natural: it needs no
    boundary terms, only the absence of constraints there.

    Parameters
    ----------
    dirichlet_values : dict
        Map from boundary node index to prescribed value. Must be non-empty.

    Returns
    -------
    ScalarField, or (ScalarField, SolveInfo) when return_info is set.
    """
    if not dirichlet_values:
        raise SingularSystemError(
            "no Dirichlet nodes: the pure-Neumann problem is singular")
    nodes, vals = _check_boundary_map(mesh, dirichlet_values)
    system = assemble_conductivity(mesh, sigma)
    system.constrained = nodes
    system.constrained_values = vals
    x, info = _solve_constrained(system, tol, max_iter)
    field = ScalarField(mesh, x)
    return (field, info) if return_info else field


def solve_poisson_weak_div(mesh: Mesh, F: VectorField, boundary_values: dict,
                           *, tol: float = 1e-10, max_iter: int = 20_000,
                           return_info: bool = False):
    """Solve lap(w) = div(F) weakly with w given on the whole boundary.

    The right-hand side uses integral F.grad(v) per element, so F is never
    differentiated. `boundary_values` must cover every boundary node.
    """
    if F.mesh is not mesh:
        raise ContractError("F lives on a different mesh")
    nodes, vals = _check_boundary_map(mesh, boundary_values)
    missing = np.setdiff1d(mesh.boundary_nodes, nodes)
    if missing.size:
        raise ContractError(
            f"boundary values missing for nodes {missing[:10].tolist()}")

    areas, b, c = _basis_geometry(mesh)
    # integral over K of F.grad(phi_i) = (b_i Fx + c_i Fy)/2
    contrib = 0.5 * (b * F.vectors[:, 0, None] + c * F.vectors[:, 1, None])
    rhs = np.zeros(mesh.n_vertices)
    np.add.at(rhs, mesh.triangles.ravel(), contrib.ravel())

    ones = ScalarField(mesh, np.ones(mesh.n_vertices))
    system = assemble_conductivity(mesh, ones)
    system.rhs = rhs
    system.constrained = nodes
    system.constrained_values = vals
    x, info = _solve_constrained(system, tol, max_iter)
    field = ScalarField(mesh, x)
    return (field, info) if return_info else field


# ---------------------------------------------------------------------------
# Derived fields and norms
# ---------------------------------------------------------------------------

def element_gradient(mesh: Mesh, field: ScalarField) -> VectorField:
    """Exact gradient of the P1 interpolant, constant per triangle."""
    if field.mesh is not mesh:
        raise ContractError("field lives on a different mesh")
    areas, b, c = _basis_geometry(mesh)
    u = field.values[mesh.triangles]
    gx = (u * b).sum(axis=1) / (2.0 * areas)
    gy = (u * c).sum(axis=1) / (2.0 * areas)
    return VectorField(mesh, np.column_stack((gx, gy)))


def project_to_nodes(mesh: Mesh, element_values: np.ndarray) -> np.ndarray:
    """Lumped-mass projection: area-weighted average over each vertex star.

    Accepts per-element scalars (T,) or vectors (T, 2); returns (N,) or (N, 2).
    """
    if isinstance(element_values, VectorField):
        vals = element_values.vectors
    else:
        vals = np.asarray(element_values, dtype=np.float64)
    if vals.shape[0] != mesh.n_triangles:
        raise ContractError("expected one value per triangle")
    areas = triangle_areas(mesh)
    idx = mesh.triangles.ravel()
    den = np.bincount(idx, weights=np.repeat(areas, 3), minlength=mesh.n_vertices)
    if vals.ndim == 1:
        num = np.bincount(idx, weights=np.repeat(areas * vals, 3),
                          minlength=mesh.n_vertices)
        return num / den
    out = np.empty((mesh.n_vertices, vals.shape[1]))
    for j in range(vals.shape[1]):
        num = np.bincount(idx, weights=np.repeat(areas * vals[:, j], 3),
                          minlength=mesh.n_vertices)
        out[:, j] = num / den
    return out


def l2_norm(field: ScalarField) -> float:
    """L2(Omega) norm of the P1 interpolant via the consistent mass matrix."""
    M = mass_matrix(field.mesh)
    return float(np.sqrt(max(field.values @ (M @ field.values), 0.0)))


def l2_relative_error(a: ScalarField, b: ScalarField) -> float:
    """|a - b| / |b| in L2(Omega); both fields on the same mesh."""
    if a.mesh is not b.mesh and not np.array_equal(a.mesh.vertices, b.mesh.vertices):
        raise ContractError("fields live on different meshes")
    M = mass_matrix(a.mesh)
    diff = a.values - b.values
    denom = float(np.sqrt(max(b.values @ (M @ b.values), 0.0)))
    if denom == 0.0:
        raise DomainError("reference field has zero L2 norm")
    return float(np.sqrt(max(diff @ (M @ diff), 0.0))) / denom


def l2_norm_vector(field: VectorField) -> float:
    """L2(Omega) norm of a piecewise-constant vector field."""
    areas = triangle_areas(field.mesh)
    return float(np.sqrt((areas * (field.vectors ** 2).sum(axis=1)).sum()))
