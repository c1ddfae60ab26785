import numpy as np
import pytest

from aet2d import GAMMA_FULL, GAMMA_LARGE, GAMMA_MEDIUM, build_disk_mesh, refine, tag_boundary
from aet2d.errors import ContractError, DomainError, SingularSystemError
from aet2d.fem import (
    ScalarField,
    VectorField,
    assemble_conductivity,
    element_gradient,
    l2_norm,
    l2_relative_error,
    local_stiffness,
    mass_matrix,
    project_to_nodes,
    solve_mixed,
    solve_poisson_weak_div,
)
from aet2d.mesh import triangle_areas


@pytest.fixture(scope="module")
def small():
    # full circle tagged: every boundary node available for Dirichlet data
    return tag_boundary(build_disk_mesh(0.25), GAMMA_FULL)


@pytest.fixture(scope="module")
def medium():
    return tag_boundary(build_disk_mesh(0.1), GAMMA_MEDIUM)


def coord_bc(mesh, component=0):
    return {int(i): float(mesh.vertices[i, component]) for i in mesh.dirichlet_nodes}


def bump(mesh):
    xy = mesh.vertices
    return ScalarField(mesh, 1.0 + np.exp(-5.0 * (xy[:, 0] ** 2 + xy[:, 1] ** 2)))


# -- element kernel and assembly ----------------------------------------------

def test_reference_element_matrix():
    coords = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    K = local_stiffness(coords, np.ones(3))
    expected = np.array([[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]])
    assert K == pytest.approx(expected, abs=1e-15)


def test_element_matrix_scales_linearly():
    coords = np.array([[0.2, -0.1], [1.1, 0.3], [0.4, 0.9]])
    base = local_stiffness(coords, np.ones(3))
    scaled = local_stiffness(coords, 3.0 * np.ones(3))
    assert scaled == pytest.approx(3.0 * base, rel=1e-14)


def test_assembled_matrix_annihilates_constants(medium):
    system = assemble_conductivity(medium, bump(medium))
    ones = np.ones(medium.n_vertices)
    assert np.abs(system.matrix @ ones).max() <= 1e-12
    asym = system.matrix - system.matrix.T
    assert np.abs(asym.data).max() if asym.nnz else 0.0 <= 1e-14


def test_assemble_rejects_nonpositive_sigma(small):
    vals = np.ones(small.n_vertices)
    vals[7] = 0.0
    with pytest.raises(DomainError, match="7"):
        assemble_conductivity(small, ScalarField(small, vals))


def test_offdiagonals_nonpositive(medium):
    # non-obtuse generator meshes give an M-matrix, the root of the
    # discrete maximum principle
    system = assemble_conductivity(medium, bump(medium))
    A = system.matrix.tocoo()
    off = A.data[A.row != A.col]
    assert off.max() <= 1e-14


# -- mixed solves --------------------------------------------------------------

def test_linear_solution_exact_direct(small):
    sigma = ScalarField(small, np.ones(small.n_vertices))
    u = solve_mixed(small, sigma, coord_bc(small))
    assert np.abs(u.values - small.vertices[:, 0]).max() <= 1e-10


def test_linear_solution_exact_pcg():
    mesh = tag_boundary(build_disk_mesh(0.04), GAMMA_FULL)
    sigma = ScalarField(mesh, np.ones(mesh.n_vertices))
    u, info = solve_mixed(mesh, sigma, coord_bc(mesh), return_info=True)
    assert info.method == "pcg"
    assert np.abs(u.values - mesh.vertices[:, 0]).max() <= 1e-7


def test_dirichlet_values_exact(medium):
    u = solve_mixed(medium, bump(medium), coord_bc(medium))
    for node in medium.dirichlet_nodes[::5]:
        assert u.values[node] == medium.vertices[node, 0]


def test_maximum_principle_coordinate_data(medium):
    sigma = ScalarField(medium, np.ones(medium.n_vertices))
    u = solve_mixed(medium, sigma, coord_bc(medium))
    fixed = u.values[medium.dirichlet_nodes]
    assert u.values.min() >= fixed.min() - 1e-9
    assert u.values.max() <= fixed.max() + 1e-9


def test_maximum_principle_random_data(medium):
    rng = np.random.default_rng(11)
    nodes = medium.dirichlet_nodes
    sigma = bump(medium)
    for _ in range(5):
        data = dict(zip(map(int, nodes), rng.normal(size=len(nodes))))
        u = solve_mixed(medium, sigma, data)
        fixed = u.values[nodes]
        assert u.values.min() >= fixed.min() - 1e-9
        assert u.values.max() <= fixed.max() + 1e-9


def test_sigma_scaling_invariance(medium):
    bc = coord_bc(medium)
    u1 = solve_mixed(medium, bump(medium), bc)
    scaled = ScalarField(medium, 3.0 * bump(medium).values)
    u2 = solve_mixed(medium, scaled, bc)
    assert np.abs(u1.values - u2.values).max() <= 1e-10


def test_self_convergence_one_refinement():
    coarse = tag_boundary(build_disk_mesh(0.1), GAMMA_LARGE)
    fine = refine(coarse)
    uc = solve_mixed(coarse, bump(coarse), coord_bc(coarse))
    uf = solve_mixed(fine, bump(fine), coord_bc(fine))
    restricted = ScalarField(coarse, uf.values[:coarse.n_vertices])
    assert l2_relative_error(uc, restricted) <= 0.02


def test_free_rows_residual(medium):
    # Galerkin orthogonality: the residual vanishes on unconstrained rows
    sigma = bump(medium)
    bc = coord_bc(medium)
    u = solve_mixed(medium, sigma, bc)
    system = assemble_conductivity(medium, sigma)
    res = system.matrix @ u.values
    free = np.setdiff1d(np.arange(medium.n_vertices), medium.dirichlet_nodes)
    assert np.abs(res[free]).max() <= 1e-9


def test_no_dirichlet_nodes_is_singular(small):
    with pytest.raises(SingularSystemError):
        solve_mixed(small, bump(small), {})


def test_interior_node_rejected(small):
    with pytest.raises(ContractError):
        solve_mixed(small, bump(small), {0: 1.0})


# -- Poisson with weak divergence data ----------------------------------------

def full_bc(mesh, fn):
    return {int(i): float(fn(*mesh.vertices[i])) for i in mesh.boundary_nodes}


def test_poisson_zero_data_constant(small):
    F = VectorField(small, np.zeros((small.n_triangles, 2)))
    w = solve_poisson_weak_div(small, F, full_bc(small, lambda x, y: 2.5))
    assert np.abs(w.values - 2.5).max() <= 1e-12


def test_poisson_reproduces_linear(small):
    F = VectorField(small, np.tile([1.0, 0.0], (small.n_triangles, 1)))
    w = solve_poisson_weak_div(small, F, full_bc(small, lambda x, y: x))
    assert np.abs(w.values - small.vertices[:, 0]).max() <= 1e-10


def test_poisson_reproduces_interpolated_product(small):
    xy = small.vertices
    product = ScalarField(small, xy[:, 0] * xy[:, 1])
    F = element_gradient(small, product)
    w = solve_poisson_weak_div(small, F, full_bc(small, lambda x, y: x * y))
    assert np.abs(w.values - product.values).max() <= 1e-10


def test_poisson_second_order_convergence():
    def run(mesh):
        cent = mesh.vertices[mesh.triangles].mean(axis=1)
        F = VectorField(mesh, 2.0 * cent)  # gradient of x^2 + y^2 at centroids
        w = solve_poisson_weak_div(mesh, F, full_bc(mesh, lambda x, y: x * x + y * y))
        exact = ScalarField(mesh, (mesh.vertices ** 2).sum(axis=1))
        return l2_relative_error(w, exact)

    coarse = tag_boundary(build_disk_mesh(0.2), GAMMA_FULL)
    errs = [run(coarse), run(refine(coarse))]
    assert errs[0] / errs[1] >= 2.5  # about 4 for an O(h^2) method


def test_poisson_requires_full_boundary(small):
    F = VectorField(small, np.zeros((small.n_triangles, 2)))
    bc = full_bc(small, lambda x, y: x)
    dropped = int(small.boundary_nodes[3])
    del bc[dropped]
    with pytest.raises(ContractError, match=str(dropped)):
        solve_poisson_weak_div(small, F, bc)


# -- gradients, projections, norms --------------------------------------------

def test_element_gradient_linear(small):
    xy = small.vertices
    f = ScalarField(small, xy[:, 0] + 2.0 * xy[:, 1])
    g = element_gradient(small, f)
    assert np.abs(g.vectors - [1.0, 2.0]).max() <= 1e-13


def test_element_gradient_constant(small):
    g = element_gradient(small, ScalarField(small, np.full(small.n_vertices, 4.2)))
    assert np.abs(g.vectors).max() <= 1e-12


def test_project_constant(small):
    proj = project_to_nodes(small, np.full(small.n_triangles, 3.3))
    assert proj == pytest.approx(3.3)


def test_project_centroid_coordinate(medium):
    cent = medium.vertices[medium.triangles].mean(axis=1)
    proj = project_to_nodes(medium, cent[:, 0])
    assert np.abs(proj - medium.vertices[:, 0]).max() <= 0.1  # O(h) accuracy


def test_project_vector_shape(small):
    cent = small.vertices[small.triangles].mean(axis=1)
    proj = project_to_nodes(small, cent)
    assert proj.shape == (small.n_vertices, 2)


def test_project_accepts_vector_field(small):
    cent = small.vertices[small.triangles].mean(axis=1)
    wrapped = project_to_nodes(small, VectorField(small, cent))
    assert np.array_equal(wrapped, project_to_nodes(small, cent))


def test_l2_relative_error_basics(small):
    xy = small.vertices
    b = ScalarField(small, 1.0 + xy[:, 0] ** 2)
    assert l2_relative_error(b, b) == 0.0
    doubled = ScalarField(small, 2.0 * b.values)
    assert l2_relative_error(doubled, b) == pytest.approx(1.0, rel=1e-12)


def test_l2_error_zero_reference(small):
    zero = ScalarField(small, np.zeros(small.n_vertices))
    one = ScalarField(small, np.ones(small.n_vertices))
    with pytest.raises(DomainError):
        l2_relative_error(one, zero)


def test_hat_function_norm_matches_quadrature(small):
    # independent oracle: integral of a squared hat is sum(area)/6 over its star
    node = int(np.argmin(np.hypot(*small.vertices.T)))  # center vertex
    hat = np.zeros(small.n_vertices)
    hat[node] = 1.0
    star = np.any(small.triangles == node, axis=1)
    expected = np.sqrt(triangle_areas(small)[star].sum() / 6.0)
    assert l2_norm(ScalarField(small, hat)) == pytest.approx(expected, abs=1e-12)


def test_mass_matrix_total_area(small):
    M = mass_matrix(small)
    ones = np.ones(small.n_vertices)
    assert ones @ (M @ ones) == pytest.approx(triangle_areas(small).sum(), rel=1e-12)
