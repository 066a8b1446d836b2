"""Mesh, quadrature and assembly unit tests."""

import numpy as np
import pytest
import scipy.sparse.linalg as spla

from saddlelab import fem2d
from saddlelab.errors import QuadratureTooLow
from saddlelab.fem2d import assembly
from saddlelab.fem2d.quadrature import reference_monomial_integral, triangle_rule
from saddlelab.fem2d.spaces import FESpace, P2_CONTINUOUS_VECTOR


class TestMesh:
    def test_structured_counts_n1(self):
        m = fem2d.structured_mesh(1)
        assert m.num_vertices == 4
        assert m.num_triangles == 2
        assert m.signed_areas().sum() == pytest.approx(1.0, abs=1e-14)

    def test_structured_counts_n4(self):
        m = fem2d.structured_mesh(4)
        assert m.num_vertices == 25
        assert m.num_triangles == 32

    @pytest.mark.parametrize("n", [1, 2, 3, 5])
    def test_conformity_audit(self, n):
        m = fem2d.structured_mesh(n)
        counts = m._edge_counts
        assert set(np.unique(counts)) <= {1, 2}
        # boundary edge count of the unit square grid: 4n
        assert (counts == 1).sum() == 4 * n
        m.validate()

    def test_barycentric_counts(self):
        m = fem2d.barycentric_refine(fem2d.structured_mesh(1))
        assert m.num_triangles == 6
        assert m.num_vertices == 6
        assert m.alfeld
        m.validate()

    def test_barycentric_preserves_area(self):
        m = fem2d.structured_mesh(3)
        r = fem2d.barycentric_refine(m)
        assert r.signed_areas().sum() == pytest.approx(m.signed_areas().sum(), abs=1e-12)

    def test_uniform_counts_and_area(self):
        m = fem2d.structured_mesh(1)
        r = fem2d.uniform_refine(m)
        assert r.num_triangles == 8
        assert r.num_vertices == m.num_vertices + m.num_edges
        assert r.signed_areas().sum() == pytest.approx(1.0, abs=1e-12)
        assert not r.alfeld
        r.validate()

    def test_euler_formula(self):
        m = fem2d.uniform_refine(fem2d.structured_mesh(2))
        # planar with one outer face: V - E + T = 1
        assert m.num_vertices - m.num_edges + m.num_triangles == 1

    def test_text_round_trip(self, tmp_path):
        m = fem2d.barycentric_refine(fem2d.structured_mesh(2))
        path = tmp_path / "mesh.txt"
        fem2d.save_mesh(m, path)
        back = fem2d.load_mesh(path)
        assert np.array_equal(back.triangles, m.triangles)
        assert np.allclose(back.vertices, m.vertices, atol=0)


class TestQuadrature:
    @pytest.mark.parametrize("degree", [1, 2, 3, 4, 5, 6, 7, 8, 10, 12])
    def test_monomial_exactness(self, degree):
        rule = triangle_rule(degree)
        assert rule.weights.sum() == pytest.approx(1.0, abs=1e-14)
        lam = rule.points
        x, y = lam[:, 1], lam[:, 2]
        for i in range(degree + 1):
            for j in range(degree + 1 - i):
                approx = 0.5 * np.dot(rule.weights, x**i * y**j)
                exact = reference_monomial_integral(i, j)
                assert approx == pytest.approx(exact, rel=1e-14, abs=1e-16)

    def test_physical_points_mapping(self):
        rule = triangle_rule(2)
        verts = np.array([[[0.0, 0.0], [2.0, 0.0], [0.0, 2.0]]])
        pts = rule.physical_points(verts)
        assert pts.shape == (1, 3, 2)
        assert np.allclose(pts.sum(axis=1) / 3.0, [[2.0 / 3.0, 2.0 / 3.0]])


def p2_interpolate(space, fn):
    return space.interpolate(fn)


class TestSpacesAndInterpolation:
    def test_dof_counts(self):
        m = fem2d.structured_mesh(2)
        v, q_th = fem2d.taylor_hood_spaces(m)
        _, q_sv = fem2d.scott_vogelius_spaces(m)
        assert v.dof_count == 2 * (m.num_vertices + m.num_edges)
        assert q_th.dof_count == m.num_vertices
        assert q_sv.dof_count == 3 * m.num_triangles

    def test_p2_reproduces_quadratics(self):
        m = fem2d.structured_mesh(2)
        v = FESpace(P2_CONTINUOUS_VECTOR, m)

        def quad_field(pts):
            x, y = pts[:, 0], pts[:, 1]
            return np.column_stack([x**2 - 3 * x * y, 1.0 + y**2])

        coef = v.interpolate(quad_field)
        rule = triangle_rule(4)
        vals = assembly.velocity_at_quadrature(v, coef, rule)
        pts = rule.physical_points(m.triangle_vertices())
        exact = quad_field(pts.reshape(-1, 2)).reshape(vals.shape)
        assert np.max(np.abs(vals - exact)) < 1e-12

    def test_boundary_dof_coordinates(self):
        m = fem2d.structured_mesh(2)
        v = FESpace(P2_CONTINUOUS_VECTOR, m)
        pts = v.scalar_dof_coords()[v.boundary_scalar_dofs()]
        on_boundary = (
            np.isclose(pts[:, 0], 0) | np.isclose(pts[:, 0], 1)
            | np.isclose(pts[:, 1], 0) | np.isclose(pts[:, 1], 1)
        )
        assert on_boundary.all()
        # 8 boundary vertices + 8 boundary edge midpoints on the 2x2 grid
        assert pts.shape[0] == 16


class TestAssembly:
    def setup_method(self):
        self.mesh = fem2d.structured_mesh(3)
        self.v = FESpace(P2_CONTINUOUS_VECTOR, self.mesh)

    def test_constant_field_in_stiffness_kernel(self):
        A = assembly.assemble_stiffness(self.v, mu=1.0)
        const = self.v.interpolate(lambda p: np.tile([2.0, -1.0], (p.shape[0], 1)))
        assert np.max(np.abs(A @ const)) < 1e-13

    def test_mu_scaling(self):
        A1 = assembly.assemble_stiffness(self.v, mu=1.0)
        A2 = assembly.assemble_stiffness(self.v, mu=2.0)
        assert abs(A2 - 2 * A1).max() < 1e-13

    def test_symmetry(self):
        A = assembly.assemble_stiffness(self.v, mu=3.0)
        assert abs(A - A.T).max() < 1e-13

    def test_linear_field_energy(self):
        mu = 0.7
        A = assembly.assemble_stiffness(self.v, mu=mu)
        u = self.v.interpolate(lambda p: np.column_stack([p[:, 1], np.zeros(len(p))]))
        # grad of (y, 0) has unit Frobenius norm everywhere
        assert u @ (A @ u) == pytest.approx(mu, rel=1e-13)

    def test_divergence_against_constant_pressure(self):
        v, q = fem2d.taylor_hood_spaces(self.mesh)
        B = assembly.assemble_divergence(v, q)
        ones = np.ones(q.dof_count)
        # b(u, 1) = -integral of div u = -1 for u = (x, 0)
        u = v.interpolate(lambda p: np.column_stack([p[:, 0], np.zeros(len(p))]))
        assert ones @ (B @ u) == pytest.approx(-1.0, rel=1e-13)
        # zero-boundary fields have zero net flux
        rng = np.random.default_rng(4)
        w = rng.standard_normal(v.dof_count)
        w[v.boundary_dofs()] = 0.0
        assert abs(ones @ (B @ w)) < 1e-12

    def test_div_div_matches_interpolant(self):
        u = self.v.interpolate(lambda p: np.column_stack([p[:, 0] ** 2, p[:, 1]]))
        D = assembly.assemble_div_div(self.v)
        # div u = 2x + 1, integral of (2x+1)^2 = 4/3 + 2 + 1
        assert u @ (D @ u) == pytest.approx(13.0 / 3.0, rel=1e-12)

    def test_convection_zero_field(self):
        N = assembly.assemble_convection(self.v, np.zeros(self.v.dof_count))
        assert abs(N).max() == 0.0

    def test_convection_constant_transport(self):
        w = self.v.interpolate(lambda p: np.tile([1.0, 0.0], (p.shape[0], 1)))
        u = self.v.interpolate(lambda p: np.column_stack([p[:, 0], np.zeros(len(p))]))
        N = assembly.assemble_convection(self.v, w)
        # ((1,0) . grad)(x,0) = (1,0); pairing with v equals the load of (1,0)
        load = assembly.assemble_load(
            self.v, lambda p: np.tile([1.0, 0.0], (p.shape[0], 1)), quad_degree=5)
        assert np.max(np.abs(N @ u - load)) < 1e-13

    def test_lamb_identity_for_potential_flow(self):
        # u = grad(x^3 - 3 x y^2): (u . grad) u = half the gradient of |u|^2
        def u0(p):
            x, y = p[:, 0], p[:, 1]
            return np.column_stack([3 * x**2 - 3 * y**2, -6 * x * y])

        def half_grad_usq(p):
            x, y = p[:, 0], p[:, 1]
            return 18.0 * (x**2 + y**2)[:, None] * p

        coef = self.v.interpolate(u0)
        N = assembly.assemble_convection(self.v, coef)
        lhs = N @ coef
        rhs = assembly.assemble_load(self.v, half_grad_usq, quad_degree=5, f_degree=3)
        assert np.max(np.abs(lhs - rhs)) < 1e-12

    def test_load_zero(self):
        F = assembly.assemble_load(self.v, lambda p: np.zeros_like(p))
        assert np.max(np.abs(F)) == 0.0

    def test_load_partition_of_unity(self):
        F = assembly.assemble_load(
            self.v, lambda p: np.tile([1.0, 0.0], (p.shape[0], 1)), quad_degree=4)
        ns = self.v.scalar_count
        assert F[:ns].sum() == pytest.approx(1.0, rel=1e-13)
        assert np.max(np.abs(F[ns:])) < 1e-15

    def test_quadrature_too_low_flagged(self):
        with pytest.raises(QuadratureTooLow):
            assembly.assemble_load(self.v, lambda p: p, quad_degree=4, f_degree=5)

    def test_pressure_integral_row(self):
        _, q = fem2d.taylor_hood_spaces(self.mesh)
        row = assembly.pressure_integral_row(q)
        assert row.sum() == pytest.approx(1.0, rel=1e-13)
        # against the linear pressure x: integral = 1/2
        p = self.mesh.vertices[:, 0]
        assert row @ p == pytest.approx(0.5, rel=1e-13)


class TestDirichlet:
    def test_homogeneous_reduces_to_interior_block(self):
        mesh = fem2d.structured_mesh(2)
        v = FESpace(P2_CONTINUOUS_VECTOR, mesh)
        A = assembly.assemble_stiffness(v)
        F = assembly.assemble_load(v, lambda p: np.ones_like(p), quad_degree=4)
        bdofs = v.boundary_dofs()
        A_ii, F_i, interior = assembly.apply_dirichlet(A, F, bdofs, np.zeros(bdofs.size))
        assert np.allclose(F_i, F[interior])
        assert abs(A_ii - A.tocsr()[interior][:, interior]).max() == 0.0

    def test_boundary_interpolation_matches_potential_gradient(self):
        mesh = fem2d.structured_mesh(4)
        v = FESpace(P2_CONTINUOUS_VECTOR, mesh)

        def u0(p):
            x, y = p[:, 0], p[:, 1]
            return np.column_stack([3 * x**2 - 3 * y**2, -6 * x * y])

        vals = v.boundary_values(u0)
        pts = v.scalar_dof_coords()[v.boundary_scalar_dofs()]
        expected = u0(pts)
        k = pts.shape[0]
        assert np.allclose(vals[:k], expected[:, 0], atol=0)
        assert np.allclose(vals[k:], expected[:, 1], atol=0)

    def test_laplace_reproduces_linear_field(self):
        mesh = fem2d.structured_mesh(3)
        v = FESpace(P2_CONTINUOUS_VECTOR, mesh)

        def linear(p):
            return np.column_stack([1.0 + 2 * p[:, 0] - p[:, 1], p[:, 0]])

        A = assembly.assemble_stiffness(v)
        F = np.zeros(v.dof_count)
        bdofs = v.boundary_dofs()
        bvals = v.boundary_values(linear)
        A_ii, F_i, interior = assembly.apply_dirichlet(A, F, bdofs, bvals)
        u = np.zeros(v.dof_count)
        u[bdofs] = bvals
        u[interior] = spla.spsolve(A_ii.tocsc(), F_i)
        exact = v.interpolate(linear)
        assert np.max(np.abs(u - exact)) < 1e-11
