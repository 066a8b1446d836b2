"""Matrix and load assembly for the supported element pairs.

All routines are vectorized over triangles: reference shape data is tabulated
once per quadrature rule and contracted against per-triangle affine geometry
with einsum, then scattered into COO triplets.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from ..errors import QuadratureTooLow
from .mesh import Mesh2D
from .quadrature import QuadratureRule, triangle_rule
from .spaces import (
    P1_CONTINUOUS,
    P2_CONTINUOUS_VECTOR,
    FESpace,
    p1_dlam,
    p1_values,
    p2_dlam,
    p2_values,
)

STIFFNESS_DEGREE = 4
CONVECTION_DEGREE = 5
LOAD_DEGREE = 8


def grad_lambda(mesh: Mesh2D) -> tuple[np.ndarray, np.ndarray]:
    """Per-triangle areas (nt,) and barycentric gradients (nt, 3, 2)."""
    v = mesh.triangle_vertices()
    areas = mesh.signed_areas()
    g = np.empty((mesh.num_triangles, 3, 2))
    for i in range(3):
        j, k = (i + 1) % 3, (i + 2) % 3
        g[:, i, 0] = v[:, j, 1] - v[:, k, 1]
        g[:, i, 1] = v[:, k, 0] - v[:, j, 0]
    g /= (2.0 * areas)[:, None, None]
    return areas, g


def _scalar_shape(space: FESpace, rule: QuadratureRule):
    """Reference values (nq, k) and lambda-derivatives (nq, k, 3)."""
    if space.kind == P2_CONTINUOUS_VECTOR:
        return p2_values(rule.points), p2_dlam(rule.points)
    vals = p1_values(rule.points)
    d = np.broadcast_to(p1_dlam(), (rule.npoints, 3, 3)).copy()
    return vals, d


def _scalar_cells(space: FESpace) -> np.ndarray:
    if space.kind == P2_CONTINUOUS_VECTOR:
        return space.scalar_cell_dofs
    return space.cell_dofs


def _scalar_size(space: FESpace) -> int:
    if space.kind == P2_CONTINUOUS_VECTOR:
        return space.scalar_count
    return space.dof_count


def _scatter(rows_cells, cols_cells, element, shape) -> sp.csr_matrix:
    nt, K = rows_cells.shape
    L = cols_cells.shape[1]
    rows = np.repeat(rows_cells, L, axis=1).ravel()
    cols = np.tile(cols_cells, (1, K)).ravel()
    return sp.coo_matrix((element.ravel(), (rows, cols)), shape=shape).tocsr()


def physical_gradients(space: FESpace, rule: QuadratureRule, geom=None) -> np.ndarray:
    """(nt, nq, k, 2) gradients of the scalar shape functions."""
    mesh = space.mesh
    if geom is None:
        geom = grad_lambda(mesh)
    _, g = geom
    _, dlam = _scalar_shape(space, rule)
    return np.einsum("qki,tid->tqkd", dlam, g)


def scalar_stiffness(space: FESpace, degree: int = STIFFNESS_DEGREE) -> sp.csr_matrix:
    """Scalar Laplace matrix for the space's scalar component."""
    rule = triangle_rule(degree)
    areas, g = grad_lambda(space.mesh)
    pg = physical_gradients(space, rule, (areas, g))
    el = np.einsum("q,tqkd,tqld->tkl", rule.weights, pg, pg) * areas[:, None, None]
    cells = _scalar_cells(space)
    n = _scalar_size(space)
    return _scatter(cells, cells, el, (n, n))


def scalar_mass(space: FESpace, degree: int = STIFFNESS_DEGREE) -> sp.csr_matrix:
    rule = triangle_rule(degree)
    areas, _ = grad_lambda(space.mesh)
    vals, _ = _scalar_shape(space, rule)
    el = np.einsum("q,qk,ql->kl", rule.weights, vals, vals)
    el = el[None, :, :] * areas[:, None, None]
    cells = _scalar_cells(space)
    n = _scalar_size(space)
    return _scatter(cells, cells, el, (n, n))


def _vector_blockdiag(M: sp.spmatrix) -> sp.csr_matrix:
    return sp.block_diag([M, M]).tocsr()


def assemble_stiffness(space: FESpace, mu: float = 1.0) -> sp.csr_matrix:
    """mu * (grad u, grad v) for the vector P2 space."""
    if space.kind != P2_CONTINUOUS_VECTOR:
        raise ValueError("stiffness expects the vector velocity space")
    return (mu * _vector_blockdiag(scalar_stiffness(space))).tocsr()


def assemble_vector_mass(space: FESpace) -> sp.csr_matrix:
    if space.kind != P2_CONTINUOUS_VECTOR:
        raise ValueError("mass expects the vector velocity space")
    return _vector_blockdiag(scalar_mass(space))


def assemble_divergence(v_space: FESpace, q_space: FESpace,
                        degree: int = STIFFNESS_DEGREE) -> sp.csr_matrix:
    """B with entries -(div phi_j, psi_i); rows pressures, columns velocities."""
    if v_space.mesh is not q_space.mesh:
        raise ValueError("velocity and pressure spaces must share a mesh")
    rule = triangle_rule(degree)
    areas, g = grad_lambda(v_space.mesh)
    pg = physical_gradients(v_space, rule, (areas, g))  # (nt, nq, 6, 2)
    pvals, _ = _scalar_shape(q_space, rule)  # (nq, 3)
    el = np.einsum("q,qi,tqjd->tidj", rule.weights, pvals, pg)
    el = -el * areas[:, None, None, None]
    nt = v_space.mesh.num_triangles
    el = el.reshape(nt, 3, 12)  # d-index fastest over the velocity blocks
    rows = q_space.cell_dofs
    cols = v_space.cell_dofs
    return _scatter(rows, cols, el, (q_space.dof_count, v_space.dof_count))


def assemble_div_div(space: FESpace, degree: int = STIFFNESS_DEGREE) -> sp.csr_matrix:
    """(div u, div v); u^T D u is the squared L2 norm of the divergence."""
    rule = triangle_rule(degree)
    areas, g = grad_lambda(space.mesh)
    pg = physical_gradients(space, rule, (areas, g))
    nt, nq = pg.shape[:2]
    div = np.concatenate([pg[..., 0], pg[..., 1]], axis=2)  # (nt, nq, 12)
    el = np.einsum("q,tqj,tqk->tjk", rule.weights, div, div) * areas[:, None, None]
    cells = space.cell_dofs
    return _scatter(cells, cells, el, (space.dof_count, space.dof_count))


def velocity_at_quadrature(space: FESpace, coef: np.ndarray,
                           rule: QuadratureRule) -> np.ndarray:
    """(nt, nq, 2) values of the vector field with the given coefficients."""
    vals, _ = _scalar_shape(space, rule)
    cells = space.scalar_cell_dofs
    ns = space.scalar_count
    cx = coef[:ns][cells]  # (nt, 6)
    cy = coef[ns:][cells]
    out = np.empty((cells.shape[0], rule.npoints, 2))
    out[..., 0] = np.einsum("qk,tk->tq", vals, cx)
    out[..., 1] = np.einsum("qk,tk->tq", vals, cy)
    return out


def divergence_at_quadrature(space: FESpace, coef: np.ndarray,
                             rule: QuadratureRule) -> np.ndarray:
    """(nt, nq) pointwise divergence of the field."""
    areas, g = grad_lambda(space.mesh)
    pg = physical_gradients(space, rule, (areas, g))
    cells = space.scalar_cell_dofs
    ns = space.scalar_count
    cx = coef[:ns][cells]
    cy = coef[ns:][cells]
    return (np.einsum("tqk,tk->tq", pg[..., 0], cx)
            + np.einsum("tqk,tk->tq", pg[..., 1], cy))


def assemble_convection(space: FESpace, w_coef: np.ndarray,
                        degree: int = CONVECTION_DEGREE) -> sp.csr_matrix:
    """N(w) with entries ((w . grad) phi_j, phi_i)."""
    if space.kind != P2_CONTINUOUS_VECTOR:
        raise ValueError("convection expects the vector velocity space")
    rule = triangle_rule(degree)
    areas, g = grad_lambda(space.mesh)
    pg = physical_gradients(space, rule, (areas, g))
    vals, _ = _scalar_shape(space, rule)
    w = velocity_at_quadrature(space, w_coef, rule)
    wdot = np.einsum("tqd,tqld->tql", w, pg)  # (w . grad) N_l
    el = np.einsum("q,qk,tql->tkl", rule.weights, vals, wdot) * areas[:, None, None]
    cells = space.scalar_cell_dofs
    ns = space.scalar_count
    scalar_block = _scatter(cells, cells, el, (ns, ns))
    return _vector_blockdiag(scalar_block)


def velocity_gradients_at_quadrature(space: FESpace, coef: np.ndarray,
                                     rule: QuadratureRule) -> np.ndarray:
    """(nt, nq, 2, 2) entries d_d w_a of the field's Jacobian."""
    areas, g = grad_lambda(space.mesh)
    pg = physical_gradients(space, rule, (areas, g))
    cells = space.scalar_cell_dofs
    ns = space.scalar_count
    out = np.empty((cells.shape[0], rule.npoints, 2, 2))
    out[:, :, 0, :] = np.einsum("tqkd,tk->tqd", pg, coef[:ns][cells])
    out[:, :, 1, :] = np.einsum("tqkd,tk->tqd", pg, coef[ns:][cells])
    return out


def assemble_convection_jacobian(space: FESpace, w_coef: np.ndarray,
                                 degree: int = CONVECTION_DEGREE) -> sp.csr_matrix:
    """J(w) with entries ((phi_j . grad) w, phi_i), the reaction part of the
    Newton linearization of the convection term."""
    if space.kind != P2_CONTINUOUS_VECTOR:
        raise ValueError("convection expects the vector velocity space")
    rule = triangle_rule(degree)
    areas, _ = grad_lambda(space.mesh)
    vals, _ = _scalar_shape(space, rule)
    gw = velocity_gradients_at_quadrature(space, w_coef, rule)  # (nt,nq,a,d)
    cells = space.scalar_cell_dofs
    ns = space.scalar_count
    n = space.dof_count
    blocks = []
    for a in range(2):
        row_blocks = []
        for d in range(2):
            el = np.einsum("q,qk,ql,tq->tkl", rule.weights, vals, vals,
                           gw[:, :, a, d]) * areas[:, None, None]
            row_blocks.append(_scatter(cells, cells, el, (ns, ns)))
        blocks.append(row_blocks)
    return sp.bmat(blocks, format="csr")


def assemble_load(space: FESpace, f, quad_degree: int = LOAD_DEGREE,
                  f_degree: int | None = None) -> np.ndarray:
    """Load vector (f, phi_i); f maps (k, 2) points to (k, 2) values.

    If the polynomial degree of f is declared, the rule must integrate
    f times the quadratic basis exactly, otherwise QuadratureTooLow.
    """
    if space.kind != P2_CONTINUOUS_VECTOR:
        raise ValueError("loads are assembled against the vector velocity space")
    if f_degree is not None and quad_degree < f_degree + 2:
        raise QuadratureTooLow(
            f"rule of degree {quad_degree} cannot integrate a degree-{f_degree} "
            f"forcing against quadratic test functions"
        )
    rule = triangle_rule(quad_degree)
    areas, _ = grad_lambda(space.mesh)
    vals, _ = _scalar_shape(space, rule)
    pts = rule.physical_points(space.mesh.triangle_vertices())  # (nt, nq, 2)
    nt, nq = pts.shape[:2]
    fv = np.asarray(f(pts.reshape(-1, 2)), dtype=float).reshape(nt, nq, 2)
    el = np.einsum("q,qk,tqd->tkd", rule.weights, vals, fv) * areas[:, None, None]
    cells = space.scalar_cell_dofs
    ns = space.scalar_count
    F = np.zeros(space.dof_count)
    np.add.at(F, cells.ravel(), el[..., 0].ravel())
    np.add.at(F, (cells + ns).ravel(), el[..., 1].ravel())
    return F


def pressure_integral_row(q_space: FESpace) -> np.ndarray:
    """Row vector of integrals of the pressure basis functions."""
    rule = triangle_rule(2)
    areas, _ = grad_lambda(q_space.mesh)
    vals, _ = _scalar_shape(q_space, rule)
    el = np.einsum("q,qk->k", rule.weights, vals)
    el = el[None, :] * areas[:, None]
    row = np.zeros(q_space.dof_count)
    np.add.at(row, q_space.cell_dofs.ravel(), el.ravel())
    return row


def assemble_pressure_gradient(v_space: FESpace, q_space: FESpace,
                               rotated: bool = False,
                               degree: int = STIFFNESS_DEGREE) -> sp.csr_matrix:
    """G with entries (phi_j, grad psi_i), or (phi_j, curl psi_i) if rotated.

    This is the constraint operator of the Helmholtz-Hodge mixed systems; the
    curl is the 90-degree rotation (d/dy, -d/dx) of the gradient.
    """
    if q_space.kind != P1_CONTINUOUS:
        raise ValueError("the decomposition potential lives in continuous P1")
    rule = triangle_rule(degree)
    areas, g = grad_lambda(v_space.mesh)
    vvals, _ = _scalar_shape(v_space, rule)  # (nq, 6)
    qg = physical_gradients(q_space, rule, (areas, g))  # (nt, nq, 3, 2)
    if rotated:
        qg = np.stack([qg[..., 1], -qg[..., 0]], axis=-1)
    el = np.einsum("q,qj,tqid->tidj", rule.weights, vvals, qg)
    el = el * areas[:, None, None, None]
    nt = v_space.mesh.num_triangles
    el = el.reshape(nt, 3, 12)
    return _scatter(q_space.cell_dofs, v_space.cell_dofs, el,
                    (q_space.dof_count, v_space.dof_count))


def apply_dirichlet(A: sp.spmatrix, F: np.ndarray, bdofs: np.ndarray,
                    bvals: np.ndarray):
    """Eliminate Dirichlet dofs from a symmetric system.

    Returns ``(A_ii, F_i, interior)`` where the reduced right-hand side
    already carries the lift -A_ib u_b.  The homogeneous case reduces to
    plain row/column extraction.
    """
    n = A.shape[0]
    interior = np.setdiff1d(np.arange(n), bdofs)
    A = A.tocsr()
    A_ii = A[interior][:, interior]
    if bdofs.size and np.any(bvals != 0.0):
        lift = A[interior][:, bdofs] @ bvals
    else:
        lift = 0.0
    return A_ii.tocsr(), F[interior] - lift, interior
