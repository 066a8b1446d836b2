"""Lagrange finite element spaces on triangle meshes.

Three kinds are supported, matching the discretizations used by the
experiments: continuous scalar P1, continuous vector-valued P2 and
discontinuous (elementwise) scalar P1.

Vector P2 degrees of freedom are stored component-blocked: all x-component
scalar dofs first, then all y-component dofs.  Scalar P2 dofs are vertex
values followed by edge-midpoint values.
"""

from __future__ import annotations

import numpy as np

from .mesh import Mesh2D

P1_CONTINUOUS = "P1_continuous"
P2_CONTINUOUS_VECTOR = "P2_continuous_vector"
P1_DISCONTINUOUS = "P1_discontinuous"


# -- reference shape functions (barycentric arguments) ------------------------

def p1_values(lam: np.ndarray) -> np.ndarray:
    """(nq, 3) values of the linear basis at barycentric points lam (nq, 3)."""
    return np.asarray(lam, dtype=float)


def p1_dlam() -> np.ndarray:
    """(3, 3) constant derivatives dN_k/dlam_i."""
    return np.eye(3)


def p2_values(lam: np.ndarray) -> np.ndarray:
    """(nq, 6) values of the quadratic basis; local order v0,v1,v2,e0,e1,e2
    with edge k opposite vertex k."""
    lam = np.asarray(lam, dtype=float)
    l0, l1, l2 = lam[:, 0], lam[:, 1], lam[:, 2]
    return np.column_stack([
        l0 * (2 * l0 - 1), l1 * (2 * l1 - 1), l2 * (2 * l2 - 1),
        4 * l1 * l2, 4 * l2 * l0, 4 * l0 * l1,
    ])


def p2_dlam(lam: np.ndarray) -> np.ndarray:
    """(nq, 6, 3) derivatives dN_k/dlam_i at each point."""
    lam = np.asarray(lam, dtype=float)
    nq = lam.shape[0]
    d = np.zeros((nq, 6, 3))
    for i in range(3):
        d[:, i, i] = 4 * lam[:, i] - 1
    pairs = [(1, 2), (2, 0), (0, 1)]  # edge k opposite vertex k
    for k, (a, b) in enumerate(pairs):
        d[:, 3 + k, a] = 4 * lam[:, b]
        d[:, 3 + k, b] = 4 * lam[:, a]
    return d


# -- spaces -------------------------------------------------------------------

class FESpace:
    """Dof bookkeeping for one of the supported element kinds."""

    def __init__(self, kind: str, mesh: Mesh2D):
        if kind not in (P1_CONTINUOUS, P2_CONTINUOUS_VECTOR, P1_DISCONTINUOUS):
            raise ValueError(f"unknown space kind {kind!r}")
        self.kind = kind
        self.mesh = mesh
        nv, ne, nt = mesh.num_vertices, mesh.num_edges, mesh.num_triangles
        if kind == P1_CONTINUOUS:
            self.dof_count = nv
            self.cell_dofs = mesh.triangles.copy()
        elif kind == P1_DISCONTINUOUS:
            self.dof_count = 3 * nt
            self.cell_dofs = np.arange(3 * nt, dtype=np.int64).reshape(nt, 3)
        else:
            self.scalar_count = nv + ne
            scalar_cells = np.hstack([mesh.triangles, nv + mesh.tri_edges])
            self.scalar_cell_dofs = scalar_cells
            self.cell_dofs = np.hstack([scalar_cells, scalar_cells + self.scalar_count])
            self.dof_count = 2 * self.scalar_count

    # -- coordinates and boundaries ------------------------------------------

    def scalar_dof_coords(self) -> np.ndarray:
        """Coordinates of scalar dofs (P2: vertices then edge midpoints)."""
        m = self.mesh
        if self.kind == P1_CONTINUOUS:
            return m.vertices.copy()
        if self.kind == P1_DISCONTINUOUS:
            return m.vertices[m.triangles].reshape(-1, 2)
        return np.vstack([m.vertices, m.edge_midpoints()])

    def boundary_scalar_dofs(self) -> np.ndarray:
        m = self.mesh
        if self.kind == P1_CONTINUOUS:
            return np.flatnonzero(m.boundary_vertex_mask())
        if self.kind == P1_DISCONTINUOUS:
            raise ValueError("discontinuous pressure space carries no boundary dofs")
        verts = np.flatnonzero(m.boundary_vertex_mask())
        edges = m.num_vertices + np.flatnonzero(m.boundary_edge_mask())
        return np.concatenate([verts, edges])

    def boundary_dofs(self) -> np.ndarray:
        """Global indices of constrained dofs (both components for vectors)."""
        sdofs = self.boundary_scalar_dofs()
        if self.kind == P2_CONTINUOUS_VECTOR:
            return np.concatenate([sdofs, sdofs + self.scalar_count])
        return sdofs

    # -- interpolation ---------------------------------------------------------

    def interpolate(self, fn) -> np.ndarray:
        """Nodal interpolation; fn maps (k, 2) points to (k,) or (k, 2) values."""
        pts = self.scalar_dof_coords()
        vals = np.asarray(fn(pts), dtype=float)
        if self.kind == P2_CONTINUOUS_VECTOR:
            if vals.shape != (pts.shape[0], 2):
                raise ValueError("vector space expects (k, 2) interpolation values")
            return np.concatenate([vals[:, 0], vals[:, 1]])
        if vals.shape != (pts.shape[0],):
            raise ValueError("scalar space expects (k,) interpolation values")
        return vals

    def boundary_values(self, fn) -> np.ndarray:
        """Interpolated values of fn at the boundary dofs, aligned with
        boundary_dofs()."""
        sdofs = self.boundary_scalar_dofs()
        pts = self.scalar_dof_coords()[sdofs]
        vals = np.asarray(fn(pts), dtype=float)
        if self.kind == P2_CONTINUOUS_VECTOR:
            if vals.shape != (pts.shape[0], 2):
                raise ValueError("vector space expects (k, 2) boundary values")
            return np.concatenate([vals[:, 0], vals[:, 1]])
        return vals


def taylor_hood_spaces(mesh: Mesh2D) -> tuple[FESpace, FESpace]:
    return FESpace(P2_CONTINUOUS_VECTOR, mesh), FESpace(P1_CONTINUOUS, mesh)


def scott_vogelius_spaces(mesh: Mesh2D) -> tuple[FESpace, FESpace]:
    return FESpace(P2_CONTINUOUS_VECTOR, mesh), FESpace(P1_DISCONTINUOUS, mesh)
