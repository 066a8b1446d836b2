"""Conforming triangulations of the unit square with refinement operations."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass
class Mesh2D:
    """Triangle mesh: vertex coordinates plus counterclockwise index triples.

    Edge connectivity is derived at construction.  ``alfeld`` records whether
    the mesh was produced by barycentric refinement (required for the
    divergence-free velocity/pressure pair).
    """

    vertices: np.ndarray  # (nv, 2)
    triangles: np.ndarray  # (nt, 3), CCW
    alfeld: bool = False
    edges: np.ndarray = field(init=False)  # (ne, 2), sorted vertex pairs
    tri_edges: np.ndarray = field(init=False)  # (nt, 3), edge opposite local vertex i
    boundary_edges: np.ndarray = field(init=False)  # (nb, 2)

    def __post_init__(self):
        self.vertices = np.asarray(self.vertices, dtype=float)
        self.triangles = np.asarray(self.triangles, dtype=np.int64)
        self._build_edges()

    def _build_edges(self):
        index: dict[tuple[int, int], int] = {}
        counts: list[int] = []
        tri_edges = np.empty_like(self.triangles)
        for t, (a, b, c) in enumerate(self.triangles):
            # local edge i is opposite local vertex i
            for i, (p, q) in enumerate(((b, c), (c, a), (a, b))):
                key = (min(p, q), max(p, q))
                e = index.get(key)
                if e is None:
                    e = len(index)
                    index[key] = e
                    counts.append(0)
                counts[e] += 1
                tri_edges[t, i] = e
        self.edges = np.array(list(index.keys()), dtype=np.int64).reshape(-1, 2)
        self.tri_edges = tri_edges
        counts = np.array(counts)
        self.boundary_edges = self.edges[counts == 1]
        self._edge_counts = counts

    # -- queries ------------------------------------------------------------

    @property
    def num_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def num_triangles(self) -> int:
        return self.triangles.shape[0]

    @property
    def num_edges(self) -> int:
        return self.edges.shape[0]

    def triangle_vertices(self) -> np.ndarray:
        """(nt, 3, 2) coordinates of the triangle corners."""
        return self.vertices[self.triangles]

    def signed_areas(self) -> np.ndarray:
        v = self.triangle_vertices()
        d1 = v[:, 1] - v[:, 0]
        d2 = v[:, 2] - v[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def boundary_vertex_mask(self) -> np.ndarray:
        mask = np.zeros(self.num_vertices, dtype=bool)
        mask[self.boundary_edges.ravel()] = True
        return mask

    def boundary_edge_mask(self) -> np.ndarray:
        return self._edge_counts == 1

    def edge_midpoints(self) -> np.ndarray:
        return 0.5 * (self.vertices[self.edges[:, 0]] + self.vertices[self.edges[:, 1]])

    def validate(self, total_area: float = 1.0) -> None:
        """Check positive orientation, conformity and coverage of the square."""
        areas = self.signed_areas()
        if np.any(areas < 1e-14):
            raise ValueError("mesh contains a degenerate or misoriented triangle")
        if not np.all((self._edge_counts == 1) | (self._edge_counts == 2)):
            raise ValueError("mesh is not conforming")
        if abs(areas.sum() - total_area) > 1e-12:
            raise ValueError(
                f"triangles cover area {areas.sum():.15f}, expected {total_area}"
            )


def structured_mesh(n: int) -> Mesh2D:
    """Uniform n x n grid of the unit square, each cell split along (i,j)-(i+1,j+1)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    xs = np.linspace(0.0, 1.0, n + 1)
    X, Y = np.meshgrid(xs, xs, indexing="xy")
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return j * (n + 1) + i

    tris = []
    for j in range(n):
        for i in range(n):
            v00, v10 = vid(i, j), vid(i + 1, j)
            v01, v11 = vid(i, j + 1), vid(i + 1, j + 1)
            tris.append((v00, v10, v11))
            tris.append((v00, v11, v01))
    mesh = Mesh2D(vertices, np.array(tris))
    mesh.validate()
    return mesh


def barycentric_refine(mesh: Mesh2D) -> Mesh2D:
    """Split every triangle into three through its barycenter (Alfeld split)."""
    nv = mesh.num_vertices
    centers = mesh.triangle_vertices().mean(axis=1)
    vertices = np.vstack([mesh.vertices, centers])
    tris = []
    for t, (a, b, c) in enumerate(mesh.triangles):
        z = nv + t
        tris.extend([(a, b, z), (b, c, z), (c, a, z)])
    out = Mesh2D(vertices, np.array(tris), alfeld=True)
    out.validate()
    return out


def uniform_refine(mesh: Mesh2D) -> Mesh2D:
    """Split every triangle into four via edge midpoints (red refinement)."""
    nv = mesh.num_vertices
    vertices = np.vstack([mesh.vertices, mesh.edge_midpoints()])
    tris = []
    for t, (a, b, c) in enumerate(mesh.triangles):
        mbc, mca, mab = nv + mesh.tri_edges[t]
        tris.extend([
            (a, mab, mca),
            (mab, b, mbc),
            (mca, mbc, c),
            (mab, mbc, mca),
        ])
    out = Mesh2D(vertices, np.array(tris), alfeld=False)
    out.validate()
    return out


# -- plain-text import/export -----------------------------------------------
#
# Format (documented in the README):
#   line 1:        <num_vertices> <num_triangles>
#   next nv lines: x y
#   next nt lines: i j k          (0-based vertex indices, CCW)

def save_mesh(mesh: Mesh2D, path: str | Path) -> None:
    lines = [f"{mesh.num_vertices} {mesh.num_triangles}"]
    lines += [f"{x:.17g} {y:.17g}" for x, y in mesh.vertices]
    lines += [f"{a} {b} {c}" for a, b, c in mesh.triangles]
    Path(path).write_text("\n".join(lines) + "\n")


def load_mesh(path: str | Path) -> Mesh2D:
    tokens = Path(path).read_text().split()
    nv, nt = int(tokens[0]), int(tokens[1])
    flat = np.array(tokens[2:2 + 2 * nv], dtype=float)
    vertices = flat.reshape(nv, 2)
    tris = np.array(tokens[2 + 2 * nv:2 + 2 * nv + 3 * nt], dtype=np.int64).reshape(nt, 3)
    return Mesh2D(vertices, tris)
