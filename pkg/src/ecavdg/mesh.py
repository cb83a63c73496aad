"""Uniform Cartesian meshes of intervals (1D) and quadrilaterals (2D)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

OUTFLOW = -1
BOUNDARY_KINDS = ("periodic", "outflow")


@dataclass(frozen=True)
class Mesh:
    """Axis-aligned uniform mesh with affine element maps.

    Elements are numbered lexicographically with x fastest. Local faces are
    ordered ``x-low, x-high, y-low, y-high`` (only the first two in 1D), and
    ``neighbors[k, f]`` / ``neighbor_faces[k, f]`` give the element and local
    face on the other side of face ``f`` of element ``k``, or :data:`OUTFLOW`
    on a non-periodic domain boundary.
    """

    dim: int
    cells_per_dim: tuple
    bounds: tuple
    boundary: str
    h: tuple
    jacobian: float
    face_scale: np.ndarray
    neighbors: np.ndarray
    neighbor_faces: np.ndarray
    normals: np.ndarray
    vertices: tuple

    @property
    def n_elements(self):
        return int(np.prod(self.cells_per_dim))

    @property
    def n_faces(self):
        return 2 * self.dim

    @property
    def measure(self):
        return float(np.prod([hi - lo for lo, hi in self.bounds]))

    def element_index(self, *idx):
        """Global element number from per-dimension cell indices ``(ix[, iy])``."""
        if self.dim == 1:
            return int(idx[0])
        return int(idx[1]) * self.cells_per_dim[0] + int(idx[0])


def _as_pairs(dim, bounds):
    bounds = np.asarray(bounds, dtype=float)
    if dim == 1 and bounds.shape == (2,):
        bounds = bounds[None, :]
    if bounds.shape != (dim, 2):
        raise ValueError(f"bounds must give (low, high) for each of {dim} dimensions")
    return tuple((float(lo), float(hi)) for lo, hi in bounds)


def build_mesh(dim, bounds, cells_per_dim, boundary="periodic"):
    """Build a uniform Cartesian mesh.

    Parameters
    ----------
    dim : int
        1 or 2.
    bounds : sequence
        ``(low, high)`` in 1D, or one ``(low, high)`` pair per dimension.
    cells_per_dim : int or sequence of int
        Element counts; a scalar is repeated for every dimension.
    boundary : {"periodic", "outflow"}
    """
    if dim not in (1, 2):
        raise ValueError(f"only 1D and 2D meshes are supported, got dim={dim!r}")
    if boundary not in BOUNDARY_KINDS:
        raise ValueError(f"boundary must be one of {BOUNDARY_KINDS}, got {boundary!r}")
    cells = np.atleast_1d(np.asarray(cells_per_dim))
    if cells.size == 1:
        cells = np.repeat(cells, dim)
    if cells.size != dim or np.any(cells != np.round(cells)) or np.any(cells < 1):
        raise ValueError(f"cell counts must be {dim} positive integers, got {cells_per_dim!r}")
    cells = tuple(int(c) for c in cells)
    bounds = _as_pairs(dim, bounds)
    for lo, hi in bounds:
        if not hi > lo:
            raise ValueError(f"bounds must satisfy low < high, got ({lo}, {hi})")

    h = tuple((hi - lo) / n for (lo, hi), n in zip(bounds, cells))
    vertices = tuple(np.linspace(lo, hi, n + 1) for (lo, hi), n in zip(bounds, cells))
    jacobian = float(np.prod([hd / 2 for hd in h]))

    nf = 2 * dim
    K = int(np.prod(cells))
    neighbors = np.empty((K, nf), dtype=int)
    neighbor_faces = np.empty((K, nf), dtype=int)
    normals = np.zeros((nf, dim))
    face_scale = np.ones(nf)
    for f in range(nf):
        d, side = divmod(f, 2)
        normals[f, d] = 1.0 if side else -1.0
        if dim == 2:
            # surface Jacobian is half the tangential width
            face_scale[f] = h[1 - d] / 2

    idx = np.stack(np.unravel_index(np.arange(K), cells[::-1]), axis=-1)[:, ::-1]
    for f in range(nf):
        d, side = divmod(f, 2)
        step = 1 if side else -1
        nbr = idx.copy()
        nbr[:, d] += step
        off = (nbr[:, d] < 0) | (nbr[:, d] >= cells[d])
        nbr[:, d] %= cells[d]
        if dim == 1:
            flat = nbr[:, 0]
        else:
            flat = nbr[:, 1] * cells[0] + nbr[:, 0]
        fface = np.full(K, f ^ 1)
        if boundary == "outflow":
            flat = np.where(off, OUTFLOW, flat)
            fface = np.where(off, OUTFLOW, fface)
        neighbors[:, f] = flat
        neighbor_faces[:, f] = fface

    for arr in (neighbors, neighbor_faces, normals, face_scale):
        arr.setflags(write=False)
    return Mesh(
        dim=dim, cells_per_dim=cells, bounds=bounds, boundary=boundary, h=h,
        jacobian=jacobian, face_scale=face_scale, neighbors=neighbors,
        neighbor_faces=neighbor_faces, normals=normals, vertices=vertices,
    )


def physical_nodes(mesh, ref):
    """Physical node coordinates.

    Returns shape ``(K, N+1)`` in 1D and ``(K, (N+1)**2, 2)`` in 2D, nodes
    ordered x fastest within each element.
    """
    r = ref.nodes
    lo_w, hi_w = 0.5 * (1 - r), 0.5 * (1 + r)
    per_dim = []
    for d in range(mesh.dim):
        v = mesh.vertices[d]
        per_dim.append(v[:-1, None] * lo_w[None, :] + v[1:, None] * hi_w[None, :])
    if mesh.dim == 1:
        return per_dim[0]
    nx, ny = mesh.cells_per_dim
    Np = ref.n_nodes
    xe, ye = per_dim
    # element k = iy*nx + ix, node n = j*Np + i
    X = np.broadcast_to(xe[None, :, None, :], (ny, nx, Np, Np))
    Y = np.broadcast_to(ye[:, None, :, None], (ny, nx, Np, Np))
    out = np.stack([X, Y], axis=-1).reshape(nx * ny, Np * Np, 2)
    return np.ascontiguousarray(out)
