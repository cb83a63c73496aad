"""Nodal DG operators on a mesh: local derivatives, face traces, lifts and
quadrature.

Volume arrays have shape ``(K, Np, ...)`` with ``Np = (N+1)**dim`` nodes per
element ordered x fastest; any trailing axes (variables, matrix blocks) are
carried through. Face arrays have shape ``(K, n_faces, Nfp, ...)``.
"""

from __future__ import annotations

import numpy as np

from .mesh import OUTFLOW, physical_nodes


class DGSpace:
    """Mesh plus reference element, with the derived geometric factors."""

    def __init__(self, mesh, ref):
        self.mesh = mesh
        self.ref = ref
        self.dim = mesh.dim
        self.K = mesh.n_elements
        N1 = ref.n_nodes
        self.n1 = N1
        self.Np = N1 ** self.dim
        self.n_faces = mesh.n_faces
        self.normals = mesh.normals
        w = ref.weights

        if self.dim == 1:
            self.face_nodes = np.array([[0], [N1 - 1]])
            self.node_weights = w.copy()
            face_w = np.ones((2, 1))
        else:
            i = np.arange(N1)
            self.face_nodes = np.array([
                i * N1,                # x-low: i = 0, j varies
                i * N1 + N1 - 1,       # x-high
                i,                     # y-low: j = 0, i varies
                (N1 - 1) * N1 + i,     # y-high
            ])
            self.node_weights = np.outer(w, w).ravel()
            face_w = np.tile(w, (4, 1))
        self.Nfp = self.face_nodes.shape[1]

        # quadrature weight (including surface Jacobian) per face node
        self.face_weights = face_w * mesh.face_scale[:, None]
        self.mass_diag = self.node_weights * mesh.jacobian
        self.lift_coef = self.face_weights / self.mass_diag[self.face_nodes]
        # dense scatter of ((face, face node) -> volume node) with lift weights
        self._lift_matrix = np.zeros((self.Np, self.n_faces * self.Nfp))
        for f in range(self.n_faces):
            for j, n in enumerate(self.face_nodes[f]):
                self._lift_matrix[n, f * self.Nfp + j] = self.lift_coef[f, j]
        self.metric = tuple(2.0 / hd for hd in mesh.h)

        nbr = mesh.neighbors.copy()
        nbf = mesh.neighbor_faces.copy()
        own = np.broadcast_to(np.arange(self.K)[:, None], nbr.shape)
        ownf = np.broadcast_to(np.arange(self.n_faces)[None, :], nbr.shape)
        self.boundary_mask = nbr == OUTFLOW
        self._nbr = np.where(self.boundary_mask, own, nbr)
        self._nbf = np.where(self.boundary_mask, ownf, nbf)

        self.x = physical_nodes(mesh, ref)

    def interior_nodes(self, pull=1e-9):
        """Nodes moved toward their element centroid by a relative ``pull``.

        Sampling piecewise data here gives nodes on element boundaries the
        one-sided limit from their own element, so a jump located on a mesh
        face stays a face jump instead of landing inside an element.
        """
        c = self.x.mean(axis=1, keepdims=True)
        return c + (self.x - c) * (1.0 - pull)

    # volume operators -----------------------------------------------------

    def _apply_1d(self, A, u, direction):
        """Apply the 1D matrix ``A`` along ``direction`` of the tensor grid."""
        N1 = self.n1
        tail = u.shape[2:]
        t = int(np.prod(tail, dtype=int))
        if self.dim == 1:
            return (A @ u.reshape(self.K, N1, t)).reshape(u.shape)
        if direction == 0:
            # node index = j * N1 + i; contract over i
            out = A @ u.reshape(self.K * N1, N1, t)
        else:
            out = A @ u.reshape(self.K, N1, N1 * t)
        return out.reshape(u.shape)

    def deriv(self, u, direction):
        """Local (strong) derivative ``d u / d x_direction``."""
        return self.metric[direction] * self._apply_1d(self.ref.diff, u, direction)

    def weak_deriv(self, u, direction):
        """``M^{-1} D^T M u``: the nodal form of ``(u, dw/dx)``."""
        return self.metric[direction] * self._apply_1d(self.ref.weak_diff, u, direction)

    def apply_filter(self, F1, u):
        """Apply the nodal 1D filter matrix (tensorized in 2D)."""
        out = self._apply_1d(F1, u, 0)
        if self.dim == 2:
            out = self._apply_1d(F1, out, 1)
        return out

    # face operators -------------------------------------------------------

    def face_values(self, u):
        return u[:, self.face_nodes]

    def exterior(self, uf):
        """Neighbor traces matching ``uf``; outflow faces copy the interior trace."""
        return uf[self._nbr, self._nbf]

    def lift(self, g):
        """``M^{-1}`` times the surface quadrature of face data ``g``.

        ``g`` has shape ``(K, n_faces, Nfp, ...)``; the result is a volume
        array.
        """
        tail = g.shape[3:]
        t = int(np.prod(tail, dtype=int))
        g = np.broadcast_to(g, (self.K, self.n_faces, self.Nfp) + tail)
        out = self._lift_matrix @ g.reshape(self.K, self.n_faces * self.Nfp, t)
        return out.reshape((self.K, self.Np) + tail)

    def normal_component(self, direction):
        """Broadcastable ``n_direction`` per face, shape ``(n_faces, 1)``."""
        return self.normals[:, direction][:, None]

    # quadrature -----------------------------------------------------------

    def integrate(self, u):
        """Per-element quadrature ``(u, 1)_{D^k}`` over the node axis."""
        return np.einsum("kn...,n->k...", u, self.mass_diag)

    def face_integrate(self, g):
        """Per-element surface quadrature ``<g, 1>_{dD^k}``."""
        return np.einsum("kfj...,fj->k...", g, self.face_weights)

    def total(self, u):
        return self.integrate(u).sum(axis=0)
