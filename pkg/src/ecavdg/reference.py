"""One-dimensional LGL nodal operators on [-1, 1] and their tensor-product
extensions.

All operators are built once per polynomial degree and never mutated, so a
:class:`ReferenceElement` can be shared freely.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

MAX_DEGREE = 40
FILTER_KINDS = ("step", "exponential", "quadratic")


def legendre(x, n):
    """Legendre polynomials ``P_0 .. P_n`` at ``x``, shape ``(len(x), n+1)``."""
    x = np.asarray(x, dtype=float)
    P = np.zeros((x.size, n + 1))
    P[:, 0] = 1.0
    if n >= 1:
        P[:, 1] = x
    for k in range(2, n + 1):
        P[:, k] = ((2 * k - 1) * x * P[:, k - 1] - (k - 1) * P[:, k - 2]) / k
    return P


def build_lgl(N):
    """Legendre-Gauss-Lobatto nodes and weights of degree ``N``.

    Newton iteration on :math:`(1-x^2)P_N'(x)` started from the
    Chebyshev-Gauss-Lobatto points.

    Returns
    -------
    nodes, weights : ndarray
        ``N+1`` ascending nodes with exact endpoints ``-1`` and ``1``, and the
        matching positive quadrature weights.
    """
    if int(N) != N or N < 1:
        raise ValueError(f"LGL degree must be an integer >= 1, got {N!r}")
    if N > MAX_DEGREE:
        raise ValueError(f"LGL degree {N} exceeds the supported maximum {MAX_DEGREE}")
    N = int(N)

    x = -np.cos(np.pi * np.arange(N + 1) / N)
    for _ in range(100):
        P = legendre(x, N)
        dx = (x * P[:, N] - P[:, N - 1]) / ((N + 1) * P[:, N])
        x = x - dx
        if np.max(np.abs(dx)) < 1e-15:
            break

    # symmetrize and pin the endpoints
    x = 0.5 * (x - x[::-1])
    x[0], x[-1] = -1.0, 1.0
    if N % 2 == 0:
        x[N // 2] = 0.0

    P = legendre(x, N)
    w = 2.0 / (N * (N + 1) * P[:, N] ** 2)
    w = 0.5 * (w + w[::-1])
    return x, w


def orthonormal_vandermonde(x, N):
    """``V[i, j] = phi_j(x_i)`` with ``phi_j = sqrt((2j+1)/2) P_j``."""
    scale = np.sqrt((2 * np.arange(N + 1) + 1) / 2.0)
    return legendre(x, N) * scale


def lagrange_derivative(x):
    """Differentiation matrix of the Lagrange interpolant through ``x``.

    Uses barycentric weights; the diagonal is the negative row sum so the
    matrix annihilates constants to roundoff.
    """
    n = len(x)
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    lam = 1.0 / np.prod(diff, axis=1)
    D = (lam[None, :] / lam[:, None]) / diff
    np.fill_diagonal(D, 0.0)
    D[np.arange(n), np.arange(n)] = -D.sum(axis=1)
    return D


@dataclass(frozen=True)
class ReferenceElement:
    """Degree-``N`` LGL collocation operators on the reference interval."""

    degree: int
    nodes: np.ndarray
    weights: np.ndarray
    mass: np.ndarray
    diff: np.ndarray
    vandermonde: np.ndarray
    vandermonde_inv: np.ndarray
    boundary: np.ndarray
    # M^{-1} D^T M, used by weak-form volume terms
    weak_diff: np.ndarray = field(repr=False)

    @property
    def n_nodes(self):
        return self.degree + 1


def build_reference_element(N):
    nodes, weights = build_lgl(N)
    N = int(N)
    M = np.diag(weights)
    D = lagrange_derivative(nodes)
    V = orthonormal_vandermonde(nodes, N)
    Vinv = np.linalg.inv(V)
    B = np.zeros((N + 1, N + 1))
    B[0, 0], B[N, N] = -1.0, 1.0

    Q = M @ D
    sbp = np.max(np.abs(Q + Q.T - B))
    if sbp > 1e-10:
        raise RuntimeError(f"SBP residual {sbp:.3e} for degree {N}")

    weak = (D.T * weights[None, :]) / weights[:, None]
    return ReferenceElement(
        degree=N, nodes=nodes, weights=weights, mass=M, diff=D,
        vandermonde=V, vandermonde_inv=Vinv, boundary=B, weak_diff=weak,
    )


@dataclass(frozen=True)
class FilterKernel:
    """Modal filter kernel.

    ``kind`` is one of ``step``, ``exponential`` or ``quadratic``; ``cutoff``
    is the highest mode left untouched (zeroed, for the high-pass kernels)
    and is ignored by the quadratic kernel.
    """

    kind: str = "exponential"
    cutoff: int = 0

    def __post_init__(self):
        if self.kind not in FILTER_KINDS:
            raise ValueError(f"unknown filter kind {self.kind!r}; expected one of {FILTER_KINDS}")
        if int(self.cutoff) != self.cutoff or self.cutoff < 0:
            raise ValueError(f"filter cutoff must be a nonnegative integer, got {self.cutoff!r}")


def filter_diagonal(kernel, N):
    """Diagonal modal weights ``F_0 .. F_N`` for ``kernel`` at degree ``N``."""
    if kernel.kind != "quadratic" and kernel.cutoff > N:
        raise ValueError(f"filter cutoff {kernel.cutoff} exceeds degree {N}")
    k = np.arange(N + 1, dtype=float)
    Mc = kernel.cutoff
    if kernel.kind == "step":
        return np.where(k > Mc, 1.0, 0.0)
    if kernel.kind == "exponential":
        F = np.zeros(N + 1)
        hi = k > Mc
        F[hi] = np.exp(-(((k[hi] - N) / (k[hi] - Mc)) ** 2))
        return F
    # 1-based mode index i = k + 1
    return (k / N) ** 2


def filter_matrix(kernel, ref):
    """Nodal filter ``V diag(F) V^{-1}`` for ``kernel`` on ``ref``."""
    F = filter_diagonal(kernel, ref.degree)
    return filter_from_diagonal(F, ref)


def filter_from_diagonal(F, ref):
    return (ref.vandermonde * np.asarray(F, dtype=float)[None, :]) @ ref.vandermonde_inv


def tensor_filter_2d(f1d):
    """Tensor-product filter on the x-fastest ``(N+1)**2`` node layout."""
    f1d = np.asarray(f1d, dtype=float)
    return np.kron(f1d, f1d)


def tensor_mass_2d(ref):
    return np.kron(ref.mass, ref.mass)
