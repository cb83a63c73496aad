"""Compressible Euler physics for an ideal gas.

Conservative states are arrays whose last axis holds ``(rho, rho*u_1, ...,
rho*u_d, E)``; the spatial dimension is inferred from its length. The entropy
pair is ``S = -rho*s`` with ``s = log(p / rho**gamma)``; for this scaling of
``S`` the compatible potentials are ``psi_m = (gamma-1) rho u_m``.
"""

from __future__ import annotations

import numpy as np

GAMMA = 1.4


class NonPhysicalState(ValueError):
    """Nonpositive density or pressure.

    ``index`` is the array index of the first offending point (for solver
    states this is ``(element, node)``); ``time`` is filled in by the time
    integrator when known.
    """

    def __init__(self, reason, index=None, value=None, time=None):
        self.reason = reason
        self.index = index
        self.value = value
        self.time = time
        super().__init__(self._message())

    def _message(self):
        msg = self.reason
        if self.index is not None:
            msg += f" at index {tuple(int(i) for i in self.index)}"
        if self.value is not None:
            msg += f" (value {self.value:.6e})"
        if self.time is not None:
            msg += f" at t={self.time:.6e}"
        return msg

    def with_time(self, time):
        self.time = time
        self.args = (self._message(),)
        return self

    def record(self):
        return {
            "reason": self.reason,
            "index": None if self.index is None else [int(i) for i in self.index],
            "value": None if self.value is None else float(self.value),
            "time": None if self.time is None else float(self.time),
        }


def _dot(a, b):
    """Contraction over the last axis (faster than ``np.sum`` for short axes)."""
    return np.einsum("...i,...i->...", a, b)


def _check_positive(arr, what):
    bad = ~(arr > 0)
    if np.any(bad):
        idx = np.argwhere(bad)[0]
        raise NonPhysicalState(f"nonpositive {what}", tuple(idx), float(arr[tuple(idx)]))


def dimension(u):
    return np.shape(u)[-1] - 2


def pressure(u, gamma=GAMMA):
    rho = u[..., 0]
    m = u[..., 1:-1]
    return (gamma - 1) * (u[..., -1] - 0.5 * _dot(m, m) / rho)


def primitive_to_conservative(rho, vel, p, gamma=GAMMA):
    """``(rho, velocity, p)`` to conservative variables.

    ``vel`` has a trailing axis of length ``d`` (a scalar or 1D-shaped array
    is accepted for ``d = 1``).
    """
    rho = np.asarray(rho, dtype=float)
    p = np.asarray(p, dtype=float)
    vel = np.asarray(vel, dtype=float)
    if vel.ndim == rho.ndim:
        vel = vel[..., None]
    _check_positive(rho, "density")
    _check_positive(p, "pressure")
    E = p / (gamma - 1) + 0.5 * rho * _dot(vel, vel)
    return np.concatenate([rho[..., None], rho[..., None] * vel, E[..., None]], axis=-1)


def conservative_to_primitive(u, gamma=GAMMA):
    """Return ``(rho, velocity, p)``; velocity keeps a trailing axis of length ``d``."""
    u = np.asarray(u, dtype=float)
    rho = u[..., 0]
    _check_positive(rho, "density")
    vel = u[..., 1:-1] / rho[..., None]
    p = pressure(u, gamma)
    _check_positive(p, "pressure")
    return rho, vel, p


def check_admissible(u, gamma=GAMMA):
    conservative_to_primitive(u, gamma)


def flux(u, direction, gamma=GAMMA, p=None):
    """Physical flux in coordinate ``direction`` (0-based)."""
    rho = u[..., 0]
    if p is None:
        _, _, p = conservative_to_primitive(u, gamma)
    un = u[..., 1 + direction] / rho
    f = u * un[..., None]
    f[..., 1 + direction] += p
    f[..., -1] += p * un
    return f


def normal_flux(u, normal, gamma=GAMMA, p=None):
    """``sum_m n_m f_m(u)`` for a normal of length ``d`` (broadcastable)."""
    rho = u[..., 0]
    if p is None:
        _, _, p = conservative_to_primitive(u, gamma)
    normal = np.asarray(normal, dtype=float)
    un = _dot(u[..., 1:-1], normal) / rho
    f = u * un[..., None]
    f[..., 1:-1] += p[..., None] * normal
    f[..., -1] += p * un
    return f


def physical_entropy(u, gamma=GAMMA):
    rho, _, p = conservative_to_primitive(u, gamma)
    return np.log(p) - gamma * np.log(rho)


def entropy(u, gamma=GAMMA):
    """Mathematical entropy ``S = -rho * log(p / rho**gamma)``."""
    return -u[..., 0] * physical_entropy(u, gamma)


def entropy_potential(u, direction, gamma=GAMMA):
    """``psi_m = v . f_m - F_m = (gamma-1) rho u_m``."""
    return (gamma - 1) * u[..., 1 + direction]


def entropy_flux(u, direction, gamma=GAMMA):
    """``F_m = v . f_m - psi_m``; equals ``-rho s u_m`` for this entropy pair."""
    v = entropy_variables(u, gamma)
    return _dot(v, flux(u, direction, gamma)) - entropy_potential(u, direction, gamma)


def entropy_variables(u, gamma=GAMMA):
    """``v = dS/du``.

    ``v = (gamma - s - (gamma-1) rho |u|^2 / (2p), (gamma-1) rho u_i / p,
    -(gamma-1) rho / p)``.
    """
    rho, vel, p = conservative_to_primitive(u, gamma)
    s = np.log(p) - gamma * np.log(rho)
    beta = (gamma - 1) * rho / p
    v = np.empty_like(np.asarray(u, dtype=float))
    v[..., 0] = gamma - s - 0.5 * beta * _dot(vel, vel)
    v[..., 1:-1] = beta[..., None] * vel
    v[..., -1] = -beta
    return v


def entropy_to_conservative(v, gamma=GAMMA):
    """Inverse of :func:`entropy_variables`.

    With ``beta = -v_E = (gamma-1) rho/p`` and ``vel = v_mom / beta`` the
    physical entropy follows from the first component, and
    ``rho = (beta/(gamma-1))**(1/(1-gamma)) * exp(-s/(gamma-1))``.
    """
    v = np.asarray(v, dtype=float)
    beta = -v[..., -1]
    _check_positive(beta, "temperature (-v_E)")
    vel = v[..., 1:-1] / beta[..., None]
    s = gamma - v[..., 0] - 0.5 * beta * _dot(vel, vel)
    # p / rho = (gamma-1)/beta and p = rho**gamma * e**s
    rho = (((gamma - 1) / beta) * np.exp(-s)) ** (1.0 / (gamma - 1))
    p = rho * (gamma - 1) / beta
    return primitive_to_conservative(rho, vel, p, gamma)


def entropy_jacobian(u, gamma=GAMMA):
    """Symmetric positive definite ``du/dv``, shape ``(..., n, n)``."""
    rho, vel, p = conservative_to_primitive(u, gamma)
    return _jacobian_from_primitive(u, rho, vel, p, gamma)


def _jacobian_from_primitive(u, rho, vel, p, gamma):
    n = u.shape[-1]
    E = u[..., -1]
    H = (E + p) / rho
    m = u[..., 1:-1]
    A = np.empty(u.shape + (n,))
    A[..., 0, :] = u
    A[..., :, 0] = u
    A[..., 1:-1, 1:-1] = m[..., :, None] * vel[..., None, :]
    d = n - 2
    for i in range(d):
        A[..., 1 + i, 1 + i] += p
    A[..., 1:-1, -1] = (rho * H)[..., None] * vel
    A[..., -1, 1:-1] = A[..., 1:-1, -1]
    A[..., -1, -1] = rho * H * H - gamma * p * p / (rho * (gamma - 1))
    A /= gamma - 1
    return A


def apply_entropy_jacobian(u, x, gamma=GAMMA, p=None):
    """``(du/dv) x`` without forming the matrix; ``x`` has the shape of ``u``."""
    rho = u[..., 0]
    m = u[..., 1:-1]
    E = u[..., -1]
    if p is None:
        _, _, p = conservative_to_primitive(u, gamma)
    vel = m / rho[..., None]
    rH = E + p
    cEE = rH * rH / rho - gamma * p * p / (rho * (gamma - 1))
    x0 = x[..., 0]
    xm = x[..., 1:-1]
    xE = x[..., -1]
    um = _dot(vel, xm)
    out = np.empty_like(x)
    out[..., 0] = rho * x0 + _dot(m, xm) + E * xE
    out[..., 1:-1] = m * (x0 + um)[..., None] + p[..., None] * xm + (rH * xE)[..., None] * vel
    out[..., -1] = E * x0 + rH * um + cEE * xE
    out /= gamma - 1
    return out


def de_dve(u, gamma=GAMMA):
    """Scalar thermal-diffusion weight ``sum_i (gamma-1)^2 ((E - rho u_i^2/2)/rho)^2``."""
    rho, vel, _ = conservative_to_primitive(u, gamma)
    E = u[..., -1]
    inner = (E[..., None] - 0.5 * rho[..., None] * vel * vel) / rho[..., None]
    return np.sum((gamma - 1) ** 2 * inner * inner, axis=-1)


def sound_speed(u, gamma=GAMMA):
    rho, _, p = conservative_to_primitive(u, gamma)
    return np.sqrt(gamma * p / rho)


def max_wavespeed(u, gamma=GAMMA):
    rho, vel, p = conservative_to_primitive(u, gamma)
    return np.max(np.sqrt(_dot(vel, vel)) + np.sqrt(gamma * p / rho))


def llf_flux(u_minus, u_plus, normal, gamma=GAMMA):
    """Local Lax-Friedrichs flux along ``normal``.

    ``0.5 (f_n(u-) + f_n(u+)) - 0.5 lam (u+ - u-)`` with
    ``lam = max(|u.n| + c)`` over the two trace states.
    """
    rm, vm, pm = conservative_to_primitive(u_minus, gamma)
    rp, vp, pp = conservative_to_primitive(u_plus, gamma)
    normal = np.asarray(normal, dtype=float)
    lam = np.maximum(
        np.abs(_dot(vm, normal)) + np.sqrt(gamma * pm / rm),
        np.abs(_dot(vp, normal)) + np.sqrt(gamma * pp / rp),
    )
    fm = normal_flux(u_minus, normal, gamma, pm)
    fp = normal_flux(u_plus, normal, gamma, pp)
    return 0.5 * (fm + fp) - 0.5 * lam[..., None] * (u_plus - u_minus)
