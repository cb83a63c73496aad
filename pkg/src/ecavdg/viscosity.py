"""Entropy-correction artificial viscosity with several viscosity models.

Per element ``k`` the entropy volume residual ``delta_k`` measures how far
the convective discretization is from the cell entropy inequality, each
active model ``m`` has a dissipation rate ``r_m >= 0`` (its entropy
production per unit coefficient), and the coefficients are the minimum-norm
nonnegative solution of ``r . eps = -min(0, delta_k)``.

All viscous terms use a BR-1 discretization in entropy variables:

* ``Theta_i = dv/dx_i + M^{-1} <[[v]] n_i / 2, w>`` (gradient with jump lift),
* ``sigma_i = eps K_ij Theta_j`` (nodal, i.e. collocation projection),
* ``g = sum_i -(sigma_i, dw/dx_i) + <{sigma_i} n_i, w>``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import euler
from .reference import FilterKernel, filter_matrix

REGULARIZATION = 1e-14
RATE_ROUNDOFF = 1e-12
MODEL_KINDS = ("laplacian", "svard_thermal", "svv")


@dataclass(frozen=True)
class ViscosityModelSpec:
    """One viscosity model. ``kernel`` is only used (and required) for ``svv``."""

    kind: str
    kernel: FilterKernel | None = None

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"unknown viscosity model {self.kind!r}; expected one of {MODEL_KINDS}")

    @property
    def label(self):
        return self.kind

    def resolved(self, N):
        """Fill in the default SVV kernel (exponential, cutoff ceil(N/2))."""
        if self.kind == "svv" and self.kernel is None:
            return ViscosityModelSpec("svv", FilterKernel("exponential", math.ceil(N / 2)))
        return self


def parse_models(models):
    """Accept specs, kind strings or ``{"kind": ..., "filter": ..., "cutoff": ...}`` dicts."""
    out = []
    for m in models:
        if isinstance(m, ViscosityModelSpec):
            out.append(m)
        elif isinstance(m, str):
            out.append(ViscosityModelSpec(m))
        else:
            m = dict(m)
            kernel = None
            if m.get("filter") is not None or m.get("cutoff") is not None:
                kernel = FilterKernel(m.get("filter", "exponential"), int(m.get("cutoff", 0)))
            out.append(ViscosityModelSpec(m["kind"], kernel))
    if not out:
        raise ValueError("at least one viscosity model is required")
    return out


@dataclass
class ViscosityReport:
    """Per-element residuals, model rates and solved coefficients.

    ``delta`` has shape ``(K,)``; ``r`` and ``eps`` have shape ``(K, M)``
    with columns in model order.
    """

    delta: np.ndarray
    r: np.ndarray
    eps: np.ndarray
    kinds: tuple = ()

    def element(self, k):
        return {"delta": float(self.delta[k]), "r": self.r[k].copy(), "eps": self.eps[k].copy()}

    def max_eps(self):
        return self.eps.max(axis=0) if self.eps.size else np.zeros(0)


@dataclass
class GradientField:
    """Entropy variables of a state and their BR-1 gradients.

    ``theta[i]`` is the DG derivative along ``x_i`` (local derivative plus
    jump lift); ``local[i]`` is the purely local derivative ``D v``.
    """

    u: np.ndarray
    v: np.ndarray
    local: np.ndarray
    theta: np.ndarray
    gamma: float = euler.GAMMA

    @cached_property
    def jacobian(self):
        return euler.entropy_jacobian(self.u, self.gamma)

    @cached_property
    def pressure(self):
        return euler.pressure(self.u, self.gamma)

    def apply_jacobian(self, x):
        """``(du/dv) x`` at every node."""
        return euler.apply_entropy_jacobian(self.u, x, self.gamma, self.pressure)

    @cached_property
    def _products(self):
        return {}

    def model_products(self, model, space):
        """Per direction, the (filtered) gradient ``z_i`` used by ``model``
        and ``K z_i``; cached because rates and fluxes share them."""
        key = (model.kind, model.kernel)
        if key not in self._products:
            if model.kind == "svard_thermal":
                z = [self.theta[i][..., -1] for i in range(space.dim)]
                kz = [self.thermal_weight * zi for zi in z]
            else:
                if model.kind == "svv":
                    F = filter_matrix(model.resolved(space.ref.degree).kernel, space.ref)
                    z = [space.apply_filter(F, self.theta[i]) for i in range(space.dim)]
                else:
                    z = [self.theta[i] for i in range(space.dim)]
                kz = [self.apply_jacobian(zi) for zi in z]
            self._products[key] = (z, kz)
        return self._products[key]

    @cached_property
    def thermal_weight(self):
        return euler.de_dve(self.u, self.gamma)


def br1_gradient(v, space):
    """BR-1 gradient of a nodal field ``v`` with shape ``(K, Np, ...)``.

    Returns ``(local, theta)``, each stacked over directions.
    """
    vf = space.face_values(v)
    half_jump = 0.5 * (space.exterior(vf) - vf)
    extra = (None,) * (v.ndim - 2)
    local = np.stack([space.deriv(v, i) for i in range(space.dim)])
    theta = np.stack([
        local[i] + space.lift(half_jump * space.normal_component(i)[(...,) + extra])
        for i in range(space.dim)
    ])
    return local, theta


def entropy_gradient(u, space, gamma=euler.GAMMA):
    v = euler.entropy_variables(u, gamma)
    local, theta = br1_gradient(v, space)
    return GradientField(u=u, v=v, local=local, theta=theta, gamma=gamma)


def entropy_residual(u, space, gamma=euler.GAMMA, grad=None):
    """``delta_k = sum_m -(dv/dx_m, f_m)_{D^k} + <psi_m n_m, 1>_{dD^k}``."""
    if grad is None:
        grad = entropy_gradient(u, space, gamma)
    p = euler.pressure(u, gamma)
    vol = 0.0
    for m in range(space.dim):
        f = euler.flux(u, m, gamma, p)
        vol = vol + euler._dot(grad.local[m], f)
    uf = space.face_values(u)
    psi_n = sum(euler.entropy_potential(uf, m, gamma) * space.normal_component(m) for m in range(space.dim))
    return -space.integrate(vol) + space.face_integrate(psi_n)


def model_dissipation_rate(model, grad, space):
    """Entropy dissipation per unit coefficient of ``model`` on each element."""
    z, kz = grad.model_products(model.resolved(space.ref.degree), space)
    if model.kind == "svard_thermal":
        dens = sum(zi * kzi for zi, kzi in zip(z, kz))
    else:
        dens = sum(euler._dot(zi, kzi) for zi, kzi in zip(z, kz))
    return space.integrate(dens)


def _deficit(delta_k):
    # -min(0, delta) without producing negative zeros
    return np.maximum(-np.asarray(delta_k, dtype=float), 0.0) + 0.0


def clamp_rates(r):
    r = np.array(r, dtype=float)
    if np.any(r < -RATE_ROUNDOFF):
        raise RuntimeError(f"negative dissipation rate {r.min():.3e}; the viscous operator is not dissipative")
    return np.maximum(r, 0.0)


def solve_coefficients(delta_k, r, weights=None):
    """Minimum-norm coefficients with ``r . eps = -min(0, delta_k)``.

    Closed form ``eps_i = t r_i / (reg + sum_j r_j^2)`` with
    ``t = -min(0, delta_k)`` and ``reg = 1e-14``. Works elementwise on
    ``delta_k`` of shape ``(K,)`` with ``r`` of shape ``(K, M)``, or on a
    scalar and a length-``M`` vector. ``weights`` is an optional positive
    diagonal of the objective ``eps^T W eps / 2``.
    """
    r = clamp_rates(r)
    target = _deficit(delta_k)
    if weights is None:
        denom = REGULARIZATION + np.sum(r ** 2, axis=-1)
        return target[..., None] * r / denom[..., None]
    winv = 1.0 / np.asarray(weights, dtype=float)
    denom = REGULARIZATION + np.sum(winv * r ** 2, axis=-1)
    return target[..., None] * (winv * r) / denom[..., None]


def monolithic_coefficient(delta_k, r):
    """Single-model coefficient ``-min(0, delta) r / (reg + r^2)``."""
    r = clamp_rates(r)
    target = _deficit(delta_k)
    return target * r / (REGULARIZATION + r ** 2)


def _central_divergence(sigma, space):
    """``sum_i -M^{-1} D^T M sigma_i + lift({sigma_i} n_i)`` for stacked ``sigma``."""
    out = 0.0
    for i in range(space.dim):
        s = sigma[i]
        sf = space.face_values(s)
        avg = 0.5 * (sf + space.exterior(sf))
        nrm = space.normal_component(i)[(...,) + (None,) * (s.ndim - 2)]
        out = out - space.weak_deriv(s, i) + space.lift(avg * nrm)
    return out


def viscous_flux(model, eps, grad, space):
    """Nodal viscous fluxes ``sigma_i`` of ``model`` (stacked over directions)."""
    model = model.resolved(space.ref.degree)
    e = np.asarray(eps, dtype=float)[:, None]
    _, kz = grad.model_products(model, space)
    if model.kind == "svard_thermal":
        return np.stack([e * kzi for kzi in kz])
    sigma = np.stack([e[..., None] * kzi for kzi in kz])
    if model.kind == "svv":
        F = filter_matrix(model.kernel, space.ref)
        sigma = np.stack([space.apply_filter(F, si) for si in sigma])
    return sigma


def viscous_rhs(model, eps, grad, space):
    """Nodal viscous residual ``g_visc`` of ``model`` with coefficients ``eps`` (per element)."""
    sigma = viscous_flux(model, eps, grad, space)
    if model.kind == "svard_thermal":
        g = np.zeros_like(grad.u)
        g[..., -1] = _central_divergence(sigma, space)
        return g
    return _central_divergence(sigma, space)


def compute_all(models, u, space, gamma=euler.GAMMA, weights=None):
    """Gradient, residual, rates, coefficients and summed viscous residual.

    Returns ``(report, g)`` where ``g`` has the shape of ``u``.
    """
    models = [m.resolved(space.ref.degree) for m in parse_models(models)]
    grad = entropy_gradient(u, space, gamma)
    delta = entropy_residual(u, space, gamma, grad)
    r = np.stack([model_dissipation_rate(m, grad, space) for m in models], axis=-1)
    eps = solve_coefficients(delta, r, weights)
    g = np.zeros_like(u)
    for j, m in enumerate(models):
        if np.any(eps[:, j]):
            g += viscous_rhs(m, eps[:, j], grad, space)
    report = ViscosityReport(delta=delta, r=clamp_rates(r), eps=eps, kinds=tuple(m.kind for m in models))
    return report, g
