"""Initial conditions, exact solutions and error norms for the experiments."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import euler
from .mesh import build_mesh

# Density wave: one period of sin(x - t) on [0, 2*pi]; a nominal mesh size h
# maps to round(2 / h) cells, i.e. h is measured on the reference interval
# [-1, 1] scaled to the period. See README for the choice.
DENSITY_WAVE_LENGTH = 2 * np.pi

# keeps the temporal error of the adaptive pair below the spatial error
DENSITY_WAVE_CFL = 0.5

# Kelvin-Helmholtz shear layer parameters
KHI_SLOPE = 15.0
KHI_PERTURBATION = 0.1


@dataclass(frozen=True)
class ProblemSpec:
    """A named experiment.

    ``initial(x)`` and ``exact(x, t)`` take node coordinates (``(..., )`` in
    1D, ``(..., 2)`` in 2D) and return ``(rho, velocity, p)`` with velocity
    carrying a trailing axis of length ``dim``. ``cfl`` is the default
    convective step cap handed to the step controller (``None``: purely
    error controlled). ``piecewise`` marks discontinuous initial data, which
    is sampled one-sidedly per element (see :meth:`initial_on`).
    """

    name: str
    dim: int
    bounds: tuple
    boundary: str
    initial: Callable
    t_end: float
    exact: Optional[Callable] = None
    gamma: float = euler.GAMMA
    description: str = ""
    cfl: Optional[float] = None
    piecewise: bool = False
    nominal_length: Optional[float] = None

    def cells_for(self, h):
        """Cells per dimension for a nominal mesh size ``h``.

        ``round(L / h)`` with ``L = nominal_length`` when set, otherwise the
        domain extent.
        """
        out = []
        for lo, hi in self.bounds:
            L = self.nominal_length if self.nominal_length is not None else hi - lo
            out.append(max(1, int(round(L / h))))
        return out[0] if self.dim == 1 else out

    def mesh(self, cells):
        return build_mesh(self.dim, self.bounds, cells, self.boundary)

    def initial_state(self, x):
        rho, vel, p = self.initial(x)
        return euler.primitive_to_conservative(rho, vel, p, self.gamma)

    def initial_on(self, space):
        """Initial nodal state on a :class:`~ecavdg.dg.DGSpace`."""
        x = space.interior_nodes() if self.piecewise else space.x
        return self.initial_state(x)

    def exact_state(self, x, t):
        if self.exact is None:
            raise ValueError(f"problem {self.name!r} has no exact solution")
        rho, vel, p = self.exact(x, t)
        return euler.primitive_to_conservative(rho, vel, p, self.gamma)


def _density_wave_exact(x, t):
    x = np.asarray(x, dtype=float)
    rho = 1.0 + 0.5 * np.sin(x - t)
    return rho, np.ones_like(x)[..., None], np.ones_like(x)


def density_wave(length=DENSITY_WAVE_LENGTH):
    """``(rho, u, p) = (1 + 0.5 sin(x - t), 1, 1)``, periodic on ``[0, length]``."""
    return ProblemSpec(
        name="density_wave", dim=1, bounds=((0.0, float(length)),), boundary="periodic",
        initial=lambda x: _density_wave_exact(x, 0.0), exact=_density_wave_exact, t_end=1.7,
        description="advected smooth density profile", cfl=DENSITY_WAVE_CFL, nominal_length=2.0,
    )


def density_wave_cells(h):
    """Cell count ``round(2 / h)`` for nominal mesh size ``h``."""
    return density_wave().cells_for(h)


def _receding_initial(x):
    x = np.asarray(x, dtype=float)
    u = np.where(x <= 0.0, -2.0, 2.0)
    return np.ones_like(x), u[..., None], np.full_like(x, 0.4)


def receding_flow():
    """Uniform ``rho = 1, p = 0.4`` with ``u = -2`` for ``x <= 0`` and ``u = 2`` otherwise."""
    return ProblemSpec(
        name="receding_flow", dim=1, bounds=((-1.0, 1.0),), boundary="outflow",
        initial=_receding_initial, t_end=0.18,
        description="symmetric double rarefaction", piecewise=True,
    )


def temperature(u, gamma=euler.GAMMA):
    """Nondimensional gas temperature ``p / rho``."""
    rho, _, p = euler.conservative_to_primitive(u, gamma)
    return p / rho


RIEMANN_STATES = (
    # (rho, u1, u2, p) for (x < 0.5, y < 0.5), (x < 0.5, y > 0.5),
    # (x > 0.5, y < 0.5), (x > 0.5, y > 0.5)
    (0.8, 0.0, 0.0, 1.0),
    (1.0, 3.0 / np.sqrt(17.0), 0.0, 1.0),
    (1.0, 0.0, 3.0 / np.sqrt(17.0), 1.0),
    (17.0 / 32.0, 0.0, 0.0, 0.4),
)


def _riemann_initial(x):
    x = np.asarray(x, dtype=float)
    right = x[..., 0] > 0.5
    top = x[..., 1] > 0.5
    quadrant = 2 * right + top
    table = np.array(RIEMANN_STATES)
    vals = table[quadrant]
    return vals[..., 0], vals[..., 1:3], vals[..., 3]


def riemann_2d():
    """Periodic four-quadrant Riemann problem on ``[-1, 1]^2``."""
    return ProblemSpec(
        name="riemann_2d", dim=2, bounds=((-1.0, 1.0), (-1.0, 1.0)), boundary="periodic",
        initial=_riemann_initial, t_end=0.14,
        description="four-quadrant Riemann data, periodic", piecewise=True,
    )


def _khi_initial(x):
    x = np.asarray(x, dtype=float)
    X, Y = x[..., 0], x[..., 1]
    B = np.tanh(KHI_SLOPE * Y + 7.5) - np.tanh(KHI_SLOPE * Y - 7.5)
    rho = 0.5 + 0.75 * B
    u1 = 0.5 * (B - 1.0)
    u2 = KHI_PERTURBATION * np.sin(2 * np.pi * X)
    return rho, np.stack([u1, u2], axis=-1), np.ones_like(X)


def kelvin_helmholtz():
    """Smoothed slab shear layer on ``[-1, 1]^2``.

    ``B = tanh(15 y + 7.5) - tanh(15 y - 7.5)``, ``rho = 0.5 + 0.75 B``,
    ``u = 0.5 (B - 1)``, ``v = 0.1 sin(2 pi x)``, ``p = 1``: a dense slab
    ``|y| < 0.5`` moving at ``u = 0.5`` inside light fluid moving at ``u = -0.5``.
    """
    return ProblemSpec(
        name="kelvin_helmholtz", dim=2, bounds=((-1.0, 1.0), (-1.0, 1.0)), boundary="periodic",
        initial=_khi_initial, t_end=25.0,
        description="Kelvin-Helmholtz shear layer",
    )


PROBLEMS = {
    "density_wave": density_wave,
    "receding_flow": receding_flow,
    "riemann_2d": riemann_2d,
    "kelvin_helmholtz": kelvin_helmholtz,
}


def get_problem(name):
    try:
        return PROBLEMS[name]()
    except KeyError:
        raise ValueError(f"unknown problem {name!r}; expected one of {sorted(PROBLEMS)}") from None


def l2_error(u, exact, space):
    """Per-variable discrete L2 error ``sqrt(sum_k sum_n w J (u - exact)^2)``.

    ``exact`` is a nodal array with the shape of ``u``.
    """
    diff = np.asarray(u) - np.asarray(exact)
    return np.sqrt(space.total(diff * diff))
