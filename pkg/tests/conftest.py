import numpy as np
import pytest

from ecavdg import euler
from ecavdg.dg import DGSpace
from ecavdg.mesh import build_mesh
from ecavdg.reference import build_reference_element


def random_primitive(rng, shape, dim):
    """Random admissible (rho, vel, p) with moderate ranges."""
    rho = rng.uniform(0.2, 3.0, shape)
    vel = rng.uniform(-2.0, 2.0, shape + (dim,))
    p = rng.uniform(0.2, 3.0, shape)
    return rho, vel, p


def random_state(rng, shape, dim, gamma=euler.GAMMA):
    rho, vel, p = random_primitive(rng, shape, dim)
    return euler.primitive_to_conservative(rho, vel, p, gamma)


def smooth_random_state(rng, space, amplitude=0.3):
    """Admissible state built from a few random low-order Fourier modes."""
    x = space.x
    lo = np.array([b[0] for b in space.mesh.bounds])
    L = np.array([b[1] - b[0] for b in space.mesh.bounds])
    X = (x if space.dim > 1 else x[..., None]) - lo
    X = 2 * np.pi * X / L

    def field():
        out = 0.0
        for _ in range(3):
            k = rng.integers(0, 3, space.dim)
            ph = rng.uniform(0, 2 * np.pi)
            out = out + rng.uniform(-1, 1) * np.cos(np.sum(k * X, axis=-1) + ph)
        return out / 3

    rho = 1.0 + amplitude * field()
    vel = np.stack([0.5 * field() for _ in range(space.dim)], axis=-1)
    p = 1.0 + amplitude * field()
    return euler.primitive_to_conservative(rho, vel, p)


def rough_random_state(rng, space):
    """Admissible state with independent random nodal values (triggers correction)."""
    return random_state(rng, space.x.shape[:2], space.dim)


def make_space(dim, N, cells, bounds=None, boundary="periodic"):
    if bounds is None:
        bounds = ((0.0, 2 * np.pi),) * dim
    return DGSpace(build_mesh(dim, bounds, cells, boundary), build_reference_element(N))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
