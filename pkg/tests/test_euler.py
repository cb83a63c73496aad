import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from conftest import random_state
from ecavdg import euler

G = euler.GAMMA


def fd_gradient(fun, u, h=1e-6):
    """Central differences of a scalar function of a single state vector."""
    g = np.zeros_like(u)
    for i in range(u.size):
        e = np.zeros_like(u)
        e[i] = h
        g[i] = (fun(u + e) - fun(u - e)) / (2 * h)
    return g


def fd_jacobian(fun, u, h=1e-6):
    cols = []
    for i in range(u.size):
        e = np.zeros_like(u)
        e[i] = h
        cols.append((fun(u + e) - fun(u - e)) / (2 * h))
    return np.stack(cols, axis=-1)


def test_primitive_examples():
    np.testing.assert_allclose(euler.primitive_to_conservative(1.0, 0.0, 1.0), [1, 0, 2.5])
    np.testing.assert_allclose(euler.primitive_to_conservative(1.0, 2.0, 0.4), [1, 2, 3.0])


@pytest.mark.parametrize("dim", [1, 2])
def test_primitive_round_trip(dim, rng):
    u = random_state(rng, (1000,), dim)
    rho, vel, p = euler.conservative_to_primitive(u)
    np.testing.assert_allclose(euler.primitive_to_conservative(rho, vel, p), u, rtol=1e-13, atol=1e-13)


@pytest.mark.parametrize("bad", [[0.0, 0.0, 1.0], [-1.0, 0.0, 1.0], [1.0, 2.0, 1.0], [1.0, 0.0, np.nan]])
def test_nonphysical_detected(bad):
    u = np.array([[1.0, 0.0, 2.5], bad])
    with pytest.raises(euler.NonPhysicalState) as info:
        euler.check_admissible(u)
    assert info.value.index[0] == 1
    rec = info.value.with_time(0.5).record()
    assert rec["time"] == 0.5 and rec["index"][0] == 1
    assert "t=5.000000e-01" in str(info.value)


def test_flux_examples():
    np.testing.assert_allclose(euler.flux(np.array([1.0, 0.0, 2.5]), 0), [0, 1, 0])
    u = np.array([1.0, 1.0, 0.0, 3.0])
    np.testing.assert_allclose(euler.flux(u, 0), [1, 2, 0, 4])
    np.testing.assert_allclose(euler.flux(u, 1), [0, 0, 1, 0])


def test_normal_flux_matches_directional(rng):
    u = random_state(rng, (50,), 2)
    n = np.array([0.6, -0.8])
    np.testing.assert_allclose(euler.normal_flux(u, n), 0.6 * euler.flux(u, 0) - 0.8 * euler.flux(u, 1), rtol=1e-13)


def test_entropy_examples():
    u = np.array([1.0, 0.0, 2.5])
    assert euler.entropy(u) == pytest.approx(0.0, abs=1e-15)
    assert euler.entropy_potential(u, 0) == 0.0
    u = np.array([1.0, 2.0, 3.0])
    # psi = (gamma - 1) rho u for S = -rho s
    assert euler.entropy_potential(u, 0) == pytest.approx((G - 1) * 2.0)
    # F = v.f - psi equals -rho s u
    assert euler.entropy_flux(u, 0) == pytest.approx(-2.0 * np.log(0.4), rel=1e-13)


@pytest.mark.parametrize("dim", [1, 2])
def test_entropy_flux_is_rho_s_u(dim, rng):
    u = random_state(rng, (200,), dim)
    s = euler.physical_entropy(u)
    for m in range(dim):
        np.testing.assert_allclose(euler.entropy_flux(u, m), -s * u[:, 1 + m], rtol=1e-11, atol=1e-12)


def test_entropy_variable_examples():
    v = euler.entropy_variables(np.array([1.0, 0.0, 2.5]))
    assert v[-1] == pytest.approx(-0.4)
    assert v[1] == 0.0


@pytest.mark.parametrize("dim", [1, 2])
def test_entropy_variables_match_fd(dim, rng):
    for u in random_state(rng, (20,), dim):
        g = fd_gradient(euler.entropy, u)
        np.testing.assert_allclose(euler.entropy_variables(u), g, atol=1e-6, rtol=1e-6)


@pytest.mark.parametrize("dim", [1, 2])
def test_entropy_variable_round_trip(dim, rng):
    u = random_state(rng, (1000,), dim)
    v = euler.entropy_variables(u)
    np.testing.assert_allclose(euler.entropy_variables(euler.entropy_to_conservative(v)), v, rtol=1e-11, atol=1e-11)
    np.testing.assert_allclose(euler.entropy_to_conservative(v), u, rtol=1e-11, atol=1e-11)


@pytest.mark.parametrize("dim", [1, 2])
def test_jacobian_spd_and_inverse_of_fd(dim, rng):
    u = random_state(rng, (1000,), dim)
    J = euler.entropy_jacobian(u)
    assert np.max(np.abs(J - np.swapaxes(J, -1, -2))) < 1e-12 * np.max(np.abs(J))
    assert np.min(np.linalg.eigvalsh(J)) > 0
    for k in range(10):
        dvdu = fd_jacobian(euler.entropy_variables, u[k])
        np.testing.assert_allclose(J[k] @ dvdu, np.eye(dim + 2), atol=1e-5)


@pytest.mark.parametrize("dim", [1, 2])
def test_matrix_free_jacobian(dim, rng):
    u = random_state(rng, (300,), dim)
    x = rng.standard_normal(u.shape)
    J = euler.entropy_jacobian(u)
    np.testing.assert_allclose(euler.apply_entropy_jacobian(u, x), np.einsum("kab,kb->ka", J, x), rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("dim", [1, 2])
def test_entropy_convex(dim, rng):
    for u in random_state(rng, (10,), dim):
        H = fd_jacobian(euler.entropy_variables, u)
        H = 0.5 * (H + H.T)
        assert np.min(np.linalg.eigvalsh(H)) > 0


@pytest.mark.parametrize("dim", [1, 2])
def test_entropy_flux_compatibility(dim, rng):
    # v^T df/du = dF/du
    for u in random_state(rng, (10,), dim):
        v = euler.entropy_variables(u)
        for m in range(dim):
            A = fd_jacobian(lambda w: euler.flux(w, m), u)
            dF = fd_gradient(lambda w: euler.entropy_flux(w, m), u)
            np.testing.assert_allclose(v @ A, dF, atol=1e-5, rtol=1e-5)


def test_de_dve_examples():
    assert euler.de_dve(np.array([1.0, 0.0, 1.0])) == pytest.approx(0.16)
    assert euler.de_dve(np.array([1.0, 0.0, 0.0, 1.0])) == pytest.approx(0.32)
    assert euler.de_dve(np.array([1.0, 0.0, 2.0])) == pytest.approx(4 * 0.16)


@settings(max_examples=50, deadline=None)
@given(arrays(float, (3,), elements=st.floats(0.1, 5.0)), st.floats(-3, 3), st.floats(-3, 3))
def test_de_dve_positive(prim, u1, u2):
    rho, p, _ = prim
    u = euler.primitive_to_conservative(rho, np.array([u1, u2]), p)
    assert euler.de_dve(u) > 0


def test_llf_consistency_and_symmetry(rng):
    a = random_state(rng, (30,), 2)
    b = random_state(rng, (30,), 2)
    n = np.array([0.0, 1.0])
    np.testing.assert_allclose(euler.llf_flux(a, a, n), euler.normal_flux(a, n), rtol=1e-14)
    np.testing.assert_allclose(euler.llf_flux(a, b, n), -euler.llf_flux(b, a, -n), rtol=1e-13, atol=1e-13)


def test_llf_sod_pair():
    left = euler.primitive_to_conservative(1.0, 0.0, 1.0)
    right = euler.primitive_to_conservative(0.125, 0.0, 0.1)
    n = np.array([1.0])
    lam = max(np.sqrt(G * 1.0 / 1.0), np.sqrt(G * 0.1 / 0.125))
    assert lam == pytest.approx(np.sqrt(1.4))
    central = 0.5 * (euler.normal_flux(left, n) + euler.normal_flux(right, n))
    np.testing.assert_allclose(central - euler.llf_flux(left, right, n), 0.5 * lam * (right - left), rtol=1e-14)


def test_wavespeed(rng):
    u = euler.primitive_to_conservative(np.array([1.0, 0.5]), np.array([[3.0, 4.0], [0.0, 0.0]]), np.array([1.0, 1.0]))
    expected = max(5 + np.sqrt(1.4), np.sqrt(1.4 / 0.5))
    assert euler.max_wavespeed(u) == pytest.approx(expected)
