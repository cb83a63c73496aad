import numpy as np
import pytest

from ecavdg.dg import DGSpace
from ecavdg.mesh import OUTFLOW, build_mesh, physical_nodes
from ecavdg.reference import build_reference_element


def test_periodic_1d_wraps():
    m = build_mesh(1, (0, 2 * np.pi), 4)
    assert m.h[0] == pytest.approx(np.pi / 2)
    assert m.neighbors[3, 1] == 0 and m.neighbor_faces[3, 1] == 0
    assert m.neighbors[0, 0] == 3
    assert m.jacobian == pytest.approx(np.pi / 4)


def test_periodic_2d_counts():
    m = build_mesh(2, ((-1, 1), (-1, 1)), (2, 2))
    assert m.n_elements == 4 and m.n_faces == 4
    pairs = {tuple(sorted([(k, f), (int(m.neighbors[k, f]), int(m.neighbor_faces[k, f]))]))
             for k in range(4) for f in range(4)}
    assert len(pairs) == 8


def test_outflow_marks_ends():
    m = build_mesh(1, (0, 1), 2, "outflow")
    assert m.neighbors[0, 0] == OUTFLOW
    assert m.neighbors[1, 1] == OUTFLOW
    assert m.neighbors[0, 1] == 1 and m.neighbor_faces[0, 1] == 0


@pytest.mark.parametrize("dim,cells", [(1, 5), (2, (3, 4)), (2, (1, 1))])
def test_connectivity_is_involution(dim, cells):
    m = build_mesh(dim, ((0, 1),) * dim, cells)
    for k in range(m.n_elements):
        for f in range(m.n_faces):
            k2, f2 = m.neighbors[k, f], m.neighbor_faces[k, f]
            assert m.neighbors[k2, f2] == k and m.neighbor_faces[k2, f2] == f
            np.testing.assert_array_equal(m.normals[f], -m.normals[f2])


@pytest.mark.parametrize("args", [
    (3, ((0, 1),) * 3, 2),
    (1, (0, 1), 0),
    (2, ((0, 1), (0, 1)), (2, -1)),
    (1, (1, 0), 2),
    (1, (0, 1), 2, "reflecting"),
])
def test_build_mesh_rejects(args):
    with pytest.raises(ValueError):
        build_mesh(*args)


def test_physical_nodes_examples():
    np.testing.assert_allclose(physical_nodes(build_mesh(1, (0, 2), 1), build_reference_element(1)), [[0, 2]])
    x = physical_nodes(build_mesh(1, (0, 2), 2), build_reference_element(2))
    np.testing.assert_allclose(x[0], [0, 0.5, 1])
    x = physical_nodes(build_mesh(2, ((0, 1), (0, 1)), 1), build_reference_element(1))
    np.testing.assert_allclose(x[0], [[0, 0], [1, 0], [0, 1], [1, 1]])


@pytest.mark.parametrize("cells", [3, 7, 130])
def test_shared_endpoints_bitwise(cells):
    x = physical_nodes(build_mesh(1, (-1, 1), cells), build_reference_element(3))
    np.testing.assert_array_equal(x[:-1, -1], x[1:, 0])


@pytest.mark.parametrize("dim,cells", [(1, 7), (2, (3, 5))])
def test_quadrature_measure(dim, cells):
    bounds = ((0.0, 2.0), (-1.0, 0.5))[:dim]
    m = build_mesh(dim, bounds, cells)
    sp = DGSpace(m, build_reference_element(3))
    assert sp.total(np.ones((sp.K, sp.Np))) == pytest.approx(m.measure, rel=1e-12)
    # surface weights of one element sum to its perimeter (2 in 1D: two points)
    per = sp.face_weights.sum()
    expected = 2.0 if dim == 1 else 2 * (m.h[0] + m.h[1])
    assert per == pytest.approx(expected, rel=1e-12)


def test_face_nodes_sit_on_faces():
    m = build_mesh(2, ((0, 1), (0, 2)), (2, 3))
    sp = DGSpace(m, build_reference_element(2))
    xf = sp.face_values(sp.x)
    for f in range(4):
        d, side = divmod(f, 2)
        for k in range(sp.K):
            ix, iy = k % 2, k // 2
            lo = (ix * m.h[0], iy * m.h[1])[d]
            assert np.allclose(xf[k, f, :, d], lo + side * m.h[d])
    # traces across periodic faces coincide modulo the period
    ext = sp.exterior(xf)
    diff = (ext - xf)[..., 0] % 1.0
    assert np.allclose(np.minimum(diff, 1 - diff)[:, :2], 0)
