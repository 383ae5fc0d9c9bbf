import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import simple_problem
from lsnn.problems import get_problem
from lsnn.quadrature import (MeshError, build_domain_mesh, build_inflow_mesh, dump_mesh_csv,
                             integrate)


def test_unit_square_half():
    mesh = build_domain_mesh(((0, 1), (0, 1)), 0.5)
    assert mesh.points.tolist() == [[0.25, 0.25], [0.75, 0.25], [0.25, 0.75], [0.75, 0.75]]
    assert mesh.weight == 0.25


def test_counts():
    assert len(build_domain_mesh(((0, 1), (0, 1)), 0.01)) == 10_000
    cube = build_domain_mesh(((0, 1),) * 3, 0.5)
    assert len(cube) == 8 and cube.weight == 0.125


def test_no_point_on_boundary():
    mesh = build_domain_mesh(((0, 2), (0, 1)), 0.1)
    assert len(mesh) == 200
    assert np.all(mesh.points > 0) and np.all(mesh.points[:, 0] < 2) and np.all(mesh.points[:, 1] < 1)


@pytest.mark.parametrize("h", [0.3, 0.07, 0.0])
def test_rejects_non_divisible(h):
    with pytest.raises(MeshError):
        build_domain_mesh(((0, 1), (0, 1)), h)


def test_divisibility_tolerance():
    # 1/3 is not exactly representable but divides the side to 1e-12
    assert len(build_domain_mesh(((0, 1), (0, 1)), 1 / 3)) == 9


@pytest.mark.parametrize("h", [0.5, 0.1, 0.02, 0.01])
def test_weights_sum_to_area(h):
    mesh = build_domain_mesh(((0, 1), (0, 2)), h)
    assert abs(mesh.weights.sum() - 2.0) <= 1e-12


def test_integrate_examples():
    mesh = build_domain_mesh(((0, 1), (0, 1)), 0.01)
    assert integrate(mesh, lambda X: np.ones(len(X))) == pytest.approx(1.0, abs=1e-12)
    assert integrate(mesh, lambda X: X[:, 0]) == pytest.approx(0.5, abs=1e-12)
    # composite midpoint error: -h^2/24 * int f'' = -1e-4/12
    assert integrate(mesh, lambda X: X[:, 0] ** 2) == pytest.approx(1 / 3 - 1e-4 / 12, abs=1e-13)


@settings(max_examples=30, deadline=None)
@given(a=st.floats(-5, 5), b=st.floats(-5, 5), c=st.floats(-5, 5),
       n=st.sampled_from([1, 2, 4, 5, 10, 25]))
def test_exact_on_affine_and_linear(a, b, c, n):
    mesh = build_domain_mesh(((0, 1), (0, 1)), 1 / n)
    f = lambda X: a * X[:, 0] + b * X[:, 1] + c  # noqa: E731
    assert integrate(mesh, f) == pytest.approx(a / 2 + b / 2 + c, abs=1e-11)
    g = lambda X: X[:, 0] * X[:, 1]  # noqa: E731
    lin = integrate(mesh, lambda X: 2 * f(X) - 3 * g(X))
    assert lin == pytest.approx(2 * integrate(mesh, f) - 3 * integrate(mesh, g), abs=1e-11)


def test_integrate_names_bad_node():
    mesh = build_domain_mesh(((0, 1), (0, 1)), 0.5)
    with pytest.raises(FloatingPointError, match="node 2"):
        integrate(mesh, np.array([0.0, 1.0, np.nan, 2.0]))


def test_inflow_constant_beta():
    bm = build_inflow_mesh(simple_problem(beta=(1.0, 0.0)), 0.1)
    assert len(bm) == 10
    assert np.all(bm.points[:, 0] == 0.0)
    np.testing.assert_allclose(bm.weights, 0.1)
    assert np.all(bm.normals == [-1.0, 0.0])


def test_inflow_curve_problem():
    bm = build_inflow_mesh(get_problem("2d-curve"), 0.1)
    on_x0 = bm.points[:, 0] == 0.0
    on_y0 = bm.points[:, 1] == 0.0
    assert np.all(on_x0 | on_y0) and on_x0.any() and on_y0.any()


def test_inflow_cylinder_problem():
    prob = get_problem("3d-cylinder")
    bm = build_inflow_mesh(prob, 0.25)
    on_y0 = bm.points[:, 1] == 0.0
    on_x1 = bm.points[:, 0] == 1.0
    assert np.all(on_y0 | on_x1) and on_y0.any() and on_x1.any()
    assert np.all(np.einsum("ij,ij->i", prob.beta(bm.points), bm.normals) < 0)
    np.testing.assert_allclose(bm.weights, -np.einsum("ij,ij->i", prob.beta(bm.points),
                                                      bm.normals) * 0.25 ** 2)


@pytest.mark.parametrize("beta", [(1.0, 0.5), (-0.3, 2.0), (0.0, -1.0)])
def test_inflow_negation_complement(beta):
    h = 0.25
    fwd = build_inflow_mesh(simple_problem(beta=beta), h)
    back = build_inflow_mesh(simple_problem(beta=tuple(-b for b in beta)), h)
    faces = lambda m: {tuple(n) for n in m.normals}  # noqa: E731
    tangential = {n for n in [(-1.0, 0.0), (1.0, 0.0), (0.0, -1.0), (0.0, 1.0)]
                  if np.dot(beta, n) == 0.0}
    every = {(-1.0, 0.0), (1.0, 0.0), (0.0, -1.0), (0.0, 1.0)}
    assert faces(fwd) | faces(back) == every - tangential
    assert not faces(fwd) & faces(back)


def test_dump_mesh_csv(tmp_path):
    path = tmp_path / "mesh.csv"
    dump_mesh_csv(build_domain_mesh(((0, 1), (0, 1)), 0.5), path)
    lines = path.read_text().splitlines()
    assert lines[0] == "x0,x1,weight"
    assert len(lines) == 5
