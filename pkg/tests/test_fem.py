import numpy as np
import pytest
import scipy.sparse.linalg as spla

from hvifem.coefficients import ProblemSpec, estimate_theta, get_problem
from hvifem.errors import GeometryError
from hvifem.fem import (EDGE_GAUSS2, TRIANGLE_DEGREE5, TRIANGLE_MIDPOINT, TRIANGLE_VERTEX,
                        assemble, boundary_functional, interior_functional, laplace_stiffness,
                        local_stiffness, mass_matrix, restrict, vertex_weights)
from hvifem.mesh import DiscreteField, build_uniform_mesh, evaluate_points, nodal_interpolant
from hvifem.nonsmooth import PotentialParams, subdiff_selection

J = PotentialParams(1, 1)
REF = [(0, 0), (1, 0), (0, 1)]


def spec_of(a11="1", a12="0", a22="1", a0="0", f0="0", name="t"):
    return ProblemSpec.from_strings(name, a11, a12, a12, a22, a0, f0, J, J)


def dense_triangle_rule(n=8):
    """Collapsed Gauss-Legendre product rule on the reference triangle (degree 2n-1)."""
    g, w = np.polynomial.legendre.leggauss(n)
    g = 0.5 * (g + 1)
    w = 0.5 * w
    u, v = np.meshgrid(g, g, indexing="ij")
    wu, wv = np.meshgrid(w, w, indexing="ij")
    x = u.ravel()
    y = (v * (1 - u)).ravel()
    weights = (wu * wv * (1 - u)).ravel()
    return np.column_stack([1 - x - y, x, y]), weights


def test_quadrature_rules_exact():
    for rule in (TRIANGLE_MIDPOINT, TRIANGLE_DEGREE5):
        assert rule.weights.sum() == pytest.approx(0.5, abs=1e-15)
        x, y = rule.points[:, 1], rule.points[:, 2]
        for f, exact in [(np.ones_like(x), 1 / 2), (x, 1 / 6), (y, 1 / 6),
                         (x * x, 1 / 12), (x * y, 1 / 24), (y * y, 1 / 12)]:
            assert rule.weights @ f == pytest.approx(exact, abs=1e-15)
    s = EDGE_GAUSS2.points
    for k in range(4):
        assert EDGE_GAUSS2.weights @ s ** k == pytest.approx(1 / (k + 1), abs=1e-15)
    assert TRIANGLE_VERTEX.weights.sum() == pytest.approx(0.5)


def test_local_stiffness_laplace():
    k = local_stiffness(REF, spec_of())
    np.testing.assert_allclose(k, [[1, -0.5, -0.5], [-0.5, 0.5, 0], [-0.5, 0, 0.5]], atol=1e-15)


def test_local_stiffness_anisotropic_symbolic():
    a = np.array([[2.0, 1.0], [1.0, 1.0]])
    grads = np.array([[-1, -1], [1, 0], [0, 1]], dtype=float)
    expected = 0.5 * grads @ a @ grads.T
    k = local_stiffness(REF, spec_of("2", "1", "1"))
    np.testing.assert_allclose(k, expected, atol=1e-15)
    assert k[1, 1] == pytest.approx(1.0)   # 1-based entry (2, 2)
    np.testing.assert_allclose(k.sum(axis=1), 0, atol=1e-15)


def test_local_mass():
    k = local_stiffness(REF, spec_of("0", "0", "0", a0="1"))
    np.testing.assert_allclose(k, (np.ones((3, 3)) + np.eye(3)) / 24, atol=1e-16)


def test_local_stiffness_variable_against_dense_oracle():
    spec = spec_of("1+x*y", "x*y", "10", a0="1")
    tri = np.array([(0.2, 0.1), (0.6, 0.3), (0.1, 0.7)])
    bary, w = dense_triangle_rule()
    # the midpoint rule is exact for the quadratic a0 * phi_i * phi_j and for linear-ish tensors
    pts = bary @ tri
    d1, d2 = tri[1] - tri[0], tri[2] - tri[0]
    area = 0.5 * abs(d1[0] * d2[1] - d1[1] * d2[0])
    m = np.array([[tri[1][0] - tri[0][0], tri[2][0] - tri[0][0]],
                  [tri[1][1] - tri[0][1], tri[2][1] - tri[0][1]]])
    g_ref = np.array([[-1, -1], [1, 0], [0, 1]], dtype=float)
    grads = g_ref @ np.linalg.inv(m)
    a = spec.tensor_at(pts[:, 0], pts[:, 1])
    oracle = 2 * area * np.einsum("q,id,qde,je->ij", w, grads, a, grads)
    oracle += 2 * area * np.einsum("q,qi,qj->ij", w, bary, bary)
    np.testing.assert_allclose(local_stiffness(tri, spec), oracle, atol=1e-13)


@pytest.mark.parametrize("tri", [[(0, 0), (1, 0), (2, 0)], [(0, 0), (0, 1), (1, 0)]])
def test_degenerate_or_clockwise(tri):
    with pytest.raises(GeometryError):
        local_stiffness(tri, spec_of())


def test_assembled_structure():
    mesh = build_uniform_mesh(2)
    sys = assemble(mesh, get_problem("example2"))
    assert sys.stiffness.shape == (12, 12)
    assert sys.dimension == len(mesh.free_dofs) == 12
    assert len(sys.load) == 12
    k = sys.stiffness
    assert abs(k - k.T).max() < 1e-12
    assert np.all(k.data != 0)
    assert sys.tensor_q.shape == (32, 3, 2, 2)
    assert sys.theta_q > 0
    assert np.linalg.eigvalsh(k.toarray()).min() > 0


def test_poisson_self_convergence():
    spec = spec_of(f0="1")

    def centre(level):
        mesh = build_uniform_mesh(level)
        sys = assemble(mesh, spec)
        u = np.zeros(mesh.num_vertices)
        u[mesh.free_dofs] = spla.spsolve(sys.stiffness.tocsc(), sys.load)
        return evaluate_points(DiscreteField(level, u), [[0.5, 0.5]])[0]

    coarse, fine = centre(2), centre(6)
    assert abs(coarse - fine) <= 0.02 * abs(fine) * 10  # level 2 is very coarse
    assert abs(centre(4) - fine) <= 0.02 * abs(fine)


def test_energy_of_x_on_free_dofs():
    mesh = build_uniform_mesh(3)
    sys = assemble(mesh, spec_of())
    v = mesh.vertices[mesh.free_dofs, 0]
    full = np.zeros(mesh.num_vertices)
    full[mesh.free_dofs] = v
    lap = laplace_stiffness(mesh)
    assert v @ (sys.stiffness @ v) == pytest.approx(full @ (lap @ full), rel=1e-13)


def test_coercivity_and_boundedness(rng):
    mesh = build_uniform_mesh(4)
    for name in ("example1", "example2"):
        spec = get_problem(name)
        sys = assemble(mesh, spec)
        k_i = restrict(laplace_stiffness(mesh), mesh)
        theta = estimate_theta(spec)
        c_a = 12.0  # sup of |A| + a0 over both examples, generous
        for _ in range(100):
            v, w = rng.normal(size=(2, sys.dimension))
            assert v @ (sys.stiffness @ v) >= theta * (v @ (k_i @ v)) - 1e-10
            bound = c_a * np.sqrt((v @ (k_i @ v) + v @ v) * (w @ (k_i @ w) + w @ w))
            assert abs(v @ (sys.stiffness @ w)) <= bound


def test_interior_functional_constant_fields():
    mesh = build_uniform_mesh(3)
    np.testing.assert_array_equal(interior_functional(mesh, -np.ones(81), J), 0.0)
    c = 0.7
    out = interior_functional(mesh, np.full(81, c), J)
    np.testing.assert_allclose(out, (np.exp(-c) + 1) * vertex_weights(mesh), rtol=1e-14)


def test_interior_functional_against_dense_oracle():
    mesh = build_uniform_mesh(6)
    u = nodal_interpolant(mesh, lambda x, y: 0.5 + x + 2 * y * y)
    bary, w = dense_triangle_rule()
    area = mesh.areas()
    uq = u.values[mesh.triangles] @ bary.T
    contrib = 2 * area[:, None] * np.einsum("q,tq,qi->ti", w, subdiff_selection(uq, J), bary)
    oracle = np.bincount(mesh.triangles.ravel(), contrib.ravel(), minlength=mesh.num_vertices)
    np.testing.assert_allclose(interior_functional(mesh, u, J), oracle, rtol=1e-4)


def test_boundary_functional_examples():
    mesh = build_uniform_mesh(3)
    p = PotentialParams(0.5, 0.5)
    assert not np.any(boundary_functional(mesh, -np.ones(81), p))
    t0 = 0.3
    out = boundary_functional(mesh, np.full(81, t0), p)
    h = mesh.h
    expected = (0.5 * np.exp(-0.5 * t0) + 0.5) * h
    np.testing.assert_allclose(out[1:8], expected, rtol=1e-14)
    assert out[0] == pytest.approx(expected / 2) and out[8] == pytest.approx(expected / 2)
    assert not np.any(out[9:])


def _crossing_case():
    mesh = build_uniform_mesh(3)
    p = PotentialParams(0.5, 0.5)
    u = np.zeros(81)
    u[3], u[4] = -0.4, 0.6        # the edge (3, 4) crosses zero; (2, 3) is inactive
    g, w = np.polynomial.legendre.leggauss(64)
    s = 0.5 * (g + 1)
    w = 0.5 * w
    sel = subdiff_selection((1 - s) * u[3] + s * u[4], p)
    oracle = mesh.h * np.sum(w * sel * (1 - s))
    return mesh, p, u, oracle


@pytest.mark.xfail(strict=True, reason="a two-point Gauss rule cannot resolve the jump of the "
                   "selection at a sign change to 1e-3 h; the error is O(h)")
def test_boundary_functional_sign_change_dense_oracle_tight():
    mesh, p, u, oracle = _crossing_case()
    assert boundary_functional(mesh, u, p)[3] == pytest.approx(oracle, abs=1e-3 * mesh.h)


def test_boundary_functional_sign_change_dense_oracle():
    mesh, p, u, oracle = _crossing_case()
    got = boundary_functional(mesh, u, p)[3]
    # exact two-point value: only the Gauss point past the crossing contributes
    s2 = 0.5 + 0.5 / np.sqrt(3)
    t2 = (1 - s2) * u[3] + s2 * u[4]
    assert got == pytest.approx(mesh.h * 0.5 * (0.5 * np.exp(-0.5 * t2) + 0.5) * (1 - s2), rel=1e-14)
    # quadrature error for a jump is bounded by the jump times the edge length
    assert abs(got - oracle) <= p.jump * mesh.h


def test_functional_values_in_range(rng):
    mesh = build_uniform_mesh(3)
    u = rng.normal(size=81)
    out = interior_functional(mesh, u, J)
    assert np.all(out >= 0) and np.all(out <= J.jump * vertex_weights(mesh) + 1e-15)


def test_mass_matrix_total():
    mesh = build_uniform_mesh(3)
    one = np.ones(mesh.num_vertices)
    assert one @ (mass_matrix(mesh) @ one) == pytest.approx(1.0, abs=1e-14)
