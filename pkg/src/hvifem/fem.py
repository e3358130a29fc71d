"""P1 assembly on the uniform meshes.

Quadrature rules carry reference weights; on a physical cell each weight is
rescaled by ``|T| / rule.measure``.
"""
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .coefficients import estimate_theta, smallest_eigenvalue_2x2
from .errors import EllipticityError, GeometryError, InvalidArgumentError
from .mesh import DiscreteField
from .nonsmooth import subdiff_selection


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    name: str
    points: np.ndarray   # barycentric (nq, 3) on triangles, parameters (nq,) on edges
    weights: np.ndarray
    measure: float       # reference measure: 1/2 for the triangle, 1 for [0, 1]

    def __post_init__(self):
        object.__setattr__(self, "points", np.asarray(self.points, dtype=float))
        object.__setattr__(self, "weights", np.asarray(self.weights, dtype=float))


TRIANGLE_MIDPOINT = QuadratureRule(
    "triangle-midpoint",
    [[0.5, 0.5, 0.0], [0.0, 0.5, 0.5], [0.5, 0.0, 0.5]],
    [1.0 / 6.0] * 3, 0.5)
TRIANGLE_VERTEX = QuadratureRule("triangle-vertex", np.eye(3), [1.0 / 6.0] * 3, 0.5)
_G = 0.5 / np.sqrt(3.0)
EDGE_GAUSS2 = QuadratureRule("edge-gauss2", [0.5 - _G, 0.5 + _G], [0.5, 0.5], 1.0)
EDGE_VERTEX = QuadratureRule("edge-vertex", [0.0, 1.0], [0.5, 0.5], 1.0)

# Dunavant degree-5 rule, used only to measure errors against smooth functions.
_A1, _B1 = 0.059715871789770, 0.470142064105115
_A2, _B2 = 0.797426985353087, 0.101286507323456
TRIANGLE_DEGREE5 = QuadratureRule(
    "triangle-degree5",
    [[1 / 3, 1 / 3, 1 / 3],
     [_A1, _B1, _B1], [_B1, _A1, _B1], [_B1, _B1, _A1],
     [_A2, _B2, _B2], [_B2, _A2, _B2], [_B2, _B2, _A2]],
    0.5 * np.array([0.225] + [0.132394152788506] * 3 + [0.125939180544827] * 3),
    0.5)


def _geometry(points):
    """Areas and constant P1 gradients for stacked triangles (nt, 3, 2)."""
    d1 = points[:, 1] - points[:, 0]
    d2 = points[:, 2] - points[:, 0]
    area = 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
    if np.any(area < 1e-14):
        raise GeometryError("degenerate or clockwise triangle (area < 1e-14)")
    grads = np.empty(points.shape)
    for k in range(3):
        a = points[:, (k + 1) % 3]
        b = points[:, (k + 2) % 3]
        grads[:, k, 0] = a[:, 1] - b[:, 1]
        grads[:, k, 1] = b[:, 0] - a[:, 0]
    grads /= (2.0 * area)[:, None, None]
    return area, grads


def _quad_points(points, rule):
    return np.einsum("qk,tkd->tqd", rule.points, points)


def _element_matrices(area, grads, tensor_q, reaction_q, rule):
    w = rule.weights / rule.measure
    a_bar = np.einsum("q,tqde->tde", w, tensor_q)
    ke = area[:, None, None] * np.einsum("tid,tde,tje->tij", grads, a_bar, grads)
    if reaction_q is not None:
        ke += area[:, None, None] * np.einsum(
            "q,tq,qi,qj->tij", w, reaction_q, rule.points, rule.points)
    return ke


def local_stiffness(vertices, spec, rule=TRIANGLE_MIDPOINT):
    """3x3 element matrix of a(u, v) on one triangle."""
    pts = np.asarray(vertices, dtype=float).reshape(1, 3, 2)
    area, grads = _geometry(pts)
    xq = _quad_points(pts, rule)
    tensor = spec.tensor_at(xq[..., 0], xq[..., 1])
    reaction = spec.reaction_at(xq[..., 0], xq[..., 1])
    return _element_matrices(area, grads, tensor, reaction, rule)[0]


def _scatter(triangles, ke, n):
    rows = np.repeat(triangles, 3, axis=1).ravel()
    cols = np.tile(triangles, (1, 3)).ravel()
    mat = sp.coo_matrix((ke.ravel(), (rows, cols)), shape=(n, n)).tocsr()
    mat.eliminate_zeros()
    mat.sort_indices()
    return mat


def restrict(matrix, mesh):
    """Rows and columns of ``matrix`` belonging to free vertices."""
    free = mesh.free_dofs
    return matrix[free][:, free].tocsr()


@dataclass(frozen=True, eq=False)
class AssembledSystem:
    mesh_level: int
    stiffness: sp.csr_matrix        # free x free
    load: np.ndarray                # free
    free_dofs: np.ndarray
    full_stiffness: sp.csr_matrix   # all vertices, before elimination
    full_load: np.ndarray
    quad_points: np.ndarray         # (nt, nq, 2)
    tensor_q: np.ndarray            # (nt, nq, 2, 2)
    reaction_q: np.ndarray          # (nt, nq)
    source_q: np.ndarray            # (nt, nq)
    theta_q: float                  # min tensor eigenvalue over quadrature points

    @property
    def dimension(self):
        return len(self.free_dofs)

    def free_to_vertex(self, values, nv):
        out = np.zeros(nv)
        out[self.free_dofs] = values
        return out


def assemble(mesh, spec, rule=TRIANGLE_MIDPOINT):
    """Stiffness and load of ``spec`` on ``mesh`` with Dirichlet rows eliminated."""
    estimate_theta(spec)
    pts = mesh.vertices[mesh.triangles]
    area, grads = _geometry(pts)
    xq = _quad_points(pts, rule)
    x, y = xq[..., 0], xq[..., 1]
    tensor = spec.tensor_at(x, y)
    reaction = spec.reaction_at(x, y)
    source = spec.source_at(x, y)
    theta_q = float(np.min(smallest_eigenvalue_2x2(tensor)))
    if not theta_q > 0:
        raise EllipticityError(f"tensor of {spec.name!r} loses ellipticity at a quadrature point")

    nv = mesh.num_vertices
    ke = _element_matrices(area, grads, tensor, reaction, rule)
    full = _scatter(mesh.triangles, ke, nv)
    w = rule.weights / rule.measure
    fe = area[:, None] * np.einsum("q,tq,qi->ti", w, source, rule.points)
    full_load = np.bincount(mesh.triangles.ravel(), fe.ravel(), minlength=nv)
    free = mesh.free_dofs
    return AssembledSystem(
        mesh_level=mesh.level, stiffness=restrict(full, mesh), load=full_load[free],
        free_dofs=free, full_stiffness=full, full_load=full_load, quad_points=xq,
        tensor_q=tensor, reaction_q=reaction, source_q=source, theta_q=theta_q)


def laplace_stiffness(mesh):
    """Full matrix of (grad u, grad v) over all vertices."""
    area, grads = _geometry(mesh.vertices[mesh.triangles])
    ke = area[:, None, None] * np.einsum("tid,tjd->tij", grads, grads)
    return _scatter(mesh.triangles, ke, mesh.num_vertices)


def mass_matrix(mesh):
    """Exact consistent P1 mass matrix over all vertices."""
    area = mesh.areas()
    local = (np.ones((3, 3)) + np.eye(3)) / 12.0
    return _scatter(mesh.triangles, area[:, None, None] * local, mesh.num_vertices)


def boundary_mass_matrix(mesh):
    """Exact P1 mass matrix of the semipermeable boundary part."""
    edges = mesh.semipermeable_edges
    nv = mesh.num_vertices
    if len(edges) == 0:
        return sp.csr_matrix((nv, nv))
    length = np.linalg.norm(mesh.vertices[edges[:, 1]] - mesh.vertices[edges[:, 0]], axis=1)
    local = (np.ones((2, 2)) + np.eye(2)) / 6.0
    rows = np.repeat(edges, 2, axis=1).ravel()
    cols = np.tile(edges, (1, 2)).ravel()
    vals = (length[:, None, None] * local).ravel()
    return sp.coo_matrix((vals, (rows, cols)), shape=(nv, nv)).tocsr()


def vertex_weights(mesh):
    """Lumped domain weights: integral of each hat function."""
    area = mesh.areas()
    return np.bincount(mesh.triangles.ravel(), np.repeat(area / 3.0, 3),
                       minlength=mesh.num_vertices)


def boundary_vertex_weights(mesh):
    """Lumped semipermeable-boundary weights: integral of each hat over the boundary."""
    edges = mesh.semipermeable_edges
    out = np.zeros(mesh.num_vertices)
    if len(edges):
        length = np.linalg.norm(mesh.vertices[edges[:, 1]] - mesh.vertices[edges[:, 0]], axis=1)
        out += np.bincount(edges.ravel(), np.repeat(length / 2.0, 2),
                           minlength=mesh.num_vertices)
    return out


def _values(u, mesh):
    values = u.values if isinstance(u, DiscreteField) else np.asarray(u, dtype=float)
    if values.shape != (mesh.num_vertices,):
        raise InvalidArgumentError("field does not live on this mesh")
    return values


def interior_functional(mesh, u, p, rule=TRIANGLE_MIDPOINT):
    """Entries  sum_T sum_q w_q |T| s(u(x_q)) phi_i(x_q)  for every vertex i."""
    values = _values(u, mesh)
    area = mesh.areas()
    uq = values[mesh.triangles] @ rule.points.T          # (nt, nq)
    s = subdiff_selection(uq, p)
    w = rule.weights / rule.measure
    contrib = area[:, None] * np.einsum("q,tq,qi->ti", w, s, rule.points)
    return np.bincount(mesh.triangles.ravel(), contrib.ravel(), minlength=mesh.num_vertices)


def boundary_functional(mesh, u, p, rule=EDGE_GAUSS2):
    """Entries  sum_e sum_q w_q |e| s(u(x_q)) phi_i(x_q)  over semipermeable edges."""
    values = _values(u, mesh)
    edges = mesh.semipermeable_edges
    out = np.zeros(mesh.num_vertices)
    if len(edges) == 0:
        return out
    length = np.linalg.norm(mesh.vertices[edges[:, 1]] - mesh.vertices[edges[:, 0]], axis=1)
    shape = np.column_stack([1.0 - rule.points, rule.points])   # (nq, 2)
    uq = values[edges] @ shape.T
    s = subdiff_selection(uq, p)
    w = rule.weights / rule.measure
    contrib = length[:, None] * np.einsum("q,eq,qi->ei", w, s, shape)
    out += np.bincount(edges.ravel(), contrib.ravel(), minlength=mesh.num_vertices)
    return out
