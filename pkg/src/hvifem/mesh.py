"""Uniform nested triangulations of the unit square.

Vertices are numbered row-major (``index = j * (N + 1) + i`` for the vertex at
``(i h, j h)``), and every ``h x h`` cell is cut along the diagonal from its
lower-left to its upper-right corner.  Both choices make point location and
prolongation pure index arithmetic.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError, OutOfDomainError

DIRICHLET = "DIRICHLET"
SEMIPERMEABLE = "SEMIPERMEABLE"

MAX_LEVEL = 12
DIAGONAL = "lower-left/upper-right"


@dataclass(frozen=True, eq=False)
class Mesh:
    level: int
    vertices: np.ndarray        # (nv, 2)
    triangles: np.ndarray       # (nt, 3), counterclockwise
    boundary_edges: np.ndarray  # (ne, 2)
    edge_tags: tuple            # one tag per boundary edge
    dirichlet: np.ndarray       # (nv,) bool
    free_dofs: np.ndarray       # vertex indices of unknowns
    metadata: dict = field(default_factory=dict)

    @property
    def n(self):
        """Number of cells per side."""
        return 2 ** self.level

    @property
    def h(self):
        return 1.0 / self.n

    @property
    def num_vertices(self):
        return len(self.vertices)

    @property
    def semipermeable_edges(self):
        mask = np.array([t == SEMIPERMEABLE for t in self.edge_tags], dtype=bool)
        return self.boundary_edges[mask]

    @property
    def semipermeable_vertices(self):
        """Free vertices lying on the semipermeable boundary part."""
        edges = self.semipermeable_edges
        if len(edges) == 0:
            return np.zeros(0, dtype=np.int64)
        verts = np.unique(edges.ravel())
        return verts[~self.dirichlet[verts]]

    def free_index(self):
        """Map vertex index -> position in ``free_dofs`` (-1 for Dirichlet)."""
        out = np.full(self.num_vertices, -1, dtype=np.int64)
        out[self.free_dofs] = np.arange(len(self.free_dofs))
        return out

    def areas(self):
        p = self.vertices[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


@dataclass(frozen=True, eq=False)
class DiscreteField:
    """Nodal values of a P1 function on the level-``mesh_level`` mesh."""

    mesh_level: int
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        n = 2 ** self.mesh_level + 1
        if values.shape != (n * n,):
            raise InvalidArgumentError(
                f"expected {n * n} nodal values for level {self.mesh_level}, "
                f"got shape {values.shape}")
        object.__setattr__(self, "values", values)

    def satisfies_dirichlet(self, mesh):
        return bool(np.all(self.values[mesh.dirichlet] == 0.0))


def _check_level(level):
    if isinstance(level, bool) or not isinstance(level, (int, np.integer)):
        raise InvalidArgumentError(f"level must be an integer, got {level!r}")
    if not 1 <= level <= MAX_LEVEL:
        raise InvalidArgumentError(f"level must lie in [1, {MAX_LEVEL}], got {level}")


def build_uniform_mesh(level, semipermeable="bottom"):
    """Triangulate (0,1)^2 with h = 2**-level.

    ``semipermeable="bottom"`` tags the edges on y = 0 as the semipermeable
    part; ``"none"`` gives a pure Dirichlet mesh (used by manufactured tests
    and eigenvalue checks).  The corners (0,0) and (1,0) always belong to the
    closed Dirichlet part.
    """
    _check_level(level)
    if semipermeable not in ("bottom", "none"):
        raise InvalidArgumentError(f"unknown semipermeable part {semipermeable!r}")
    level = int(level)
    n = 2 ** level
    xs = np.arange(n + 1) / n
    gx, gy = np.meshgrid(xs, xs)
    vertices = np.column_stack([gx.ravel(), gy.ravel()])

    ci, cj = np.meshgrid(np.arange(n), np.arange(n))
    v00 = (cj * (n + 1) + ci).ravel()
    v10 = v00 + 1
    v01 = v00 + n + 1
    v11 = v01 + 1
    # per cell: lower-right triangle then upper-left triangle
    triangles = np.empty((2 * n * n, 3), dtype=np.int64)
    triangles[0::2] = np.column_stack([v00, v10, v11])
    triangles[1::2] = np.column_stack([v00, v11, v01])

    k = np.arange(n)
    stride = n + 1
    bottom = np.column_stack([k, k + 1])
    right = np.column_stack([k * stride + n, (k + 1) * stride + n])
    top = np.column_stack([n * stride + k + 1, n * stride + k])
    left = np.column_stack([(k + 1) * stride, k * stride])
    boundary_edges = np.vstack([bottom, right, top, left])
    bottom_tag = SEMIPERMEABLE if semipermeable == "bottom" else DIRICHLET
    edge_tags = tuple([bottom_tag] * n + [DIRICHLET] * (3 * n))

    x, y = vertices[:, 0], vertices[:, 1]
    on_boundary = (x == 0.0) | (x == 1.0) | (y == 0.0) | (y == 1.0)
    dirichlet = on_boundary.copy()
    if semipermeable == "bottom":
        dirichlet &= ~((y == 0.0) & (x > 0.0) & (x < 1.0))
    free_dofs = np.flatnonzero(~dirichlet)

    return Mesh(level=level, vertices=vertices, triangles=triangles,
                boundary_edges=boundary_edges, edge_tags=edge_tags,
                dirichlet=dirichlet, free_dofs=free_dofs,
                metadata={"diagonal": DIAGONAL, "semipermeable": semipermeable})


def evaluate_points(field, points):
    """Vectorised P1 evaluation of ``field`` at an (m, 2) array of points."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    x, y = pts[:, 0], pts[:, 1]
    if np.any(~np.isfinite(pts)) or np.any((x < 0) | (x > 1) | (y < 0) | (y > 1)):
        raise OutOfDomainError("point outside the closed unit square")
    n = 2 ** field.mesh_level
    sx = x * n
    sy = y * n
    i = np.minimum(np.floor(sx).astype(np.int64), n - 1)
    j = np.minimum(np.floor(sy).astype(np.int64), n - 1)
    s = sx - i
    t = sy - j
    u = field.values
    base = j * (n + 1) + i
    u00 = u[base]
    u10 = u[base + 1]
    u01 = u[base + n + 1]
    u11 = u[base + n + 2]
    lower = s >= t
    return np.where(lower,
                    u00 + (u10 - u00) * s + (u11 - u10) * t,
                    u00 + (u11 - u01) * s + (u01 - u00) * t)


def evaluate_at(field, point):
    """Value of the P1 function ``field`` at a single point of [0,1]^2."""
    return float(evaluate_points(field, np.asarray(point, dtype=float).reshape(1, 2))[0])


def prolong(field, target_level):
    """Represent ``field`` exactly on the finer nested mesh ``target_level``."""
    _check_level(target_level)
    if target_level < field.mesh_level:
        raise InvalidArgumentError(
            f"cannot prolong from level {field.mesh_level} to coarser level {target_level}")
    if target_level == field.mesh_level:
        return DiscreteField(field.mesh_level, field.values.copy())
    n = 2 ** target_level
    xs = np.arange(n + 1) / n
    gx, gy = np.meshgrid(xs, xs)
    pts = np.column_stack([gx.ravel(), gy.ravel()])
    return DiscreteField(int(target_level), evaluate_points(field, pts))


def nodal_interpolant(mesh, func):
    """DiscreteField holding ``func(x, y)`` sampled at the mesh vertices."""
    x, y = mesh.vertices[:, 0], mesh.vertices[:, 1]
    values = np.broadcast_to(np.asarray(func(x, y), dtype=float), x.shape)
    return DiscreteField(mesh.level, np.array(values))


def write_mesh(mesh, stream):
    """Write the plain-text dump: header, ``v``, ``t`` and ``e`` lines."""
    stream.write(f"mesh level={mesh.level}\n")
    for x, y in mesh.vertices:
        stream.write(f"v {float(x)!r} {float(y)!r}\n")
    for a, b, c in mesh.triangles:
        stream.write(f"t {a} {b} {c}\n")
    for (a, b), tag in zip(mesh.boundary_edges, mesh.edge_tags):
        stream.write(f"e {a} {b} {tag}\n")


def read_mesh_level(lines):
    """Return the level announced by a dump header line."""
    head = lines[0].split()
    if len(head) != 2 or head[0] != "mesh" or not head[1].startswith("level="):
        raise InvalidArgumentError(f"not a mesh dump header: {lines[0]!r}")
    return int(head[1].split("=", 1)[1])
