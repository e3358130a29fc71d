"""Multiplier iteration for the discrete hemivariational inequality.

The nonsmooth terms are integrated with the vertex rule, so the discrete
problem decouples into one scalar inclusion per free vertex i:

    (K u - F)_i + m_i z1_i + g_i z2_i = 0,   z1_i in dj1(u_i),  z2_i in dj2(u_i)

with lumped weights m_i (domain) and g_i (semipermeable boundary).  Each
vertex is classified from its local residual r_i = F_i - sum_{j != i} K_ij u_j
as negative (multipliers 0), zero (u_i = 0, multipliers in the gradient
interval) or positive (multipliers on the smooth branch).  The iteration
freezes the multipliers of positive vertices, solves the remaining linear
system, and damps the step by backtracking on the discrete energy, which is
convex under the smallness condition.
"""
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse.linalg as spla

from .coefficients import estimate_theta
from .errors import (CGConvergenceError, DiagnosticsError, InvalidArgumentError,
                     NonConvergenceError)
from .fem import (assemble, boundary_mass_matrix, boundary_vertex_weights, laplace_stiffness,
                  mass_matrix, restrict, vertex_weights)
from .mesh import DiscreteField, build_uniform_mesh
from .nonsmooth import (clarke_j0, estimate_hj_constants, potential, smooth_branch,
                        subdiff_selection)

NEGATIVE, ZERO, POSITIVE = -1, 0, 1


@dataclass(frozen=True)
class SolverParams:
    outer_tol: float = 1e-10
    outer_maxit: int = 200
    damping: float = 1.0
    cg_tol: float = 1e-12
    cg_maxit: int | None = None       # None means 10 * dimension
    linear_solver: str = "cg"         # "cg" (Jacobi-PCG) or "direct" (sparse LU)
    min_damping: float = 1.0 / 16.0

    def __post_init__(self):
        for name in ("outer_tol", "cg_tol", "min_damping"):
            if not getattr(self, name) > 0:
                raise InvalidArgumentError(f"{name} must be positive")
        if not 0 < self.damping <= 1:
            raise InvalidArgumentError(f"damping must lie in (0, 1], got {self.damping}")
        if not 0 < self.min_damping <= self.damping:
            raise InvalidArgumentError("min_damping must lie in (0, damping]")
        if int(self.outer_maxit) < 1:
            raise InvalidArgumentError("outer_maxit must be positive")
        if self.cg_maxit is not None and int(self.cg_maxit) < 1:
            raise InvalidArgumentError("cg_maxit must be positive")
        if self.linear_solver not in ("cg", "direct"):
            raise InvalidArgumentError(f"unknown linear_solver {self.linear_solver!r}")

    @classmethod
    def from_config(cls, section, **overrides):
        """Build from a ``[solver]`` config section (selection_at_zero is ignored here)."""
        kw = {}
        casts = {"outer_tol": float, "outer_maxit": int, "damping": float, "cg_tol": float,
                 "cg_maxit": int, "linear_solver": str, "min_damping": float}
        for key, value in section.items():
            if key == "selection_at_zero":
                continue
            if key not in casts:
                raise InvalidArgumentError(f"unknown solver option {key!r}")
            try:
                kw[key] = casts[key](value)
            except ValueError:
                raise InvalidArgumentError(f"bad value for {key}: {value!r}") from None
        kw.update(overrides)
        return cls(**kw)


_ROUNDOFF = 64 * np.finfo(float).eps


def cg_solve(op, rhs, params=None, *, x0=None, tol=None, maxit=None, return_iterations=False):
    """Jacobi-preconditioned conjugate gradients.

    Stops once the true residual satisfies ``||op x - rhs|| <= tol ||rhs||``.
    When the recursive residual has met that target but the true one sits at
    the roundoff floor ``64 eps (||op|| ||x|| + ||rhs||)``, the iterate is
    accepted as well; restarting cannot improve it.
    """
    params = params or SolverParams()
    b = np.asarray(rhs, dtype=float)
    n = b.shape[0]
    if op.shape != (n, n):
        raise InvalidArgumentError(f"operator shape {op.shape} does not match rhs length {n}")
    tol = params.cg_tol if tol is None else tol
    maxit = maxit or params.cg_maxit or 10 * n
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        x = np.zeros(n)
        return (x, 0) if return_iterations else x
    diag = op.diagonal()
    if np.any(diag <= 0):
        raise InvalidArgumentError("operator has a non-positive diagonal entry")
    inv = 1.0 / diag
    target = tol * bnorm
    opnorm = float(abs(op).sum(axis=1).max())

    if x0 is None:
        x = np.zeros(n)
        r = b.copy()
    else:
        x = np.array(x0, dtype=float)
        r = b - op @ x
    it = 0
    if np.linalg.norm(r) > target:
        z = inv * r
        p = z.copy()
        rz = r @ z
        while it < maxit:
            ap = op @ p
            pap = p @ ap
            if not pap > 0:
                raise InvalidArgumentError("operator is not positive definite")
            alpha = rz / pap
            x += alpha * p
            r -= alpha * ap
            it += 1
            if np.linalg.norm(r) <= target:
                r = b - op @ x     # guard against drift of the recursive residual
                rnorm = np.linalg.norm(r)
                floor = _ROUNDOFF * (opnorm * np.linalg.norm(x) + bnorm)
                if rnorm <= target or rnorm <= floor:
                    break
                z = inv * r
                p = z.copy()
                rz = r @ z
                continue
            z = inv * r
            rz_new = r @ z
            p = z + (rz_new / rz) * p
            rz = rz_new
        else:
            raise CGConvergenceError(float(np.linalg.norm(b - op @ x) / bnorm), it)
    return (x, it) if return_iterations else x


class _LinearSolver:
    """Solves K[keep, keep] x = b, caching the submatrix (and factor) per keep set."""

    def __init__(self, matrix, params):
        self.matrix = matrix
        self.params = params
        self._key = None
        self._sub = None
        self._lu = None

    def solve(self, keep, rhs, x0):
        key = keep.tobytes()
        if key != self._key:
            self._key = key
            self._sub = self.matrix[keep][:, keep].tocsr()
            self._lu = None
        if self.params.linear_solver == "direct":
            if self._lu is None:
                self._lu = spla.splu(self._sub.tocsc())
            return self._lu.solve(rhs)
        return cg_solve(self._sub, rhs, self.params, x0=x0)


@dataclass(frozen=True, eq=False)
class HviSolution:
    """Converged iterate plus nodal multipliers.

    ``mu_nodal`` has one entry per vertex; ``lambda_nodal`` one per entry of
    ``lambda_vertices`` (the free vertices on the semipermeable boundary).
    """

    u: DiscreteField
    lambda_nodal: np.ndarray
    lambda_vertices: np.ndarray
    mu_nodal: np.ndarray
    iterations: int
    history: list
    converged: bool
    zero_set: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    damping: list = field(default_factory=list)
    problem: str = ""


def _classify(residual, jump):
    return np.where(residual < 0, NEGATIVE, np.where(residual > jump, POSITIVE, ZERO))


def solve_hvi(mesh, spec, params=None, *, system=None, initial=None, check_smallness=False):
    """Solve the discrete inequality of ``spec`` on ``mesh``.

    The iteration starts from u = 0 unless ``initial`` (a DiscreteField on
    ``mesh``, for example a prolonged coarse solution) is given.
    """
    params = params or SolverParams()
    if check_smallness:
        report = smallness_check(diagnose(build_uniform_mesh(min(mesh.level, 5)), spec))
        if not report.satisfied:
            warnings.warn(f"smallness condition violated (margin {report.margin:.4g})",
                          RuntimeWarning, stacklevel=2)
    system = system or assemble(mesh, spec)
    K, F = system.stiffness, system.load
    free = mesh.free_dofs
    p1, p2 = spec.interior_potential, spec.boundary_potential
    m = vertex_weights(mesh)[free]
    g = boundary_vertex_weights(mesh)[free]
    jump = m * p1.jump + g * p2.jump
    k_diag = K.diagonal()
    k_lap = restrict(laplace_stiffness(mesh), mesh)
    linear = _LinearSolver(K, params)

    def energy(v):
        return 0.5 * v @ (K @ v) - F @ v + m @ potential(v, p1) + g @ potential(v, p2)

    def seminorm(v):
        return math.sqrt(max(float(v @ (k_lap @ v)), 0.0))

    if initial is None:
        u = np.zeros(len(free))
    else:
        if initial.mesh_level != mesh.level:
            raise InvalidArgumentError("initial guess lives on a different mesh level")
        u = initial.values[free].copy()
    state = _classify(F - K @ u + k_diag * u, jump)
    state[(state == ZERO) & (u != 0)] = np.sign(u[(state == ZERO) & (u != 0)]).astype(int)
    crossed = np.zeros(len(free), dtype=bool)
    history, omegas = [], []
    converged = False
    for _ in range(int(params.outer_maxit)):
        frozen = np.where(state == POSITIVE, m * smooth_branch(u, p1) + g * smooth_branch(u, p2),
                          0.0)
        keep = np.flatnonzero(state != ZERO)
        u_star = np.zeros_like(u)
        if len(keep):
            u_star[keep] = linear.solve(keep, (F - frozen)[keep], u[keep])

        omega = params.damping
        e0 = energy(u)
        slack = 1e-13 * max(1.0, abs(e0))
        while omega > params.min_damping and energy(u + omega * (u_star - u)) > e0 + slack:
            omega *= 0.5
        u_new = u + omega * (u_star - u)
        top = seminorm(u_new)
        change = seminorm(u_new - u) / top if top > 0 else seminorm(u_new - u)
        u = u_new
        history.append(change)
        omegas.append(omega)

        new_state = _classify(F - K @ u + k_diag * u, jump)
        # a vertex that jumps straight across zero is parked in the zero set once
        flip = new_state * state == -1
        new_state[flip & crossed] = ZERO
        crossed |= flip
        changed = int(np.count_nonzero(new_state != state))
        state = new_state
        if change <= params.outer_tol and changed == 0:
            u = u_star
            converged = True
            break
    if not converged:
        raise NonConvergenceError(
            f"no convergence in {params.outer_maxit} iterations "
            f"(last relative change {history[-1]:.3e})", history)
    return _package(mesh, spec, system, u, state, jump, m, g, history, omegas)


def _package(mesh, spec, system, u, state, jump, m, g, history, omegas):
    p1, p2 = spec.interior_potential, spec.boundary_potential
    free = mesh.free_dofs
    residual = system.load - system.stiffness @ u
    zero = (state == ZERO) & (u == 0.0)
    share = np.clip(np.where(zero, residual / jump, 0.0), 0.0, 1.0)

    mu_free = np.where(zero, share * p1.jump, subdiff_selection(u, p1))
    lam_free = np.where(zero, share * p2.jump, subdiff_selection(u, p2))
    nv = mesh.num_vertices
    values = np.zeros(nv)
    values[free] = u
    mu = np.full(nv, p1.zero_value())
    mu[free] = mu_free
    lam_all = np.zeros(nv)
    lam_all[free] = lam_free
    sv = mesh.semipermeable_vertices
    return HviSolution(
        u=DiscreteField(mesh.level, values), lambda_nodal=lam_all[sv], lambda_vertices=sv,
        mu_nodal=mu, iterations=len(history), history=list(history), converged=True,
        zero_set=free[zero], damping=list(omegas), problem=spec.name)


@dataclass(frozen=True)
class VerificationReport:
    worst_violation: float     # scaled; <= 0 means no violation
    worst_vertex: int
    checks: int
    tol: float

    @property
    def passed(self):
        return self.worst_violation <= self.tol


def verify_discrete_hvi(sol, mesh, spec, tol=1e-8, system=None):
    """Test the inequality for v = +phi_i and v = -phi_i at every free vertex.

    Each check value is divided by the magnitude of the terms in its row
    (sum_j |K_ij u_j| + |F_i| + m_i (a1+b1) + g_i (a2+b2)).
    """
    system = system or assemble(mesh, spec)
    free = mesh.free_dofs
    u = sol.u.values[free]
    p1, p2 = spec.interior_potential, spec.boundary_potential
    m = vertex_weights(mesh)[free]
    g = boundary_vertex_weights(mesh)[free]
    K, F = system.stiffness, system.load
    grad = K @ u - F
    plus = grad + m * clarke_j0(u, 1.0, p1) + g * clarke_j0(u, 1.0, p2)
    minus = -grad + m * clarke_j0(u, -1.0, p1) + g * clarke_j0(u, -1.0, p2)
    scale = abs(K) @ np.abs(u) + np.abs(F) + m * p1.jump + g * p2.jump
    violation = np.maximum(-plus, -minus) / scale
    worst = int(np.argmax(violation))
    return VerificationReport(worst_violation=float(max(violation[worst], 0.0)),
                              worst_vertex=int(free[worst]), checks=2 * len(free), tol=tol)


def _rayleigh_iteration(K, B, tol, maxit, params):
    """Dominant eigenpair of K^{-1} B by power iteration; returns v'Bv / v'Kv."""
    x = np.ones(K.shape[0])
    nu_old = None
    for _ in range(maxit):
        bx = B @ x
        if not np.any(bx):
            raise DiagnosticsError("power iteration collapsed to zero")
        y = cg_solve(K, bx, params, x0=x)
        nu = float(y @ (B @ y)) / float(y @ (K @ y))
        x = y / np.linalg.norm(y)
        if nu_old is not None and abs(nu - nu_old) <= tol * abs(nu):
            return nu
        nu_old = nu
    raise DiagnosticsError(f"power iteration stagnated after {maxit} steps")


def estimate_lambda_L(mesh, spec, tol=1e-8, maxit=1000, system=None, params=None):
    """Smallest eigenvalue of K v = lambda M v by inverse power iteration."""
    system = system or assemble(mesh, spec)
    M = restrict(mass_matrix(mesh), mesh)
    return 1.0 / _rayleigh_iteration(system.stiffness, M, tol, maxit, params or SolverParams())


def estimate_mu_L(mesh, spec, tol=1e-8, maxit=1000, system=None, params=None):
    """Reciprocal of the dominant eigenvalue of v -> K^{-1} M_Gamma v."""
    if len(mesh.semipermeable_edges) == 0:
        raise DiagnosticsError("mesh has no semipermeable boundary")
    system = system or assemble(mesh, spec)
    M = restrict(boundary_mass_matrix(mesh), mesh)
    return 1.0 / _rayleigh_iteration(system.stiffness, M, tol, maxit, params or SolverParams())


@dataclass(frozen=True)
class Diagnostics:
    lambda_L: float
    mu_L: float
    theta: float
    alpha1: float
    alpha2: float

    def __post_init__(self):
        if not (self.lambda_L > 0 and self.mu_L > 0):
            raise DiagnosticsError("eigenvalue estimates must be positive")

    @property
    def smallness_margin(self):
        return self.theta - self.alpha1 / self.lambda_L - self.alpha2 / self.mu_L


def diagnose(mesh, spec, samples=100_000):
    system = assemble(mesh, spec)
    return Diagnostics(
        lambda_L=estimate_lambda_L(mesh, spec, system=system),
        mu_L=estimate_mu_L(mesh, spec, system=system),
        theta=estimate_theta(spec),
        alpha1=estimate_hj_constants(spec.interior_potential, samples=samples).alpha_hat,
        alpha2=estimate_hj_constants(spec.boundary_potential, samples=samples).alpha_hat)


@dataclass(frozen=True)
class SmallnessReport:
    diagnostics: Diagnostics
    margin: float
    satisfied: bool

    def lines(self):
        d = self.diagnostics
        return [f"theta    = {d.theta:.10g}",
                f"lambda_L = {d.lambda_L:.10g}",
                f"mu_L     = {d.mu_L:.10g}",
                f"alpha1   = {d.alpha1:.10g}",
                f"alpha2   = {d.alpha2:.10g}",
                f"smallness margin = {self.margin:.10g} "
                f"({'satisfied' if self.satisfied else 'violated'})"]


def smallness_check(diag):
    margin = diag.smallness_margin
    return SmallnessReport(diagnostics=diag, margin=margin, satisfied=margin > 0)
