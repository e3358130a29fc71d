"""Convergence studies against a fine-level reference and table output."""
import functools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .coefficients import get_problem
from .errors import InvalidArgumentError, NonConvergenceError, SolverError
from .fem import (TRIANGLE_DEGREE5, boundary_mass_matrix, laplace_stiffness, mass_matrix,
                  _geometry)
from .mesh import MAX_LEVEL, DiscreteField, build_uniform_mesh, prolong
from .solver import SolverParams, solve_hvi

NORM_KINDS = ("H1", "V", "L2", "L2_GammaS")


@functools.lru_cache(maxsize=8)
def _norm_matrices(level, semipermeable):
    mesh = build_uniform_mesh(level, semipermeable)
    return laplace_stiffness(mesh), mass_matrix(mesh), boundary_mass_matrix(mesh)


def _quadratic(matrix, v):
    return max(float(v @ (matrix @ v)), 0.0)


def discrete_norm(field, kind, mesh):
    """Exact norm of a P1 field: V (gradient seminorm), H1, L2 or L2_GammaS."""
    if kind not in NORM_KINDS:
        raise InvalidArgumentError(f"unknown norm kind {kind!r}; expected one of {NORM_KINDS}")
    if field.mesh_level != mesh.level:
        raise InvalidArgumentError("field and mesh levels differ")
    k_lap, mass, bmass = _norm_matrices(mesh.level, mesh.metadata.get("semipermeable", "bottom"))
    v = field.values
    if kind == "V":
        return math.sqrt(_quadratic(k_lap, v))
    if kind == "L2":
        return math.sqrt(_quadratic(mass, v))
    if kind == "L2_GammaS":
        return math.sqrt(_quadratic(bmass, v))
    return math.sqrt(_quadratic(k_lap, v) + _quadratic(mass, v))


def error_vs_exact(field, mesh, exact, exact_grad):
    """L2, V and H1 distance from ``field`` to a smooth function.

    ``exact(x, y)`` and ``exact_grad(x, y) -> (ux, uy)`` must accept arrays.
    Integrals use a degree-5 rule on every triangle.
    """
    rule = TRIANGLE_DEGREE5
    pts = mesh.vertices[mesh.triangles]
    area, grads = _geometry(pts)
    xq = np.einsum("qk,tkd->tqd", rule.points, pts)
    x, y = xq[..., 0], xq[..., 1]
    local = field.values[mesh.triangles]
    uh = local @ rule.points.T
    duh = np.einsum("tk,tkd->td", local, grads)
    ux, uy = exact_grad(x, y)
    w = area[:, None] * (rule.weights / rule.measure)[None, :]
    l2 = float(np.sum(w * (uh - exact(x, y)) ** 2))
    v = float(np.sum(w * ((duh[:, None, 0] - ux) ** 2 + (duh[:, None, 1] - uy) ** 2)))
    return {"L2": math.sqrt(l2), "V": math.sqrt(v), "H1": math.sqrt(l2 + v)}


def parse_levels(text):
    """``"3..7"`` -> (3, 4, 5, 6, 7); also accepts comma lists."""
    text = str(text).strip()
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            levels = tuple(range(int(lo), int(hi) + 1))
        else:
            levels = tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise InvalidArgumentError(f"cannot parse level range {text!r}") from None
    if not levels:
        raise InvalidArgumentError(f"empty level range {text!r}")
    return levels


def parse_norms(text):
    norms = tuple(t.strip() for t in str(text).split(",") if t.strip())
    return norms


@dataclass(frozen=True)
class StudyConfig:
    problem: str
    levels: tuple = (3, 4, 5, 6, 7)
    ref_level: int = 9
    norms: tuple = ("H1",)
    outdir: str = "."
    emit_csv: bool = True
    emit_json: bool = True
    emit_svg: bool = True
    plot_level: int = 5
    nested: bool = True     # warm-start each level from the prolonged coarser solution
    solver: SolverParams = field(default_factory=SolverParams)

    def __post_init__(self):
        levels = tuple(int(k) for k in self.levels)
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "norms", tuple(self.norms))
        if not levels:
            raise InvalidArgumentError("study needs at least one level")
        if any(b != a + 1 for a, b in zip(levels, levels[1:])):
            raise InvalidArgumentError("levels must be consecutive and increasing")
        if levels[0] < 1:
            raise InvalidArgumentError("levels must be >= 1")
        if not max(levels) < self.ref_level <= MAX_LEVEL:
            raise InvalidArgumentError(
                f"ref_level must satisfy max(levels) < ref_level <= {MAX_LEVEL}")
        if not self.norms:
            raise InvalidArgumentError("no norms selected")
        for kind in self.norms:
            if kind not in NORM_KINDS:
                raise InvalidArgumentError(f"unknown norm kind {kind!r}")

    @classmethod
    def from_config(cls, section, **overrides):
        """Build from a ``[study]`` config section; ``overrides`` win."""
        kw = {}
        for key, value in section.items():
            if key == "problem":
                kw["problem"] = value
            elif key == "levels":
                kw["levels"] = parse_levels(value)
            elif key in ("ref", "ref_level"):
                kw["ref_level"] = int(value)
            elif key == "norms":
                kw["norms"] = parse_norms(value)
            elif key == "outdir":
                kw["outdir"] = value
            elif key in ("csv", "json", "svg"):
                kw["emit_" + key] = value.strip().lower() in ("1", "true", "yes", "on")
            elif key == "plot_level":
                kw["plot_level"] = int(value)
            elif key == "nested":
                kw["nested"] = value.strip().lower() in ("1", "true", "yes", "on")
            else:
                raise InvalidArgumentError(f"unknown study option {key!r}")
        kw.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**kw)


@dataclass(frozen=True)
class ConvergenceRow:
    level: int
    h: float
    errors: dict
    orders: dict | None = None     # None on the first row

    def order(self, kind="H1"):
        return None if self.orders is None else self.orders[kind]


def run_convergence_study(cfg, progress=None):
    """Errors of each ladder level against the reference level, coarse to fine.

    With ``cfg.nested`` every level from the coarsest up to the reference is
    solved in turn, starting from the prolonged solution one level below.
    The discrete solution does not depend on the start, only the work does.
    """
    spec = get_problem(cfg.problem)

    def solve(level, initial=None):
        mesh = build_uniform_mesh(level)
        try:
            sol = solve_hvi(mesh, spec, cfg.solver, initial=initial)
        except NonConvergenceError as exc:
            raise NonConvergenceError(f"level {level}: {exc}", exc.history) from exc
        except SolverError as exc:
            raise SolverError(f"level {level}: {exc}") from exc
        if progress:
            progress(f"level {level}: {sol.iterations} iterations")
        return sol.u

    if cfg.nested:
        solutions = {}
        u = None
        for level in range(cfg.levels[0], cfg.ref_level + 1):
            u = solve(level, None if u is None else prolong(u, level))
            solutions[level] = u
    else:
        solutions = {level: solve(level) for level in (*cfg.levels, cfg.ref_level)}

    ref_mesh = build_uniform_mesh(cfg.ref_level)
    ref = solutions[cfg.ref_level]
    rows = []
    for level in cfg.levels:
        u = prolong(solutions[level], cfg.ref_level)
        diff = DiscreteField(cfg.ref_level, u.values - ref.values)
        errors = {k: discrete_norm(diff, k, ref_mesh) for k in cfg.norms}
        orders = None
        if rows:
            prev = rows[-1].errors
            orders = {k: math.log2(prev[k] / errors[k]) for k in cfg.norms}
        rows.append(ConvergenceRow(level=level, h=2.0 ** -level, errors=errors, orders=orders))
    return rows


def format_error(value):
    """``1.26930e0`` style: five decimals in the mantissa, bare exponent."""
    mantissa, exponent = f"{value:.5e}".split("e")
    return f"{mantissa}e{int(exponent)}"


def _columns(rows):
    norms = list(rows[0].errors)
    order_cols = ["order"] + [f"order_{k}" for k in norms[1:]]
    return norms, order_cols


def emit_table(rows, fmt, path):
    """Write rows as CSV (6 significant digits) or JSON (full precision)."""
    if not rows:
        raise InvalidArgumentError("no rows to write")
    norms, order_cols = _columns(rows)
    if not norms:
        raise InvalidArgumentError("rows carry no norms")
    if fmt == "csv":
        lines = [",".join(["h"] + [f"error_{k}" for k in norms] + order_cols)]
        for row in rows:
            orders = ["" if row.orders is None else f"{row.orders[k]:.6g}" for k in norms]
            lines.append(",".join([f"2^-{row.level}"]
                                  + [format_error(row.errors[k]) for k in norms] + orders))
        text = "\n".join(lines) + "\n"
    elif fmt == "json":
        text = json.dumps([{"level": r.level, "h": r.h, "errors": r.errors, "orders": r.orders}
                           for r in rows], indent=2) + "\n"
    else:
        raise InvalidArgumentError(f"unknown table format {fmt!r}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    return path


def load_table_json(path):
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    return [ConvergenceRow(level=d["level"], h=d["h"], errors=d["errors"], orders=d["orders"])
            for d in data]
