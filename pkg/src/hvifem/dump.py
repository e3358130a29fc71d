"""Solution dump: the mesh text format followed by nodal data.

Extra line kinds after the ``v``/``t``/``e`` lines::

    problem <name>
    potential interior|boundary <a> <b> <selection>
    status iterations=<k> converged=<0|1>
    history <value>
    u <value>                 one per vertex, in vertex order
    mu <value>                one per vertex
    lambda <vertex> <value>   one per free semipermeable vertex
"""
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .mesh import DiscreteField, build_uniform_mesh, read_mesh_level, write_mesh
from .nonsmooth import PotentialParams
from .solver import HviSolution


def write_solution(path, mesh, spec, sol):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        write_mesh(mesh, fh)
        fh.write(f"problem {spec.name}\n")
        for which, p in (("interior", spec.interior_potential),
                         ("boundary", spec.boundary_potential)):
            fh.write(f"potential {which} {p.a!r} {p.b!r} {p.selection_at_zero.value}\n")
        fh.write(f"status iterations={sol.iterations} converged={int(sol.converged)}\n")
        for value in sol.history:
            fh.write(f"history {float(value)!r}\n")
        for value in sol.u.values:
            fh.write(f"u {float(value)!r}\n")
        for value in sol.mu_nodal:
            fh.write(f"mu {float(value)!r}\n")
        for vertex, value in zip(sol.lambda_vertices, sol.lambda_nodal):
            fh.write(f"lambda {int(vertex)} {float(value)!r}\n")
    return path


@dataclass(frozen=True, eq=False)
class SolutionDump:
    mesh: object
    problem: str
    interior_potential: PotentialParams
    boundary_potential: PotentialParams
    solution: HviSolution


def read_solution(path):
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise InvalidArgumentError(f"{path}: empty dump")
    level = read_mesh_level(lines)
    semipermeable = "none"
    problem, potentials, status = "", {}, {}
    history, u, mu, lam_v, lam = [], [], [], [], []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split()
        if not parts:
            continue
        kind = parts[0]
        try:
            if kind in ("v", "t"):
                continue
            if kind == "e":
                if parts[3] == "SEMIPERMEABLE":
                    semipermeable = "bottom"
            elif kind == "problem":
                problem = parts[1]
            elif kind == "potential":
                potentials[parts[1]] = PotentialParams(float(parts[2]), float(parts[3]), parts[4])
            elif kind == "status":
                status = dict(p.split("=", 1) for p in parts[1:])
            elif kind == "history":
                history.append(float(parts[1]))
            elif kind == "u":
                u.append(float(parts[1]))
            elif kind == "mu":
                mu.append(float(parts[1]))
            elif kind == "lambda":
                lam_v.append(int(parts[1]))
                lam.append(float(parts[2]))
            else:
                raise InvalidArgumentError(f"unknown line kind {kind!r}")
        except (IndexError, ValueError) as exc:
            raise InvalidArgumentError(f"{path}:{lineno}: malformed line ({exc})") from None
    if set(potentials) != {"interior", "boundary"}:
        raise InvalidArgumentError(f"{path}: missing potential lines")
    mesh = build_uniform_mesh(level, semipermeable)
    sol = HviSolution(
        u=DiscreteField(level, np.array(u)), lambda_nodal=np.array(lam),
        lambda_vertices=np.array(lam_v, dtype=np.int64), mu_nodal=np.array(mu),
        iterations=int(status.get("iterations", len(history))), history=history,
        converged=status.get("converged", "0") == "1", problem=problem)
    if len(sol.mu_nodal) != mesh.num_vertices:
        raise InvalidArgumentError(f"{path}: expected {mesh.num_vertices} mu values")
    return SolutionDump(mesh=mesh, problem=problem, interior_potential=potentials["interior"],
                        boundary_potential=potentials["boundary"], solution=sol)
