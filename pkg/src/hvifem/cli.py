"""Command line front end: ``hvifem {solve,study,diagnose,plot}``."""
import argparse
import os
import sys

from .coefficients import get_problem, load_problem_config, read_config
from .dump import read_solution, write_solution
from .errors import HviError, SolverError
from .mesh import build_uniform_mesh
from .plots import emit_multiplier_plot, emit_solution_plot
from .solver import SolverParams, diagnose, smallness_check, solve_hvi
from .study import StudyConfig, emit_table, parse_levels, parse_norms, run_convergence_study

EXIT_OK, EXIT_SOLVER, EXIT_USAGE = 0, 1, 2


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="hvifem", description="P1 finite elements for a semipermeable-media inequality.")
    sub = parser.add_subparsers(dest="command", metavar="{solve,study,diagnose,plot}")

    def common(p, level=True):
        p.add_argument("--problem", required=True, help="registered problem name")
        p.add_argument("--config", help="config file with [problem], [solver], [study] sections")
        if level:
            p.add_argument("--level", type=int, required=True, help="mesh level n (h = 2^-n)")
        p.add_argument("--linear-solver", choices=("cg", "direct"), default=None,
                       help="inner linear solver (default: cg)")

    p = sub.add_parser("solve", help="solve one level and write a solution dump")
    common(p)
    p.add_argument("--outdir", default=".")
    p.add_argument("--svg", action="store_true", help="also write the three SVG plots")

    p = sub.add_parser("study", help="convergence study against a reference level")
    common(p, level=False)
    p.add_argument("--levels", type=parse_levels, default=None, help="e.g. 3..7")
    p.add_argument("--ref", type=int, default=None, help="reference level")
    p.add_argument("--norms", type=parse_norms, default=None, help="comma list of H1,V,L2,L2_GammaS")
    p.add_argument("--outdir", default=None)
    p.add_argument("--no-csv", action="store_true")
    p.add_argument("--no-json", action="store_true")
    p.add_argument("--no-svg", action="store_true")

    p = sub.add_parser("diagnose", help="print theta, eigenvalue bounds and the smallness margin")
    common(p)
    p.add_argument("--samples", type=int, default=100_000, help="samples for alpha estimates")

    p = sub.add_parser("plot", help="regenerate SVGs from a solution dump")
    p.add_argument("dump", help="file written by 'solve'")
    p.add_argument("--outdir", default=".")
    return parser


def _solver_params(args, parser):
    section = {}
    if args.config and parser is not None and parser.has_section("solver"):
        section = dict(parser["solver"])
    return SolverParams.from_config(section, **(
        {"linear_solver": args.linear_solver} if args.linear_solver else {}))


def _write_plots(outdir, problem, mesh, sol, p_interior, p_boundary):
    emit_multiplier_plot(sol, p_boundary, "boundary", os.path.join(outdir, f"{problem}_lambda.svg"))
    emit_multiplier_plot(sol, p_interior, "interior", os.path.join(outdir, f"{problem}_mu.svg"))
    emit_solution_plot(sol.u, mesh, os.path.join(outdir, f"{problem}_solution.svg"),
                       title=f"{problem}: u_h at h = 2^-{mesh.level}")


def _cmd_solve(args, cfg):
    spec = get_problem(args.problem)
    mesh = build_uniform_mesh(args.level)
    sol = solve_hvi(mesh, spec, _solver_params(args, cfg), check_smallness=True)
    os.makedirs(args.outdir, exist_ok=True)
    path = os.path.join(args.outdir, f"{spec.name}_level{args.level}.sol")
    write_solution(path, mesh, spec, sol)
    print(f"converged in {sol.iterations} iterations; wrote {path}")
    if args.svg:
        _write_plots(args.outdir, spec.name, mesh, sol,
                     spec.interior_potential, spec.boundary_potential)
    return EXIT_OK


def _cmd_study(args, cfg):
    section = dict(cfg["study"]) if cfg is not None and cfg.has_section("study") else {}
    section.pop("problem", None)
    study = StudyConfig.from_config(
        section, problem=args.problem, levels=args.levels, ref_level=args.ref,
        norms=args.norms, outdir=args.outdir, solver=_solver_params(args, cfg))
    if args.no_csv or args.no_json or args.no_svg:
        study = StudyConfig(**{**study.__dict__,
                               "emit_csv": study.emit_csv and not args.no_csv,
                               "emit_json": study.emit_json and not args.no_json,
                               "emit_svg": study.emit_svg and not args.no_svg})
    rows = run_convergence_study(study, progress=lambda msg: print(msg, file=sys.stderr))
    os.makedirs(study.outdir, exist_ok=True)
    base = os.path.join(study.outdir, f"{study.problem}_table")
    first = study.norms[0]
    for row in rows:
        order = "" if row.orders is None else f"{row.orders[first]:.4f}"
        print(f"h=2^-{row.level}  error_{first}={row.errors[first]:.5e}  order={order}")
    if study.emit_csv:
        emit_table(rows, "csv", base + ".csv")
    if study.emit_json:
        emit_table(rows, "json", base + ".json")
    if study.emit_svg:
        spec = get_problem(study.problem)
        mesh = build_uniform_mesh(study.plot_level)
        sol = solve_hvi(mesh, spec, study.solver)
        _write_plots(study.outdir, spec.name, mesh, sol,
                     spec.interior_potential, spec.boundary_potential)
    return EXIT_OK


def _cmd_diagnose(args, cfg):
    spec = get_problem(args.problem)
    report = smallness_check(diagnose(build_uniform_mesh(args.level), spec, samples=args.samples))
    print(f"problem {spec.name}, level {args.level}")
    for line in report.lines():
        print(line)
    return EXIT_OK


def _cmd_plot(args, cfg):
    dump = read_solution(args.dump)
    os.makedirs(args.outdir, exist_ok=True)
    _write_plots(args.outdir, dump.problem or "solution", dump.mesh, dump.solution,
                 dump.interior_potential, dump.boundary_potential)
    print(f"wrote plots for {dump.problem} to {args.outdir}")
    return EXIT_OK


_COMMANDS = {"solve": _cmd_solve, "study": _cmd_study, "diagnose": _cmd_diagnose,
             "plot": _cmd_plot}


def cli_main(argv=None):
    parser = _build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    if not argv:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        cfg = None
        if getattr(args, "config", None):
            cfg = read_config(args.config)
            load_problem_config(args.config)
        return _COMMANDS[args.command](args, cfg)
    except SolverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (HviError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main():
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
