"""Acceptance criteria, one test per criterion.

Each test prints a single ``CRITERION <n>: PASS|FAIL`` line (outside pytest's
capture) before asserting.  Criteria 1 and 2 solve on the 513 x 513 reference
grid and take under a minute each; they are marked ``slow`` but run by default.
"""
import math
import time

import numpy as np
import pytest

from hvifem.cli import cli_main
from hvifem.coefficients import ProblemSpec, estimate_theta, get_problem
from hvifem.mesh import build_uniform_mesh
from hvifem.nonsmooth import (PotentialParams, Selection, clarke_j0, estimate_hj_constants,
                              graph_distance, subdiff_selection)
from hvifem.plots import emit_multiplier_plot, multiplier_points
from hvifem.solver import estimate_lambda_L, solve_hvi, verify_discrete_hvi
from hvifem.study import discrete_norm, error_vs_exact, load_table_json
from manufactured import patch_exact, patch_grad, patch_solution, smooth_errors

PRINTED = {
    "example1": {"orders": [0.9396, 0.9801, 0.9962, 1.0256],
                 "errors": [2.4346, 1.2693, 0.64350, 0.32560, 0.15850]},
    "example2": {"orders": [0.9615, 0.9902, 1.0045, 1.0342],
                 "errors": [0.69671, 0.35778, 0.18010, 0.089772, 0.043836]},
}


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\nCRITERION {number}: {'PASS' if ok else 'FAIL'} - {detail}")
        return ok
    return emit


def _study(tmp_path, problem, levels, ref):
    argv = ["study", "--problem", problem, "--levels", levels, "--ref", str(ref),
            "--outdir", str(tmp_path)]
    start = time.perf_counter()
    code = cli_main(argv)
    elapsed = time.perf_counter() - start
    assert code == 0
    rows = load_table_json(tmp_path / f"{problem}_table.json")
    return rows, elapsed


def _reproduce_table(tmp_path, report, number, problem):
    rows, elapsed = _study(tmp_path, problem, "3..7", 9)
    errors = [r.errors["H1"] for r in rows]
    orders = [r.orders["H1"] for r in rows[1:]]
    ratios = [a / b for a, b in zip(errors, errors[1:])]
    printed = PRINTED[problem]
    order_ok = all(abs(o - p) <= 0.10 for o, p in zip(orders, printed["orders"]))
    ratio_ok = all(1.7 <= r <= 2.3 for r in ratios)
    time_ok = elapsed < 15 * 60
    factors = [e / p for e, p in zip(errors, printed["errors"])]
    within = all(1 / 1.5 <= f <= 1.5 for f in factors)
    ok = order_ok and ratio_ok and time_ok
    report(number, ok,
           f"{problem}: orders {[round(o, 4) for o in orders]} vs {printed['orders']}, "
           f"ratios {[round(r, 3) for r in ratios]}, {elapsed:.0f} s; "
           f"error/printed {[round(f, 3) for f in factors]} "
           f"({'within' if within else 'outside'} factor 1.5, not gated)")
    assert time_ok
    assert order_ok
    assert ratio_ok


@pytest.mark.slow
def test_criterion_1_table_example1(tmp_path, report):
    _reproduce_table(tmp_path, report, 1, "example1")


@pytest.mark.slow
def test_criterion_2_table_example2(tmp_path, report):
    _reproduce_table(tmp_path, report, 2, "example2")


def test_criterion_3_smoke_study(tmp_path, report):
    start = time.perf_counter()
    orders = {}
    for problem in ("example1", "example2"):
        rows, _ = _study(tmp_path, problem, "3..5", 7)
        orders[problem] = [r.orders["H1"] for r in rows[1:]]
    elapsed = time.perf_counter() - start
    ok_orders = all(0.85 <= o <= 1.15 for v in orders.values() for o in v)
    ok = ok_orders and elapsed < 60
    report(3, ok, f"orders {({k: [round(o, 4) for o in v] for k, v in orders.items()})}, "
                  f"{elapsed:.1f} s")
    assert elapsed < 60
    assert ok_orders


def test_criterion_4_manufactured(report):
    errs = smooth_errors([3, 4, 5, 6])
    h1 = [math.log2(a["H1"] / b["H1"]) for a, b in zip(errs, errs[1:])]
    l2 = [math.log2(a["L2"] / b["L2"]) for a, b in zip(errs, errs[1:])]
    patch = max(error_vs_exact(u, mesh, patch_exact, patch_grad)["H1"]
                for mesh, u in (patch_solution(n) for n in (3, 4, 5, 6)))
    ok_rates = all(abs(o - 1) <= 0.05 for o in h1) and all(abs(o - 2) <= 0.10 for o in l2)
    ok = ok_rates and patch <= 1e-10
    report(4, ok, f"H1 orders {[round(o, 4) for o in h1]}, L2 orders {[round(o, 4) for o in l2]}, "
                  f"patch H1 error {patch:.2e}")
    assert ok_rates
    assert patch <= 1e-10


def test_criterion_5_uniform_boundedness(report):
    ratios = {}
    for problem in ("example1", "example2"):
        spec = get_problem(problem)
        norms = []
        for level in range(3, 8):
            mesh = build_uniform_mesh(level)
            norms.append(discrete_norm(solve_hvi(mesh, spec).u, "V", mesh))
        ratios[problem] = max(norms) / min(norms)
    ok = all(r <= 1.10 for r in ratios.values())
    report(5, ok, f"max/min of |u_h|_H1 over levels 3..7: "
                  f"{({k: round(v, 4) for k, v in ratios.items()})}")
    assert ok


def test_criterion_6_discrete_verification(report):
    worst = {}
    for problem in ("example1", "example2"):
        mesh = build_uniform_mesh(5)
        spec = get_problem(problem)
        worst[problem] = verify_discrete_hvi(solve_hvi(mesh, spec), mesh, spec).worst_violation
    ok = all(w <= 1e-8 for w in worst.values())
    report(6, ok, f"worst scaled violation at level 5: {({k: f'{v:.2e}' for k, v in worst.items()})}")
    assert ok


def test_criterion_7_multiplier_fidelity(tmp_path, report):
    mesh = build_uniform_mesh(5)
    spec = get_problem("example1")
    sol = solve_hvi(mesh, spec)
    assert spec.boundary_potential == PotentialParams(0.5, 0.5)
    assert spec.interior_potential == PotentialParams(1.0, 1.0)
    dist = {}
    for which, p in (("boundary", spec.boundary_potential), ("interior", spec.interior_potential)):
        emit_multiplier_plot(sol, p, which, tmp_path / f"{which}.svg")
        t, z = multiplier_points(sol, which)
        dist[which] = float(np.max(graph_distance(t, z, p)))
    ok = all(d <= 1e-6 for d in dist.values())
    report(7, ok, f"max vertical distance to the graph: {({k: f'{v:.1e}' for k, v in dist.items()})}")
    assert ok


def test_criterion_8_diagnostics(report):
    j = PotentialParams(1, 1)
    laplace = ProblemSpec.from_strings("laplace", "1", "0", "0", "1", "0", "0", j, j)
    mixed = estimate_lambda_L(build_uniform_mesh(6), laplace)
    pure = estimate_lambda_L(build_uniform_mesh(6, "none"), laplace)
    theta = estimate_theta(get_problem("example1"))
    e_mixed = abs(mixed / (5 * math.pi ** 2 / 4) - 1)
    e_pure = abs(pure / (2 * math.pi ** 2) - 1)
    e_theta = abs(theta - (3 - math.sqrt(5)) / 2)
    ok = e_mixed <= 0.01 and e_pure <= 0.01 and e_theta <= 1e-9
    report(8, ok, f"lambda_L mixed {mixed:.4f} (rel {e_mixed:.1e}), pure Dirichlet {pure:.4f} "
                  f"(rel {e_pure:.1e}), theta error {e_theta:.1e}")
    assert e_mixed <= 0.01
    assert e_pure <= 0.01
    assert e_theta <= 1e-9


def test_criterion_9_nonsmooth_suite(report):
    rng = np.random.default_rng(2024)
    failures = []
    for p in (PotentialParams(1, 1), PotentialParams(0.5, 0.5)):
        t = rng.uniform(-5, 5, 1000)
        t[::8] = 0.0
        v1, v2 = rng.normal(size=(2, 1000))
        s = rng.uniform(1e-3, 1e3, 1000)
        if np.any(clarke_j0(t, v1 + v2, p) > clarke_j0(t, v1, p) + clarke_j0(t, v2, p) + 1e-12):
            failures.append("subadditivity")
        if not np.allclose(clarke_j0(t, s * v1, p), s * clarke_j0(t, v1, p), rtol=1e-12, atol=0):
            failures.append("homogeneity")
        for sel in Selection:
            q = p.with_selection(sel)
            if np.any(subdiff_selection(t, q) * v1 > clarke_j0(t, v1, q) + 1e-15):
                failures.append(f"selection {sel.value}")
        alpha = estimate_hj_constants(p).alpha_hat
        t1, t2 = rng.uniform(-10, 10, (2, 1000))
        t2[:200] = t1[:200] + rng.uniform(-0.01, 0.01, 200)
        lhs = clarke_j0(t1, t2 - t1, p) + clarke_j0(t2, t1 - t2, p)
        if np.any(lhs > (alpha + 1e-9) * (t1 - t2) ** 2):
            failures.append("relaxed monotonicity")
    ok = not failures
    report(9, ok, "all four invariants hold on 1000-sample runs" if ok else f"failed: {failures}")
    assert ok


def test_criterion_10_determinism(tmp_path, report):
    outputs = []
    for run in ("a", "b"):
        out = tmp_path / run
        for problem in ("example1", "example2"):
            assert cli_main(["study", "--problem", problem, "--levels", "3..5", "--ref", "7",
                             "--outdir", str(out), "--no-svg"]) == 0
        outputs.append([(out / f"{p}_table.csv").read_bytes() for p in ("example1", "example2")])
    ok = outputs[0] == outputs[1]
    report(10, ok, "CSV outputs of two sequential runs are byte-identical" if ok
           else "CSV outputs differ between runs")
    assert ok
