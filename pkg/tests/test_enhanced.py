from dataclasses import replace

import numpy as np
import pytest

from safip import benchmarks
from safip.enhanced import (
    TreeNode,
    default_max_population,
    lineage,
    offspring,
    solve_enhanced,
    write_genealogy_csv,
)
from safip.geometry import BoxDomain, RngStream, distance
from safip.problem import Problem, evaluate
from safip.solver import SolverConfig, solve, trace_violations

SQUARE = BoxDomain.cube(-1, 1, 2)


def circle(x):
    return x[0] ** 2 + x[1] ** 2 - 0.5


def _root(problem, point, R=0.3):
    point = np.asarray(point, dtype=float)
    return TreeNode(0, None, point, evaluate(problem, point), R, 0, root_id=0)


def test_children_decrease_and_stay_in_ball():
    p = Problem.from_callables(circle, SQUARE)
    cfg = SolverConfig()
    node = _root(p, [0.1, 0.2])
    rng = RngStream(0, 0)
    for _ in range(30):
        children, evals = offspring(node, p, cfg, 3, rng)
        assert len(children) <= 3
        assert evals >= len(children)
        for child in children:
            assert child.residual.aggregated <= cfg.C * node.residual.aggregated
            assert distance(child.point, node.point) <= node.R_to_parent / 2 + cfg.k * node.residual.aggregated
            assert child.R_to_parent == distance(child.point, node.point)
            assert child.generation == 1 and child.parent_id == 0 and child.root_id == 0
    assert node.eligible


def test_failed_node_stays_eligible():
    p = Problem.from_callables(lambda x: 1.0, SQUARE)
    node = _root(p, [0.0, 0.0])
    children, evals = offspring(node, p, SolverConfig(), 2, RngStream(1))
    assert children == []
    assert evals == 2 * 50
    assert node.eligible
    node.eligible = False
    with pytest.raises(ValueError):
        offspring(node, p, SolverConfig(), 1, RngStream(1))


def test_lineage_walks_to_root():
    p = Problem.from_callables(circle, SQUARE)
    a = _root(p, [0.5, 0.5])
    b = TreeNode(1, 0, a.point, a.residual, 0.1, 1, root_id=0)
    c = TreeNode(2, 1, a.point, a.residual, 0.1, 2, root_id=0)
    assert [n.id for n in lineage([a, b, c], 2)] == [0, 1, 2]


def test_default_population_cap():
    assert default_max_population(SolverConfig(n=5), 1) == 150
    assert default_max_population(SolverConfig(n=5), 3) == 250
    assert default_max_population(SolverConfig(max_population=0), 1) is None
    assert default_max_population(SolverConfig(max_population=40), 1) == 40


def test_enhanced_genealogy_is_consistent():
    case = benchmarks.get_case("ex1")
    cfg = replace(case.config, algorithm="enhanced", N=300, seed=5)
    report = solve_enhanced(case.problem(), cfg)
    nodes = report.population
    assert len(report.solutions) == 300
    assert [n.id for n in nodes] == list(range(len(nodes)))
    for node in nodes:
        if node.is_root:
            assert node.R_to_parent == cfg.resolved_R0(SQUARE)
            assert node.generation == 0
        else:
            parent = nodes[node.parent_id]
            assert parent.id < node.id
            assert node.generation == parent.generation + 1
            assert node.root_id == parent.root_id
            assert node.residual.aggregated <= cfg.C * parent.residual.aggregated
            assert node.R_to_parent == distance(node.point, parent.point)
    for leaf in range(len(nodes)):
        rows = [(n.residual.aggregated, n.R_to_parent) for n in lineage(nodes, leaf)]
        assert trace_violations(rows, cfg.C, cfg.k) == []
    assert all(s.residuals.aggregated <= cfg.tol for s in report.solutions)


def test_enhanced_is_deterministic_and_dispatched_by_solve():
    case = benchmarks.get_case("ex4")
    cfg = replace(case.config, algorithm="enhanced", N=80, seed=2, branching=2)
    a = solve_enhanced(case.problem(), cfg)
    b = solve(case.problem(), cfg)
    c = solve(case.problem(), replace(cfg, threads=3))
    for other in (b, c):
        assert other.total_evals == a.total_evals
        assert np.array_equal(other.points, a.points)
    assert b.population is not None


def test_pruning_keeps_active_set_bounded_but_archive_complete():
    case = benchmarks.get_case("ex1")
    cfg = replace(case.config, algorithm="enhanced", N=200, max_population=20, seed=1)
    report = solve_enhanced(case.problem(), cfg)
    assert report.chains_died > 0  # number of pruned nodes
    assert len(report.population) > 20
    unbounded = solve_enhanced(case.problem(), replace(cfg, max_population=0))
    assert unbounded.chains_died == 0


def test_stop_mode_retires_solved_nodes():
    case = benchmarks.get_case("ex1")
    cfg = replace(case.config, algorithm="enhanced", N=50, on_solution="stop", seed=3)
    report = solve_enhanced(case.problem(), cfg)
    solved_ids = {s.chain_id for s in report.solutions}
    for node in report.population:
        if node.id in solved_ids:
            assert not node.eligible


def test_budget_and_branching_validation():
    case = benchmarks.get_case("ex1")
    report = solve_enhanced(case.problem(), replace(case.config, eval_budget=200))
    assert report.budget_stopped
    with pytest.raises(ValueError):
        solve_enhanced(case.problem(), case.config, branching=0)


def test_genealogy_csv():
    case = benchmarks.get_case("ex1")
    report = solve_enhanced(case.problem(), replace(case.config, N=10))
    lines = write_genealogy_csv(report).splitlines()
    assert lines[0] == "id,parent_id,generation,residual"
    assert len(lines) == len(report.population) + 1
    root_line = next(line for line in lines[1:] if line.split(",")[1] == "")
    assert root_line.split(",")[2] == "0"
    with pytest.raises(ValueError):
        write_genealogy_csv(solve(case.problem(), replace(case.config, N=5)))
