import csv
import io
import statistics
from dataclasses import replace

import numpy as np
import pytest

from safip import benchmarks
from safip.geometry import BoxDomain, RngStream, distance
from safip.problem import Problem, evaluate
from safip.solver import (
    ALIVE,
    DEAD,
    SOLVED,
    SolverConfig,
    TraceRecord,
    rn_bound,
    solve,
    spawn_chain,
    step_chain,
    trace_violations,
    write_trace_csv,
)

from oracles import rn_bound_by_recursion

SQUARE = BoxDomain.cube(-1, 1, 2)


def circle(x):
    return x[0] ** 2 + x[1] ** 2 - 0.5


@pytest.mark.parametrize("bad", [
    dict(C=0.49), dict(C=1.01), dict(k=0.0), dict(n=0), dict(p=-1), dict(N=0), dict(tol=0.0),
    dict(R0=-1.0), dict(seed=-1), dict(policy="lenient"), dict(on_solution="pause"),
    dict(algorithm="fancy"), dict(threads=0), dict(branching=0), dict(eval_budget=0),
])
def test_config_validation(bad):
    with pytest.raises(ValueError):
        SolverConfig(**bad)


def test_config_accepts_boundary_values():
    SolverConfig(C=0.5)
    SolverConfig(C=1.0, p=0)
    assert SolverConfig().resolved_R0(SQUARE) == pytest.approx(SQUARE.diameter / 10)
    assert SolverConfig(R0=0.3).resolved_R0(SQUARE) == 0.3


def test_spawn_chain():
    p = Problem.from_callables(circle, SQUARE)
    cfg = SolverConfig()
    a = spawn_chain(p, cfg, RngStream(5, 2), 2)
    b = spawn_chain(p, cfg, RngStream(5, 2), 2)
    assert a.R == distance(a.prev, a.curr)
    assert SQUARE.contains(a.prev) and SQUARE.contains(a.curr)
    assert a.evals == 2 and a.step == 1
    assert np.array_equal(a.curr, b.curr) and np.array_equal(a.prev, b.prev)
    assert a.res_curr == evaluate(p, a.curr)
    assert p.eval_count() == 5  # two spawns plus the check above


def test_spawn_solved_immediately_when_start_is_in_tolerance():
    p = Problem.from_callables(lambda x: 0.0, SQUARE)
    chain = spawn_chain(p, SolverConfig(), RngStream(0))
    assert chain.status == SOLVED


def test_strict_spawn_dies_without_initial_decrease():
    # f grows with x1, so the pair decreases only when x1 drops enough
    p = Problem.from_callables(lambda x: 2.0 + x[0], SQUARE)
    cfg = SolverConfig(policy="strict")
    for sid in range(50):
        chain = spawn_chain(p, cfg, RngStream(1, sid))
        decreased = chain.res_curr.aggregated <= cfg.C * chain.res_prev.aggregated
        assert chain.status == (ALIVE if decreased else DEAD)


def test_step_accepts_only_decrease_inside_ball():
    p = Problem.from_callables(circle, SQUARE)
    cfg = SolverConfig()
    for sid in range(200):
        chain = spawn_chain(p, cfg, RngStream(3, sid), sid)
        for _ in range(20):
            if not chain.steppable:
                break
            old_curr, old_res, old_R, old_step = chain.curr, chain.res_curr.aggregated, chain.R, chain.step
            step_chain(chain, p, cfg)
            if chain.status == DEAD:
                break
            assert chain.step == old_step + 1
            assert chain.res_curr.aggregated <= cfg.C * old_res
            assert distance(old_curr, chain.curr) <= old_R / 2 + cfg.k * old_res + 1e-12
            assert chain.R == distance(chain.prev, chain.curr)
            assert np.array_equal(chain.prev, old_curr)
            assert (chain.status == SOLVED) == (chain.res_curr.aggregated <= cfg.tol)


def test_chain_dies_after_candidate_retries():
    p = Problem.from_callables(lambda x: 1.0, SQUARE)
    for policy, expected in (("retry", 50), ("strict", 1)):
        cfg = SolverConfig(policy=policy, k=0.01)
        chain = spawn_chain(p, SolverConfig(k=0.01), RngStream(0))
        step_chain(chain, p, cfg)
        assert chain.status == DEAD
        assert chain.candidates == expected
        assert chain.evals == 2 + expected
        with pytest.raises(ValueError):
            step_chain(chain, p, cfg)


def test_chain_dies_when_candidates_keep_leaving_the_domain():
    tiny = BoxDomain.cube(0, 1e-6, 2)
    p = Problem.from_callables(lambda x: 1000.0, tiny)
    cfg = SolverConfig(k=1e6)
    chain = spawn_chain(p, cfg, RngStream(0))
    step_chain(chain, p, cfg)
    assert chain.status == DEAD
    assert chain.evals == 2  # out-of-domain draws cost nothing
    assert p.eval_count() == 2


def test_small_C_needs_more_candidates_per_step():
    case = benchmarks.get_case("ex2")
    per_step = {}
    for C in (0.55, 0.95):
        cfg = replace(case.config, C=C)
        ratios = []
        for sid in range(100):
            problem = case.problem()
            chain = spawn_chain(problem, cfg, RngStream(8, sid), sid)
            while chain.steppable and chain.step < 30:
                step_chain(chain, problem, cfg)
            if chain.step > 1:
                ratios.append(chain.candidates / (chain.step - 1))
        per_step[C] = statistics.median(ratios)
    assert per_step[0.55] > per_step[0.95]


def test_immediate_solution_costs_two_evaluations():
    p = Problem.from_callables(lambda x: 0.0, SQUARE)
    report = solve(p, SolverConfig(n=1, N=1))
    assert len(report.solutions) == 1
    assert report.total_evals == 2
    assert report.ec == 2.0


def test_solve_small_run_accounting():
    p = Problem.from_callables(circle, SQUARE)
    report = solve(p, SolverConfig(N=100, seed=3))
    assert len(report.solutions) == 100
    assert all(abs(circle(s.point)) <= 0.01 for s in report.solutions)
    assert all(s.residuals.aggregated <= 0.01 for s in report.solutions)
    assert report.total_evals == p.eval_count()
    assert report.ec == report.total_evals / 100
    keys = [(s.chain_id, s.steps) for s in report.solutions]
    assert keys == sorted(keys)
    assert report.chains_started >= 5 + report.rounds
    assert not report.budget_stopped


def test_solve_is_deterministic_and_thread_independent():
    case = benchmarks.get_case("ex4")
    cfg = replace(case.config, N=60, seed=77)
    runs = [solve(case.problem(), replace(cfg, threads=t)) for t in (1, 1, 3)]
    for other in runs[1:]:
        assert other.total_evals == runs[0].total_evals
        assert np.array_equal(other.points, runs[0].points)
        assert [s.chain_id for s in other.solutions] == [s.chain_id for s in runs[0].solutions]


def test_different_seeds_give_different_results():
    p1 = Problem.from_callables(circle, SQUARE)
    p2 = Problem.from_callables(circle, SQUARE)
    a = solve(p1, SolverConfig(N=20, seed=1))
    b = solve(p2, SolverConfig(N=20, seed=2))
    assert not np.array_equal(a.points, b.points)


def test_budget_stop_is_reported_not_raised():
    p = Problem.from_callables(circle, SQUARE)
    report = solve(p, SolverConfig(N=1000, eval_budget=300))
    assert report.budget_stopped
    assert len(report.solutions) < 1000
    # the budget is checked between rounds
    assert report.total_evals >= 300


def test_stop_mode_gives_one_solution_per_chain():
    p = Problem.from_callables(circle, SQUARE)
    report = solve(p, SolverConfig(N=50, on_solution="stop", seed=4))
    ids = [s.chain_id for s in report.solutions]
    assert len(ids) == len(set(ids)) == 50


def test_normalize_charges_pilot_evaluations():
    p = Problem.from_callables(circle, SQUARE)
    report = solve(p, SolverConfig(N=10, normalize=True, pilot_size=40))
    assert report.total_evals == p.eval_count()
    assert report.total_evals >= 40 + 10


def test_rn_bound_values():
    assert rn_bound(1.0, 1.0, 1.0, 0.75, 3) == pytest.approx(1.3125, abs=1e-15)
    assert rn_bound(2.0, 0.3, 0.5, 0.8, 1) == pytest.approx(2.0 / 2 + 0.3 * 0.5)
    assert rn_bound(1.0, 1.0, 1.0, 0.75, 20) < rn_bound(1.0, 1.0, 1.0, 0.75, 10)
    rng = np.random.default_rng(1)
    for _ in range(200):
        R0, a, k = rng.uniform(0.01, 3, size=3)
        C = rng.uniform(0.51, 1.0)
        n = int(rng.integers(1, 40))
        assert rn_bound(R0, a, k, C, n) == pytest.approx(rn_bound_by_recursion(R0, a, k, C, n), rel=1e-12)


@pytest.mark.parametrize("args", [(1, 1, 1, 0.5, 3), (1, 1, 1, 0.75, 0), (1, -1, 1, 0.75, 3), (0, 1, 1, 0.75, 3)])
def test_rn_bound_rejects_invalid_arguments(args):
    with pytest.raises(ValueError):
        rn_bound(*args)


def test_trace_violations_flags_bad_traces():
    good = [(1.0, 1.0), (0.7, 1.2), (0.5, 1.0)]
    assert trace_violations(good, C=0.75, k=1.0) == []
    no_decrease = [(1.0, 1.0), (0.9, 0.5)]
    assert any("C*" in m for m in trace_violations(no_decrease, C=0.75, k=1.0))
    long_step = [(1.0, 1.0), (0.5, 1.6)]
    assert any("R_prev/2" in m for m in trace_violations(long_step, C=0.75, k=1.0))


def test_recorded_traces_and_csv():
    p = Problem.from_callables(circle, SQUARE)
    report = solve(p, SolverConfig(N=20, record_trace=True, seed=2))
    assert set(report.traces) == set(range(report.chains_started))
    for trace in report.traces.values():
        assert all(isinstance(r, TraceRecord) for r in trace)
        assert trace_violations(trace, 0.75, 1.0) == []
    text = write_trace_csv(report)
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["chain_id", "step", "x1", "x2", "agg", "R"]
    assert len(rows) - 1 == sum(len(t) for t in report.traces.values())
    with pytest.raises(ValueError):
        write_trace_csv(solve(Problem.from_callables(circle, SQUARE), SolverConfig(N=2)))
