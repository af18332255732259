"""Tree-structured variant: every accepted point stays fertile.

Instead of extending only the newest point of a chain, each step lets every
eligible node of the population produce offspring with the same ball rule
and decrease test as the basic solver.  Ancestors whose descendants got
stuck therefore keep branching in new directions, which spreads the
solutions over the zero set without drawing new starting points.
"""

from __future__ import annotations

import csv
import io
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .geometry import RngStream, distance, sample_box
from .problem import Problem, ResidualValue, evaluate
from .solver import SolveReport, Solution, SolverConfig, _draw_in_domain, prepare_problem


@dataclass(eq=False)
class TreeNode:
    id: int | None
    parent_id: int | None
    point: np.ndarray
    residual: ResidualValue
    R_to_parent: float
    generation: int
    root_id: int | None = None
    eligible: bool = True
    offspring_count: int = 0

    @property
    def is_root(self) -> bool:
        return self.parent_id is None


def offspring(node: TreeNode, problem: Problem, cfg: SolverConfig, branching: int, rng: RngStream):
    """Try to produce ``branching`` children of ``node``.

    Each child gets up to ``max_candidate_retries`` candidates (one under the
    strict policy) drawn in the ball of radius ``R_to_parent/2 + k*residual``
    and is kept only if its residual is at most ``C`` times the node's.
    Failures never make the node ineligible.

    Returns ``(children, evaluations)``; children have ``id=None`` until the
    caller numbers them.
    """
    if not node.eligible:
        raise ValueError(f"node {node.id} is not eligible")
    current = node.residual.aggregated
    radius = node.R_to_parent / 2.0 + cfg.k * current
    threshold = cfg.C * current
    attempts = 1 if cfg.policy == "strict" else cfg.max_candidate_retries
    children = []
    evals = 0
    for _ in range(branching):
        for _ in range(attempts):
            z = _draw_in_domain(node.point, radius, problem.domain, rng, cfg.max_domain_retries)
            if z is None:
                break
            rv = evaluate(problem, z)
            evals += 1
            if rv.aggregated <= threshold:
                children.append(TreeNode(
                    id=None, parent_id=node.id, point=z, residual=rv,
                    R_to_parent=distance(node.point, z),
                    generation=node.generation + 1, root_id=node.root_id,
                ))
                break
    node.offspring_count += len(children)
    return children, evals


def lineage(nodes, node_id: int) -> list[TreeNode]:
    """Nodes from the root down to ``node_id`` (``nodes`` indexed by id)."""
    path = []
    current = nodes[node_id]
    while current is not None:
        path.append(current)
        current = nodes[current.parent_id] if current.parent_id is not None else None
    return path[::-1]


def default_max_population(cfg: SolverConfig, branching: int) -> int | None:
    if cfg.max_population == 0:
        return None
    if cfg.max_population is not None:
        return cfg.max_population
    return 10 * cfg.n * branching + 100


def _prune(active: list[int], nodes: list[TreeNode], cap: int) -> list[int]:
    """Keep roots and the lowest-residual other nodes, at most ``cap`` in all."""
    def rank(nid):
        return (nodes[nid].residual.aggregated, nid)

    roots = [nid for nid in active if nodes[nid].is_root]
    others = [nid for nid in active if not nodes[nid].is_root]
    if len(roots) >= cap:
        kept = sorted(roots, key=rank)[:cap]
    else:
        kept = roots + sorted(others, key=rank)[: cap - len(roots)]
    return sorted(kept)


def solve_enhanced(problem: Problem, cfg: SolverConfig | None = None, branching: int | None = None) -> SolveReport:
    """Grow a genealogy of points until ``N`` solutions are found.

    ``n`` roots are drawn uniformly (sampling radius ``R0``).  Each step
    lets every eligible node produce offspring, then adds ``p`` new roots.
    Node ``i`` draws from the stream ``(seed, i)``.  The full genealogy is
    returned in ``report.population`` (indexed by node id); pruning only
    removes nodes from the fertile set, never from that record.
    """
    cfg = cfg or SolverConfig()
    branching = cfg.branching if branching is None else branching
    if branching < 1:
        raise ValueError("branching must be >= 1")
    started = time.perf_counter()
    problem, total = prepare_problem(problem, cfg)
    R0 = cfg.resolved_R0(problem.domain)
    cap = default_max_population(cfg, branching)
    keep_solved = cfg.on_solution == "continue"

    nodes: list[TreeNode] = []
    streams: dict[int, RngStream] = {}
    active: list[int] = []
    solutions: list[Solution] = []
    pruned = 0
    steps = 0
    budget_stopped = False

    pool = ThreadPoolExecutor(max_workers=cfg.threads) if cfg.threads > 1 else None
    mapper = pool.map if pool is not None else map

    def harvest(node):
        if node.residual.aggregated <= cfg.tol:
            solutions.append(Solution(node.point, node.residual, node.id, node.generation))
            node.eligible = keep_solved

    def make_root(nid):
        rng = RngStream(cfg.seed, nid)
        z = sample_box(problem.domain, rng)
        rv = evaluate(problem, z)
        return TreeNode(id=nid, parent_id=None, point=z, residual=rv,
                        R_to_parent=R0, generation=0, root_id=nid), rng

    def add_roots(count):
        nonlocal total
        ids = range(len(nodes), len(nodes) + count)
        for node, rng in list(mapper(make_root, ids)):
            nodes.append(node)
            streams[node.id] = rng
            active.append(node.id)
            total += 1
            harvest(node)

    def breed(nid):
        return offspring(nodes[nid], problem, cfg, branching, streams[nid])

    try:
        add_roots(cfg.n)
        while len(solutions) < cfg.N:
            if cfg.eval_budget is not None and total >= cfg.eval_budget:
                budget_stopped = True
                break
            steps += 1
            parents = [nid for nid in active if nodes[nid].eligible]
            for children, used in list(mapper(breed, parents)):
                total += used
                for child in children:
                    child.id = len(nodes)
                    nodes.append(child)
                    streams[child.id] = RngStream(cfg.seed, child.id)
                    active.append(child.id)
                    harvest(child)
            add_roots(cfg.p)
            if cap is not None and len(active) > cap:
                kept = _prune(active, nodes, cap)
                dropped = set(active).difference(kept)
                pruned += len(dropped)
                for nid in dropped:
                    del streams[nid]
                active = kept
    finally:
        if pool is not None:
            pool.shutdown()

    solutions = solutions[: cfg.N]
    solutions.sort(key=lambda s: (s.chain_id, s.steps))
    return SolveReport(
        solutions=solutions,
        total_evals=total,
        elapsed_seconds=time.perf_counter() - started,
        chains_started=sum(1 for nd in nodes if nd.is_root),
        chains_died=pruned,
        rounds=steps,
        config=cfg,
        dim=problem.dim,
        field_names=tuple(f.name for f in problem.fields),
        budget_stopped=budget_stopped,
        population=nodes,
    )


def write_genealogy_csv(report: SolveReport, sink=None) -> str:
    """CSV of ``id,parent_id,generation,residual`` for every node ever created."""
    if report.population is None:
        raise ValueError("report has no genealogy; it was not produced by solve_enhanced")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["id", "parent_id", "generation", "residual"])
    for node in report.population:
        writer.writerow([
            node.id, "" if node.parent_id is None else node.parent_id,
            node.generation, format(node.residual.aggregated, ".17g"),
        ])
    text = buf.getvalue()
    if sink is not None:
        if hasattr(sink, "write"):
            sink.write(text)
        else:
            with open(sink, "w", newline="") as fh:
                fh.write(text)
    return text
