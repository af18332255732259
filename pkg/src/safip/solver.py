"""Population of random-search chains that converge onto the zero set.

Each chain keeps its last two points ``prev`` and ``curr`` and the distance
``R`` between them.  A new point is drawn uniformly in the ball of radius
``R/2 + k*|f(curr)|`` around ``curr`` and is accepted only when it shrinks
the residual by at least the factor ``C``.  Chains that cannot improve die
and are replaced by fresh ones, and ``p`` extra chains are injected every
round so the whole zero set keeps being explored.
"""

from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import NamedTuple

import numpy as np

from .geometry import BoxDomain, RngStream, distance, sample_ball, sample_box
from .problem import PILOT_STREAM, Problem, ResidualValue, evaluate, normalize

ALIVE = "alive"
DEAD = "dead"
SOLVED = "solved"

POLICIES = ("retry", "strict")
ON_SOLUTION = ("continue", "stop")
ALGORITHMS = ("basic", "enhanced")


@dataclass(frozen=True)
class SolverConfig:
    """Tunables for :func:`solve` and :func:`safip.enhanced.solve_enhanced`.

    ``n`` chains are started, ``p`` more are injected per round.  ``C`` is
    the required residual decrease factor and ``k`` couples residual size to
    the sampling radius.  The run stops once ``N`` points with residual at
    most ``tol`` have been collected or ``eval_budget`` is spent.

    ``policy="retry"`` redraws a rejected candidate up to
    ``max_candidate_retries`` times before the chain dies; ``"strict"``
    kills the chain on the first rejection.  With ``on_solution="continue"``
    a chain that has reached ``tol`` keeps refining and every further
    accepted point is another solution; ``"stop"`` retires the chain after
    its first solution.

    ``R0`` (default: domain diameter / 10) is the sampling-radius seed for
    enhanced-variant roots.  ``max_population`` caps the enhanced population
    (None: ``10*n*branching + 100``; 0: unbounded).
    """

    n: int = 5
    p: int = 1
    C: float = 0.75
    k: float = 1.0
    tol: float = 0.01
    N: int = 1000
    R0: float | None = None
    max_candidate_retries: int = 50
    max_domain_retries: int = 50
    eval_budget: int | None = None
    seed: int = 0
    policy: str = "retry"
    on_solution: str = "continue"
    normalize: bool = False
    pilot_size: int = 100
    algorithm: str = "basic"
    branching: int = 1
    max_population: int | None = None
    threads: int = 1
    record_trace: bool = False

    def __post_init__(self):
        def need(cond, msg):
            if not cond:
                raise ValueError(msg)

        need(isinstance(self.n, (int, np.integer)) and self.n >= 1, f"n must be an integer >= 1, got {self.n!r}")
        need(isinstance(self.p, (int, np.integer)) and self.p >= 0, f"p must be an integer >= 0, got {self.p!r}")
        need(0.5 <= self.C <= 1.0, f"C must lie in [1/2, 1], got {self.C!r}")
        need(self.k > 0, f"k must be > 0, got {self.k!r}")
        need(self.tol > 0, f"tol must be > 0, got {self.tol!r}")
        need(isinstance(self.N, (int, np.integer)) and self.N >= 1, f"N must be an integer >= 1, got {self.N!r}")
        need(self.R0 is None or self.R0 > 0, f"R0 must be > 0, got {self.R0!r}")
        need(self.max_candidate_retries >= 1, "max_candidate_retries must be >= 1")
        need(self.max_domain_retries >= 1, "max_domain_retries must be >= 1")
        need(self.eval_budget is None or self.eval_budget >= 1, "eval_budget must be >= 1")
        need(0 <= self.seed < 2**64, f"seed must be a 64-bit unsigned integer, got {self.seed!r}")
        need(self.policy in POLICIES, f"policy must be one of {POLICIES}, got {self.policy!r}")
        need(self.on_solution in ON_SOLUTION, f"on_solution must be one of {ON_SOLUTION}, got {self.on_solution!r}")
        need(self.pilot_size >= 1, "pilot_size must be >= 1")
        need(self.algorithm in ALGORITHMS, f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        need(self.branching >= 1, "branching must be >= 1")
        need(self.max_population is None or self.max_population >= 0, "max_population must be >= 0")
        need(self.threads >= 1, "threads must be >= 1")

    def resolved_R0(self, domain: BoxDomain) -> float:
        return self.R0 if self.R0 is not None else domain.diameter / 10.0

    def to_dict(self) -> dict:
        return asdict(self)


class TraceRecord(NamedTuple):
    chain_id: int
    step: int
    point: np.ndarray
    aggregated: float
    R: float


@dataclass(eq=False)
class Chain:
    id: int
    prev: np.ndarray
    curr: np.ndarray
    R: float
    res_prev: ResidualValue
    res_curr: ResidualValue
    rng: RngStream = field(repr=False)
    step: int = 1
    status: str = ALIVE
    evals: int = 0
    candidates: int = 0
    trace: list | None = field(default=None, repr=False)

    @property
    def steppable(self) -> bool:
        return self.status != DEAD


@dataclass(frozen=True)
class Solution:
    point: np.ndarray
    residuals: ResidualValue
    chain_id: int
    steps: int


@dataclass
class SolveReport:
    solutions: list
    total_evals: int
    elapsed_seconds: float
    chains_started: int
    chains_died: int
    rounds: int
    config: SolverConfig
    dim: int
    field_names: tuple
    budget_stopped: bool = False
    coverage: object | None = None
    traces: dict | None = None
    population: list | None = None

    @property
    def ec(self) -> float:
        return self.total_evals / max(1, len(self.solutions))

    @property
    def points(self) -> np.ndarray:
        if not self.solutions:
            return np.empty((0, self.dim))
        return np.array([s.point for s in self.solutions])


def _draw_in_domain(center, radius, domain: BoxDomain, rng: RngStream, tries: int):
    for _ in range(tries):
        z = sample_ball(center, radius, rng)
        if domain.contains(z):
            return z
    return None


def spawn_chain(problem: Problem, cfg: SolverConfig, rng: RngStream, chain_id: int = 0) -> Chain:
    """Start a chain from two independent uniform points (two evaluations)."""
    z0 = sample_box(problem.domain, rng)
    z1 = sample_box(problem.domain, rng)
    r0 = evaluate(problem, z0)
    r1 = evaluate(problem, z1)
    chain = Chain(
        id=chain_id, prev=z0, curr=z1, R=distance(z0, z1),
        res_prev=r0, res_curr=r1, rng=rng, evals=2,
    )
    if r1.aggregated <= cfg.tol:
        chain.status = SOLVED
    elif cfg.policy == "strict" and r1.aggregated > cfg.C * r0.aggregated:
        chain.status = DEAD
    if cfg.record_trace:
        chain.trace = [TraceRecord(chain_id, 1, z1, r1.aggregated, chain.R)]
    return chain


def step_chain(chain: Chain, problem: Problem, cfg: SolverConfig, rng: RngStream | None = None) -> Chain:
    """Advance ``chain`` by one accepted point, or mark it dead.

    Candidates outside the domain are redrawn without evaluating the field.
    The chain is updated in place and returned.
    """
    if not chain.steppable:
        raise ValueError(f"chain {chain.id} is dead")
    rng = rng or chain.rng
    current = chain.res_curr.aggregated
    radius = chain.R / 2.0 + cfg.k * current
    threshold = cfg.C * current
    attempts = 1 if cfg.policy == "strict" else cfg.max_candidate_retries
    for _ in range(attempts):
        z = _draw_in_domain(chain.curr, radius, problem.domain, rng, cfg.max_domain_retries)
        if z is None:
            break
        rv = evaluate(problem, z)
        chain.evals += 1
        chain.candidates += 1
        if rv.aggregated <= threshold:
            chain.prev, chain.curr = chain.curr, z
            chain.R = distance(chain.prev, z)
            chain.res_prev, chain.res_curr = chain.res_curr, rv
            chain.step += 1
            chain.status = SOLVED if rv.aggregated <= cfg.tol else ALIVE
            if chain.trace is not None:
                chain.trace.append(TraceRecord(chain.id, chain.step, z, rv.aggregated, chain.R))
            return chain
    chain.status = DEAD
    return chain


def _solution_of(chain: Chain) -> Solution:
    return Solution(chain.curr, chain.res_curr, chain.id, chain.step)


def prepare_problem(problem: Problem, cfg: SolverConfig) -> tuple[Problem, int]:
    """Apply the configured tolerance and optional normalisation.

    Returns the working problem and the number of pilot evaluations spent.
    """
    problem = problem.with_tol(cfg.tol)
    if cfg.normalize:
        problem = normalize(problem, cfg.pilot_size, RngStream(cfg.seed, PILOT_STREAM))
        return problem, cfg.pilot_size
    return problem, 0


def solve(problem: Problem, cfg: SolverConfig | None = None) -> SolveReport:
    """Run the streaming chain population until ``N`` solutions are found.

    Rounds step every live chain once.  Dead chains, and solved chains when
    ``on_solution="stop"``, are replaced by fresh chains, and ``p`` new
    chains are injected per round.  Chain ``i`` draws from the stream
    ``(seed, i)``, so results do not depend on ``threads``.
    """
    cfg = cfg or SolverConfig()
    if cfg.algorithm == "enhanced":
        from .enhanced import solve_enhanced

        return solve_enhanced(problem, cfg, cfg.branching)

    started = time.perf_counter()
    problem, total = prepare_problem(problem, cfg)
    solutions: list[Solution] = []
    traces = {} if cfg.record_trace else None
    next_id = 0
    died = 0
    rounds = 0
    budget_stopped = False
    stop_on_solution = cfg.on_solution == "stop"

    pool = ThreadPoolExecutor(max_workers=cfg.threads) if cfg.threads > 1 else None
    mapper = pool.map if pool is not None else map

    def spawn(count):
        nonlocal next_id, total
        ids = range(next_id, next_id + count)
        next_id += count
        fresh = list(mapper(
            lambda cid: spawn_chain(problem, cfg, RngStream(cfg.seed, cid), cid), ids
        ))
        for ch in fresh:
            total += ch.evals
            if traces is not None:
                traces[ch.id] = ch.trace
        return fresh

    def advance(ch):
        before = ch.evals
        step = ch.step
        step_chain(ch, problem, cfg)
        return ch.evals - before, ch.step != step

    try:
        chains = spawn(cfg.n)
        solutions.extend(_solution_of(c) for c in chains if c.status == SOLVED)
        while len(solutions) < cfg.N:
            if cfg.eval_budget is not None and total >= cfg.eval_budget:
                budget_stopped = True
                break
            rounds += 1
            if stop_on_solution:
                active = [c for c in chains if c.status == ALIVE]
            else:
                active = [c for c in chains if c.steppable]
            for ch, (used, accepted) in zip(active, mapper(advance, active)):
                total += used
                if accepted and ch.status == SOLVED:
                    solutions.append(_solution_of(ch))
            keep = []
            retired = 0
            for ch in chains:
                if ch.status == DEAD:
                    died += 1
                    retired += 1
                elif stop_on_solution and ch.status == SOLVED:
                    retired += 1
                else:
                    keep.append(ch)
            fresh = spawn(retired + cfg.p)
            solutions.extend(_solution_of(c) for c in fresh if c.status == SOLVED)
            chains = keep + fresh
    finally:
        if pool is not None:
            pool.shutdown()

    solutions = solutions[: cfg.N]
    solutions.sort(key=lambda s: (s.chain_id, s.steps))
    return SolveReport(
        solutions=solutions,
        total_evals=total,
        elapsed_seconds=time.perf_counter() - started,
        chains_started=next_id,
        chains_died=died,
        rounds=rounds,
        config=cfg,
        dim=problem.dim,
        field_names=tuple(f.name for f in problem.fields),
        budget_stopped=budget_stopped,
        traces=traces,
    )


def rn_bound(R0: float, a: float, k: float, C: float, n: int) -> float:
    """Upper bound on the n-th step length of a chain.

    With ``|f|`` shrinking at least geometrically (``|f(z_i)| <= a*C**i``),
    step lengths obey ``R_{i+1} <= R_i/2 + a*k*C**i``, whose solution is
    ``R0/2**n + a*k*C**(n-1) * sum_{j<n} (1/(2C))**j``.
    """
    if not C > 0.5:
        raise ValueError(f"C must exceed 1/2 for the bound, got {C!r}")
    if n < 1:
        raise ValueError("n must be >= 1")
    if a < 0:
        raise ValueError("a must be >= 0")
    if not R0 > 0:
        raise ValueError("R0 must be > 0")
    q = 1.0 / (2.0 * C)
    series = math.fsum(q**j for j in range(n))
    return R0 / 2.0**n + a * k * C ** (n - 1) * series


def trace_violations(trace, C: float, k: float, slack: float = 1e-12, bound_slack: float = 1e-9) -> list[str]:
    """Check a chain trace against the decrease and step-length guarantees.

    ``trace`` is a sequence of :class:`TraceRecord` (or ``(aggregated, R)``
    pairs) starting at the first point of the chain.  Indices are counted
    from that point: with ``a`` its residual and ``R`` its distance to its
    predecessor, every later record must satisfy

    * ``res[i+1] <= C*res[i]``,
    * ``R[i+1] <= R[i]/2 + k*res[i]``,
    * ``res[i] <= a*C**i``,
    * ``R[i] <= rn_bound(R[0], a, k, C, i)``.

    Returns human-readable descriptions of any violations.
    """
    rows = [(t.aggregated, t.R) if isinstance(t, TraceRecord) else tuple(t) for t in trace]
    problems = []
    if not rows:
        return problems
    a, R_start = rows[0]
    for i in range(1, len(rows)):
        res_prev, R_prev = rows[i - 1]
        res, R = rows[i]
        if res > C * res_prev + slack:
            problems.append(f"step {i}: residual {res!r} > C*{res_prev!r}")
        if R > R_prev / 2 + k * res_prev + slack:
            problems.append(f"step {i}: R {R!r} > R_prev/2 + k*res_prev")
        if res > a * C**i + slack:
            problems.append(f"step {i}: residual {res!r} > a*C**{i}")
        if C > 0.5 and R_start > 0 and R > rn_bound(R_start, a, k, C, i) + bound_slack:
            problems.append(f"step {i}: R {R!r} exceeds rn_bound")
    return problems


def write_trace_csv(report: SolveReport, sink=None) -> str:
    """Write accepted-step traces as CSV ``chain_id,step,x1..xd,agg,R``."""
    if report.traces is None:
        raise ValueError("report has no traces; solve with record_trace=True")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["chain_id", "step", *[f"x{i + 1}" for i in range(report.dim)], "agg", "R"])
    for cid in sorted(report.traces):
        for rec in report.traces[cid]:
            writer.writerow([
                rec.chain_id, rec.step,
                *(format(float(c), ".17g") for c in rec.point),
                format(rec.aggregated, ".17g"), format(rec.R, ".17g"),
            ])
    text = buf.getvalue()
    if sink is not None:
        if hasattr(sink, "write"):
            sink.write(text)
        else:
            with open(sink, "w", newline="") as fh:
                fh.write(text)
    return text
