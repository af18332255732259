"""scikit-learn style front end.

``SAFIP`` holds the solver settings as constructor parameters, so
``get_params``/``set_params``/``clone`` work and parameter sweeps are just
``clone(est).set_params(C=0.55)``.  ``fit`` runs the solver on a problem and
stores the solutions; ``transform`` maps points to their per-field residuals
and ``predict`` flags points that solve the fitted problem.

    >>> est = SAFIP(N=50, seed=1, domain=[(-1, -1), (1, 1)])
    >>> est = est.fit(lambda x: x[0]**2 + x[1]**2 - 0.5)
    >>> est.solutions_.shape
    (50, 2)
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_domain, check_points
from .problem import Problem, ScalarField, evaluate
from .solver import SolveReport, SolverConfig, solve


class SAFIP(BaseEstimator):
    """Cover the zero set of one or more residual functions over a box.

    Parameters mirror :class:`safip.solver.SolverConfig`; see there for
    their meaning.  ``domain`` is only needed when ``fit`` receives bare
    callables instead of a :class:`~safip.problem.Problem`.

    Attributes
    ----------
    solutions_ : ndarray of shape (n_solutions, d)
    residuals_ : ndarray of shape (n_solutions, m)
        ``|f_j|`` at each solution.
    report_ : SolveReport
    n_evals_ : int
    ec_ : float
        Evaluations per solution.
    problem_ : Problem
    """

    def __init__(
        self,
        n=5,
        p=1,
        C=0.75,
        k=1.0,
        tol=0.01,
        N=1000,
        R0=None,
        max_candidate_retries=50,
        max_domain_retries=50,
        eval_budget=None,
        seed=0,
        policy="retry",
        on_solution="continue",
        normalize=False,
        pilot_size=100,
        algorithm="basic",
        branching=1,
        max_population=None,
        threads=1,
        record_trace=False,
        domain=None,
    ):
        self.n = n
        self.p = p
        self.C = C
        self.k = k
        self.tol = tol
        self.N = N
        self.R0 = R0
        self.max_candidate_retries = max_candidate_retries
        self.max_domain_retries = max_domain_retries
        self.eval_budget = eval_budget
        self.seed = seed
        self.policy = policy
        self.on_solution = on_solution
        self.normalize = normalize
        self.pilot_size = pilot_size
        self.algorithm = algorithm
        self.branching = branching
        self.max_population = max_population
        self.threads = threads
        self.record_trace = record_trace
        self.domain = domain

    def to_config(self) -> SolverConfig:
        params = self.get_params(deep=False)
        params.pop("domain")
        return SolverConfig(**params)

    @classmethod
    def from_config(cls, cfg: SolverConfig, **extra) -> "SAFIP":
        return cls(**cfg.to_dict(), **extra)

    def _problem(self, problem) -> Problem:
        if isinstance(problem, Problem):
            if self.domain is not None:
                raise ValueError("pass the domain either in the Problem or as `domain`, not both")
            return problem
        if self.domain is None:
            raise ValueError("fitting bare callables requires the `domain` parameter")
        funcs: Sequence[Callable] = [problem] if callable(problem) else list(problem)
        if not funcs or not all(callable(f) for f in funcs):
            raise TypeError("problem must be a Problem, a callable, or a sequence of callables")
        dim = funcs[0].dim if isinstance(funcs[0], ScalarField) else None
        box = check_domain(self.domain, dim)
        return Problem.from_callables(funcs, box, self.tol)

    def fit(self, problem, y=None):
        """Run the solver on ``problem`` (a Problem, callable, or callables)."""
        cfg = self.to_config()
        self.problem_ = self._problem(problem)
        report: SolveReport = solve(self.problem_, cfg)
        self.report_ = report
        self.solutions_ = report.points
        self.residuals_ = np.array(
            [s.residuals.per_field for s in report.solutions], dtype=float
        ).reshape(len(report.solutions), len(report.field_names))
        self.n_evals_ = report.total_evals
        self.ec_ = report.ec
        self.n_features_in_ = report.dim
        return self

    def transform(self, X):
        """Per-field absolute residuals ``|f_j(x)|`` for each row of ``X``."""
        check_is_fitted(self, "report_")
        X = check_points(X, self.n_features_in_)
        return np.array([evaluate(self.problem_, x).per_field for x in X], dtype=float)

    def fit_transform(self, problem, y=None):
        return self.fit(problem).solutions_

    def predict(self, X):
        """True where every field satisfies ``|f_j(x)| <= tol``."""
        return self.transform(X).max(axis=1) <= self.tol


def EnhancedSAFIP(**params) -> SAFIP:
    """A :class:`SAFIP` estimator configured for the tree-structured variant."""
    params.setdefault("algorithm", "enhanced")
    return SAFIP(**params)
