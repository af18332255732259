"""Residual fields, evaluation counting and max-aggregation for systems."""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .geometry import BoxDomain, RngStream, sample_box

PILOT_STREAM = 2**64 - 1


class FieldEvaluationError(ArithmeticError):
    """A residual field returned NaN or an infinity."""

    def __init__(self, field_name: str, point, value: float):
        self.field_name = field_name
        self.point = np.array(point, dtype=float)
        self.value = value
        coords = ", ".join(repr(float(c)) for c in self.point)
        super().__init__(f"field {field_name!r} returned {value!r} at ({coords})")


class ScalarField:
    """A real-valued function on R^d that counts its own evaluations.

    The counter is guarded by a lock so a field may be shared by chains that
    are stepped from several threads.
    """

    def __init__(self, func: Callable[[np.ndarray], float], dim: int, name: str | None = None):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        self.func = func
        self.dim = int(dim)
        self.name = name or getattr(func, "__name__", "f")
        self._count = 0
        self._lock = threading.Lock()

    @property
    def eval_count(self) -> int:
        return self._count

    def reset_count(self) -> None:
        with self._lock:
            self._count = 0

    def _add(self, n: int) -> None:
        with self._lock:
            self._count += n

    def __call__(self, z) -> float:
        value = float(self.func(z))
        self._add(1)
        return value

    def __repr__(self):
        return f"ScalarField({self.name!r}, dim={self.dim})"


@dataclass(frozen=True)
class ResidualValue:
    per_field: tuple[float, ...]
    aggregated: float


@dataclass(frozen=True)
class Problem:
    """One or more residual fields sharing a box domain.

    A point solves the problem when the largest ``|f_j|`` is at most ``tol``.
    """

    fields: tuple[ScalarField, ...]
    domain: BoxDomain
    tol: float = 0.01

    def __post_init__(self):
        fields = self.fields
        if isinstance(fields, ScalarField):
            fields = (fields,)
        fields = tuple(fields)
        if not fields:
            raise ValueError("a problem needs at least one field")
        for f in fields:
            if f.dim != self.domain.dim:
                raise ValueError(
                    f"field {f.name!r} has dim {f.dim}, domain has dim {self.domain.dim}"
                )
        if not self.tol > 0:
            raise ValueError(f"tol must be > 0, got {self.tol!r}")
        object.__setattr__(self, "fields", fields)

    @classmethod
    def from_callables(
        cls,
        funcs: Callable | Sequence[Callable],
        domain: BoxDomain,
        tol: float = 0.01,
        names: Sequence[str] | None = None,
    ) -> "Problem":
        if callable(funcs):
            funcs = [funcs]
        names = list(names) if names is not None else [None] * len(funcs)
        fields = tuple(
            f if isinstance(f, ScalarField) else ScalarField(f, domain.dim, name)
            for f, name in zip(funcs, names)
        )
        return cls(fields, domain, tol)

    @property
    def dim(self) -> int:
        return self.domain.dim

    @property
    def n_fields(self) -> int:
        return len(self.fields)

    def with_tol(self, tol: float) -> "Problem":
        return Problem(self.fields, self.domain, tol)

    def eval_count(self) -> int:
        """Number of point evaluations (every field is evaluated at each point)."""
        return max(f.eval_count for f in self.fields)

    def reset_counts(self) -> None:
        for f in self.fields:
            f.reset_count()


def evaluate(problem: Problem, z) -> ResidualValue:
    """Evaluate every field at ``z``; aggregate with the max of absolute values."""
    values = []
    for f in problem.fields:
        v = f(z)
        if not math.isfinite(v):
            raise FieldEvaluationError(f.name, z, v)
        values.append(abs(v))
    return ResidualValue(tuple(values), max(values))


def is_solution(problem: Problem, rv: ResidualValue, tol: float | None = None) -> bool:
    return rv.aggregated <= (problem.tol if tol is None else tol)


class _Scaled:
    # picklable wrapper; a lambda would capture the loop variable
    def __init__(self, field: ScalarField, scale: float):
        self.field = field
        self.scale = scale

    def __call__(self, z):
        return self.field(z) / self.scale


def normalize(problem: Problem, pilot_size: int = 100, rng: RngStream | None = None) -> Problem:
    """Rescale each field by the mean of ``|f_j|`` over uniform pilot points.

    Dividing by a positive constant leaves the zero set unchanged and brings
    fields of very different magnitude onto a common scale, which keeps the
    sampling radius ``R/2 + k*max|f_j|`` from being dominated by one field.
    The pilot evaluations are charged to the returned fields' counters.
    """
    if pilot_size < 1:
        raise ValueError("pilot_size must be >= 1")
    if rng is None:
        rng = RngStream(0, PILOT_STREAM)
    points = [sample_box(problem.domain, rng) for _ in range(pilot_size)]
    sums = np.zeros(problem.n_fields)
    for z in points:
        sums += evaluate(problem, z).per_field
    scales = sums / pilot_size
    fields = []
    for f, s in zip(problem.fields, scales):
        s = float(s) if s >= 1e-12 else 1.0
        g = ScalarField(_Scaled(f, s), f.dim, name=f"{f.name}/{s:.6g}")
        g.scale = s
        g._add(pilot_size)
        fields.append(g)
    return Problem(tuple(fields), problem.domain, problem.tol)
