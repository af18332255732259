"""Test problems with known zero sets, their published parameter rows, and
coverage statistics against reference points on the zero set."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .geometry import BoxDomain, RngStream
from .problem import Problem, ScalarField
from .solver import SolverConfig

SQRT_HALF = math.sqrt(0.5)
MULTI1_SHIFT = (0.2, -0.2)


class NoReferenceSetError(LookupError):
    pass


def _coords(x):
    return x.tolist() if isinstance(x, np.ndarray) else list(x)


# Hard-coded fields.  Operation order mirrors the formula strings so the
# parsed and native versions agree to the last bit where libm allows.

def quadratic(x):
    x1, x2 = _coords(x)
    return x1**2 + x2**2 - 0.5


def chair(x):
    x1, x2 = _coords(x)
    return x1**4 + x2**3 - 0.5


def rosenbrock_level(x):
    x1, x2 = _coords(x)
    return (1 - x1) ** 2 + 100 * (x2 - x1**2) ** 2 - 50


def polynomial(x):
    x1, x2 = _coords(x)
    return (x1 - 0.5) ** 2 + 3 * x1 * x2 - x2**3 - 2.25


def trigonometric(x):
    x1, x2 = _coords(x)
    u, v = x1 - 0.9, x2 - 0.9
    return (
        8 * math.sin((7 * u**2) ** 2) + 6 * math.sin((14 * u**2) ** 2) + u**2
        + 8 * math.sin((7 * v**2) ** 2) + 6 * math.sin((14 * v**2) ** 2) + v**2
        - 15
    )


def rastrigin_level(x):
    x1, x2 = _coords(x)
    return (
        20 + x1**2 - 10 * math.cos(2 * math.pi * x1)
        + x2**2 - 10 * math.cos(2 * math.pi * x2) - 60
    )


def shifted_quadratic(x):
    x1, x2 = _coords(x)
    a1, a2 = MULTI1_SHIFT
    return (x1 - a1) ** 2 + (x2 - a2) ** 2 - 0.5


def sphere(x):
    total = 0.0
    for t in _coords(x):
        total = total + t**2
    return total - 0.5


def cube(x):
    return max(_coords(x)) - 0.5


FORMULAS = {
    "quadratic": "x1^2+x2^2-0.5",
    "chair": "x1^4+x2^3-0.5",
    "rosenbrock_level": "(1-x1)^2+100*(x2-x1^2)^2-50",
    "polynomial": "(x1-0.5)^2+3*x1*x2-x2^3-2.25",
    "trigonometric": (
        "8*sin((7*(x1-0.9)^2)^2)+6*sin((14*(x1-0.9)^2)^2)+(x1-0.9)^2"
        "+8*sin((7*(x2-0.9)^2)^2)+6*sin((14*(x2-0.9)^2)^2)+(x2-0.9)^2-15"
    ),
    "rastrigin_level": "20+x1^2-10*cos(2*pi*x1)+x2^2-10*cos(2*pi*x2)-60",
    "shifted_quadratic": "(x1-0.2)^2+(x2+0.2)^2-0.5",
}


def sphere_formula(d: int) -> str:
    return "+".join(f"x{i}^2" for i in range(1, d + 1)) + "-0.5"


def cube_formula(d: int) -> str:
    expr = "x1"
    for i in range(2, d + 1):
        expr = f"max({expr},x{i})"
    return f"{expr}-0.5"


# Reference sets: exact points on the zero set.

def _circle_points(K, rng):
    if rng is None:
        theta = 2 * np.pi * np.arange(K) / K
    else:
        theta = 2 * np.pi * rng.random(K)
    return SQRT_HALF * np.column_stack([np.cos(theta), np.sin(theta)])


def _sphere_points(d):
    def make(K, rng):
        rng = rng or RngStream(0, 0)
        g = rng.standard_normal((K, d))
        return SQRT_HALF * g / np.linalg.norm(g, axis=1, keepdims=True)
    return make


def _cube_points(d):
    # faces {x_i = 0.5, x_j in [-1, 0.5]} all have equal area
    def make(K, rng):
        rng = rng or RngStream(0, 0)
        pts = -1.0 + 1.5 * rng.random((K, d))
        face = np.minimum((rng.random(K) * d).astype(int), d - 1)
        pts[np.arange(K), face] = 0.5
        return pts
    return make


def multi1_roots() -> np.ndarray:
    """The two intersection points of the circles of radius sqrt(0.5)
    centred at the origin and at (0.2, -0.2).

    Subtracting the equations gives ``x2 = x1 - 0.2``; substituting back
    leaves ``2*x1^2 - 0.4*x1 - 0.46 = 0``.
    """
    disc = math.sqrt(0.96)
    x1 = np.array([(0.2 + disc) / 2, (0.2 - disc) / 2])
    return np.column_stack([x1, x1 - 0.2])


def _multi1_points(K, rng):
    roots = multi1_roots()
    return roots[np.arange(K) % 2]


@dataclass(frozen=True)
class StudyRow:
    """One row of a published parameter study."""

    overrides: dict
    published_ec: float | None = None


@dataclass(frozen=True)
class BenchmarkCase:
    name: str
    description: str
    funcs: tuple
    formulas: tuple
    domain: BoxDomain
    config: SolverConfig
    rows: tuple = ()
    reference: Callable | None = field(default=None, repr=False)

    @property
    def dim(self) -> int:
        return self.domain.dim

    def problem(self, tol: float | None = None) -> Problem:
        """A fresh problem (new evaluation counters) built from the native fields."""
        fields = tuple(ScalarField(f, self.dim, f.__name__) for f in self.funcs)
        return Problem(fields, self.domain, self.config.tol if tol is None else tol)

    def expression_problem(self, tol: float | None = None) -> Problem:
        """The same problem built by parsing the formula strings."""
        from .expr import Expression

        fields = tuple(ScalarField(Expression(s, self.dim), self.dim, s) for s in self.formulas)
        return Problem(fields, self.domain, self.config.tol if tol is None else tol)

    @property
    def has_reference(self) -> bool:
        return self.reference is not None


def _formula(f):
    return FORMULAS[f.__name__]


def _planar(name, desc, func, domain, rows, reference=None, budget=None):
    first = rows[0].overrides
    cfg = SolverConfig(eval_budget=budget, **first)
    return BenchmarkCase(name, desc, (func,), (_formula(func),), domain, cfg, tuple(rows), reference)


def _rows(base: dict, key: str, values, ecs):
    return [StudyRow({**base, key: v}, ec) for v, ec in zip(values, ecs)]


SPHERE_ROWS = {2: (5, 4.81), 3: (25, 6.64), 4: (75, 9.7), 10: (1000, 449.0)}
CUBE_ROWS = {2: (5, 4.0), 3: (25, 5.04), 4: (75, 8.0), 10: (1000, 614.0)}


def _build_registry() -> list[BenchmarkCase]:
    sq2 = BoxDomain.cube(-1.0, 1.0, 2)
    wide = BoxDomain.cube(-2.0, 2.0, 2)
    cases = [
        _planar("ex1", "quadratic circle", quadratic, sq2,
                _rows(dict(tol=0.01, N=1000, C=0.75, k=1.0, p=1), "n", (5, 100, 300), (4.33, 6.32, 9.14)),
                reference=_circle_points),
        _planar("ex2", "chair-shaped quartic/cubic", chair, sq2,
                _rows(dict(n=10, tol=0.015, N=1000, k=1.0, p=1), "C", (0.55, 0.75, 0.95), (8.36, 5.33, 5.05))),
        _planar("ex3", "Rosenbrock level set", rosenbrock_level, sq2,
                _rows(dict(n=10, tol=3.0, N=1000, C=0.75, p=1), "k", (0.005, 0.05, 0.25), (10.69, 18.71, 48.49))),
        _planar("ex4", "cubic polynomial with two branches", polynomial, wide,
                _rows(dict(n=10, tol=0.04, N=1000, C=0.75, k=0.25), "p", (1, 3, 5), (15.94, 14.58, 17.01))),
        _planar("ex5", "oscillating trigonometric", trigonometric, wide,
                _rows(dict(n=10, N=1000, C=0.75, k=0.25, p=1), "tol", (0.15, 0.75, 1.5), (43.47, 32.2, 22.85))),
        _planar("ex6", "Rastrigin level set", rastrigin_level, BoxDomain.cube(-5.0, 5.0, 2),
                _rows(dict(n=10, tol=0.4, C=0.75, k=0.025, p=1), "N", (100, 1000, 2000), (55.33, 60.64, 83.82))),
    ]
    for d, (n, ec) in SPHERE_ROWS.items():
        row = StudyRow(dict(n=n, tol=0.1, N=500, C=0.75, k=1.0, p=1), ec)
        cases.append(BenchmarkCase(
            f"sphere{d}", f"sphere of radius sqrt(0.5) in dimension {d}", (sphere,), (sphere_formula(d),),
            BoxDomain.cube(-1.0, 1.0, d), SolverConfig(**row.overrides), (row,), _sphere_points(d),
        ))
    for d, (n, ec) in CUBE_ROWS.items():
        row = StudyRow(dict(n=n, tol=0.1, N=500, C=0.75, k=1.0, p=1), ec)
        cases.append(BenchmarkCase(
            f"cube{d}", f"surface max(x) = 0.5 in dimension {d}", (cube,), (cube_formula(d),),
            BoxDomain.cube(-1.0, 1.0, d), SolverConfig(**row.overrides), (row,), _cube_points(d),
        ))
    multi = dict(n=20, p=1, tol=0.01, C=0.75, k=1.0)
    # fields of very different magnitude are rescaled by their pilot mean
    for name, desc, funcs, domain, N, scale, ec, ref in (
        ("multi1", "two shifted circles", (quadratic, shifted_quadratic), sq2, 10, False, 516.0, _multi1_points),
        ("multi2", "Rosenbrock level with Rastrigin level", (rosenbrock_level, rastrigin_level),
         BoxDomain.cube(-10.0, 10.0, 2), 100, True, 375.0, None),
        ("multi3", "circle with trigonometric", (quadratic, trigonometric), sq2, 100, True, 1102.0, None),
    ):
        row = StudyRow({**multi, "N": N}, ec)
        cases.append(BenchmarkCase(
            name, desc, funcs, tuple(_formula(f) for f in funcs), domain,
            SolverConfig(eval_budget=2_000_000, normalize=scale, **row.overrides), (row,), ref,
        ))
    return cases


_REGISTRY = _build_registry()
_BY_NAME = {c.name: c for c in _REGISTRY}


def registry() -> list[BenchmarkCase]:
    return list(_REGISTRY)


def get_case(name: str) -> BenchmarkCase:
    try:
        return _BY_NAME[name]
    except KeyError:
        raise KeyError(f"unknown benchmark {name!r}; choose from {', '.join(_BY_NAME)}") from None


def reference_points(case: BenchmarkCase | str, K: int, rng: RngStream | None = None) -> np.ndarray:
    """``K`` points lying exactly on the zero set of ``case``.

    Without ``rng`` the circle is sampled at equally spaced angles and the
    other sets from the fixed stream ``(0, 0)``.
    """
    if isinstance(case, str):
        case = get_case(case)
    if case.reference is None:
        raise NoReferenceSetError(f"benchmark {case.name!r} has no analytic reference set")
    if K < 1:
        raise ValueError("K must be >= 1")
    return case.reference(K, rng)


@dataclass(frozen=True)
class CoverageStats:
    fill_distance: float
    mean_gap: float
    solution_dispersion: float


def _as_points(items) -> np.ndarray:
    if isinstance(items, np.ndarray):
        return np.atleast_2d(items).astype(float)
    rows = [getattr(s, "point", s) for s in items]
    return np.atleast_2d(np.array(rows, dtype=float))


def coverage(solutions: Sequence, reference: Sequence) -> CoverageStats:
    """How well ``solutions`` cover the ``reference`` points.

    ``fill_distance`` is the largest distance from a reference point to its
    nearest solution, ``mean_gap`` the mean of those distances, and
    ``solution_dispersion`` the largest nearest-neighbour distance among the
    solutions (NaN for a single solution).
    """
    sol = _as_points(solutions)
    ref = _as_points(reference)
    if len(solutions) == 0 or len(reference) == 0:
        raise ValueError("coverage needs non-empty solutions and reference")
    if sol.shape[1] != ref.shape[1]:
        raise ValueError("solutions and reference differ in dimension")
    tree = cKDTree(sol)
    gaps, _ = tree.query(ref)
    if len(sol) > 1:
        nn, _ = tree.query(sol, k=2)
        dispersion = float(nn[:, 1].max())
    else:
        dispersion = math.nan
    return CoverageStats(float(gaps.max()), float(gaps.mean()), dispersion)


@dataclass(frozen=True)
class SuiteRow:
    case: str
    overrides: dict
    published_ec: float | None


def _suite_from_rows(case_name):
    case = get_case(case_name)
    return [SuiteRow(case.name, row.overrides, row.published_ec) for row in case.rows]


SUITES: dict[str, list[SuiteRow]] = {
    "ex1-n": _suite_from_rows("ex1"),
    "ex2-C": _suite_from_rows("ex2"),
    "ex3-k": _suite_from_rows("ex3"),
    "ex4-p": _suite_from_rows("ex4"),
    "ex5-tol": _suite_from_rows("ex5"),
    "ex6-N": _suite_from_rows("ex6"),
    "spheres": [r for d in SPHERE_ROWS for r in _suite_from_rows(f"sphere{d}")],
    "cubes": [r for d in CUBE_ROWS for r in _suite_from_rows(f"cube{d}")],
    "multi": [r for m in ("multi1", "multi2", "multi3") for r in _suite_from_rows(m)],
}
