"""Box domains, seeded random streams and uniform sampling in boxes and balls."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class BoxDomain:
    """Axis-aligned closed box ``[lower, upper]`` in R^d."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.array(self.lower, dtype=float).reshape(-1)
        upper = np.array(self.upper, dtype=float).reshape(-1)
        if lower.size == 0:
            raise ValueError("domain must have dimension >= 1")
        if lower.shape != upper.shape:
            raise ValueError(
                f"lower and upper differ in length ({lower.size} != {upper.size})"
            )
        if not (np.all(np.isfinite(lower)) and np.all(np.isfinite(upper))):
            raise ValueError("domain bounds must be finite")
        if np.any(lower >= upper):
            raise ValueError("each lower bound must be strictly below its upper bound")
        lower.flags.writeable = False
        upper.flags.writeable = False
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def cube(cls, lo: float, hi: float, dim: int) -> "BoxDomain":
        return cls(np.full(dim, lo, dtype=float), np.full(dim, hi, dtype=float))

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.upper - self.lower))

    def contains(self, point) -> bool:
        point = np.asarray(point, dtype=float)
        return bool(np.all(point >= self.lower) and np.all(point <= self.upper))

    def __eq__(self, other):
        if not isinstance(other, BoxDomain):
            return NotImplemented
        return np.array_equal(self.lower, other.lower) and np.array_equal(
            self.upper, other.upper
        )

    def __hash__(self):
        return hash((self.lower.tobytes(), self.upper.tobytes()))

    def __repr__(self):
        pairs = ", ".join(f"[{a:g}, {b:g}]" for a, b in zip(self.lower, self.upper))
        return f"BoxDomain({pairs})"


@dataclass
class RngStream:
    """Reproducible random stream identified by ``(seed, stream_id)``.

    Streams with different ids are statistically independent (numpy
    ``SeedSequence`` spawn keys), so each chain can own one and chains may be
    stepped in any order or concurrently without changing their draws.
    """

    seed: int
    stream_id: int = 0
    generator: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        if self.seed < 0 or self.stream_id < 0:
            raise ValueError("seed and stream_id must be non-negative")
        ss = np.random.SeedSequence(entropy=self.seed, spawn_key=(self.stream_id,))
        self.generator = np.random.Generator(np.random.PCG64(ss))

    def random(self, size=None):
        return self.generator.random(size)

    def standard_normal(self, size=None):
        return self.generator.standard_normal(size)


def sample_box(domain: BoxDomain, rng: RngStream) -> np.ndarray:
    """Draw a point with independent uniform coordinates in ``domain``."""
    u = rng.random(domain.dim)
    point = domain.lower + (domain.upper - domain.lower) * u
    # guard against rounding past the upper face
    return np.minimum(point, domain.upper)


def sample_ball(center, radius: float, rng: RngStream) -> np.ndarray:
    """Draw a point uniformly from the closed ball ``B(center, radius)``.

    A Gaussian vector gives an isotropic direction; scaling its length by
    ``radius * U**(1/d)`` makes the radial law match the volume element.
    """
    if not radius >= 0:
        raise ValueError(f"radius must be >= 0, got {radius!r}")
    center = np.asarray(center, dtype=float)
    if radius == 0:
        return center.copy()
    d = center.size
    direction = rng.standard_normal(d)
    norm = np.sqrt(direction @ direction)
    while norm == 0.0:  # probability zero, but keep the contract
        direction = rng.standard_normal(d)
        norm = np.sqrt(direction @ direction)
    scale = radius * rng.random() ** (1.0 / d)
    return center + direction * (scale / norm)


def distance(a, b) -> float:
    """Euclidean distance between two points of equal dimension."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    diff = a - b
    return float(np.sqrt(diff @ diff))
