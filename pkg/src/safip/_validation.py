"""Input checks shared by the estimator front end and the CLI."""

from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array

from .geometry import BoxDomain


def check_domain(domain, dim: int | None = None) -> BoxDomain:
    """Coerce ``domain`` to a :class:`BoxDomain`.

    Accepts a BoxDomain, a ``(lower, upper)`` pair of sequences, a
    ``(d, 2)`` array of ``[lo, hi]`` rows, or a single ``(lo, hi)`` pair
    replicated to ``dim`` coordinates.
    """
    if isinstance(domain, BoxDomain):
        box = domain
    else:
        arr = np.asarray(domain, dtype=float)
        if arr.shape == (2,):
            if dim is None:
                raise ValueError("a single (lo, hi) pair needs an explicit dimension")
            box = BoxDomain.cube(arr[0], arr[1], dim)
        elif arr.ndim == 2 and arr.shape[1] == 2 and arr.shape[0] != 2:
            box = BoxDomain(arr[:, 0], arr[:, 1])
        elif arr.ndim == 2 and arr.shape[0] == 2:
            # (lower, upper) rows; a 2x2 array is read this way too
            box = BoxDomain(arr[0], arr[1])
        else:
            raise ValueError(f"cannot interpret domain of shape {arr.shape}")
    if dim is not None and box.dim != dim:
        raise ValueError(f"domain has dimension {box.dim}, expected {dim}")
    return box


def check_points(X, dim: int) -> np.ndarray:
    """2-D float array of points with ``dim`` columns (a single point is promoted)."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    X = check_array(X, dtype=np.float64, ensure_all_finite=True)
    if X.shape[1] != dim:
        raise ValueError(f"X has {X.shape[1]} columns, problem dimension is {dim}")
    return X
