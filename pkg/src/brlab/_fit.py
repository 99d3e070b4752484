"""Small shared least-squares helpers for decay-trend fits."""

from __future__ import annotations

import numpy as np


def least_squares_slope(x, y) -> tuple[float, float, float]:
    """Fit y = slope*x + intercept; returns (slope, intercept, rms residual)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("least_squares_slope expects matching 1-d arrays")
    if x.size < 2:
        raise ValueError("need at least two points to fit a slope")
    design = np.stack([x, np.ones_like(x)], axis=1)
    coeffs, *_ = np.linalg.lstsq(design, y, rcond=None)
    slope, intercept = float(coeffs[0]), float(coeffs[1])
    residual = float(np.sqrt(np.mean((y - design @ coeffs) ** 2)))
    return slope, intercept, residual
