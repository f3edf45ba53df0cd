"""
Deterministic low-discrepancy sampling of positions, directions and times.
"""

from typing import Optional

import numpy as np
from scipy.stats import qmc

DEFAULT_SAMPLES = 4096


def halton(n: int, dim: int) -> np.ndarray:
    """Unscrambled Halton points in [0, 1)^dim, skipping the origin."""
    if n <= 0:
        raise ValueError(f"Sample count must be positive, got {n}")
    sampler = qmc.Halton(d=dim, scramble=False)
    sampler.fast_forward(1)
    return sampler.random(n)


def sample_box(
    n: int, lower: np.ndarray, upper: np.ndarray, extra_dims: int = 0
) -> tuple[np.ndarray, np.ndarray]:
    """
    Halton points in a box plus extra unit-interval coordinates.

    Args:
        n: Number of samples
        lower: Lower corner of the box
        upper: Upper corner of the box
        extra_dims: Additional [0, 1) coordinates returned separately

    Returns:
        Tuple (points of shape (n, len(lower)), extras of shape (n, extra_dims))
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    u = halton(n, len(lower) + extra_dims)
    pts = qmc.scale(u[:, : len(lower)], lower, upper)
    return pts, u[:, len(lower) :]


def unit_directions(angles: np.ndarray, speed: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Covectors of unit g-length at angle θ.

    For g = c⁻²δ the covector ξ has |ξ|_g = c|ξ|, so unit covectors have
    Euclidean length 1/c.
    """
    v = np.stack([np.cos(angles), np.sin(angles)], axis=-1)
    if speed is None:
        return v
    return v / np.asarray(speed)[..., None]
