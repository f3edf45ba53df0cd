"""
Error metrics and summary statistics for reconstructions and probes.
"""

from typing import Optional

import numpy as np
import pandas as pd


def relative_l2_error(
    estimate: np.ndarray, truth: np.ndarray, mask: Optional[np.ndarray] = None
) -> float:
    """
    ‖estimate − truth‖ / ‖truth‖ over the mask.

    Returns the absolute error when the truth vanishes there.
    """
    estimate = np.asarray(estimate, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if estimate.shape != truth.shape:
        raise ValueError(f"Shape mismatch: {estimate.shape} vs {truth.shape}")
    if mask is not None:
        estimate, truth = estimate[mask], truth[mask]
    err = float(np.linalg.norm(estimate - truth))
    scale = float(np.linalg.norm(truth))
    return err / scale if scale > 0 else err


def convergence_order(hs: np.ndarray, errors: np.ndarray) -> float:
    """
    Empirical order p from a least-squares fit of log error against log h.

    Args:
        hs: Grid spacings
        errors: Errors at those spacings (positive)

    Returns:
        Slope p of error ≈ C·h^p
    """
    hs = np.asarray(hs, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if hs.size < 2 or hs.size != errors.size:
        raise ValueError(f"Need matching arrays of at least 2 values, got {hs.size} and {errors.size}")
    if np.any(errors <= 0) or np.any(hs <= 0):
        raise ValueError("Spacings and errors must be positive")
    return float(np.polyfit(np.log(hs), np.log(errors), 1)[0])


def refinement_ratios(errors: np.ndarray) -> np.ndarray:
    """Successive error ratios e_k / e_{k+1} of a refinement study."""
    errors = np.asarray(errors, dtype=float)
    return errors[:-1] / errors[1:]


def summary(values: np.ndarray, label: str = "value") -> pd.Series:
    """
    Summary statistics of a sample, ignoring NaN entries.

    Args:
        values: Sample, e.g. stability ratios of a probe ensemble
        label: Series name

    Returns:
        pandas Series with count, excluded, mean, median, std, min, max, p90, p99
    """
    values = np.asarray(values, dtype=float).ravel()
    ok = values[np.isfinite(values)]
    if ok.size == 0:
        stats = {k: np.nan for k in ["mean", "median", "std", "min", "max", "p90", "p99"]}
    else:
        stats = {
            "mean": np.mean(ok),
            "median": np.median(ok),
            "std": np.std(ok),
            "min": np.min(ok),
            "max": np.max(ok),
            "p90": np.percentile(ok, 90),
            "p99": np.percentile(ok, 99),
        }
    return pd.Series({"count": ok.size, "excluded": values.size - ok.size, **stats}, name=label)


def contraction_rates(history: list[float]) -> np.ndarray:
    """Per-iteration ratios of an error or residual history."""
    h = np.asarray(history, dtype=float)
    if h.size < 2:
        return np.array([])
    with np.errstate(divide="ignore", invalid="ignore"):
        return h[1:] / h[:-1]
