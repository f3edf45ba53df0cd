"""
Tests for error metrics and summaries.
"""

import sys
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from tat_lab.metrics import (
    contraction_rates,
    convergence_order,
    refinement_ratios,
    relative_l2_error,
    summary,
)


class TestRelativeError:
    """Tests for relative_l2_error."""

    def test_exact_match(self):
        """Identical arrays have zero error."""
        x = np.arange(6.0).reshape(2, 3)
        assert relative_l2_error(x, x) == 0.0

    def test_scaled_estimate(self):
        """A 10% overshoot gives 0.1."""
        truth = np.array([3.0, 4.0])
        assert relative_l2_error(1.1 * truth, truth) == pytest.approx(0.1)

    def test_mask_restricts(self):
        """Entries off the mask are ignored."""
        truth = np.array([1.0, 1.0, 1.0])
        estimate = np.array([1.0, 1.0, 50.0])
        mask = np.array([True, True, False])
        assert relative_l2_error(estimate, truth, mask) == 0.0

    def test_zero_truth(self):
        """A vanishing truth falls back to the absolute error."""
        assert relative_l2_error(np.array([3.0, 4.0]), np.zeros(2)) == pytest.approx(5.0)

    def test_shape_mismatch(self):
        """Shapes must agree."""
        with pytest.raises(ValueError, match="Shape mismatch"):
            relative_l2_error(np.zeros(3), np.zeros(4))


class TestConvergence:
    """Tests for refinement studies."""

    def test_second_order(self):
        """error = h² has order 2."""
        hs = np.array([0.1, 0.05, 0.025])
        assert convergence_order(hs, hs**2) == pytest.approx(2.0)

    def test_ratios(self):
        """Halving a second-order error divides it by four."""
        np.testing.assert_allclose(refinement_ratios([1.0, 0.25, 0.0625]), [4.0, 4.0])

    def test_invalid_inputs(self):
        """Orders need at least two positive pairs."""
        with pytest.raises(ValueError, match="at least 2"):
            convergence_order([0.1], [0.01])
        with pytest.raises(ValueError, match="positive"):
            convergence_order([0.1, 0.05], [0.01, 0.0])

    def test_contraction(self):
        """Residual histories give per-iteration contraction factors."""
        np.testing.assert_allclose(contraction_rates([1.0, 0.5, 0.125]), [0.5, 0.25])
        assert contraction_rates([1.0]).size == 0


class TestSummary:
    """Tests for sample summaries."""

    def test_statistics(self):
        """Summary reports the usual statistics."""
        s = summary(np.arange(1.0, 101.0), label="ratios")
        assert isinstance(s, pd.Series)
        assert s.name == "ratios"
        assert s["count"] == 100
        assert s["excluded"] == 0
        assert s["mean"] == pytest.approx(50.5)
        assert s["median"] == pytest.approx(50.5)
        assert s["min"] == 1.0
        assert s["max"] == 100.0
        assert s["p90"] == pytest.approx(90.1)

    def test_nan_excluded(self):
        """Non-finite entries are counted as excluded."""
        s = summary(np.array([1.0, np.nan, 3.0, np.inf]))
        assert s["count"] == 2
        assert s["excluded"] == 2
        assert s["mean"] == pytest.approx(2.0)

    def test_all_nan(self):
        """An empty sample has NaN statistics."""
        s = summary(np.array([np.nan]))
        assert s["count"] == 0
        assert np.isnan(s["mean"])
