"""
Tests for twice-differentiable scalar functions.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from tat_lab.functions import (
    bump,
    from_callable,
    gaussian,
    half_square_distance,
    make_source,
    plateau,
    product,
    saddle,
)

POINTS = np.array([[0.2, -0.1], [0.55, 0.3], [-0.4, 0.62], [0.0, 0.7]])


def _fd_hessian(f, x, eps=1e-5):
    e = np.eye(2) * eps
    return np.array(
        [[(f.grad(x + e[j])[i] - f.grad(x - e[j])[i]) / (2 * eps) for j in range(2)] for i in range(2)]
    )


class TestDerivatives:
    """Analytic derivatives against differences."""

    @pytest.mark.parametrize(
        "f",
        [
            gaussian((0.1, 0.0), 0.3, 2.0),
            bump((0.0, 0.1), 0.8, 1.0),
            plateau(0.3, 0.9),
            product(half_square_distance(), plateau(0.3, 0.9)),
        ],
    )
    def test_hessian_matches_gradient_difference(self, f):
        """The Hessian is the derivative of the gradient."""
        for x in POINTS:
            np.testing.assert_allclose(f.hess(x), _fd_hessian(f, x), rtol=1e-4, atol=1e-6)

    def test_from_callable(self):
        """Difference-based functions recover a quadratic exactly enough."""
        f = from_callable(lambda x: x[..., 0] ** 2 + 3 * x[..., 0] * x[..., 1])
        np.testing.assert_allclose(f.grad(np.array([1.0, 2.0])), [8.0, 3.0], atol=1e-6)
        np.testing.assert_allclose(f.hess(np.array([1.0, 2.0])), [[2.0, 3.0], [3.0, 0.0]], atol=1e-4)


class TestShapes:
    """Tests for the specific profiles."""

    def test_plateau_is_one_inside(self):
        """The plateau equals 1 inside the inner radius and 0 outside the outer."""
        p = plateau(0.5, 0.9)
        np.testing.assert_allclose(p(np.array([[0.0, 0.0], [0.3, 0.3]])), 1.0)
        np.testing.assert_allclose(p(np.array([[0.95, 0.0]])), 0.0)

    def test_saddle_is_harmonic(self):
        """x² − y² has zero Laplacian."""
        np.testing.assert_allclose(saddle(2.0).laplacian(POINTS), 0.0)

    def test_quadratic_bump_laplacian_on_plateau(self):
        """|x|²/2 under the plateau has Laplacian 2 where the plateau is flat."""
        f = make_source("quadratic-bump", [0.5, 0.9])
        np.testing.assert_allclose(f.laplacian(np.array([[0.1, 0.2], [-0.3, 0.0]])), 2.0, atol=1e-12)

    def test_gaussian_laplacian_sign_change(self):
        """The Gaussian Laplacian changes sign at √2 times the width."""
        f = gaussian((0.0, 0.0), 0.2, 1.0)
        r0 = np.sqrt(2) * 0.2
        assert f.laplacian(np.array([r0 * 0.9, 0.0])) < 0
        assert f.laplacian(np.array([r0 * 1.1, 0.0])) > 0

    def test_angular_packet(self):
        """The packet lives on its annulus and oscillates with the given order."""
        f = make_source("angular-packet", [0.5, 0.1, 6, 2.0])
        assert f.value(np.array([0.5, 0.0])) == pytest.approx(2.0)
        assert f.value(np.array([0.0, 0.5])) == pytest.approx(-2.0)
        np.testing.assert_allclose(f.value(np.array([[0.3, 0.0], [0.0, 0.65], [0.1, 0.1]])), 0.0)
        theta = np.pi / 12
        assert f.value(0.5 * np.array([np.cos(theta), np.sin(theta)])) == pytest.approx(0.0, abs=1e-12)
        with pytest.raises(ValueError, match="half_width < radius"):
            make_source("angular-packet", [0.1, 0.2, 4, 1.0])

    def test_make_source_unknown(self):
        """Unknown kinds are rejected."""
        with pytest.raises(ValueError, match="Unknown source kind"):
            make_source("square", [])
