"""
Tests for the domain, its boundary sampling and the observation set.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from tat_lab.domain import Domain, make_domain


class TestDomainGeometry:
    """Tests for the level set, projection and distances."""

    def test_contains(self):
        """Interior points have negative level set."""
        disk = Domain.disk(1.0)
        np.testing.assert_array_equal(
            disk.contains(np.array([[0.0, 0.0], [0.9, 0.0], [1.1, 0.0]])), [True, True, False]
        )

    def test_perimeter_of_unit_disk(self):
        """Boundary weights sum to the perimeter 2π."""
        param = Domain.disk(1.0).boundary_param(128)
        assert np.sum(param["weights"]) == pytest.approx(2 * np.pi, rel=1e-6)
        np.testing.assert_allclose(np.linalg.norm(param["points"], axis=-1), 1.0)

    def test_normals_are_unit_and_outward(self):
        """Normals are unit vectors pointing away from the centre."""
        param = Domain(a=1.0, b=0.6).boundary_param(64)
        n = param["normals"]
        np.testing.assert_allclose(np.linalg.norm(n, axis=-1), 1.0)
        assert np.all(np.sum(n * param["points"], axis=-1) > 0)

    def test_project_onto_ellipse(self):
        """The nearest boundary point of (2, 0) is the vertex (1, 0)."""
        p, theta = Domain(a=1.0, b=0.6).project(np.array([[2.0, 0.0]]))
        np.testing.assert_allclose(p[0], [1.0, 0.0], atol=1e-10)
        assert np.mod(theta[0] + 1e-9, 2 * np.pi) == pytest.approx(0.0, abs=1e-8)

    def test_signed_distance(self):
        """Signed distance is negative inside and positive outside."""
        disk = Domain.disk(1.0)
        d = disk.signed_distance(np.array([[0.0, 0.0], [0.5, 0.0], [0.0, 1.5]]))
        np.testing.assert_allclose(d, [-1.0, -0.5, 0.5], atol=1e-10)

    def test_interior_grid_inside(self):
        """Interior lattice points lie in Ω at the requested depth."""
        disk = Domain.disk(1.0)
        pts = disk.interior_grid(0.1, margin=0.2)
        assert len(pts) > 0
        assert np.all(np.linalg.norm(pts, axis=-1) <= 0.8 + 1e-12)


class TestObservationSet:
    """Tests for Γ and τ."""

    def test_full_boundary_by_default(self):
        """Without Γ settings every boundary point observes."""
        disk = Domain.disk(1.0)
        assert disk.gamma_is_full
        assert np.all(disk.in_gamma(disk.boundary_param(32)["points"]))

    def test_halfspace_gamma(self):
        """Γ = ∂Ω ∩ {x¹ > C}."""
        dom = Domain(a=1.0, b=0.8, gamma_halfspace=0.6)
        np.testing.assert_array_equal(
            dom.in_gamma(np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 0.8]])), [True, False, False]
        )
        assert not dom.gamma_is_full

    def test_arc_gamma(self):
        """Γ given by a polar-angle arc."""
        dom = Domain.disk(1.0, gamma_arc=(-0.5, 0.5))
        np.testing.assert_array_equal(
            dom.in_gamma(np.array([[1.0, 0.0], [-1.0, 0.0]])), [True, False]
        )

    def test_tau_zero_off_gamma(self):
        """τ is the configured time on Γ and 0 elsewhere."""
        dom = Domain(a=1.0, b=0.8, gamma_halfspace=0.6).with_tau(2.0)
        np.testing.assert_allclose(dom.tau(np.array([[1.0, 0.0], [-1.0, 0.0]])), [2.0, 0.0])

    def test_tau_table_interpolates(self):
        """A τ table is interpolated periodically in the polar angle."""
        dom = Domain.disk(1.0, tau_table=(1.0, 3.0))
        assert dom.tau(np.array([0.0, 1.0]))[()] == pytest.approx(2.0)
        assert dom.tau(np.array([1.0, 0.0]))[()] == pytest.approx(1.0)


class TestValidation:
    """Tests for argument validation."""

    def test_negative_axis_raises(self):
        """Semi-axes must be positive."""
        with pytest.raises(ValueError, match="positive"):
            Domain(a=-1.0, b=1.0)

    def test_two_gamma_settings_raise(self):
        """Γ is either an arc or a halfspace."""
        with pytest.raises(ValueError, match="not both"):
            Domain(gamma_arc=(0.0, 1.0), gamma_halfspace=0.5)

    def test_make_domain_ellipse_needs_two(self):
        """Ellipses take (a, b)."""
        with pytest.raises(ValueError, match="2 parameters"):
            make_domain("ellipse", [1.0])

    def test_make_domain_unknown(self):
        """Unknown kinds are rejected."""
        with pytest.raises(ValueError, match="Unknown domain kind"):
            make_domain("square", [1.0])
