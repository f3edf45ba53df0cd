"""
Tests for the numerical hypothesis checks.
"""

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from tat_lab import functions as fn
from tat_lab.convexity import (
    PseudoconvexFamily,
    check_background,
    check_condition_12,
    check_cone_condition,
    check_ellipticity,
    check_noncharacteristic,
    check_observation_time,
    check_stability_condition,
    check_strong_pseudoconvexity,
    g_squared,
    hyperboloid_family,
    second_fundamental_form,
    verify_foliation,
)
from tat_lab.domain import Domain, make_domain
from tat_lab.errors import PreconditionError
from tat_lab.foliations import make_family, spheres
from tat_lab.geometry import PhasePoint, geodesic_flow
from tat_lab.speed import SpeedField

POINTS = np.array([[0.5, 0.1], [-0.3, 0.6], [0.2, -0.7], [-0.45, -0.2]])


class TestGSquared:
    """Tests for the second geodesic derivative."""

    def test_flat_half_square(self):
        """With c = 1, G²(|x|²/2) = |ξ|²."""
        xi = np.array([[0.6, 0.8], [1.0, 0.0], [0.0, 2.0], [0.3, -0.4]])
        values = g_squared(SpeedField.constant(1.0), fn.half_square_distance(), POINTS, xi)
        np.testing.assert_allclose(values, np.sum(xi**2, axis=-1))

    def test_linear_function_flat(self):
        """Linear functions have G² = 0 in flat space."""
        xi = np.tile([0.6, 0.8], (len(POINTS), 1))
        values = g_squared(SpeedField.constant(1.0), fn.linear((1.0, 2.0)), POINTS, xi)
        np.testing.assert_allclose(values, 0.0, atol=1e-14)

    def test_matches_geodesic_second_difference(self):
        """G²f equals d²/dt² f(γ(t)) along a computed geodesic."""
        field = SpeedField.radial("herglotz", k=1.5, r_ref=1.0)
        f = fn.gaussian((0.1, 0.2), 0.5)
        geo = geodesic_flow(field, PhasePoint(np.array([0.3, -0.2]), np.array([-0.4, 1.0])), (0.0, 0.2), step=1e-3)
        k = len(geo.times) // 2
        dt = geo.times[1] - geo.times[0]
        values = f.value(geo.xs)
        second = (values[k + 1] - 2 * values[k] + values[k - 1]) / dt**2
        analytic = float(g_squared(field, f, geo.xs[k], geo.xis[k]))
        assert abs(analytic) > 0.1
        assert analytic == pytest.approx(second, rel=1e-4)


class TestCondition12:
    """Tests for G²(r²/2) ≥ |ξ|²."""

    def test_constant_speed_equality(self):
        """Constant speed attains equality and passes."""
        report = check_condition_12(SpeedField.constant(1.0), fn.distance((0.0, 0.0)), POINTS)
        assert report.passed
        assert report.margin == pytest.approx(0.0, abs=1e-10)
        assert report.extras["admissible_delta"] == pytest.approx(1.0, abs=1e-10)

    def test_trapping_speed_fails(self):
        """A strongly increasing radial speed violates the inequality."""
        field = SpeedField.radial("herglotz", k=4.0, r_ref=1.0)
        report = check_condition_12(field, fn.distance((0.0, 0.0)), np.array([[0.8, 0.0]]))
        assert not report.passed
        assert report.margin < -0.5
        assert report.witnesses


class TestPseudoconvexity:
    """Tests for the phase function family and its checks."""

    def test_delta_range(self):
        """δ must lie in (0, 1)."""
        with pytest.raises(ValueError, match="delta must be in"):
            hyperboloid_family(delta=1.5)

    def test_collar_range(self):
        """s outside [(R − ε)², R²] is rejected."""
        with pytest.raises(ValueError, match="outside"):
            PseudoconvexFamily(
                R=2.0, delta=0.5, s_range=(0.0, 4.0), radial=fn.distance((0.0, 0.0)), eps=0.5
            )

    def test_flat_hyperboloid(self):
        """For c = 1 and ψ = |x|² − δt² − s the margin is 2 − 2δ."""
        family = hyperboloid_family(delta=0.9)
        report = check_strong_pseudoconvexity(SpeedField.constant(1.0), family.phase(0.1), POINTS)
        assert report.samples > 0
        assert report.margin == pytest.approx(0.2, abs=1e-8)
        assert report.passed

    def test_empty_characteristic_set_warns(self):
        """No admissible samples gives an indeterminate report."""
        family = hyperboloid_family(delta=0.9)
        with pytest.warns(UserWarning, match="no characteristic samples"):
            report = check_strong_pseudoconvexity(
                SpeedField.constant(1.0), family.phase(5.0), POINTS
            )
        assert report.indeterminate
        assert not report.passed

    def test_noncharacteristic(self):
        """|d(r²/2)| differs from δ|t| on the surface."""
        family = hyperboloid_family(delta=0.9)
        report = check_noncharacteristic(family, 0.1, np.array([[0.5, 0.0]]))
        t = np.sqrt((0.25 - 0.1) / 0.9)
        assert report.margin == pytest.approx(0.5 - 0.9 * t)
        assert report.passed


class TestFoliation:
    """Tests for the foliation checks."""

    def test_circle_curvature(self):
        """Circles of radius r have curvature 1/r."""
        sigma = fn.distance((0.0, 0.0))
        ii = second_fundamental_form(SpeedField.constant(1.0), sigma, np.array([0.5, 0.0]))
        assert ii == pytest.approx(2.0)
        flipped = second_fundamental_form(
            SpeedField.constant(1.0), sigma, np.array([0.5, 0.0]), orientation=-1
        )
        assert flipped == pytest.approx(-2.0)

    def test_degenerate_level_set_raises(self):
        """A vanishing gradient has no level curve."""
        with pytest.raises(PreconditionError, match="degenerate"):
            second_fundamental_form(
                SpeedField.constant(1.0), fn.half_square_distance(), np.array([0.0, 0.0])
            )

    def test_exterior_spheres_convex(self):
        """Circles around an exterior centre are strictly convex in the disk."""
        family = spheres((-1.5, 0.0), 0.5, 2.5)
        report = verify_foliation(SpeedField.constant(1.0), Domain.disk(1.0), family)
        convex, avoid, _ = report.related
        assert convex.passed
        assert 0.39 < report.extras["ii_min"] < 0.5
        assert avoid.extras["vacuous"]

    def test_wrong_orientation_fails(self):
        """Seen from outside, the same circles are concave."""
        family = spheres((-1.5, 0.0), 0.5, 2.5).flipped()
        report = verify_foliation(SpeedField.constant(1.0), Domain.disk(1.0), family)
        assert not report.passed
        assert report.margin < 0

    def test_bent_geodesic_leaves_convex(self):
        """Circles of curvature δ = 0.05 through an exterior point foliate the ellipse convexly."""
        domain = make_domain("ellipse", [1.0, 0.6])
        family = make_family("bent-geodesic", [-1.1, 0.0, 0.05], -1.0, 1.0, 41, domain)
        report = verify_foliation(SpeedField.constant(1.0), domain, family)
        convex = report.related[0]
        assert convex.passed
        assert report.extras["ii_min"] == pytest.approx(0.05, abs=5e-3)
        flipped = verify_foliation(SpeedField.constant(1.0), domain, family.flipped())
        assert not flipped.related[0].passed


class TestObservationTime:
    """Tests for the observation-time check."""

    def test_long_time_passes(self):
        """τ = 1.5 exceeds every distance from the disk to its boundary."""
        domain = Domain.disk(1.0).with_tau(1.5)
        report = check_observation_time(
            SpeedField.constant(1.0), domain, spheres((-1.5, 0.0), 0.5, 2.5)
        )
        assert report.passed
        c2, c3 = report.related
        assert c3.margin == pytest.approx(0.5, abs=0.05)
        assert c2.passed

    def test_short_time_fails(self):
        """Leaves through the centre need τ > 1."""
        domain = Domain.disk(1.0).with_tau(0.5)
        report = check_observation_time(
            SpeedField.constant(1.0), domain, spheres((-1.5, 0.0), 0.5, 2.5)
        )
        assert not report.passed

    def test_unknown_mode(self):
        """Only ambient and leaf modes exist."""
        with pytest.raises(ValueError, match="Unknown observation mode"):
            check_observation_time(
                SpeedField.constant(1.0),
                Domain.disk(1.0).with_tau(1.0),
                spheres((-1.5, 0.0), 0.5, 2.5),
                mode="straight",
            )


class TestConeCondition:
    """Tests for the partial-data cone condition."""

    def test_long_observation_passes(self):
        """A long observation window covers the centre."""
        passed, y, slack = check_cone_condition(Domain.disk(1.0).with_tau(3.0), np.zeros(2))
        assert passed
        assert slack == pytest.approx(2.0, abs=0.05)
        assert np.linalg.norm(y) == pytest.approx(1.0, abs=1e-6)

    def test_short_observation_fails(self):
        """The centre is too far for τ = 0.5."""
        passed, _, slack = check_cone_condition(Domain.disk(1.0).with_tau(0.5), np.zeros(2))
        assert not passed
        assert slack < 0

    def test_exterior_point_raises(self):
        """The condition is checked at interior points only."""
        with pytest.raises(PreconditionError, match="interior"):
            check_cone_condition(Domain.disk(1.0).with_tau(1.0), np.array([2.0, 0.0]))


class TestCoefficientChecks:
    """Tests for ellipticity, stability and background checks."""

    def test_quadratic_elliptic(self):
        """Δ(|x|²/2) = 2 everywhere."""
        report = check_ellipticity(fn.half_square_distance(), POINTS)
        assert report.passed
        assert report.margin == pytest.approx(2.0)

    def test_gaussian_sign_change(self):
        """The Gaussian Laplacian vanishes on |x| = √2 w."""
        pts = Domain.disk(0.5).interior_grid(0.05)
        report = check_ellipticity(fn.gaussian(width=0.2), pts)
        assert not report.passed
        assert report.extras["sign_change"]
        radii = np.linalg.norm(report.extras["zero_set"], axis=-1)
        assert len(radii) > 0
        assert np.all(np.abs(radii - np.sqrt(2) * 0.2) < 0.08)

    def test_value_mode_on_grid(self):
        """Value mode reads grid arrays under a mask."""
        values = np.ones((5, 5))
        mask = np.zeros((5, 5), dtype=bool)
        mask[1:4, 1:4] = True
        assert check_ellipticity(values, mask, mode="value").passed
        values[2, 2] = 0.0
        assert not check_ellipticity(values, mask, mode="value").passed

    def test_grid_laplacian_needs_spacing(self):
        """Grid Laplacians need h."""
        with pytest.raises(ValueError, match="spacing"):
            check_ellipticity(np.ones((4, 4)), np.ones((4, 4), dtype=bool))

    def test_stability_condition(self):
        """Rays from the centre of the unit disk exit at |t| = 1."""
        c = SpeedField.constant(1.0)
        passed = check_stability_condition(c, Domain.disk(1.0), np.zeros((1, 2)), T=1.5)
        assert passed.passed
        assert passed.margin == pytest.approx(0.5, abs=1e-6)
        failed = check_stability_condition(c, Domain.disk(1.0), np.zeros((1, 2)), T=0.8)
        assert not failed.passed

    def test_trapped_rays_fail_stability(self):
        """Rays caught on a closed geodesic never satisfy the exit bound."""
        field = SpeedField.radial("herglotz", k=4.0, r_ref=1.0)
        report = check_stability_condition(
            field, Domain.disk(1.0), np.array([[0.5, 0.0]]), T=4.0, cap=5.0
        )
        assert not report.passed
        assert report.extras["trapped"] > 0

    def test_background(self):
        """Compactly supported perturbations leave c = 1 outside Ω."""
        domain = Domain.disk(1.0)
        assert check_background(SpeedField.constant(1.0), domain).passed
        assert check_background(SpeedField.bumps([(0.2, 0.0, 0.0, 0.5)]), domain).passed
        assert not check_background(SpeedField.radial("herglotz", k=1.0), domain).passed
