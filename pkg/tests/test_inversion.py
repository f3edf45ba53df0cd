"""
Tests for the inverse solvers and the stability probe.
"""

import sys
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from tat_lab import functions as fn
from tat_lab.domain import Domain
from tat_lab.errors import EllipticityError, PreconditionError
from tat_lab.inversion import (
    MisfitSpace,
    ProbeResult,
    SpeedRecoverySetup,
    annular_packet,
    band_limited_source,
    grid_for_speed,
    neumann_consistency_experiment,
    recover_initial_datum,
    recover_source,
    recover_speed,
    second_time_derivative,
    stability_probe,
    stop_reason,
    support_mask,
)
from tat_lab.reports import ReconstructionReport
from tat_lab.scenarios import get_scenario
from tat_lab.speed import SpeedField
from tat_lab.wave import BoundaryTrace, Grid, SourceTerm, solve_ivp, solve_source


@pytest.fixture
def disk():
    return Domain.disk(1.0, n_boundary=32)


@pytest.fixture
def coarse(disk):
    return Grid.for_problem(disk, 0.5, n=48)


def _series(values, dt):
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, None]
    m = values.shape[1]
    return BoundaryTrace(values, dt, np.zeros((m, 2)), np.ones(m))


def _zero_trace(domain, grid, T):
    bp = domain.boundary_param()
    rows = grid.steps_for(T) + 1
    return BoundaryTrace(np.zeros((rows, len(bp["points"]))), grid.dt, bp["points"], bp["weights"])


def _scenario_problem(name, n=None):
    """Inverse-crime source data for a shipped scenario, built like the CLI does."""
    cfg = get_scenario(name)
    if n is not None:
        cfg = cfg.with_resolution(n)
    c, domain = cfg.speed(), cfg.domain()
    grid = cfg.grid(c_field=c)
    K = support_mask(grid, domain, cfg.support_radius)
    truth = np.where(K, grid.sample(cfg.source()), 0.0)
    _, data, _ = solve_source(c, SourceTerm(truth), cfg.T, grid, domain)
    return cfg, c, domain, grid, K, truth, data


def _median_ratios(cfg, focus, ensemble=10):
    c, domain = cfg.speed(), cfg.domain()
    grid = cfg.grid(c_field=c)
    out = {}
    for modes in (4, 16):
        result = stability_probe(
            c, domain, lambda t: 1.0, ((0.0, 0.0), cfg.support_radius), cfg.T,
            ensemble, cfg.seed, modes, grid, symbols=False, focus=focus,
        )
        out[modes] = result.median
    return out


class TestSecondTimeDerivative:
    """Tests for the fourth-order ∂²_t stencils."""

    def test_cosine(self):
        """∂²_t cos t = −cos t at ω dt = 0.05."""
        dt = 0.05
        t = dt * np.arange(41)
        out = second_time_derivative(_series(np.cos(t), dt))
        np.testing.assert_allclose(out.values[:, 0], -np.cos(t), atol=1e-3)
        np.testing.assert_allclose(out.values[2:-2, 0], -np.cos(t[2:-2]), atol=1e-6)

    def test_constant_and_quadratic(self):
        """Constants vanish and t² gives 2, edges included."""
        dt = 0.1
        t = dt * np.arange(12)
        np.testing.assert_allclose(second_time_derivative(_series(np.ones(12), dt)).values, 0.0, atol=1e-9)
        np.testing.assert_allclose(second_time_derivative(_series(t**2, dt)).values, 2.0, atol=1e-8)

    def test_too_short(self):
        """Five samples are needed."""
        with pytest.raises(ValueError, match="at least 5"):
            second_time_derivative(_series(np.ones(4), 0.1))


class TestRecoverSource:
    """Tests for the source reconstruction."""

    def test_support_mask(self, disk, coarse):
        """The mask is the disk intersected with Ω."""
        mask = support_mask(coarse, disk, 0.4)
        pts = coarse.points()[mask]
        assert mask.any()
        assert np.all(np.linalg.norm(pts, axis=-1) <= 0.4)

    def test_zero_data(self, disk, coarse):
        """Zero data returns F = 0 without iterating."""
        K = support_mask(coarse, disk, 0.4)
        F, report = recover_source(
            SpeedField.constant(1.0), disk, lambda t: 1.0, _zero_trace(disk, coarse, 0.5), K,
            grid=coarse, preflight=False,
        )
        np.testing.assert_array_equal(F, 0.0)
        assert report.stop_reason == "zero-data"

    def test_vanishing_profile(self, disk, coarse):
        """a(0, ·) = 0 on K is rejected."""
        K = support_mask(coarse, disk, 0.4)
        with pytest.raises(EllipticityError, match="vanishes"):
            recover_source(
                SpeedField.constant(1.0), disk, lambda t: 0.0, _zero_trace(disk, coarse, 0.5), K,
                grid=coarse, preflight=False,
            )

    def test_mask_shape(self, disk, coarse):
        """K must match the grid."""
        with pytest.raises(PreconditionError, match="support mask shape"):
            recover_source(
                SpeedField.constant(1.0), disk, lambda t: 1.0, _zero_trace(disk, coarse, 0.5),
                np.ones((3, 3), dtype=bool), grid=coarse,
            )

    @pytest.mark.slow
    def test_reconstruction_improves(self, disk):
        """A time-varying profile still reduces both residual and error."""
        T = 2.0
        grid = Grid.for_problem(disk, T, n=96)
        K = support_mask(grid, disk, 0.4)
        truth = grid.sample(fn.bump((0.05, 0.0), 0.3))
        a = lambda t: np.cos(t)  # noqa: E731
        _, data, _ = solve_source(SpeedField.constant(1.0), SourceTerm(truth, a), T, grid, disk)
        F, report = recover_source(
            SpeedField.constant(1.0), disk, a, data, K, iters=6, grid=grid, truth=truth
        )
        assert report.residual_history[-1] < report.residual_history[0]
        assert report.final_rel_error < 1.0
        assert np.isfinite(report.stability_ratio)
        assert report.stop_reason in ("iterations", "stagnation")
        assert all(
            last <= prev * (1 + 1e-9)
            for prev, last in zip(report.residual_history, report.residual_history[1:])
        )

    def test_homogeneous_in_data(self, disk):
        """Scaling the data scales the estimate by the same factor."""
        T = 1.5
        grid = Grid.for_problem(disk, T, n=48)
        K = support_mask(grid, disk, 0.4)
        truth = np.where(K, grid.sample(fn.bump((0.0, 0.0), 0.35)), 0.0)
        _, data, _ = solve_source(SpeedField.constant(1.0), SourceTerm(truth), T, grid, disk)
        c = SpeedField.constant(1.0)
        single, first = recover_source(c, disk, lambda t: 1.0, data, K, iters=3, grid=grid, preflight=False)
        triple, second = recover_source(
            c, disk, lambda t: 1.0, data.scaled(3.0), K, iters=3, grid=grid, preflight=False
        )
        assert first.iterations == second.iterations
        np.testing.assert_allclose(triple, 3 * single, atol=1e-8 * np.max(np.abs(triple)))

    @pytest.mark.slow
    def test_disk_basic_accuracy(self):
        """Constant speed on the unit disk recovers F to 5% within the iteration budget."""
        cfg, c, domain, grid, K, truth, data = _scenario_problem("disk-basic")
        _, report = recover_source(c, domain, lambda t: 1.0, data, K, cfg.iters, grid, truth=truth)
        assert report.final_rel_error < 0.05
        assert report.iterations <= 15

    @pytest.mark.slow
    def test_trapped_source_stalls(self):
        """A source on a stable closed geodesic is not recovered."""
        cfg, c, domain, grid, K, truth, data = _scenario_problem("herglotz-trap")
        with pytest.warns(UserWarning, match="stability condition"):
            _, report = recover_source(c, domain, lambda t: 1.0, data, K, cfg.iters, grid, truth=truth)
        stability = [r for r in report.condition_reports if r.condition_id == "stability"]
        assert stability and not stability[0].passed
        assert report.final_rel_error > 0.2
        assert min(report.rel_error_history) > 0.2


class TestStopReason:
    """Tests for the stop rule and best-iterate bookkeeping."""

    def test_progress_continues(self):
        """A clear decrease keeps iterating."""
        assert stop_reason([1.0]) is None
        assert stop_reason([1.0, 0.5]) is None

    def test_small_decrease_is_stagnation(self):
        """A relative drop below 1e-3 stagnates."""
        assert stop_reason([1.0, 0.9995]) == "stagnation"
        assert stop_reason([1.0, 1.0005]) == "stagnation"

    def test_rise_is_increase(self):
        """A rising misfit is reported separately from stagnation."""
        assert stop_reason([1.0, 1.85]) == "increase"
        assert stop_reason([0.4, 0.2, 0.3]) == "increase"

    def test_final_error_follows_best_iterate(self):
        """final_rel_error reads the returned iterate, not the last one."""
        report = ReconstructionReport()
        for r, e in [(1.0, 1.0), (0.6, 0.3), (0.9, 1.85)]:
            report.record(r, e)
        assert report.final_rel_error == 1.85
        report.best_iteration = 2
        assert report.final_rel_error == 0.3


class TestMisfitSpace:
    """Tests for the least-squares combination of update directions."""

    def test_exact_fit(self):
        """An image equal to half the target gets coefficient 2."""
        t = 0.1 * np.arange(12)
        target = _series(np.sin(t)[:, None] * np.array([1.0, 2.0]), 0.1)
        space = MisfitSpace(target)
        direction = np.arange(6.0).reshape(2, 3)
        space.add(direction, target.scaled(0.5))
        estimate, residual = space.solve()
        np.testing.assert_allclose(estimate, 2 * direction)
        np.testing.assert_allclose(residual.values, 0.0, atol=1e-12)

    def test_residual_never_grows(self):
        """Adding a direction cannot raise the misfit."""
        rng = np.random.default_rng(3)
        target = _series(rng.standard_normal((10, 4)), 0.1)
        space = MisfitSpace(target)
        norms = []
        for _ in range(4):
            space.add(rng.standard_normal((2, 2)), _series(rng.standard_normal((10, 4)), 0.1))
            norms.append(space.solve()[1].norm())
        assert all(b <= a * (1 + 1e-12) for a, b in zip(norms, norms[1:]))
        assert norms[0] <= target.norm()

    def test_shape_mismatch(self):
        """Images must match the target trace."""
        space = MisfitSpace(_series(np.ones((8, 3)), 0.1))
        with pytest.raises(ValueError, match="image shape"):
            space.add(np.zeros((2, 2)), _series(np.ones((8, 2)), 0.1))

    def test_empty(self):
        """Solving needs a direction."""
        with pytest.raises(ValueError, match="No directions"):
            MisfitSpace(_series(np.ones((8, 3)), 0.1)).solve()


class TestRecoverSpeed:
    """Tests for the Born speed reconstruction."""

    def test_harmonic_datum_rejected(self, disk, coarse):
        """Δf = 0 on K leaves the update undetermined."""
        setup = SpeedRecoverySetup(
            f=fn.saddle(),
            c_init=SpeedField.constant(1.0),
            data=_zero_trace(disk, coarse, 0.5),
            K=support_mask(coarse, disk, 0.3),
            domain=disk,
            grid=coarse,
        )
        with pytest.raises(EllipticityError, match="vanishes"):
            recover_speed(setup)

    def test_exact_speed_converges_at_once(self, disk, coarse):
        """Data generated with c_init give a zero misfit."""
        f = fn.make_source("quadratic-bump", [0.3, 0.6])
        _, data = solve_ivp(SpeedField.constant(1.0), f, 0.5, coarse, disk)
        setup = SpeedRecoverySetup(
            f=f,
            c_init=SpeedField.constant(1.0),
            data=data,
            K=support_mask(coarse, disk, 0.25),
            domain=disk,
            grid=coarse,
        )
        c_est, report = recover_speed(setup)
        assert report.stop_reason == "converged"
        assert report.iterations == 1
        np.testing.assert_allclose(c_est.sample(coarse.ticks, coarse.ticks), 1.0)

    def test_grid_for_speed(self, coarse):
        """dt shrinks with headroom once the speed passes grid.c_max."""
        assert grid_for_speed(coarse, np.full(coarse.shape, 0.81), 0.5) is coarse
        faster = grid_for_speed(coarse, np.full(coarse.shape, 1.5**2), 0.5)
        assert faster.n == coarse.n and faster.h == coarse.h
        assert faster.c_max == pytest.approx(1.25 * 1.5)
        assert faster.dt < coarse.dt
        assert faster.cfl <= 0.5 + 1e-12
        assert faster.steps_for(0.5) > coarse.steps_for(0.5)

    def test_faster_start_regrids(self, disk, coarse):
        """A starting speed above the grid bound runs instead of breaking the cfl limit."""
        f = fn.make_source("quadratic-bump", [0.3, 0.6])
        _, data = solve_ivp(SpeedField.constant(1.0), f, 0.5, coarse, disk)
        setup = SpeedRecoverySetup(
            f=f,
            c_init=SpeedField.constant(1.3),
            data=data,
            K=support_mask(coarse, disk, 0.25),
            domain=disk,
            grid=coarse,
        )
        _, report = recover_speed(setup, outer_iters=1, inner_iters=1)
        assert np.all(np.isfinite(report.residual_history))
        assert report.best_iteration is not None
        assert report.residual_history[report.best_iteration - 1] == min(report.residual_history)

    @pytest.mark.slow
    def test_twin_speed_accuracy(self):
        """A 5% bump in c is recovered to 10% in c² within the outer budget."""
        cfg = get_scenario("twin-speed")
        truth, c0, domain = cfg.truth(), cfg.speed(), cfg.domain()
        grid = cfg.grid(c_field=truth)
        f = cfg.source()
        _, data = solve_ivp(truth, f, cfg.T, grid, domain, track_energy=False)
        K = support_mask(grid, domain, cfg.support_radius)
        setup = SpeedRecoverySetup(f, c0, data, K, domain, grid, cfg.floor)
        _, report = recover_speed(setup, cfg.outer_iters, cfg.iters, truth=truth)
        assert cfg.outer_iters <= 5
        assert report.best_iteration - 1 <= cfg.outer_iters
        assert report.final_rel_error < 0.1
        assert report.stop_reason != "increase" or report.final_rel_error < report.rel_error_history[-1]


class TestStabilityProbe:
    """Tests for the empirical stability probe."""

    def test_band_limited_support(self, coarse):
        """Random sources vanish outside their disk."""
        F = band_limited_source(coarse, (0.0, 0.0), 0.3, 3, np.random.default_rng(1))
        r = np.linalg.norm(coarse.points(), axis=-1)
        assert np.all(F[r >= 0.3] == 0.0)
        assert np.any(F != 0.0)

    def test_reproducible(self, disk, coarse):
        """The same seed yields the same ensemble."""
        kwargs = dict(K=((0.0, 0.0), 0.3), T=0.5, ensemble_size=3, modes=2, grid=coarse, symbols=False)
        a = lambda t: 1.0  # noqa: E731
        first = stability_probe(SpeedField.constant(1.0), disk, a, seed=7, **kwargs)
        second = stability_probe(SpeedField.constant(1.0), disk, a, seed=7, **kwargs)
        other = stability_probe(SpeedField.constant(1.0), disk, a, seed=8, **kwargs)
        np.testing.assert_array_equal(first.ratios, second.ratios)
        assert np.all(first.ratios > 0)
        assert not np.array_equal(first.ratios, other.ratios)

    def test_result_summary(self):
        """Summary statistics skip NaN members."""
        result = ProbeResult(
            np.array([1.0, 2.0, np.nan, 4.0]), np.array([0.1, 0.2, np.nan, 0.4]), modes=4, seed=0
        )
        summary = result.summary()
        assert isinstance(summary, pd.Series)
        assert summary["excluded"] == 1
        assert summary["max_ratio"] == 4.0
        assert summary["median_ratio"] == 2.0
        assert summary["symbol_correlation"] == pytest.approx(1.0)

    def test_correlation_needs_spread(self):
        """Constant symbols have no correlation but still report their minimum."""
        result = ProbeResult(np.array([1.0, 2.0, 3.0]), np.array([0.5, 0.5, 0.5]), modes=2)
        assert np.isnan(result.correlation)
        summary = result.summary()
        assert summary["min_symbol"] == 0.5
        assert np.isnan(summary["symbol_correlation"])

    def test_annular_packet_support(self, coarse):
        """Packets live on the annulus |ρ − r| < half width."""
        F = annular_packet(coarse, (0.0, 0.0), 0.5, 0.1, 8, np.random.default_rng(2))
        rho = np.linalg.norm(coarse.points(), axis=-1)
        assert np.any(F != 0.0)
        assert np.all(F[np.abs(rho - 0.5) >= 0.1] == 0.0)

    def test_annular_packet_width(self, coarse):
        """The half width must stay below the radius."""
        with pytest.raises(ValueError, match="half_width"):
            annular_packet(coarse, (0.0, 0.0), 0.1, 0.2, 4, np.random.default_rng(0))

    def test_focus_outside_support(self, disk, coarse):
        """A focus circle outside K is rejected."""
        with pytest.raises(ValueError, match="does not fit"):
            stability_probe(
                SpeedField.constant(1.0), disk, lambda t: 1.0, ((0.0, 0.0), 0.3), 0.5,
                ensemble_size=1, grid=coarse, symbols=False, focus=0.4,
            )

    @pytest.mark.slow
    def test_ratio_growth_on_trapped_circle(self):
        """Packets on the stable closed geodesic grow the ratio at least 4× from band 4 to 16."""
        from tat_lab.cli import trapped_circle

        cfg = get_scenario("herglotz-trap").with_resolution(128)
        focus = trapped_circle(cfg)
        assert focus == pytest.approx(0.5, abs=0.05)
        ratios = _median_ratios(cfg, focus)
        assert ratios[16] >= 4 * ratios[4]

    @pytest.mark.slow
    def test_ratio_flat_without_trapping(self):
        """Constant speed keeps the ratio within 2× across the same bands."""
        cfg = get_scenario("disk-basic").with_resolution(128)
        ratios = _median_ratios(cfg, None)
        assert ratios[16] < 2 * ratios[4]


class TestInitialDatum:
    """Tests for the initial-datum inversion."""

    def test_zero_data(self, disk, coarse):
        """Zero data returns f = 0."""
        K = support_mask(coarse, disk, 0.5)
        f, report = recover_initial_datum(
            SpeedField.constant(1.0), disk, _zero_trace(disk, coarse, 0.5), K, coarse
        )
        np.testing.assert_array_equal(f, 0.0)
        assert report.stop_reason == "zero-data"


class TestNeumannConsistency:
    """Tests for the Neumann recovery experiment."""

    @pytest.mark.slow
    def test_table_columns(self, disk):
        """One row per resolution with h shrinking."""
        table = neumann_consistency_experiment(
            SpeedField.constant(1.0), disk, fn.bump((0.0, 0.0), 0.5), 1.0, resolutions=(64, 128)
        )
        assert list(table.columns) == ["n", "h", "error", "rel_error"]
        assert table["h"].iloc[1] < table["h"].iloc[0]
        assert np.all(np.isfinite(table["rel_error"]))
