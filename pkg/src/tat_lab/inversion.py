"""
Inverse solvers and stability probes.

recover_source inverts the boundary trace of w_tt for the source F. Each
iteration back-projects the current residual into a new update direction;
the iterate is the combination of all directions whose simulated traces
best fit the data. recover_speed wraps it in a Born loop for the sound speed.
"""

import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
import pandas as pd
from scipy.linalg import lstsq
from scipy.stats import pearsonr

from .boundary_ops import CutoffProfile, back_project, parametrix_symbol, recover_neumann, resample_trace
from .convexity import check_ellipticity, check_stability_condition
from .domain import Domain
from .errors import DivergenceError, EllipticityError, PreconditionError
from .functions import SmoothFunction
from .metrics import summary as sample_summary
from .reports import ReconstructionReport
from .sampling import unit_directions
from .speed import SpeedField, smooth_bump
from .wave import BoundaryTrace, Grid, SourceTerm, TabulatedProfile, mollify, solve_ivp, solve_source

logger = logging.getLogger(__name__)

STAGNATION = 1e-3
DIVERGENCE_FACTOR = 10.0
SPEED_FLOOR = 0.2
PREFLIGHT_POINTS = 64
LSTSQ_CUTOFF = 1e-10
SPEED_HEADROOM = 1.25
PACKET_HALF_WIDTH = 0.1

# 5-point second-derivative stencils: interior, first and second rows
_D2_CENTRAL = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
_D2_EDGE = np.array([35.0, -104.0, 114.0, -56.0, 11.0]) / 12.0
_D2_NEXT = np.array([11.0, -20.0, 6.0, 4.0, -1.0]) / 12.0


def second_time_derivative(trace: BoundaryTrace) -> BoundaryTrace:
    """
    ∂²/∂t² of a boundary trace by fourth-order central differences.

    The two rows at each end use one-sided five-point stencils.

    Raises:
        ValueError: With fewer than 5 time samples
    """
    v = trace.values
    nt = v.shape[0]
    if nt < 5:
        raise ValueError(f"Need at least 5 time samples, got {nt}")
    out = np.empty_like(v, dtype=float)
    out[2:-2] = sum(_D2_CENTRAL[k] * v[k : nt - 4 + k] for k in range(5))
    out[0] = _D2_EDGE @ v[:5]
    out[1] = _D2_NEXT @ v[:5]
    out[-1] = _D2_EDGE @ v[::-1][:5]
    out[-2] = _D2_NEXT @ v[::-1][:5]
    return trace.with_values(out / trace.dt**2)


def _l2(values: np.ndarray, mask: np.ndarray, h: float) -> float:
    return float(np.sqrt(np.sum(values[mask] ** 2)) * h)


def _a_at_zero(a: Callable, grid: Grid) -> np.ndarray:
    return np.broadcast_to(np.asarray(a(0.0), dtype=float), grid.shape).copy()


def stop_reason(history: list) -> Optional[str]:
    """
    'increase' when the last residual rose by more than STAGNATION,
    'stagnation' when it fell by less, None otherwise.
    """
    if len(history) < 2:
        return None
    prev, last = history[-2], history[-1]
    if last > (1.0 + STAGNATION) * prev:
        return "increase"
    if prev - last < STAGNATION * prev:
        return "stagnation"
    return None


class MisfitSpace:
    """
    Update directions stored with their simulated boundary images.

    solve() returns the combination of directions whose image is closest to
    the target in L²([0, T] × ∂Ω), so the residual cannot grow as directions
    are added.
    """

    def __init__(self, target: BoundaryTrace):
        wt = np.full(target.values.shape[0], target.dt)
        wt[[0, -1]] *= 0.5
        self.target = target
        self._sqrt_w = np.sqrt(wt[:, None] * target.weights[None, :])
        self.directions: list[np.ndarray] = []
        self.images: list[np.ndarray] = []
        self.coefficients = np.zeros(0)

    def __len__(self) -> int:
        return len(self.directions)

    def add(self, direction: np.ndarray, image: BoundaryTrace) -> None:
        if image.values.shape != self.target.values.shape:
            raise ValueError(f"image shape {image.values.shape} != target shape {self.target.values.shape}")
        self.directions.append(np.asarray(direction, dtype=float))
        self.images.append(np.asarray(image.values, dtype=float))

    def solve(self) -> tuple[np.ndarray, BoundaryTrace]:
        """Best combination of the directions and the residual trace it leaves."""
        if not self.directions:
            raise ValueError("No directions to combine")
        A = np.stack([(v * self._sqrt_w).ravel() for v in self.images], axis=1)
        b = (self.target.values * self._sqrt_w).ravel()
        coef, _, _, _ = lstsq(A, b, cond=LSTSQ_CUTOFF)
        self.coefficients = coef
        estimate = np.tensordot(coef, np.asarray(self.directions), axes=1)
        fitted = np.tensordot(coef, np.asarray(self.images), axes=1)
        return estimate, self.target.with_values(self.target.values - fitted)


def _preflight(c_field, domain: Domain, K: np.ndarray, grid: Grid, T: float) -> list:
    if not isinstance(c_field, SpeedField):
        return []
    pts = grid.points()[K]
    if len(pts) > PREFLIGHT_POINTS:
        pts = pts[np.linspace(0, len(pts) - 1, PREFLIGHT_POINTS).astype(int)]
    report = check_stability_condition(c_field, domain, pts, T)
    if not report.passed:
        warnings.warn("stability condition fails on K; reconstruction may stagnate", stacklevel=3)
        logger.warning("preflight stability failed: margin %.3g", report.margin)
    return [report]


def support_mask(grid: Grid, domain: Domain, radius: float, center=(0.0, 0.0)) -> np.ndarray:
    """Grid nodes in the disk of given radius that lie inside Ω."""
    pts = grid.points()
    near = np.linalg.norm(pts - np.asarray(center), axis=-1) <= radius
    return near & domain.contains(pts)


def recover_source(
    c_field: Union[SpeedField, np.ndarray],
    domain: Domain,
    a: Callable,
    data: BoundaryTrace,
    K: np.ndarray,
    iters: int = 15,
    grid: Optional[Grid] = None,
    truth: Optional[np.ndarray] = None,
    chi: Optional[CutoffProfile] = None,
    preflight: bool = True,
    n: int = 256,
) -> tuple[np.ndarray, ReconstructionReport]:
    """
    Recover F supported in K from the Dirichlet trace of w_tt = c²Δw + aF.

    Iteration k adds the direction D_k = mollify(B χ(∂²_t d − ∂²_t R w[F_k])) / a(0)
    on K, simulates its trace and sets F_{k+1} to the least-squares
    combination of D_1..D_k against ∂²_t d. With a independent of t this
    is the Neumann series for Id − BχΛ/a(0) with an optimal step; a
    time-varying a only changes the step, never the sign of progress.

    Args:
        c_field: Sound speed (function or grid samples)
        domain: Ω
        a: Time profile t -> scalar or grid array
        data: Measured Dirichlet trace of w
        K: Boolean node mask for supp F
        iters: Maximum iterations
        grid: Computational grid (built from domain and data.T when omitted)
        truth: True F for error tracking
        chi: Cutoff profile (0.9T taper by default)
        preflight: Attach the stability-condition report

    Returns:
        Tuple (F estimate on the grid, report)

    Raises:
        EllipticityError: When a(0, ·) vanishes on K
        DivergenceError: When the residual stops being finite
    """
    T = data.T
    if grid is None:
        grid = Grid.for_problem(domain, T, n, c_field=c_field if isinstance(c_field, SpeedField) else None)
    K = np.asarray(K, dtype=bool)
    if K.shape != grid.shape:
        raise PreconditionError(f"support mask shape {K.shape} != grid shape {grid.shape}")
    a0 = _a_at_zero(a, grid)
    ell = check_ellipticity(a0, K, grid.h, mode="value", grid_points=grid.points())
    if not ell.passed:
        raise EllipticityError("a(0, .) vanishes on K", region=ell.extras.get("zero_set", ell.witnesses))

    report = ReconstructionReport(condition_reports=[ell])
    if preflight:
        report.condition_reports += _preflight(c_field, domain, K, grid, T)
    chi = chi or CutoffProfile(T)
    times = grid.dt * np.arange(grid.steps_for(T) + 1)
    if data.values.shape[0] != len(times) or not np.isclose(data.dt, grid.dt):
        data = BoundaryTrace(resample_trace(data, times), grid.dt, data.points, data.weights, data.kind)
    d_tt = second_time_derivative(data)
    d_norm = d_tt.norm()
    truth_norm = _l2(truth, K, grid.h) if truth is not None else None

    def rel_error(F):
        if truth is None:
            return None
        return _l2(F - truth, K, grid.h) / truth_norm if truth_norm > 0 else _l2(F, K, grid.h)

    F = np.zeros(grid.shape)
    if d_norm == 0:
        report.record(0.0, rel_error(F))
        report.stop_reason = "zero-data"
        report.stability_ratio = np.nan
        return F, report

    space = MisfitSpace(d_tt)
    divisor = np.where(K, a0, 1.0)
    resid = d_tt
    best_r, best_F, best_k = np.inf, F, 0
    for k in range(iters):
        update = back_project(c_field, domain, chi.apply(resid), T, grid)
        direction = np.where(K, mollify(update) / divisor, 0.0)
        _, image, _ = solve_source(c_field, SourceTerm(direction, a), T, grid, domain)
        space.add(direction, second_time_derivative(image))
        F, resid = space.solve()
        r = resid.norm() / d_norm
        report.record(r, rel_error(F))
        logger.debug("recover_source iteration %d: residual %.3e", k + 1, r)
        if not np.isfinite(r) or r > DIVERGENCE_FACTOR:
            report.stop_reason = "divergence"
            raise DivergenceError(f"residual {r:.3g} after {k + 1} iterations", report)
        if r < best_r:
            best_r, best_F, best_k = r, F, k + 1
        reason = stop_reason(report.residual_history)
        if reason is not None:
            report.stop_reason = reason
            break
    else:
        report.stop_reason = "iterations"

    F = best_F
    report.best_iteration = best_k
    report.stability_ratio = _l2(F, K, grid.h) / d_norm
    report.extras["residual"] = resid
    report.extras["coefficients"] = space.coefficients
    logger.info(
        "recover_source: %d iterations, residual %.3e (%s)",
        report.iterations, best_r, report.stop_reason,
    )
    return F, report


@dataclass
class SpeedRecoverySetup:
    """
    Inputs of the speed reconstruction.

    Attributes:
        f: Known initial datum with Δf ≠ 0 on K
        c_init: Starting speed
        data: Measured trace Λ̃f
        K: Boolean node mask carrying c̃² − c²
        domain: Ω
        grid: Computational grid
        floor: Lower clamp for the speed
    """

    f: Union[SmoothFunction, np.ndarray]
    c_init: SpeedField
    data: BoundaryTrace
    K: np.ndarray
    domain: Domain
    grid: Grid
    floor: float = SPEED_FLOOR

    def check(self) -> None:
        if isinstance(self.f, SmoothFunction):
            report = check_ellipticity(self.f, self.grid.points()[self.K])
        else:
            report = check_ellipticity(self.f, self.K, self.grid.h, grid_points=self.grid.points())
        if not report.passed:
            raise EllipticityError(
                "Δf vanishes on K; the speed update is not determined there",
                region=report.extras.get("zero_set", report.witnesses),
            )


def grid_for_speed(grid: Grid, c2: np.ndarray, T: float) -> Grid:
    """The same lattice, with dt shortened when √c2 exceeds grid.c_max."""
    c_max = float(np.sqrt(np.max(c2)))
    if c_max <= grid.c_max:
        return grid
    logger.info("speed bound %.4g exceeds grid c_max %.4g; shortening dt", c_max, grid.c_max)
    return grid.with_speed_bound(SPEED_HEADROOM * c_max, T)


def recover_speed(
    setup: SpeedRecoverySetup,
    outer_iters: int = 5,
    inner_iters: int = 8,
    truth: Optional[SpeedField] = None,
) -> tuple[SpeedField, ReconstructionReport]:
    """
    Born iteration for c̃ from Λ̃f.

    Each outer step solves with the current speed, substitutes a = Δu for
    the unknown Δũ, recovers F = c̃² − c² on K and updates c². The iterate
    with the smallest misfit is returned; a rising misfit stops the loop
    with stop_reason 'increase'.

    Returns:
        Tuple (speed estimate on the grid, report)

    Raises:
        EllipticityError: When Δf or Δu_k vanishes on K
    """
    setup.check()
    grid, K, domain = setup.grid, setup.K, setup.domain
    T = setup.data.T
    c2 = grid.sample(setup.c_init) ** 2
    c2_init = c2.copy()
    truth_c2 = grid.sample(truth) ** 2 if truth is not None else None
    data_norm = setup.data.norm()
    report = ReconstructionReport()

    def rel_error(c2_now):
        if truth_c2 is None:
            return None
        scale = _l2(truth_c2 - c2_init, K, grid.h)
        err = _l2(c2_now - truth_c2, K, grid.h)
        return err / scale if scale > 0 else err

    best_r, best_c2, best_k = np.inf, c2, 1
    # record k holds the misfit of the k-th iterate; record 0 is c_init
    for k in range(outer_iters + 1):
        grid = grid_for_speed(grid, c2, T)
        traj, trace = solve_ivp(np.sqrt(c2), setup.f, T, grid, domain, record_laplacian=K, track_energy=False)
        misfit = setup.data - trace.with_values(resample_trace(trace, setup.data.times))
        r = misfit.norm() / data_norm if data_norm > 0 else 0.0
        report.record(r, rel_error(c2))
        if r < best_r:
            best_r, best_c2, best_k = r, c2, k + 1
        if r == 0:
            report.stop_reason = "converged"
            break
        reason = stop_reason(report.residual_history)
        if reason is not None:
            report.stop_reason = reason
            if reason == "increase":
                logger.warning("recover_speed: misfit rose to %.3e; keeping iterate %d", r, best_k)
            break
        if k == outer_iters:
            report.stop_reason = "iterations"
            break
        a_k: TabulatedProfile = traj.extras["laplacian"]
        try:
            F_hat, inner = recover_source(
                np.sqrt(c2), domain, a_k, misfit, K, inner_iters, grid, preflight=False
            )
        except EllipticityError as exc:
            raise EllipticityError(f"Δu_{k} vanishes on K: {exc}", region=exc.region) from exc
        report.extras.setdefault("inner_residuals", []).append(inner.residual_history)
        updated = c2 + F_hat
        floor2 = setup.floor**2
        if np.any(updated[K] < floor2):
            warnings.warn(f"speed clamped at floor {setup.floor}", stacklevel=2)
            logger.warning("recover_speed: %d nodes clamped to the floor", int(np.sum(updated[K] < floor2)))
        c2 = np.where(K, np.maximum(updated, floor2), c2)

    c2 = best_c2
    report.best_iteration = best_k
    report.extras["c2"] = c2
    ticks = grid.ticks
    return SpeedField.from_grid(ticks, ticks, np.sqrt(c2)), report


# -- stability and consistency experiments ---------------------------------------


def band_limited_source(
    grid: Grid,
    center: tuple[float, float],
    radius: float,
    modes: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """
    Random Fourier sum with |k| ≤ modes under a smooth bump window on the disk K.

    Coefficients are standard normal; the wavelength of mode k is 2·radius/k.
    """
    pts = grid.points() - np.asarray(center)
    window, _, _ = smooth_bump(np.linalg.norm(pts, axis=-1) / radius)
    F = np.zeros(grid.shape)
    base = np.pi / radius
    for kx in range(-modes, modes + 1):
        for ky in range(0, modes + 1):
            if ky == 0 and kx < 0:
                continue
            if kx * kx + ky * ky > modes * modes:
                continue
            phase = base * (kx * pts[..., 0] + ky * pts[..., 1])
            a, b = rng.standard_normal(2)
            F += a * np.cos(phase) + b * np.sin(phase)
    return F * window


def annular_packet(
    grid: Grid,
    center: tuple[float, float],
    radius: float,
    half_width: float,
    modes: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """
    Random angular packet b((ρ − radius)/half_width)·Σ (a_m cos mθ + b_m sin mθ).

    The orders run over the top quarter of the band, ⌈3·modes/4⌉ ≤ m ≤ modes,
    so higher band limits put more of F into directions tangent to the circle.
    """
    if half_width <= 0 or half_width >= radius:
        raise ValueError(f"half_width must be in (0, {radius}), got {half_width}")
    pts = grid.points() - np.asarray(center)
    rho = np.linalg.norm(pts, axis=-1)
    theta = np.arctan2(pts[..., 1], pts[..., 0])
    window, _, _ = smooth_bump((rho - radius) / half_width)
    F = np.zeros(grid.shape)
    for m in range(max(1, int(np.ceil(0.75 * modes))), modes + 1):
        a, b = rng.standard_normal(2)
        F += a * np.cos(m * theta) + b * np.sin(m * theta)
    return F * window


@dataclass
class ProbeResult:
    """
    Stability ratios ‖F‖_L²(K) / ‖w_tt‖ over a seeded ensemble.

    min_symbols holds, per member, the smallest parametrix symbol at the
    nodes where |F| peaks. The correlation is NaN when either sample has no
    spread; min_symbol still reports the ensemble minimum then.
    """

    ratios: np.ndarray
    min_symbols: np.ndarray
    modes: int
    seed: Optional[int] = None
    extras: dict = field(default_factory=dict)

    @property
    def valid(self) -> np.ndarray:
        return self.ratios[np.isfinite(self.ratios)]

    @property
    def max(self) -> float:
        return float(np.max(self.valid)) if self.valid.size else np.nan

    @property
    def median(self) -> float:
        return float(np.median(self.valid)) if self.valid.size else np.nan

    @property
    def min_symbol(self) -> float:
        ok = np.isfinite(self.min_symbols)
        return float(np.min(self.min_symbols[ok])) if ok.any() else np.nan

    @property
    def correlation(self) -> float:
        ok = np.isfinite(self.ratios) & np.isfinite(self.min_symbols)
        if ok.sum() < 3 or np.ptp(self.ratios[ok]) == 0 or np.ptp(self.min_symbols[ok]) == 0:
            return np.nan
        return float(pearsonr(self.ratios[ok], self.min_symbols[ok])[0])

    def summary(self) -> pd.Series:
        stats = sample_summary(self.ratios, "ratio")
        return pd.Series(
            {
                "modes": self.modes,
                "members": len(self.ratios),
                "excluded": int(stats["excluded"]),
                "max_ratio": self.max,
                "median_ratio": self.median,
                "p90_ratio": stats["p90"],
                "min_symbol": self.min_symbol,
                "symbol_correlation": self.correlation,
            }
        )


def _min_symbol_on(
    c_field: SpeedField,
    domain: Domain,
    chi: CutoffProfile,
    F: np.ndarray,
    grid: Grid,
    n_points: int = 16,
    n_dirs: int = 8,
) -> float:
    """min of the parametrix symbol over directions at the nodes where |F| peaks."""
    if not isinstance(c_field, SpeedField) or not np.any(F):
        return np.nan
    flat = np.abs(F).ravel()
    idx = np.argsort(flat)[::-1][:n_points]
    x = grid.points().reshape(-1, 2)[idx]
    theta = 2 * np.pi * (np.arange(n_dirs) + 0.5) / n_dirs
    xs = np.repeat(x, n_dirs, axis=0)
    xi = unit_directions(np.tile(theta, len(x)), c_field.value(xs))
    symbol, _ = parametrix_symbol(c_field, domain, chi, (xs, xi))
    return float(np.min(symbol))


def stability_probe(
    c_field: Union[SpeedField, np.ndarray],
    domain: Domain,
    a: Callable,
    K: tuple[tuple[float, float], float],
    T: float,
    ensemble_size: int = 50,
    seed: int = 0,
    modes: int = 8,
    grid: Optional[Grid] = None,
    n: int = 128,
    symbols: bool = True,
    focus: Optional[float] = None,
) -> ProbeResult:
    """
    Empirical probe of ‖F‖_L²(K) ≤ C‖w_tt‖_L²([0,T]×∂Ω).

    Args:
        c_field: Sound speed
        domain: Ω
        a: Source time profile
        K: Support disk as (center, radius)
        T: Observation time
        ensemble_size: Number of random sources
        seed: Base seed; member seeds are drawn from it
        modes: Band limit of the random sources
        grid: Computational grid
        symbols: Also evaluate the parametrix symbol where each F peaks
        focus: Radius of a circle about the centre of K; members become
            annular packets on it instead of band-limited sums over K

    Returns:
        ProbeResult; members with F ≡ 0 or w_tt ≡ 0 carry NaN ratios

    Raises:
        ValueError: When the focus circle does not fit inside K
    """
    if grid is None:
        grid = Grid.for_problem(domain, T, n, c_field=c_field if isinstance(c_field, SpeedField) else None)
    center, radius = K
    if focus is not None:
        half_width = min(PACKET_HALF_WIDTH, 0.9 * (radius - focus), 0.5 * focus)
        if half_width <= 0:
            raise ValueError(f"focus circle of radius {focus} does not fit inside K of radius {radius}")

        def draw(rng):
            return annular_packet(grid, center, focus, half_width, modes, rng)

    else:

        def draw(rng):
            return band_limited_source(grid, center, radius, modes, rng)

    mask = np.linalg.norm(grid.points() - np.asarray(center), axis=-1) < radius
    chi = CutoffProfile(T)
    base_rng = np.random.default_rng(seed)
    member_seeds = base_rng.integers(0, 2**31, size=ensemble_size)

    ratios = np.full(ensemble_size, np.nan)
    mins = np.full(ensemble_size, np.nan)
    for i, member_seed in enumerate(member_seeds):
        F = draw(np.random.default_rng(member_seed))
        f_norm = _l2(F, mask, grid.h)
        if f_norm == 0:
            continue
        _, trace, _ = solve_source(c_field, SourceTerm(F, a), T, grid, domain)
        w_norm = second_time_derivative(trace).norm()
        if w_norm == 0:
            continue
        ratios[i] = f_norm / w_norm
        if symbols:
            mins[i] = _min_symbol_on(c_field, domain, chi, F, grid)

    result = ProbeResult(ratios, mins, modes, seed)
    result.extras["focus"] = focus
    logger.info("stability_probe: modes=%d max=%.3g median=%.3g", modes, result.max, result.median)
    return result


def neumann_consistency_experiment(
    c_field: Union[SpeedField, np.ndarray],
    domain: Domain,
    source: Union[SmoothFunction, Callable],
    T: float,
    resolutions: tuple[int, ...] = (128, 256, 512),
    a: Callable = lambda t: 1.0,
) -> pd.DataFrame:
    """
    Neumann data recovered from Dirichlet data against the traced truth.

    At each resolution the forced problem is solved globally, its Dirichlet
    trace is passed through recover_neumann and compared with the directly
    traced normal derivative.

    Returns:
        DataFrame with columns n, h, error, rel_error
    """
    rows = []
    for n in resolutions:
        grid = Grid.for_problem(domain, T, n, c_field=c_field if isinstance(c_field, SpeedField) else None)
        F = grid.sample(source)
        _, dirichlet, neumann = solve_source(c_field, SourceTerm(F, a), T, grid, domain)
        recovered = recover_neumann(domain, dirichlet, grid)
        error = (recovered - neumann).norm()
        scale = neumann.norm()
        rows.append(
            {"n": n, "h": grid.h, "error": error, "rel_error": error / scale if scale > 0 else 0.0}
        )
        logger.info("neumann consistency n=%d: rel error %.3e", n, rows[-1]["rel_error"])
    return pd.DataFrame(rows)


def recover_initial_datum(
    c_field: Union[SpeedField, np.ndarray],
    domain: Domain,
    data: BoundaryTrace,
    K: np.ndarray,
    grid: Grid,
    iters: int = 10,
    truth: Optional[np.ndarray] = None,
    chi: Optional[CutoffProfile] = None,
) -> tuple[np.ndarray, ReconstructionReport]:
    """
    Classical thermoacoustic inversion of Λf for f supported in K.

    Directions B χ(Λf* − Λf) on K are combined by least squares against the
    data; the forward model is solve_ivp without mollification.
    """
    T = data.T
    K = np.asarray(K, dtype=bool)
    chi = chi or CutoffProfile(T)
    report = ReconstructionReport()
    d_norm = data.norm()
    f = np.zeros(grid.shape)
    if d_norm == 0:
        report.record(0.0)
        report.stop_reason = "zero-data"
        return f, report

    truth_norm = _l2(truth, K, grid.h) if truth is not None else None
    space = MisfitSpace(data)
    resid = data
    best_r, best_f, best_k = np.inf, f, 0
    for k in range(iters):
        direction = np.where(K, back_project(c_field, domain, chi.apply(resid), T, grid), 0.0)
        _, image = solve_ivp(c_field, direction, T, grid, domain, mollify_data=False, track_energy=False)
        space.add(direction, image)
        f, resid = space.solve()
        r = resid.norm() / d_norm
        err = _l2(f - truth, K, grid.h) / truth_norm if truth is not None and truth_norm > 0 else None
        report.record(r, err)
        if not np.isfinite(r) or r > DIVERGENCE_FACTOR:
            report.stop_reason = "divergence"
            raise DivergenceError(f"residual {r:.3g} after {k + 1} iterations", report)
        if r < best_r:
            best_r, best_f, best_k = r, f, k + 1
        reason = stop_reason(report.residual_history)
        if reason is not None:
            report.stop_reason = reason
            break
    else:
        report.stop_reason = "iterations"
    report.best_iteration = best_k
    report.stability_ratio = _l2(best_f, K, grid.h) / d_norm
    return best_f, report
