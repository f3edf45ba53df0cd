"""
Boundary operators: the exterior Dirichlet-to-Neumann map, recovery of
Neumann data from Dirichlet data, time-reversal back-projection and the
time cutoff χ.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy import sparse

from .domain import Domain
from .errors import PreconditionError
from .geometry import PhasePoint, exit_times
from .speed import SpeedField
from .wave import (
    NEUMANN_STENCIL,
    BoundaryTrace,
    Grid,
    WaveSolver,
    WaveState,
    interpolation_matrix,
)

logger = logging.getLogger(__name__)

GHOST_BAND = 3
ZERO_START_TOL = 1e-8


@dataclass(frozen=True)
class CutoffProfile:
    """
    Time taper χ with χ = 1 on [0, T₀] and χ(T) = 0.

    The ramp is the quintic smoothstep, so χ is C² on [0, T].
    """

    T: float
    T0: Optional[float] = None

    def __post_init__(self):
        if self.T <= 0:
            raise ValueError(f"T must be positive, got {self.T}")
        if self.T0 is None:
            object.__setattr__(self, "T0", 0.9 * self.T)
        if not 0 <= self.T0 < self.T:
            raise ValueError(f"Need 0 <= T0 < T, got T0={self.T0}, T={self.T}")

    def __call__(self, t) -> np.ndarray:
        s = np.clip((np.abs(np.asarray(t, dtype=float)) - self.T0) / (self.T - self.T0), 0.0, 1.0)
        return 1.0 - s**3 * (10 - 15 * s + 6 * s**2)

    def apply(self, trace: BoundaryTrace) -> BoundaryTrace:
        return trace.with_values(self(trace.times)[:, None] * trace.values)


def _arc_positions(domain: Domain, points: np.ndarray) -> np.ndarray:
    _, theta = domain.project(points)
    dense = domain._dense()
    return np.interp(theta, dense["theta_full"], dense["arc"])


def periodic_arc_matrix(sample_arc: np.ndarray, target_arc: np.ndarray, perimeter: float) -> sparse.csr_matrix:
    """Linear interpolation along ∂Ω from samples at sample_arc to target_arc."""
    order = np.argsort(sample_arc)
    s = sample_arc[order]
    ext = np.concatenate([s, [s[0] + perimeter]])
    t = np.mod(target_arc - s[0], perimeter) + s[0]
    k = np.clip(np.searchsorted(ext, t, side="right") - 1, 0, len(s) - 1)
    w = (t - ext[k]) / (ext[k + 1] - ext[k])
    left = order[k]
    right = order[(k + 1) % len(s)]
    rows = np.arange(len(target_arc))
    return sparse.csr_matrix(
        (np.concatenate([1 - w, w]), (np.concatenate([rows, rows]), np.concatenate([left, right]))),
        shape=(len(target_arc), len(sample_arc)),
    )


class GhostBoundary:
    """
    Dirichlet data on a curved ∂Ω imposed through a ghost band.

    Nodes on the far side of ∂Ω within GHOST_BAND·h are overwritten by the
    linear extrapolation through the datum g at their boundary projection y
    and the solution at E = y ± GHOST_BAND·h·ν on the live side. Nodes
    beyond the band are held at zero. The band is GHOST_BAND·h = 3h wide and
    the datum enters by extrapolation, not as a penalty term of strength h⁻²
    on a 2h band.

    Args:
        grid: Computational grid
        domain: Ω
        sample_points: Boundary points carrying the data, shape (m, 2)
        side: 'exterior' (solve outside Ω) or 'interior'
    """

    def __init__(self, grid: Grid, domain: Domain, sample_points: np.ndarray, side: str = "exterior"):
        side = side.lower()
        if side not in ("exterior", "interior"):
            raise ValueError(f"Unknown side: {side}. Use 'exterior' or 'interior'")
        self.side = side
        pts = grid.points().reshape(-1, 2)
        sd = domain.signed_distance(pts)
        band = GHOST_BAND * grid.h
        sign = 1.0 if side == "exterior" else -1.0
        depth = -sign * sd
        self.ghost = np.flatnonzero((depth >= 0) & (depth <= band))
        self.dead = np.flatnonzero(depth > band)
        proj, theta = domain.project(pts[self.ghost])
        normals = domain.normal_at(theta)
        anchor = proj + sign * band * normals
        ratio = depth[self.ghost] / band
        self.weight_data = 1.0 + ratio
        self.weight_anchor = ratio
        self.anchor = interpolation_matrix(grid, anchor)
        self.data = periodic_arc_matrix(
            _arc_positions(domain, sample_points), _arc_positions(domain, proj), domain.perimeter
        )
        logger.debug("%s ghost band: %d ghost nodes, %d dead", side, len(self.ghost), len(self.dead))

    def apply(self, u: np.ndarray, g: np.ndarray) -> None:
        flat = u.reshape(-1)
        flat[self.dead] = 0.0
        flat[self.ghost] = self.weight_data * (self.data @ g) - self.weight_anchor * (self.anchor @ flat)


def resample_trace(trace: BoundaryTrace, times: np.ndarray) -> np.ndarray:
    """Trace values linearly interpolated in time onto the given times."""
    src = trace.times
    if len(src) == len(times) and np.allclose(src, times):
        return trace.values
    return np.stack([np.interp(times, src, col) for col in trace.values.T], axis=1)


def _check_zero_start(g: BoundaryTrace) -> None:
    scale = max(1.0, float(np.max(np.abs(g.values))))
    if np.max(np.abs(g.values[0])) > ZERO_START_TOL * scale:
        raise PreconditionError("Dirichlet data must vanish at t = 0")


def dn_map(
    domain: Domain, g: BoundaryTrace, grid: Optional[Grid] = None, n: int = 256
) -> BoundaryTrace:
    """
    Exterior Dirichlet-to-Neumann map N for c = 1.

    Solves w_tt = Δw outside Ω with zero Cauchy data and w = g on ∂Ω, and
    returns the exterior normal derivative ∂w/∂ν at the points of g.

    Raises:
        PreconditionError: When g does not vanish at t = 0
    """
    _check_zero_start(g)
    T = g.T
    if grid is None:
        grid = Grid.for_problem(domain, T, n)
    n_steps = grid.steps_for(T)
    times = grid.dt * np.arange(n_steps + 1)
    data = resample_trace(g, times)
    if not np.any(data):
        return g.with_values(np.zeros_like(g.values), "neumann")

    ghost = GhostBoundary(grid, domain, g.points, "exterior")
    _, theta = domain.project(g.points)
    normals = domain.normal_at(theta)
    probes = [
        NEUMANN_STENCIL[k] / grid.h * interpolation_matrix(grid, g.points + k * grid.h * normals)
        for k in range(1, 5)
    ]
    probe = sum(probes[1:], probes[0]).tocsr()

    def constraint(u, t):
        ghost.apply(u, data[int(round(t / grid.dt))])

    state = WaveState.zeros(grid)
    constraint(state.u, 0.0)
    _, series, _, _ = WaveSolver(grid, np.ones(grid.shape)).run(
        state, n_steps, observers={"probe": probe}, constraint=constraint
    )
    out = series["probe"] + NEUMANN_STENCIL[0] / grid.h * data
    if len(times) != g.values.shape[0] or not np.allclose(times, g.times):
        out = resample_trace(BoundaryTrace(out, grid.dt, g.points, g.weights), g.times)
    return BoundaryTrace(out, g.dt, g.points, g.weights, "neumann")


def recover_neumann(
    domain: Domain, w_dirichlet: BoundaryTrace, grid: Optional[Grid] = None, n: int = 256
) -> BoundaryTrace:
    """Normal derivative of a wave with sources in Ω̄ from its Dirichlet trace alone."""
    return dn_map(domain, w_dirichlet, grid, n)


def back_project(
    c_field: Union[SpeedField, np.ndarray],
    domain: Domain,
    h: BoundaryTrace,
    T: float,
    grid: Grid,
) -> np.ndarray:
    """
    Time-reversal back-projection Bh = v(0).

    v solves v_tt = c²Δv in Ω with v = h on ∂Ω and v = v_t = 0 at t = T.
    The backward problem is run forward in s = T − t.

    Returns:
        Grid array, zero outside Ω
    """
    n_steps = grid.steps_for(T)
    inside = domain.contains(grid.points())
    times = grid.dt * np.arange(n_steps + 1)
    data = resample_trace(h, times)
    if not np.any(data):
        return np.zeros(grid.shape)

    ghost = GhostBoundary(grid, domain, h.points, "interior")

    def constraint(u, s):
        ghost.apply(u, data[n_steps - int(round(s / grid.dt))])

    state = WaveState.zeros(grid)
    constraint(state.u, 0.0)
    final, _, _, _ = WaveSolver(grid, c_field).run(state, n_steps, constraint=constraint)
    return np.where(inside, final.u, 0.0)


def parametrix_symbol(
    c_field: SpeedField,
    domain: Domain,
    chi: CutoffProfile,
    p: Union[PhasePoint, tuple[np.ndarray, np.ndarray]],
    step: float = 1e-2,
    cap: Optional[float] = None,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Principal symbol ½χ(|τ₊|) + ½χ(|τ₋|) of BχΛ at phase points.

    Directions trapped either way contribute 0 for that end and are flagged.

    Returns:
        Tuple (symbol values in [0, 1], trapped flags)
    """
    if isinstance(p, PhasePoint):
        x, xi = p.x, p.xi
    else:
        x, xi = p
    x = np.atleast_2d(np.asarray(x, dtype=float))
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    xi = xi / (c_field.value(x) * np.linalg.norm(xi, axis=-1))[:, None]
    tp, tm, trapped = exit_times(c_field, domain, x, xi, step, cap)
    fwd = np.where(np.isfinite(tp), chi(np.where(np.isfinite(tp), tp, 0.0)), 0.0)
    bwd = np.where(np.isfinite(tm), chi(np.where(np.isfinite(tm), tm, 0.0)), 0.0)
    symbol = 0.5 * fwd + 0.5 * bwd
    flagged = np.asarray(trapped, dtype=bool)
    if np.any(flagged):
        logger.info("parametrix_symbol: %d trapped directions", int(np.sum(flagged)))
    return symbol, flagged
