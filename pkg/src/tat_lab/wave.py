"""
2D variable-speed wave solver on an enlarged box.

u_tt = c²Δu + a(t, x)F(x) is advanced by velocity Verlet (leapfrog) with a
5-point Laplacian. The box is large enough that nothing reaches its edge
before T, so the zero Dirichlet ghosts realise the free-space problem.
Boundary traces on ∂Ω are read off by bicubic interpolation.
"""

import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from scipy import sparse
from scipy.ndimage import gaussian_filter

from .domain import Domain
from .errors import InstabilityError, PreconditionError
from .functions import SmoothFunction
from .speed import SpeedField

logger = logging.getLogger(__name__)

MAX_CFL = 0.5
EXTERIOR_SPEED = 1.0
EVEN_RATIO = 0.25


@dataclass(frozen=True)
class Grid:
    """
    Node lattice x_i = −L + i·h, i = 0..n−1, on [−L, L)².

    Attributes:
        half_width: L
        n: Cells per axis
        dt: Time step
        c_max: Largest speed on the grid
        periodic: Wrap instead of zero ghosts
    """

    half_width: float
    n: int
    dt: float
    c_max: float = 1.0
    periodic: bool = False

    def __post_init__(self):
        if self.n < 8:
            raise ValueError(f"Need at least 8 cells, got {self.n}")
        if self.dt <= 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.cfl > MAX_CFL + 1e-12:
            raise ValueError(f"cfl {self.cfl:.4f} exceeds {MAX_CFL}")

    @property
    def h(self) -> float:
        return 2.0 * self.half_width / self.n

    @property
    def cfl(self) -> float:
        return self.dt * self.c_max / self.h

    @property
    def ticks(self) -> np.ndarray:
        return -self.half_width + self.h * np.arange(self.n)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n, self.n)

    def points(self) -> np.ndarray:
        X, Y = np.meshgrid(self.ticks, self.ticks, indexing="ij")
        return np.stack([X, Y], axis=-1)

    def sample(self, f: Union[SmoothFunction, SpeedField, Callable]) -> np.ndarray:
        return np.asarray(f(self.points()), dtype=float)

    def steps_for(self, T: float) -> int:
        n_steps = T / self.dt
        if abs(n_steps - round(n_steps)) > 1e-9 * max(1.0, n_steps):
            raise ValueError(f"T={T} is not a multiple of dt={self.dt}")
        return int(round(n_steps))

    @classmethod
    def for_problem(
        cls,
        domain: Domain,
        T: float,
        n: int = 256,
        cfl: float = MAX_CFL,
        c_field: Optional[SpeedField] = None,
        half_width: Optional[float] = None,
        periodic: bool = False,
    ) -> "Grid":
        """
        Grid with L ≥ R_Ω + T + 5h and dt = T / ceil(T / (cfl·h/c_max)).

        Outside Ω the speed is 1, so waves leaving Ω reach at most T past R_Ω.
        """
        if T < 0:
            raise ValueError(f"T must be non-negative, got {T}")
        if not 0 < cfl <= MAX_CFL:
            raise ValueError(f"cfl must be in (0, {MAX_CFL}], got {cfl}")
        need = domain.radius + EXTERIOR_SPEED * T
        if half_width is None:
            half_width = need * n / (n - 10.0)
        elif half_width < need + 5 * 2 * half_width / n - 1e-12:
            raise ValueError(f"half_width {half_width} below R + T + 5h for T={T}")
        h = 2.0 * half_width / n
        c_max = 1.0
        if c_field is not None:
            ticks = -half_width + h * np.arange(n)
            c_max = max(1.0, float(np.max(c_field.sample(ticks, ticks))))
        dt_max = cfl * h / c_max
        dt = T / np.ceil(T / dt_max) if T > 0 else dt_max
        return cls(half_width, n, dt, c_max, periodic)

    def with_resolution(self, n: int, T: float) -> "Grid":
        """Same box with n cells and dt rescaled to keep the cfl number."""
        h = 2.0 * self.half_width / n
        dt_max = self.cfl * h / self.c_max
        dt = T / np.ceil(T / dt_max - 1e-9) if T > 0 else dt_max
        return Grid(self.half_width, n, dt, self.c_max, self.periodic)

    def with_speed_bound(self, c_max: float, T: float) -> "Grid":
        """Same lattice with dt shortened so speeds up to c_max keep the cfl number."""
        if c_max <= 0:
            raise ValueError(f"c_max must be positive, got {c_max}")
        dt_max = self.cfl * self.h / c_max
        dt = T / np.ceil(T / dt_max - 1e-9) if T > 0 else dt_max
        return Grid(self.half_width, self.n, dt, c_max, self.periodic)


@dataclass
class WaveState:
    """Cauchy pair [u, u_t] at time t."""

    u: np.ndarray
    v: np.ndarray
    t: float = 0.0

    @classmethod
    def zeros(cls, grid: Grid, t: float = 0.0) -> "WaveState":
        return cls(np.zeros(grid.shape), np.zeros(grid.shape), t)

    def reversed(self) -> "WaveState":
        return WaveState(self.u.copy(), -self.v, self.t)


@dataclass
class BoundaryTrace:
    """
    Time series on [0, T] × ∂Ω.

    Attributes:
        values: Array (nt + 1, m)
        dt: Sampling step
        points: Boundary sample points (m, 2)
        weights: Arc-length quadrature weights (m,)
        kind: 'dirichlet' or 'neumann'
    """

    values: np.ndarray
    dt: float
    points: np.ndarray
    weights: np.ndarray
    kind: str = "dirichlet"

    @property
    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.values.shape[0])

    @property
    def T(self) -> float:
        return self.dt * (self.values.shape[0] - 1)

    def with_values(self, values: np.ndarray, kind: Optional[str] = None) -> "BoundaryTrace":
        return BoundaryTrace(values, self.dt, self.points, self.weights, kind or self.kind)

    def norm(self) -> float:
        """L²([0, T] × ∂Ω) norm by the trapezoid rule in t."""
        wt = np.full(self.values.shape[0], self.dt)
        wt[[0, -1]] *= 0.5
        return float(np.sqrt(np.einsum("t,tm,m->", wt, self.values**2, self.weights)))

    def __add__(self, other: "BoundaryTrace") -> "BoundaryTrace":
        return self.with_values(self.values + other.values)

    def __sub__(self, other: "BoundaryTrace") -> "BoundaryTrace":
        return self.with_values(self.values - other.values)

    def scaled(self, alpha) -> "BoundaryTrace":
        return self.with_values(alpha * self.values)


class TabulatedProfile:
    """a(t, x) stored at the solver's time steps on a node mask."""

    def __init__(self, dt: float, values: np.ndarray, mask: np.ndarray):
        self.dt = dt
        self.values = np.asarray(values, dtype=float)
        self.mask = np.asarray(mask, dtype=bool)

    def __call__(self, t: float) -> np.ndarray:
        k = t / self.dt
        k0 = int(np.clip(np.floor(k + 1e-9), 0, len(self.values) - 1))
        k1 = min(k0 + 1, len(self.values) - 1)
        w = np.clip(k - k0, 0.0, 1.0)
        out = np.zeros(self.mask.shape)
        out[self.mask] = (1 - w) * self.values[k0] + w * self.values[k1]
        return out

    def at_zero(self) -> np.ndarray:
        return self(0.0)


@dataclass
class SourceTerm:
    """
    Forcing a(t, x)F(x).

    Attributes:
        F: Grid array supported in Ω̄
        a: Callable t -> scalar or grid array
    """

    F: np.ndarray
    a: Callable[[float], Union[float, np.ndarray]] = lambda t: 1.0

    def __call__(self, t: float) -> np.ndarray:
        return np.asarray(self.a(t)) * self.F

    def scaled(self, alpha: float) -> "SourceTerm":
        return SourceTerm(alpha * self.F, self.a)


@dataclass
class Trajectory:
    """Strided snapshots of a run with its final state and boundary traces."""

    grid: Grid
    times: list = field(default_factory=list)
    snapshots: list = field(default_factory=list)
    final: Optional[WaveState] = None
    energies: list = field(default_factory=list)
    dirichlet: Optional[BoundaryTrace] = None
    neumann: Optional[BoundaryTrace] = None
    extras: dict = field(default_factory=dict)

    def energy_drift(self) -> float:
        e = np.asarray(self.energies)
        if e.size < 2 or np.max(np.abs(e)) == 0:
            return 0.0
        return float(np.max(np.abs(e - e[0])) / np.max(np.abs(e)))


# -- operators ----------------------------------------------------------------


def laplacian(u: np.ndarray, grid: Grid) -> np.ndarray:
    """5-point Laplacian with zero ghosts or periodic wrap."""
    if grid.periodic:
        lap = np.roll(u, 1, 0) + np.roll(u, -1, 0) + np.roll(u, 1, 1) + np.roll(u, -1, 1) - 4 * u
    else:
        p = np.pad(u, 1)
        lap = p[2:, 1:-1] + p[:-2, 1:-1] + p[1:-1, 2:] + p[1:-1, :-2] - 4 * u
    return lap / grid.h**2


def mollify(f: np.ndarray) -> np.ndarray:
    """Gaussian smoothing of radius 2h."""
    return gaussian_filter(f, sigma=1.0, truncate=2.0, mode="constant")


def _keys(s: np.ndarray) -> np.ndarray:
    a = np.abs(s)
    return np.where(
        a <= 1,
        1.5 * a**3 - 2.5 * a**2 + 1,
        np.where(a < 2, -0.5 * a**3 + 2.5 * a**2 - 4 * a + 2, 0.0),
    )


def interpolation_matrix(grid: Grid, points: np.ndarray) -> sparse.csr_matrix:
    """Sparse bicubic (Keys) interpolation from grid nodes to points, shape (m, n²)."""
    points = np.atleast_2d(points)
    f = (points + grid.half_width) / grid.h
    i0 = np.floor(f).astype(int)
    rows, cols, vals = [], [], []
    m = len(points)
    for di in range(-1, 3):
        wi = _keys(f[:, 0] - (i0[:, 0] + di))
        ii = i0[:, 0] + di
        for dj in range(-1, 3):
            wj = _keys(f[:, 1] - (i0[:, 1] + dj))
            jj = i0[:, 1] + dj
            if grid.periodic:
                ii_w, jj_w = ii % grid.n, jj % grid.n
                ok = np.ones(m, dtype=bool)
            else:
                ok = (ii >= 0) & (ii < grid.n) & (jj >= 0) & (jj < grid.n)
                ii_w, jj_w = ii, jj
            rows.append(np.arange(m)[ok])
            cols.append((ii_w * grid.n + jj_w)[ok])
            vals.append((wi * wj)[ok])
    return sparse.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(m, grid.n**2)
    )


NEUMANN_STENCIL = np.array([-25.0, 48.0, -36.0, 16.0, -3.0]) / 12.0


def neumann_matrix(
    grid: Grid, points: np.ndarray, normals: np.ndarray, spacing: Optional[float] = None
) -> sparse.csr_matrix:
    """Fourth-order one-sided normal derivative from the side normals point into."""
    hs = spacing or grid.h
    mats = [
        NEUMANN_STENCIL[k] / hs * interpolation_matrix(grid, points + k * hs * normals)
        for k in range(5)
    ]
    return sum(mats[1:], mats[0]).tocsr()


def staggered_energy(
    u_prev: np.ndarray, u_next: np.ndarray, c2: np.ndarray, grid: Grid, dt: float
) -> float:
    """Σ c⁻²((u^{n+1} − u^n)/dt)² − ⟨Δ_h u^{n+1}, u^n⟩, conserved by the homogeneous scheme."""
    kin = np.sum((u_next - u_prev) ** 2 / c2) / dt**2
    pot = -np.sum(laplacian(u_next, grid) * u_prev)
    return float((kin + pot) * grid.h**2)


def energy(
    state: WaveState,
    c_field: Union[SpeedField, np.ndarray],
    grid: Grid,
    region: Optional[np.ndarray] = None,
) -> tuple[float, float, float]:
    """
    Energy E_U, the H_D seminorm and the weighted L² norm of u.

    Gradients are forward differences (zero beyond the box unless periodic)
    and all integrals use the node quadrature h². The H_D seminorm satisfies
    ‖u‖²_{H_D} = −⟨Δ_h u, u⟩h² exactly by summation by parts.

    Returns:
        Tuple (E_U, ‖u‖_{H_D}, ‖u‖_{L²(c⁻² dx)})
    """
    c = c_field if isinstance(c_field, np.ndarray) else grid.sample(c_field)
    mask = np.ones(grid.shape, dtype=bool) if region is None else np.asarray(region, dtype=bool)
    u = state.u
    if grid.periodic:
        gx = np.roll(u, -1, 0) - u
        gy = np.roll(u, -1, 1) - u
    else:
        p = np.pad(u, ((0, 1), (0, 1)))
        gx = p[1:, :-1] - u
        gy = p[:-1, 1:] - u
    grad2 = (gx**2 + gy**2) / grid.h**2
    # edges leaving the box towards the zero ghost at index −1
    if not grid.periodic and region is None:
        grad2 = grad2.copy()
        grad2[0, :] += (u[0, :] / grid.h) ** 2
        grad2[:, 0] += (u[:, 0] / grid.h) ** 2
    area = grid.h**2
    hd2 = float(np.sum(grad2[mask]) * area)
    e_u = hd2 + float(np.sum((state.v**2 / c**2)[mask]) * area)
    l2 = float(np.sqrt(np.sum((u**2 / c**2)[mask]) * area))
    return e_u, float(np.sqrt(hd2)), l2


# -- solver -------------------------------------------------------------------


class WaveSolver:
    """Leapfrog integrator bound to a grid and a speed."""

    def __init__(self, grid: Grid, c_field: Union[SpeedField, np.ndarray]):
        self.grid = grid
        c = c_field if isinstance(c_field, np.ndarray) else grid.sample(c_field)
        if np.any(c <= 0):
            raise ValueError("Speed must be positive on the grid")
        c_max = float(np.max(c))
        if c_max * grid.dt / grid.h > MAX_CFL + 1e-12:
            raise ValueError(f"cfl {c_max * grid.dt / grid.h:.4f} exceeds {MAX_CFL} for this speed")
        self.c2 = c**2

    def acceleration(self, u: np.ndarray, t: float, source: Optional[SourceTerm]) -> np.ndarray:
        acc = self.c2 * laplacian(u, self.grid)
        if source is not None:
            acc = acc + source(t)
        return acc

    def advance(
        self,
        state: WaveState,
        source: Optional[SourceTerm] = None,
        dt: Optional[float] = None,
        constraint: Optional[Callable[[np.ndarray, float], None]] = None,
        acc: Optional[np.ndarray] = None,
    ) -> tuple[WaveState, np.ndarray]:
        """Velocity Verlet step; returns the new state and its acceleration."""
        dt = self.grid.dt if dt is None else dt
        if acc is None:
            acc = self.acceleration(state.u, state.t, source)
        v_half = state.v + 0.5 * dt * acc
        u = state.u + dt * v_half
        t = state.t + dt
        if constraint is not None:
            constraint(u, t)
        acc_next = self.acceleration(u, t, source)
        return WaveState(u, v_half + 0.5 * dt * acc_next, t), acc_next

    def step(self, state: WaveState, source: Optional[SourceTerm] = None) -> WaveState:
        return self.advance(state, source)[0]

    def run(
        self,
        state: WaveState,
        n_steps: int,
        source: Optional[SourceTerm] = None,
        dt: Optional[float] = None,
        observers: Optional[dict] = None,
        constraint: Optional[Callable[[np.ndarray, float], None]] = None,
        stride: int = 0,
        track_energy: bool = False,
        record_laplacian: Optional[np.ndarray] = None,
    ) -> tuple[WaveState, dict, list, list]:
        """
        Advance n_steps, recording observer matrices applied to u at every step.

        Returns:
            Tuple (final state, observer series dict, snapshot list, energy list)

        Raises:
            InstabilityError: When u stops being finite
        """
        observers = observers or {}
        series = {name: [mat @ state.u.ravel()] for name, mat in observers.items()}
        if record_laplacian is not None:
            series["laplacian"] = [laplacian(state.u, self.grid)[record_laplacian]]
        snaps = [(state.t, state.u.copy())] if stride else []
        energies = []
        acc = None
        dt_run = self.grid.dt if dt is None else dt
        for k in range(1, n_steps + 1):
            new, acc = self.advance(state, source, dt, constraint, acc)
            if not np.all(np.isfinite(new.u)):
                raise InstabilityError(k)
            if track_energy:
                energies.append(staggered_energy(state.u, new.u, self.c2, self.grid, abs(dt_run)))
            state = new
            for name, mat in observers.items():
                series[name].append(mat @ state.u.ravel())
            if record_laplacian is not None:
                series["laplacian"].append(laplacian(state.u, self.grid)[record_laplacian])
            if stride and k % stride == 0:
                snaps.append((state.t, state.u.copy()))
        return state, {k: np.asarray(v) for k, v in series.items()}, snaps, energies


def _as_grid_array(f, grid: Grid) -> np.ndarray:
    if isinstance(f, np.ndarray):
        if f.shape != grid.shape:
            raise ValueError(f"Grid array shape {f.shape} != {grid.shape}")
        return f.astype(float)
    return grid.sample(f)


def _trace_operators(
    grid: Grid, domain: Domain, neumann: bool, n_boundary: Optional[int]
) -> tuple[dict, dict]:
    bp = domain.boundary_param(n_boundary)
    ops = {"dirichlet": interpolation_matrix(grid, bp["points"])}
    if neumann:
        ops["neumann"] = neumann_matrix(grid, bp["points"], bp["normals"])
    return ops, bp


def step(
    state: WaveState,
    c_field: Union[SpeedField, np.ndarray],
    grid: Grid,
    source: Optional[SourceTerm] = None,
) -> WaveState:
    """One leapfrog step of u_tt = c²Δu + aF."""
    new = WaveSolver(grid, c_field).step(state, source)
    if not np.all(np.isfinite(new.u)):
        raise InstabilityError(1)
    return new


def solve_ivp(
    c_field: Union[SpeedField, np.ndarray],
    f,
    T: float,
    grid: Grid,
    domain: Domain,
    mollify_data: bool = True,
    neumann: bool = False,
    stride: int = 0,
    n_boundary: Optional[int] = None,
    record_laplacian: Optional[np.ndarray] = None,
    track_energy: bool = True,
) -> tuple[Trajectory, BoundaryTrace]:
    """
    Solve u_tt = c²Δu with u(0) = f, u_t(0) = 0 and trace u on ∂Ω.

    Args:
        c_field: Sound speed or its grid samples
        f: Initial datum (function or grid array) supported in Ω̄
        T: Final time, a multiple of grid.dt
        grid: Computational grid
        domain: Ω for the traces
        mollify_data: Smooth f to C² before solving
        neumann: Also record ∂u/∂ν
        stride: Keep every stride-th snapshot (0 keeps none)
        n_boundary: Boundary sample count
        record_laplacian: Node mask on which Δ_h u is tabulated per step

    Returns:
        Tuple (trajectory, Dirichlet trace Λf)
    """
    u0 = _as_grid_array(f, grid)
    if mollify_data:
        u0 = mollify(u0)
    solver = WaveSolver(grid, c_field)
    ops, bp = _trace_operators(grid, domain, neumann, n_boundary)
    n_steps = grid.steps_for(T)
    final, series, snaps, energies = solver.run(
        WaveState(u0, np.zeros(grid.shape)),
        n_steps,
        observers=ops,
        stride=stride,
        track_energy=track_energy,
        record_laplacian=record_laplacian,
    )
    traj = Trajectory(grid, [s[0] for s in snaps], [s[1] for s in snaps], final, energies)
    traj.dirichlet = BoundaryTrace(series["dirichlet"], grid.dt, bp["points"], bp["weights"], "dirichlet")
    if neumann:
        traj.neumann = BoundaryTrace(series["neumann"], grid.dt, bp["points"], bp["weights"], "neumann")
    if record_laplacian is not None:
        traj.extras["laplacian"] = TabulatedProfile(grid.dt, series["laplacian"], record_laplacian)
    traj.extras["initial"] = u0
    logger.debug("solve_ivp: %d steps, energy drift %.2e", n_steps, traj.energy_drift())
    return traj, traj.dirichlet


def _check_support(F: np.ndarray, grid: Grid, domain: Domain) -> None:
    pts = grid.points()[F != 0]
    if len(pts) and np.max(domain.signed_distance(pts)) > grid.h * np.sqrt(2) + 1e-12:
        raise PreconditionError("source F must be supported in the closure of the domain")


def solve_source(
    c_field: Union[SpeedField, np.ndarray],
    source: SourceTerm,
    T: float,
    grid: Grid,
    domain: Domain,
    stride: int = 0,
    n_boundary: Optional[int] = None,
    track_energy: bool = False,
) -> tuple[Trajectory, BoundaryTrace, BoundaryTrace]:
    """
    Zero-data forced solve of w_tt = c²Δw + aF with both boundary traces.

    Returns:
        Tuple (trajectory, Dirichlet trace, Neumann trace)
    """
    _check_support(source.F, grid, domain)
    if not even_extension_check(source, grid.dt):
        warnings.warn("source profile a has no even extension at t = 0", stacklevel=2)
        logger.warning("source profile fails the evenness check")
    solver = WaveSolver(grid, c_field)
    ops, bp = _trace_operators(grid, domain, True, n_boundary)
    final, series, snaps, energies = solver.run(
        WaveState.zeros(grid), grid.steps_for(T), source, observers=ops, stride=stride,
        track_energy=track_energy,
    )
    traj = Trajectory(grid, [s[0] for s in snaps], [s[1] for s in snaps], final, energies)
    traj.dirichlet = BoundaryTrace(series["dirichlet"], grid.dt, bp["points"], bp["weights"], "dirichlet")
    traj.neumann = BoundaryTrace(series["neumann"], grid.dt, bp["points"], bp["weights"], "neumann")
    return traj, traj.dirichlet, traj.neumann


def duhamel(
    c_field: Union[SpeedField, np.ndarray], source: SourceTerm, T: float, grid: Grid
) -> WaveState:
    """
    w(T) = ∫₀ᵀ U(T − s)[0, a(s)F] ds by the trapezoid rule at the solver step.

    Each impulse is propagated by the homogeneous scheme on its own.
    """
    n_steps = grid.steps_for(T)
    out = WaveState.zeros(grid, T)
    if n_steps == 0:
        return out
    solver = WaveSolver(grid, c_field)
    for j in range(n_steps + 1):
        weight = grid.dt * (0.5 if j in (0, n_steps) else 1.0)
        kick = WaveState(np.zeros(grid.shape), weight * source(j * grid.dt), j * grid.dt)
        final, _, _, _ = solver.run(kick, n_steps - j)
        out.u += final.u
        out.v += final.v
    return out


def even_extension_check(source, dt: float) -> bool:
    """
    a′(0) = 0 test from the first three samples.

    The one-sided derivative (−3a₀ + 4a₁ − a₂) is compared with the
    variation max|a_k − a₀|; an even profile makes the ratio O(dt²).
    """
    a = source.a if isinstance(source, SourceTerm) else source
    samples = [np.asarray(a(k * dt), dtype=float) for k in range(3)]
    deriv = np.max(np.abs(-3 * samples[0] + 4 * samples[1] - samples[2]))
    scale = max(np.max(np.abs(samples[1] - samples[0])), np.max(np.abs(samples[2] - samples[0])))
    if scale == 0:
        return bool(deriv == 0)
    return bool(deriv / scale < EVEN_RATIO)


# -- spectral oracles ----------------------------------------------------------


def _wavenumbers(grid: Grid) -> np.ndarray:
    k = 2 * np.pi * np.fft.fftfreq(grid.n, d=grid.h)
    KX, KY = np.meshgrid(k, k, indexing="ij")
    return np.sqrt(KX**2 + KY**2)


def spectral_propagate(state: WaveState, t: float, grid: Grid, c: float = 1.0) -> WaveState:
    """Exact constant-speed propagation on the periodic box."""
    K = _wavenumbers(grid) * c
    u_hat = np.fft.fft2(state.u)
    v_hat = np.fft.fft2(state.v)
    cos = np.cos(K * t)
    with np.errstate(invalid="ignore", divide="ignore"):
        sinc = np.where(K > 0, np.sin(K * t) / K, t)
        ksin = K * np.sin(K * t)
    u = np.real(np.fft.ifft2(cos * u_hat + sinc * v_hat))
    v = np.real(np.fft.ifft2(-ksin * u_hat + cos * v_hat))
    return WaveState(u, v, state.t + t)


def spectral_duhamel_constant(F: np.ndarray, T: float, grid: Grid, c: float = 1.0) -> np.ndarray:
    """u(T) for u_tt = c²Δu + F with zero data, periodic box."""
    K = _wavenumbers(grid) * c
    with np.errstate(invalid="ignore", divide="ignore"):
        kernel = np.where(K > 0, (1 - np.cos(K * T)) / K**2, 0.5 * T**2)
    return np.real(np.fft.ifft2(kernel * np.fft.fft2(F)))
