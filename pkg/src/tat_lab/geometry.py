"""
Conformal Riemannian geometry of g = c⁻²δ.

Christoffel symbols, the Hamiltonian geodesic flow with exit times through
∂Ω, and the three distance notions: metric distance in the extended field,
exterior distance in R² \\ Ω, and the asymmetric set distance.
"""

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from scipy import sparse
from scipy.optimize import minimize
from scipy.sparse.csgraph import dijkstra

from .domain import Domain
from .errors import GeodesicAccuracyError, OutOfDomainError, PreconditionError
from .speed import SpeedField

logger = logging.getLogger(__name__)

EXIT_TOL = 1e-10
DRIFT_TOL = 1e-4


@dataclass(frozen=True)
class PhasePoint:
    """Position x with covector ξ."""

    x: np.ndarray
    xi: np.ndarray

    def norm(self, c_field: SpeedField) -> float:
        """|ξ|_g = c(x)|ξ|."""
        return float(c_field.value(np.asarray(self.x)) * np.linalg.norm(self.xi))

    def normalized(self, c_field: SpeedField) -> "PhasePoint":
        n = self.norm(c_field)
        if n == 0:
            raise ValueError("Cannot normalise a zero covector")
        return PhasePoint(np.asarray(self.x, dtype=float), np.asarray(self.xi, dtype=float) / n)

    def vector(self, c_field: SpeedField) -> np.ndarray:
        """Tangent vector g⁻¹ξ = c²ξ."""
        return c_field.value(np.asarray(self.x)) ** 2 * np.asarray(self.xi, dtype=float)


@dataclass
class Geodesic:
    """
    Sampled unit-speed geodesic.

    Attributes:
        times: Sample times
        xs: Positions, shape (len(times), 2)
        xis: Covectors, shape (len(times), 2)
        exit_fwd: τ₊ ≥ 0 (inf when capped)
        exit_bwd: τ₋ ≤ 0 (−inf when capped)
        trapped: True when either exit exceeded the cap
    """

    times: np.ndarray
    xs: np.ndarray
    xis: np.ndarray
    exit_fwd: float = np.nan
    exit_bwd: float = np.nan
    trapped: bool = False
    drift: float = 0.0
    extras: dict = field(default_factory=dict)


def christoffel(c_field: SpeedField, x: np.ndarray) -> np.ndarray:
    """
    Christoffel symbols Γ^i_jk of g = e^(2φ)δ with φ = −ln c.

    Args:
        c_field: Sound speed
        x: Points of shape (..., 2)

    Returns:
        Array of shape (..., 2, 2, 2) indexed [i, j, k]

    Raises:
        OutOfDomainError: When a grid field is queried off its grid
    """
    dphi = c_field.log_gradient(x)
    eye = np.eye(2)
    # Γ^i_jk = δ_ij ∂_kφ + δ_ik ∂_jφ − δ_jk ∂_iφ
    return (
        eye[:, :, None] * dphi[..., None, None, :]
        + eye[:, None, :] * dphi[..., None, :, None]
        - eye[None, :, :] * dphi[..., :, None, None]
    )


def _hamilton_rhs(c_field: SpeedField, state: np.ndarray) -> np.ndarray:
    x, xi = state[..., :2], state[..., 2:]
    c, grad, _ = c_field.derivatives(x)
    xi2 = np.sum(xi**2, axis=-1)
    dx = (c**2)[..., None] * xi
    dxi = -(c * xi2)[..., None] * grad
    return np.concatenate([dx, dxi], axis=-1)


def rk4_step(c_field: SpeedField, state: np.ndarray, dt) -> np.ndarray:
    """One classical Runge-Kutta step of the geodesic Hamiltonian system (dt may be an array)."""
    dt = np.asarray(dt, dtype=float)
    if dt.ndim:
        dt = dt[..., None]
    k1 = _hamilton_rhs(c_field, state)
    k2 = _hamilton_rhs(c_field, state + 0.5 * dt * k1)
    k3 = _hamilton_rhs(c_field, state + 0.5 * dt * k2)
    k4 = _hamilton_rhs(c_field, state + dt * k3)
    return state + dt * (k1 + 2 * k2 + 2 * k3 + k4) / 6.0


def _speed(c_field: SpeedField, state: np.ndarray) -> np.ndarray:
    return c_field.value(state[..., :2]) * np.linalg.norm(state[..., 2:], axis=-1)


def default_cap(c_field: SpeedField, domain: Domain) -> float:
    """Escape cap 10·diam(Ω)/min c, with min c sampled over Ω̄."""
    pts = domain.interior_grid(domain.radius / 40)
    pts = np.concatenate([pts, domain.boundary_param(128)["points"]])
    return 10.0 * domain.diameter / float(np.min(c_field.value(pts)))


def forward_exit_times(
    c_field: SpeedField,
    domain: Domain,
    x: np.ndarray,
    xi: np.ndarray,
    step: float = 1e-2,
    cap: Optional[float] = None,
) -> tuple[np.ndarray, np.ndarray]:
    """
    First time each ray leaves Ω̄, for a batch of phase points.

    Crossings of β from negative to non-negative are refined by bisection on
    the partial RK4 step until the bracket is below 1e−10.

    Args:
        c_field: Sound speed
        domain: Domain Ω
        x: Start positions (m, 2) in Ω̄
        xi: Start covectors (m, 2), unit g-length
        step: RK4 step
        cap: Escape cap; defaults to default_cap

    Returns:
        Tuple (exit times with inf where capped, trapped mask)
    """
    x = np.atleast_2d(np.asarray(x, dtype=float))
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    cap = default_cap(c_field, domain) if cap is None else cap
    m = len(x)
    state = np.concatenate([x, xi], axis=-1)
    speed0 = _speed(c_field, state)
    exits = np.full(m, np.inf)

    beta = domain.levelset(x)
    outward = np.sum(domain.levelset_gradient(x) * (c_field.value(x)[:, None] ** 2 * xi), -1)
    done = (beta >= -1e-12) & (outward >= 0)
    exits[done] = 0.0
    active = ~done

    t = 0.0
    n_steps = int(np.ceil(cap / step))
    for _ in range(n_steps):
        if not np.any(active):
            break
        idx = np.nonzero(active)[0]
        s0 = state[idx]
        s1 = rk4_step(c_field, s0, step)
        b0 = domain.levelset(s0[:, :2])
        b1 = domain.levelset(s1[:, :2])
        crossed = (b0 < 0) & (b1 >= 0)
        if np.any(crossed):
            ci = idx[crossed]
            lo = np.zeros(len(ci))
            hi = np.full(len(ci), step)
            base = s0[crossed]
            while np.max(hi - lo) > EXIT_TOL:
                mid = 0.5 * (lo + hi)
                inside = domain.levelset(rk4_step(c_field, base, mid)[:, :2]) < 0
                lo = np.where(inside, mid, lo)
                hi = np.where(inside, hi, mid)
            exits[ci] = t + 0.5 * (lo + hi)
            active[ci] = False
        state[idx] = s1
        t += step

    drift = np.abs(_speed(c_field, state) - speed0)
    worst = float(np.max(drift)) if m else 0.0
    if worst > DRIFT_TOL:
        raise GeodesicAccuracyError(worst, DRIFT_TOL)
    return exits, ~np.isfinite(exits)


def exit_times(
    c_field: SpeedField,
    domain: Domain,
    x: np.ndarray,
    xi: np.ndarray,
    step: float = 1e-2,
    cap: Optional[float] = None,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Forward and backward exit times τ₊ ≥ 0 and τ₋ ≤ 0.

    τ₋ is minus the forward exit time of the reversed ray.

    Returns:
        Tuple (tau_plus, tau_minus, trapped mask)
    """
    cap = default_cap(c_field, domain) if cap is None else cap
    tp, trap_p = forward_exit_times(c_field, domain, x, xi, step, cap)
    tm, trap_m = forward_exit_times(c_field, domain, x, -np.asarray(xi), step, cap)
    return tp, -tm, trap_p | trap_m


def geodesic_flow(
    c_field: SpeedField,
    start: PhasePoint,
    t_span: tuple[float, float] = (0.0, 1.0),
    step: float = 1e-2,
    domain: Optional[Domain] = None,
    cap: Optional[float] = None,
) -> Geodesic:
    """
    Integrate the unit-speed geodesic through a phase point.

    Solves ẋ = c²ξ, ξ̇ = −c∇c|ξ|² with RK4. When a domain is given the exit
    times through ∂Ω are located as well.

    Args:
        c_field: Sound speed
        start: Initial phase point (normalised to |ξ|_g = 1)
        t_span: (t0, t1) integration window, t1 may be below t0
        step: Positive step size
        domain: Optional domain for exit times
        cap: Escape cap for exit times

    Returns:
        Geodesic

    Raises:
        GeodesicAccuracyError: Speed drift above 1e−4
    """
    if step <= 0:
        raise ValueError(f"Step must be positive, got {step}")
    start = start.normalized(c_field)
    t0, t1 = t_span
    n = max(1, int(np.ceil(abs(t1 - t0) / step)))
    dt = (t1 - t0) / n
    state = np.concatenate([start.x, start.xi])[None, :]
    states = [state[0].copy()]
    for _ in range(n):
        state = rk4_step(c_field, state, dt)
        states.append(state[0].copy())
    states = np.asarray(states)
    speeds = _speed(c_field, states)
    drift = float(np.max(np.abs(speeds - speeds[0])))
    if drift > DRIFT_TOL:
        raise GeodesicAccuracyError(drift, DRIFT_TOL)

    geo = Geodesic(
        times=t0 + dt * np.arange(n + 1), xs=states[:, :2], xis=states[:, 2:], drift=drift
    )
    if domain is not None:
        tp, tm, trapped = exit_times(c_field, domain, start.x[None], start.xi[None], step, cap)
        geo.exit_fwd = float(tp[0])
        geo.exit_bwd = float(tm[0])
        geo.trapped = bool(trapped[0])
    return geo


# -- distances --------------------------------------------------------------

_OFFSETS_8 = [(1, 0), (0, 1), (1, 1), (1, -1)]
_OFFSETS_16 = _OFFSETS_8 + [(1, 2), (2, 1), (2, -1), (1, -2)]


class GridMetric:
    """
    Shortest-path distances on a lattice graph over [−L, L]².

    Edge weights are the Euclidean edge length times 2/(c(p) + c(q)).
    Sources may sit off the lattice and carry additive offsets; they are
    wired to the corners of their cell through a super-source node.
    """

    def __init__(
        self,
        c_field: SpeedField,
        half_width: float,
        h: float,
        connectivity: int = 16,
        allowed: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    ):
        if h <= 0 or half_width <= 0:
            raise ValueError(f"Need positive h and half_width, got {h}, {half_width}")
        if connectivity not in (8, 16):
            raise ValueError(f"Connectivity must be 8 or 16, got {connectivity}")
        self.c_field = c_field
        self.n = int(np.ceil(2 * half_width / h))
        self.h = 2 * half_width / self.n
        self.half_width = half_width
        self.ticks = -half_width + self.h * np.arange(self.n + 1)
        X, Y = np.meshgrid(self.ticks, self.ticks, indexing="ij")
        self.nodes = np.stack([X.ravel(), Y.ravel()], axis=-1)
        self.speed = c_field.value(self.nodes)
        self.allowed = np.ones(len(self.nodes), dtype=bool) if allowed is None else allowed(self.nodes)
        self._edge_check = allowed
        self.graph = self._build(_OFFSETS_16 if connectivity == 16 else _OFFSETS_8)
        logger.debug("GridMetric with %d nodes, h=%.4g", len(self.nodes), self.h)

    def _index(self, i: np.ndarray, j: np.ndarray) -> np.ndarray:
        return i * (self.n + 1) + j

    def _build(self, offsets) -> sparse.csr_matrix:
        m = self.n + 1
        I, J = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")
        rows, cols, weights = [], [], []
        for di, dj in offsets:
            ok = (I + di >= 0) & (I + di < m) & (J + dj >= 0) & (J + dj < m)
            p = self._index(I[ok], J[ok])
            q = self._index(I[ok] + di, J[ok] + dj)
            keep = self.allowed[p] & self.allowed[q]
            if self._edge_check is not None:
                mid = 0.5 * (self.nodes[p] + self.nodes[q])
                keep &= self._edge_check(mid)
            p, q = p[keep], q[keep]
            length = self.h * np.hypot(di, dj)
            rows.append(p)
            cols.append(q)
            weights.append(length * 2.0 / (self.speed[p] + self.speed[q]))
        # one extra node, the super-source, at index m*m
        size = m * m + 1
        return sparse.csr_matrix(
            (np.concatenate(weights), (np.concatenate(rows), np.concatenate(cols))),
            shape=(size, size),
        )

    def _corners(self, pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Indices (k, 4) of the cell corners around each point and their distances."""
        pts = np.atleast_2d(pts)
        lim = self.half_width + 1e-12
        if np.any(np.abs(pts) > lim):
            raise OutOfDomainError(f"points outside the box [-{self.half_width}, {self.half_width}]²")
        f = (pts + self.half_width) / self.h
        i0 = np.clip(np.floor(f[:, 0]).astype(int), 0, self.n - 1)
        j0 = np.clip(np.floor(f[:, 1]).astype(int), 0, self.n - 1)
        ii = np.stack([i0, i0 + 1, i0, i0 + 1], axis=1)
        jj = np.stack([j0, j0, j0 + 1, j0 + 1], axis=1)
        idx = self._index(ii, jj)
        dist = np.linalg.norm(self.nodes[idx] - pts[:, None, :], axis=-1)
        return idx, dist

    def _link_cost(self, pts: np.ndarray, idx: np.ndarray, dist: np.ndarray) -> np.ndarray:
        c_pts = self.c_field.value(pts)
        cost = dist * 2.0 / (c_pts[:, None] + self.speed[idx])
        return np.where(self.allowed[idx], cost, np.inf)

    def field_from(
        self, sources: np.ndarray, offsets: Optional[np.ndarray] = None, predecessors: bool = False
    ):
        """
        Distance field min_k (offset_k + d(source_k, ·)) on the lattice.

        Args:
            sources: Points (k, 2)
            offsets: Non-negative additive offsets per source
            predecessors: Also return the predecessor array

        Returns:
            Field over nodes (and predecessors when requested)
        """
        sources = np.atleast_2d(np.asarray(sources, dtype=float))
        if len(sources) == 0:
            raise PreconditionError("distance field needs at least one source")
        offsets = np.zeros(len(sources)) if offsets is None else np.asarray(offsets, dtype=float)
        if np.any(offsets < 0):
            raise ValueError("Source offsets must be non-negative")
        idx, dist = self._corners(sources)
        cost = self._link_cost(sources, idx, dist) + offsets[:, None]
        ss = len(self.nodes)
        flat_idx, flat_cost = idx.ravel(), cost.ravel()
        ok = np.isfinite(flat_cost)
        flat_idx, flat_cost = flat_idx[ok], flat_cost[ok]
        # duplicate corners keep the cheapest link
        order = np.lexsort((flat_cost, flat_idx))
        _, first = np.unique(flat_idx[order], return_index=True)
        cols, costs = flat_idx[order][first], flat_cost[order][first]
        link = sparse.csr_matrix(
            (costs + 1e-300, (np.full(len(cols), ss), cols)), shape=self.graph.shape
        )
        graph = self.graph + link
        out = dijkstra(graph, directed=False, indices=ss, return_predecessors=predecessors)
        if predecessors:
            d, pred = out
            return d[:-1], pred
        return out[:-1]

    def lookup(self, field: np.ndarray, pts: np.ndarray) -> np.ndarray:
        """Field value at off-lattice points by the cheapest corner link."""
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        idx, dist = self._corners(pts)
        cost = self._link_cost(pts, idx, dist)
        return np.min(field[idx] + cost, axis=1)

    def path(self, field: np.ndarray, pred: np.ndarray, target: np.ndarray) -> np.ndarray:
        """Lattice polyline from the sources to target following predecessors."""
        target = np.atleast_2d(np.asarray(target, dtype=float))
        idx, dist = self._corners(target)
        total = field[idx[0]] + self._link_cost(target, idx, dist)[0]
        ss = len(self.nodes)
        chain = []
        node = int(idx[0][np.argmin(total)])
        while node != ss and node >= 0:
            chain.append(self.nodes[node])
            node = int(pred[node])
        return np.asarray(chain[::-1])


def _travel_time(c_field: SpeedField, poly: np.ndarray) -> float:
    """Simpson estimate of ∫ ds / c along a polyline."""
    p, q = poly[:-1], poly[1:]
    length = np.linalg.norm(q - p, axis=-1)
    slow = (
        1.0 / c_field.value(p) + 4.0 / c_field.value(0.5 * (p + q)) + 1.0 / c_field.value(q)
    ) / 6.0
    return float(np.sum(length * slow))


def _refine_polyline(c_field: SpeedField, poly: np.ndarray, max_vertices: int = 24) -> float:
    """Shorten a graph path by optimising its interior vertices."""
    if len(poly) <= 2:
        return _travel_time(c_field, poly)
    keep = np.unique(np.linspace(0, len(poly) - 1, min(len(poly), max_vertices + 2)).round().astype(int))
    poly = poly[keep]
    a, b = poly[0], poly[-1]

    def objective(flat):
        return _travel_time(c_field, np.vstack([a, flat.reshape(-1, 2), b]))

    res = minimize(objective, poly[1:-1].ravel(), method="L-BFGS-B")
    return float(min(res.fun, objective(poly[1:-1].ravel())))


def _box_for(*pts: np.ndarray, margin: float = 0.5) -> float:
    return float(np.max(np.abs(np.vstack(pts)))) + margin


def metric_distance(
    c_field: SpeedField,
    a: np.ndarray,
    b: np.ndarray,
    h: float = 1.0 / 128,
    half_width: Optional[float] = None,
    metric: Optional[GridMetric] = None,
    refine: bool = True,
) -> float:
    """
    Distance between a and b in the metric g = c⁻²δ.

    Dijkstra on a 16-connected lattice followed by one local refinement of
    the extracted path.

    Args:
        c_field: Sound speed (extended by 1 outside Ω)
        a: Start point
        b: End point
        h: Lattice spacing
        half_width: Box half width (defaults to enclose a, b with margin 0.5)
        metric: Reusable lattice graph
        refine: Optimise the graph path

    Returns:
        Distance
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if np.allclose(a, b, atol=0.0, rtol=0.0):
        return 0.0
    if metric is None:
        metric = GridMetric(c_field, half_width or _box_for(a, b), h)
    dist_field, pred = metric.field_from(a[None], predecessors=True)
    graph_value = float(metric.lookup(dist_field, b[None])[0])
    if not refine:
        return graph_value
    poly = np.vstack([a, metric.path(dist_field, pred, b), b])
    return min(graph_value, _refine_polyline(c_field, poly))


def _string_pull(poly: np.ndarray, visible: Callable[[np.ndarray, np.ndarray], bool]) -> np.ndarray:
    out = [poly[0]]
    i = 0
    last = len(poly) - 1
    while i < last:
        j = i + 1
        while j < last and visible(poly[i], poly[j + 1]):
            j += 1
        out.append(poly[j])
        i = j
    return np.asarray(out)


def exterior_distance(
    domain: Domain,
    a: np.ndarray,
    b: np.ndarray,
    h: float = 1.0 / 128,
    half_width: Optional[float] = None,
    metric: Optional[GridMetric] = None,
) -> float:
    """
    Length of the shortest curve from a to b in R² \\ Ω (the distance dist₀).

    Lattice nodes and edge midpoints at signed depth ≥ −h are admitted and the
    graph path is shortened by string pulling with visibility checks.

    Raises:
        PreconditionError: When a or b lies deeper than h inside Ω
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    depth = domain.signed_distance(np.vstack([a, b]))
    if np.any(depth < -h):
        raise PreconditionError("exterior_distance endpoints must lie outside or on ∂Ω")
    if np.allclose(a, b, atol=0.0, rtol=0.0):
        return 0.0
    if metric is None:
        metric = exterior_metric(domain, h, half_width or _box_for(a, b, margin=domain.radius))

    def visible(p, q):
        m = int(np.ceil(np.linalg.norm(q - p) / (0.5 * metric.h))) + 2
        s = np.linspace(0.0, 1.0, m)[:, None]
        return bool(np.all(domain.signed_distance(p + s * (q - p)) >= -metric.h))

    if visible(a, b):
        return float(np.linalg.norm(b - a))
    dist_field, pred = metric.field_from(a[None], predecessors=True)
    poly = np.vstack([a, metric.path(dist_field, pred, b), b])
    pulled = _string_pull(poly, visible)
    return float(np.sum(np.linalg.norm(np.diff(pulled, axis=0), axis=-1)))


def exterior_metric(domain: Domain, h: float, half_width: float) -> GridMetric:
    """Unit-speed lattice on R² \\ Ω thickened by h."""
    return GridMetric(
        SpeedField.constant(1.0),
        half_width,
        h,
        allowed=lambda pts: domain.signed_distance(pts) >= -h,
    )


def set_distance(
    A: np.ndarray,
    B: np.ndarray,
    metric: Union[GridMetric, Callable[[np.ndarray, np.ndarray], float]],
) -> float:
    """
    sup over a ∈ A of inf over b ∈ B of metric(a, b).

    A GridMetric is used through one multi-source field from B; any other
    callable is evaluated pairwise.

    Raises:
        PreconditionError: When A or B is empty
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if A.size == 0 or B.size == 0:
        raise PreconditionError("set_distance needs non-empty samplings")
    if isinstance(metric, GridMetric):
        dist_field = metric.field_from(B)
        values = metric.lookup(dist_field, A)
        # exact coincidences
        for k, a in enumerate(A):
            if np.any(np.all(B == a, axis=1)):
                values[k] = 0.0
        return float(np.max(values))
    return float(max(min(metric(a, b) for b in B) for a in A))
