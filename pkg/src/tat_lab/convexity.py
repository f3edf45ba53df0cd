"""
Numerical verification of the geometric hypotheses behind uniqueness and stability.

Each check samples its inequality deterministically and returns a
ConditionReport with the worst slack and the samples that realise it.
"""

import logging
import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import dijkstra
from scipy.spatial import cKDTree
from scipy.spatial.distance import directed_hausdorff

from . import functions as fn
from .domain import Domain
from .errors import PreconditionError
from .foliations import FoliationFamily, sample_leaf
from .functions import SmoothFunction
from .geometry import GridMetric, PhasePoint, christoffel, exit_times
from .reports import ConditionReport
from .sampling import DEFAULT_SAMPLES, halton, sample_box, unit_directions
from .speed import SpeedField

logger = logging.getLogger(__name__)

STRICT_CONVEXITY = 1e-6
EQUALITY_TOL = 1e-8

Region = Union[np.ndarray, Callable[[int, np.ndarray], np.ndarray]]


# -- G² ----------------------------------------------------------------------


def _g_squared_vec(c_field: SpeedField, f: SmoothFunction, x: np.ndarray, v: np.ndarray) -> np.ndarray:
    """f_ij v^i v^j − Γ^i_jk v^j v^k ∂_i f for tangent vectors v."""
    hess = f.hess(x)
    grad = f.grad(x)
    gamma = christoffel(c_field, x)
    quad = np.einsum("...i,...ij,...j->...", v, hess, v)
    corr = np.einsum("...ijk,...j,...k,...i->...", gamma, v, v, grad)
    return quad - corr


def g_squared(
    c_field: SpeedField,
    f: SmoothFunction,
    x: Union[np.ndarray, PhasePoint],
    xi: Optional[np.ndarray] = None,
) -> np.ndarray:
    """
    Second derivative of f along the geodesic through (x, ξ).

    Args:
        c_field: Sound speed
        f: Twice differentiable function
        x: Positions (..., 2) or a PhasePoint
        xi: Covectors (..., 2) when x is an array

    Returns:
        G²f with ξ raised to the vector c²ξ

    Raises:
        ValueError: When f or its derivatives are not finite at x
    """
    if isinstance(x, PhasePoint):
        x, xi = np.asarray(x.x, dtype=float), np.asarray(x.xi, dtype=float)
    x = np.asarray(x, dtype=float)
    v = c_field.value(x)[..., None] ** 2 * np.asarray(xi, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = _g_squared_vec(c_field, f, x, v)
    if not np.all(np.isfinite(out)):
        raise ValueError(f"{f.label} is not twice differentiable at some sample points")
    return out


def _phase_samples(
    region: Region, c_field: SpeedField, n: int, dirs_per_point: int = 16
) -> tuple[np.ndarray, np.ndarray]:
    """Positions with unit g-covectors from a sampler or a point array."""
    if callable(region):
        u = halton(n, 3)
        x = region(n, u[:, :2])
        theta = 2 * np.pi * u[:, 2]
    else:
        pts = np.atleast_2d(np.asarray(region, dtype=float))
        theta = 2 * np.pi * halton(dirs_per_point, 1)[:, 0]
        x = np.repeat(pts, dirs_per_point, axis=0)
        theta = np.tile(theta, len(pts))
    return x, unit_directions(theta, c_field.value(x))


def check_condition_12(
    c_field: SpeedField, r: SmoothFunction, region: Region, n: int = DEFAULT_SAMPLES
) -> ConditionReport:
    """
    G²(r²/2) ≥ |ξ|² over positions × unit directions.

    The inequality is not strict, so the report passes down to −1e−8.
    """
    x, xi = _phase_samples(region, c_field, n)
    values = g_squared(c_field, r.squared_half(), x, xi) - 1.0
    report = ConditionReport.from_samples("r2_convexity", values, x, xi, threshold=-EQUALITY_TOL)
    report.extras["admissible_delta"] = 1.0 + report.margin
    return report


# -- phase families ------------------------------------------------------------


@dataclass(frozen=True)
class PhaseFunction:
    """ψ(t, x) = f(x) − δt² − s."""

    f: SmoothFunction
    delta: float
    s: float = 0.0

    def __call__(self, t: np.ndarray, x: np.ndarray) -> np.ndarray:
        return self.f(x) - self.delta * np.asarray(t) ** 2 - self.s

    def convexified(self, mu: float) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
        """φ = exp(μψ) − 1."""
        return lambda t, x: np.exp(mu * self(t, x)) - 1.0


@dataclass(frozen=True)
class PseudoconvexFamily:
    """
    Phase functions ψ_s = r² − δt² − s with r = R − xⁿ (or a given r).

    Attributes:
        R: Curvature-radius parameter
        delta: δ ∈ (0, 1)
        mu: Convexification exponent
        s_range: Admissible s values
        normal_coord: xⁿ, distance to the reference surface
        radial: r itself when no normal coordinate is used
        eps: Collar depth; enforces s_range ⊂ [(R − ε)², R²]
    """

    R: float
    delta: float
    mu: float = 10.0
    s_range: tuple[float, float] = (0.0, 1.0)
    normal_coord: Optional[SmoothFunction] = None
    radial: Optional[SmoothFunction] = None
    eps: Optional[float] = None

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise ValueError(f"delta must be in (0, 1), got {self.delta}")
        if self.mu <= 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if self.normal_coord is None and self.radial is None:
            raise ValueError("Give normal_coord or radial")
        if self.eps is not None:
            lo, hi = (self.R - self.eps) ** 2, self.R**2
            if self.s_range[0] < lo - 1e-12 or self.s_range[1] > hi + 1e-12:
                raise ValueError(f"s_range {self.s_range} outside [{lo:.6g}, {hi:.6g}]")

    @property
    def r(self) -> SmoothFunction:
        if self.radial is not None:
            return self.radial
        return fn.constant(self.R) + self.normal_coord.scaled(-1.0)

    def phase(self, s: float) -> PhaseFunction:
        return PhaseFunction(self.r.squared_half().scaled(2.0), self.delta, s)

    def admissible_delta(self, report_12: ConditionReport) -> float:
        """Largest δ with G²(r²/2) > δ|ξ|² implied by the measured margin."""
        return 1.0 + report_12.margin


def hyperboloid_family(
    x0=(0.0, 0.0), delta: float = 0.9, s_range: tuple[float, float] = (0.0, 1.0), mu: float = 10.0
) -> PseudoconvexFamily:
    """ψ_s = |x − x0|² − δt² − s."""
    return PseudoconvexFamily(R=0.0, delta=delta, mu=mu, s_range=s_range, radial=fn.distance(x0))


def boundary_normal_family(
    domain: Domain, R: float, delta: float, eps: float, mu: float = 10.0
) -> PseudoconvexFamily:
    """ψ_s = (R − xⁿ)² − δt² − s with xⁿ the depth below ∂Ω, s ∈ [(R − ε)², R²]."""
    if domain.a == domain.b:
        depth = fn.constant(domain.a) + fn.distance((0.0, 0.0)).scaled(-1.0)
    else:
        depth = fn.from_callable(lambda x: -domain.signed_distance(x), label="depth")
    return PseudoconvexFamily(
        R=R, delta=delta, mu=mu, s_range=((R - eps) ** 2, R**2), normal_coord=depth, eps=eps
    )


def check_noncharacteristic(
    family: PseudoconvexFamily,
    s: float,
    region: Region,
    c_field: Optional[SpeedField] = None,
    n: int = DEFAULT_SAMPLES,
) -> ConditionReport:
    """
    |d(r²/2)|_g ≠ δ|t| on the surface {ψ_s = 0}.

    Positions with r² ≥ s are lifted to both roots t = ±√((r² − s)/δ).
    """
    c_field = c_field or SpeedField.constant(1.0)
    if callable(region):
        x = region(n, halton(n, 2))
    else:
        x = np.atleast_2d(np.asarray(region, dtype=float))
    r = family.r
    rv = r(x)
    with np.errstate(invalid="ignore", divide="ignore"):
        g = r.grad(x) * rv[:, None]
    g = np.where(rv[:, None] == 0, 0.0, g)
    norm = c_field.value(x) * np.linalg.norm(g, axis=-1)
    ok = rv**2 >= s
    t = np.sqrt(np.maximum(rv[ok] ** 2 - s, 0.0) / family.delta)
    values = np.abs(norm[ok] - family.delta * t)
    xs = x[ok]
    report = ConditionReport.from_samples(
        "noncharacteristic", np.concatenate([values, values]), np.vstack([xs, xs]), t=np.concatenate([t, -t])
    )
    report.extras["s"] = s
    return report


def check_strong_pseudoconvexity(
    c_field: SpeedField,
    psi: PhaseFunction,
    region: Region,
    n: int = DEFAULT_SAMPLES,
    t_max: Optional[float] = None,
    tol_psi: float = 1e-3,
    tol_c: float = 1e-3,
) -> ConditionReport:
    """
    (∂_t − G)²ψ > 0 on the characteristic set of ψ.

    Samples are placed on {ψ = 0, ψ_t = Gψ, |ξ|_g = 1} by solving for t and
    the direction angle at each position, covering both signs of ξ, and are
    then filtered through the tolerance band. For ψ = f − δt² − s the
    quantity equals G²f − 2δ.
    """
    if callable(region):
        u = halton(n, 3)
        x = region(n, u[:, :2])
        spare = 2 * np.pi * u[:, 2]
    else:
        x = np.atleast_2d(np.asarray(region, dtype=float))
        spare = 2 * np.pi * halton(len(x), 1)[:, 0]
    c = c_field.value(x)
    fx = psi.f(x)
    grad = psi.f.grad(x)
    gnorm = np.linalg.norm(grad, axis=-1)
    level = fx - psi.s
    scale = max(1.0, float(np.max(np.abs(fx))) if fx.size else 1.0)

    xs, angles, ts = [], [], []
    for sign_t in (1.0, -1.0):
        t = sign_t * np.sqrt(np.maximum(level, 0.0) / psi.delta)
        feasible = level >= -tol_psi * scale
        flat = gnorm * c < 1e-14
        # direction angle with c|∇f|cos(θ − θ_f) = −2δt
        with np.errstate(invalid="ignore", divide="ignore"):
            cosv = -2 * psi.delta * t / (c * gnorm)
        theta_f = np.arctan2(grad[:, 1], grad[:, 0])
        for sign_a in (1.0, -1.0):
            ok_flat = feasible & flat & (np.abs(t) <= tol_c)
            ok = feasible & ~flat & (np.abs(cosv) <= 1.0)
            theta = np.where(flat, spare, theta_f + sign_a * np.arccos(np.clip(cosv, -1, 1)))
            keep = ok | ok_flat
            xs.append(x[keep])
            angles.append(theta[keep])
            ts.append(t[keep])
    xs = np.concatenate(xs)
    angles = np.concatenate(angles)
    ts = np.concatenate(ts)
    if t_max is not None:
        inside = np.abs(ts) <= t_max
        xs, angles, ts = xs[inside], angles[inside], ts[inside]

    cx = c_field.value(xs)
    xi = unit_directions(angles, cx)
    v = cx[:, None] ** 2 * xi
    band_psi = np.abs(psi(ts, xs)) < tol_psi * scale
    band_c = np.abs(-2 * psi.delta * ts - np.sum(v * psi.f.grad(xs), axis=-1)) < tol_c
    keep = band_psi & band_c
    xs, xi, ts = xs[keep], xi[keep], ts[keep]

    if len(xs) == 0:
        warnings.warn("pseudoconvexity check found no characteristic samples", stacklevel=2)
        logger.warning("pseudoconvexity indeterminate: empty characteristic set")
        report = ConditionReport("pseudoconvexity", np.nan, indeterminate=True)
    else:
        values = g_squared(c_field, psi.f, xs, xi) - 2 * psi.delta
        report = ConditionReport.from_samples("pseudoconvexity", values, xs, xi, ts)
    report.extras.update({"tol_psi": tol_psi * scale, "tol_c": tol_c, "delta": psi.delta, "s": psi.s})
    return report


# -- foliations ----------------------------------------------------------------


def second_fundamental_form(
    c_field: SpeedField, sigma: SmoothFunction, x: np.ndarray, orientation: int = 1
) -> np.ndarray:
    """
    Second fundamental form of the level curve of σ through x in the metric g.

    In 2D this is the scalar G²σ(x, T)/|dσ|_g for the unit g-tangent T; it is
    positive when the sublevel side is convex and orientation is +1.

    Raises:
        PreconditionError: Where ∇σ vanishes
    """
    x = np.asarray(x, dtype=float)
    grad = sigma.grad(x)
    gnorm = np.linalg.norm(grad, axis=-1)
    if np.any(~np.isfinite(gnorm)) or np.any(gnorm < 1e-12):
        raise PreconditionError("degenerate level set: grad sigma vanishes")
    c = c_field.value(x)
    tangent = np.stack([-grad[..., 1], grad[..., 0]], -1) / gnorm[..., None]
    v = c[..., None] * tangent
    return orientation * _g_squared_vec(c_field, sigma, x, v) / (c * gnorm)


def _hausdorff(a: np.ndarray, b: np.ndarray) -> float:
    return max(directed_hausdorff(a, b)[0], directed_hausdorff(b, a)[0])


def verify_foliation(
    c_field: SpeedField,
    domain: Domain,
    family: FoliationFamily,
    h: Optional[float] = None,
) -> ConditionReport:
    """
    Strict convexity, avoidance of ∂Ω \\ Γ and continuity in s of a foliation.

    Args:
        c_field: Sound speed
        domain: Ω with its observation set Γ
        family: Foliation to check
        h: Leaf sampling lattice spacing

    Returns:
        Report 'foliation' with related 'fol_convex', 'fol_gamma', 'fol_continuity'
    """
    h = h or domain.radius / 64
    s_values = family.s_values
    leaves = [sample_leaf(family.sigma, s, domain, h) for s in s_values]
    pts = [p for p in leaves if len(p)]
    if not pts:
        return ConditionReport("foliation", np.nan, STRICT_CONVEXITY, indeterminate=True)
    allpts = np.concatenate(pts)

    try:
        ii = second_fundamental_form(c_field, family.sigma, allpts, family.orientation)
        convex = ConditionReport.from_samples("fol_convex", ii, allpts, threshold=STRICT_CONVEXITY)
    except PreconditionError:
        convex = ConditionReport("fol_convex", -np.inf, STRICT_CONVEXITY, samples=len(allpts))
        convex.extras["degenerate"] = True

    if domain.gamma_is_full:
        avoid = ConditionReport("fol_gamma", np.inf, samples=len(allpts))
        avoid.extras["vacuous"] = True
    else:
        bnd = domain.boundary_param(1024)["points"]
        rest = bnd[~domain.in_gamma(bnd)]
        d, _ = cKDTree(rest).query(allpts)
        avoid = ConditionReport.from_samples("fol_gamma", d - h, allpts)

    cont_values, cont_x = [], []
    for k in range(len(s_values) - 1):
        s, s_next = s_values[k], s_values[k + 1]
        half = sample_leaf(family.sigma, 0.5 * (s + s_next), domain, h)
        if len(leaves[k]) and len(leaves[k + 1]) and len(half):
            h_full = _hausdorff(leaves[k], leaves[k + 1])
            h_half = _hausdorff(leaves[k], half)
            cont_values.append(0.75 * h_full + 2 * h - h_half)
            cont_x.append(leaves[k][0])
    if cont_values:
        cont = ConditionReport.from_samples("fol_continuity", cont_values, np.asarray(cont_x))
    else:
        cont = ConditionReport("fol_continuity", np.inf, samples=0)

    margin = min(convex.margin, avoid.margin, cont.margin)
    report = ConditionReport(
        "foliation",
        float(margin),
        STRICT_CONVEXITY,
        witnesses=convex.witnesses,
        samples=len(allpts),
        related=[convex, avoid, cont],
    )
    report.extras["ii_min"] = convex.margin
    report.extras["leaves"] = leaves
    logger.info("foliation %s: ii_min=%.3e margin=%.3e", family.label, convex.margin, margin)
    return report


# -- observation time ---------------------------------------------------------


def _gamma_samples(domain: Domain, n: int) -> tuple[np.ndarray, np.ndarray]:
    bp = domain.boundary_param(n)
    mask = domain.in_gamma(bp["points"])
    y = bp["points"][mask]
    if len(y) == 0:
        raise PreconditionError("observation set Γ is empty")
    return y, domain.tau(y)


def _leaf_slack(
    c_field: SpeedField, domain: Domain, leaf: np.ndarray, h: float, tau_max: float
) -> np.ndarray:
    """τmax − min over leaf endpoints on Γ of (τmax − τ(y) + distance along the leaf)."""
    m = len(leaf)
    pairs = cKDTree(leaf).query_pairs(r=2.5 * h, output_type="ndarray")
    speed = c_field.value(leaf)
    rows, cols, w = [], [], []
    if len(pairs):
        p, q = pairs[:, 0], pairs[:, 1]
        rows.append(p)
        cols.append(q)
        w.append(np.linalg.norm(leaf[p] - leaf[q], axis=-1) * 2 / (speed[p] + speed[q]) + 1e-300)
    depth = domain.signed_distance(leaf)
    proj, _ = domain.project(leaf)
    ends = np.nonzero((depth >= -1.5 * h) & domain.in_gamma(proj))[0]
    if len(ends):
        rows.append(np.full(len(ends), m))
        cols.append(ends)
        w.append(tau_max - domain.tau(proj[ends]) + np.abs(depth[ends]) + 1e-300)
    if not rows:
        return np.full(m, -np.inf)
    graph = sparse.csr_matrix(
        (np.concatenate(w), (np.concatenate(rows), np.concatenate(cols))), shape=(m + 1, m + 1)
    )
    dist = dijkstra(graph, directed=False, indices=m)[:m]
    return tau_max - dist


def check_observation_time(
    c_field: SpeedField,
    domain: Domain,
    family: FoliationFamily,
    h: Optional[float] = None,
    mode: str = "ambient",
    n_boundary: int = 256,
    metric: Optional[GridMetric] = None,
) -> ConditionReport:
    """
    Every leaf point x reaches some y ∈ Γ with τ(y) > dist(x, y).

    mode 'ambient' measures dist in the extended metric; mode 'leaf' only
    admits signals travelling along the leaf to its end on Γ. The sufficient
    conditions T > max_s dist(Σ_s ∩ Ω̄, Γ) and T > dist(Ω, Γ) are attached as
    related reports, with T the smallest observation time on Γ.
    """
    h = h or domain.radius / 64
    mode = mode.lower()
    if mode not in ("ambient", "leaf"):
        raise ValueError(f"Unknown observation mode: {mode}. Use 'ambient' or 'leaf'")
    y, tau_y = _gamma_samples(domain, n_boundary)
    tau_max = float(np.max(tau_y))
    if not np.isfinite(tau_max):
        raise PreconditionError("observation time must be finite")
    leaves = [sample_leaf(family.sigma, s, domain, h) for s in family.s_values]
    leaf_pts = [p for p in leaves if len(p)]
    if not leaf_pts:
        return ConditionReport("obs_time", np.nan, indeterminate=True)
    allpts = np.concatenate(leaf_pts)

    if metric is None:
        metric = GridMetric(c_field, domain.radius + 6 * h, h)
    if mode == "ambient":
        field = metric.field_from(y, tau_max - tau_y)
        slack = tau_max - metric.lookup(field, allpts)
    else:
        slack = np.concatenate([_leaf_slack(c_field, domain, p, h, tau_max) for p in leaf_pts])
    report = ConditionReport.from_samples("obs_time", slack, allpts)
    report.extras["mode"] = mode

    T = float(np.min(tau_y))
    to_gamma = metric.field_from(y)
    c2 = T - float(np.max(metric.lookup(to_gamma, allpts)))
    inner = domain.interior_grid(h)
    c3 = T - float(np.max(metric.lookup(to_gamma, inner)))
    report.related = [
        ConditionReport("leaf_reach", c2, samples=len(allpts)),
        ConditionReport("domain_reach", c3, samples=len(inner)),
    ]
    logger.info("observation time (%s): margin=%.4g c2=%.4g c3=%.4g", mode, report.margin, c2, c3)
    return report


def best_bent_families(
    c_field: SpeedField,
    domain: Domain,
    families: list[FoliationFamily],
    h: Optional[float] = None,
    mode: str = "leaf",
) -> ConditionReport:
    """Observation-time check keeping the best of several families (e.g. δ and −δ)."""
    reports = [check_observation_time(c_field, domain, f, h, mode) for f in families]
    best = max(reports, key=lambda r: r.margin if np.isfinite(r.margin) else -np.inf)
    best.extras["family_margins"] = [r.margin for r in reports]
    return best


# -- partial data cone condition ----------------------------------------------


class ConeChecker:
    """
    Cone condition for partial data.

    For y ∈ Γ let κ(y) = min over z ∈ ∂Ω of τ̄(z) + dist₀(z, y), with τ̄ = τ on Γ
    and 0 elsewhere. The cone over (dist(x, y), y) lies in the measured set
    exactly when κ(y) > dist(x, y). dist₀ between boundary points of a convex
    domain is the shorter boundary arc.
    """

    def __init__(
        self,
        domain: Domain,
        c_field: Optional[SpeedField] = None,
        n_boundary: int = 128,
        h: Optional[float] = None,
    ):
        self.domain = domain
        self.c_field = c_field or SpeedField.constant(1.0)
        bp = domain.boundary_param(n_boundary)
        self.z = bp["points"]
        arc = bp["arc"]
        gap = np.abs(arc[:, None] - arc[None, :])
        self.dist0 = np.minimum(gap, domain.perimeter - gap)
        tau_bar = domain.tau(self.z)
        self.gamma_mask = domain.in_gamma(self.z)
        if not np.any(self.gamma_mask):
            raise PreconditionError("observation set Γ is empty")
        self.y = self.z[self.gamma_mask]
        self.kappa = np.min(tau_bar[:, None] + self.dist0[:, self.gamma_mask], axis=0)
        self.h = h or domain.radius / 48
        self.metric = GridMetric(self.c_field, domain.radius + 6 * self.h, self.h)

    def slack(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        field = self.metric.field_from(np.asarray(x, dtype=float)[None])
        d = self.metric.lookup(field, self.y)
        values = self.kappa - d
        k = int(np.argmax(values))
        return float(values[k]), self.y[k]

    def region(self, points: np.ndarray) -> np.ndarray:
        """Slack max_y(κ(y) − dist(x, y)) at many points, one field per y."""
        points = np.atleast_2d(points)
        best = np.full(len(points), -np.inf)
        for yk, kk in zip(self.y, self.kappa):
            field = self.metric.field_from(yk[None])
            best = np.maximum(best, kk - self.metric.lookup(field, points))
        return best


def check_cone_condition(
    domain: Domain,
    x: np.ndarray,
    c_field: Optional[SpeedField] = None,
    checker: Optional[ConeChecker] = None,
) -> tuple[bool, np.ndarray, float]:
    """
    Search Γ for y whose cone over (dist(x, y), y) lies in {z ∈ Γ, t < τ(z)}.

    Returns:
        Tuple (passed, best y, slack)
    """
    x = np.asarray(x, dtype=float)
    if not domain.contains(x[None])[0]:
        raise PreconditionError("cone condition is checked at interior points")
    checker = checker or ConeChecker(domain, c_field)
    slack, y = checker.slack(x)
    return slack > 0, y, slack


def uniqueness_region(
    domain: Domain, c_field: Optional[SpeedField] = None, h: Optional[float] = None
) -> tuple[np.ndarray, np.ndarray]:
    """Interior lattice points and the mask where the cone condition holds."""
    checker = ConeChecker(domain, c_field)
    pts = domain.interior_grid(h or domain.radius / 24)
    return pts, checker.region(pts) > 0


# -- coefficient checks --------------------------------------------------------


def _grid_laplacian(values: np.ndarray, h: float) -> np.ndarray:
    lap = np.full(values.shape, np.nan)
    lap[1:-1, 1:-1] = (
        values[2:, 1:-1] + values[:-2, 1:-1] + values[1:-1, 2:] + values[1:-1, :-2] - 4 * values[1:-1, 1:-1]
    ) / h**2
    return lap


def check_ellipticity(
    f: Union[SmoothFunction, np.ndarray],
    K: np.ndarray,
    h: Optional[float] = None,
    mode: str = "laplacian",
    grid_points: Optional[np.ndarray] = None,
) -> ConditionReport:
    """
    Δf ≠ 0 on K (mode 'laplacian') or f ≠ 0 on K (mode 'value').

    Args:
        f: Analytic function, or grid values with K a boolean mask
        K: Points (m, 2), or a mask over the grid
        h: Grid spacing for grid values
        mode: 'laplacian' or 'value'
        grid_points: Coordinates (nx, ny, 2) of grid values, for witnesses

    Returns:
        Report 'ellipticity'; a sign change forces margin 0 and lists the zero set
    """
    mode = mode.lower()
    if mode not in ("laplacian", "value"):
        raise ValueError(f"Unknown ellipticity mode: {mode}")
    if isinstance(f, SmoothFunction):
        pts = np.atleast_2d(np.asarray(K, dtype=float))
        values = f.laplacian(pts) if mode == "laplacian" else f(pts)
    else:
        mask = np.asarray(K, dtype=bool)
        if mode == "laplacian":
            if h is None:
                raise ValueError("grid Laplacian needs the spacing h")
            full = _grid_laplacian(np.asarray(f, dtype=float), h)
        else:
            full = np.asarray(f, dtype=float)
        idx = np.argwhere(mask)
        values = full[mask]
        if grid_points is not None:
            pts = grid_points[mask]
        else:
            pts = idx.astype(float) * (h or 1.0)
    finite = np.isfinite(values)
    values, pts = values[finite], pts[finite]
    if values.size == 0:
        return ConditionReport("ellipticity", np.nan, indeterminate=True)

    tol = 1e-8 * max(1.0, float(np.max(np.abs(values))))
    report = ConditionReport.from_samples("ellipticity", np.abs(values), pts, threshold=tol)
    if np.min(values) < 0 < np.max(values):
        tree = cKDTree(pts)
        spacing = float(np.median(tree.query(pts, k=2)[0][:, 1]))
        pairs = tree.query_pairs(r=1.5 * spacing, output_type="ndarray")
        flip = pairs[np.sign(values[pairs[:, 0]]) != np.sign(values[pairs[:, 1]])]
        report.margin = 0.0
        report.extras["zero_set"] = 0.5 * (pts[flip[:, 0]] + pts[flip[:, 1]])
        report.extras["sign_change"] = True
    return report


def check_stability_condition(
    c_field: SpeedField,
    domain: Domain,
    K: np.ndarray,
    T: float,
    n_dirs: int = 16,
    step: float = 1e-2,
    cap: Optional[float] = None,
) -> ConditionReport:
    """
    Every geodesic through SK reaches ∂Ω at some |t| < T.

    The margin is T − max over samples of min(|τ₊|, |τ₋|); trapped
    directions give −inf.
    """
    K = np.atleast_2d(np.asarray(K, dtype=float))
    theta = 2 * np.pi * (np.arange(n_dirs) + 0.5) / n_dirs
    x = np.repeat(K, n_dirs, axis=0)
    xi = unit_directions(np.tile(theta, len(K)), c_field.value(x))
    tp, tm, trapped = exit_times(c_field, domain, x, xi, step, cap)
    first = np.minimum(np.abs(tp), np.abs(tm))
    report = ConditionReport.from_samples("stability", T - first, x, xi)
    report.extras["trapped"] = int(np.sum(trapped))
    report.extras["tau_plus"] = tp
    report.extras["tau_minus"] = tm
    return report


def check_background(c_field: SpeedField, domain: Domain, n: int = 512) -> ConditionReport:
    """c = 1 on a ring outside Ω."""
    pts, _ = sample_box(n, [1.05 * domain.radius, 0.0], [1.5 * domain.radius, 2 * np.pi])
    ring = np.stack([pts[:, 0] * np.cos(pts[:, 1]), pts[:, 0] * np.sin(pts[:, 1])], -1)
    values = -np.abs(c_field.value(ring) - 1.0)
    return ConditionReport.from_samples("background", values, ring, threshold=-1e-12)
