"""
Foliation families Σ_s = {σ = s} and their leaf sampling.

Families:
- spheres: σ = |x − y0|, concentric circles around an exterior centre
- planes: σ = x·e, straight lines (zero curvature)
- perturbed-planes: σ = x¹ − κ(x²)², parabolas bending toward +x¹
- bent-geodesic: circles of curvature δ through y0 indexed by their initial angle
- boundary-distance: parallel curves of ∂Ω
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import functions as fn
from .domain import Domain
from .functions import SmoothFunction

VALID_FAMILIES = ["spheres", "planes", "perturbed-planes", "bent-geodesic", "boundary-distance"]


@dataclass(frozen=True)
class FoliationFamily:
    """
    Level sets of σ over s ∈ [s_min, s_max].

    Attributes:
        sigma: Level function
        s_min: First leaf value
        s_max: Last leaf value
        s_steps: Number of leaves sampled
        orientation: +1 when Σ_s^int = {σ < s}, −1 when it is {σ > s}
        label: Family name
    """

    sigma: SmoothFunction
    s_min: float
    s_max: float
    s_steps: int = 21
    orientation: int = 1
    label: str = "family"

    def __post_init__(self):
        if self.orientation not in (1, -1):
            raise ValueError(f"Orientation must be +1 or -1, got {self.orientation}")
        if self.s_steps < 1:
            raise ValueError(f"s_steps must be at least 1, got {self.s_steps}")
        if self.s_max < self.s_min:
            raise ValueError(f"s_max {self.s_max} below s_min {self.s_min}")

    @property
    def s_values(self) -> np.ndarray:
        return np.linspace(self.s_min, self.s_max, self.s_steps)

    def flipped(self) -> "FoliationFamily":
        return FoliationFamily(
            self.sigma, self.s_min, self.s_max, self.s_steps, -self.orientation, self.label
        )


def spheres(center, s_min: float, s_max: float, s_steps: int = 21) -> FoliationFamily:
    return FoliationFamily(fn.distance(center), s_min, s_max, s_steps, 1, "spheres")


def planes(
    direction=(1.0, 0.0), s_min: float = -1.0, s_max: float = 1.0, s_steps: int = 21
) -> FoliationFamily:
    e = np.asarray(direction, dtype=float)
    return FoliationFamily(fn.linear(e / np.linalg.norm(e)), s_min, s_max, s_steps, 1, "planes")


def perturbed_planes(
    kappa: float, s_min: float, s_max: float, s_steps: int = 21
) -> FoliationFamily:
    """Parabolas x¹ = s + κ(x²)², strictly convex seen from {σ > s} for κ > 0."""
    if kappa <= 0:
        raise ValueError(f"kappa must be positive, got {kappa}")
    sigma = fn.linear((1.0, 0.0)) + fn.SmoothFunction(
        lambda x: -kappa * np.asarray(x)[..., 1] ** 2,
        lambda x: np.stack(
            [np.zeros(np.asarray(x).shape[:-1]), -2 * kappa * np.asarray(x)[..., 1]], -1
        ),
        lambda x: np.broadcast_to(
            np.diag([0.0, -2 * kappa]), np.asarray(x).shape[:-1] + (2, 2)
        ).copy(),
        "-κy²",
    )
    return FoliationFamily(sigma, s_min, s_max, s_steps, -1, "perturbed-planes")


def bent_geodesic_sigma(y0, delta: float) -> SmoothFunction:
    """
    Initial angle at y0 of the circle of curvature δ through y0 and x.

    The circles turn clockwise, so the chord angle lags the initial angle by
    arcsin(δ|x − y0|/2).
    """
    c = np.asarray(y0, dtype=float)

    def value(x):
        d = np.asarray(x, dtype=float) - c
        rho = np.linalg.norm(d, axis=-1)
        return np.arctan2(d[..., 1], d[..., 0]) + np.arcsin(np.clip(delta * rho / 2, -1, 1))

    def grad(x):
        d = np.asarray(x, dtype=float) - c
        rho2 = np.sum(d**2, axis=-1)
        rho = np.sqrt(rho2)
        g_theta = np.stack([-d[..., 1], d[..., 0]], -1) / rho2[..., None]
        w = (delta / 2) / np.sqrt(1 - (delta * rho / 2) ** 2)
        return g_theta + (w / rho)[..., None] * d

    return fn.SmoothFunction(value, grad, fn.from_callable(value).hess, "bent")


def bent_geodesic(
    y0, delta: float, s_min: float, s_max: float, s_steps: int = 41
) -> FoliationFamily:
    """Curves solving x″ = −δJx′ from y0; δ < 0 gives the mirrored family."""
    if delta == 0:
        raise ValueError("delta must be non-zero")
    orientation = 1 if delta > 0 else -1
    return FoliationFamily(
        bent_geodesic_sigma(y0, delta), s_min, s_max, s_steps, orientation, "bent-geodesic"
    )


def boundary_distance(domain: Domain, s_min: float, s_max: float, s_steps: int = 21) -> FoliationFamily:
    """Parallel curves {signed distance to ∂Ω = s}, s ≤ 0 inside."""
    if domain.a == domain.b:
        sigma = fn.distance((0.0, 0.0)) + fn.constant(-domain.a)
    else:
        sigma = fn.from_callable(domain.signed_distance, label="sd")
    return FoliationFamily(sigma, s_min, s_max, s_steps, 1, "boundary-distance")


def make_family(
    kind: str,
    params: list[float],
    s_min: float,
    s_max: float,
    s_steps: int,
    domain: Optional[Domain] = None,
) -> FoliationFamily:
    """
    Build a family from config values.

    Args:
        kind: One of VALID_FAMILIES
        params: spheres (cx, cy); planes (ex, ey); perturbed-planes (κ);
            bent-geodesic (y0x, y0y, δ); boundary-distance ()
    """
    kind = kind.lower()
    p = list(params)
    if kind == "spheres":
        return spheres(tuple(p[:2]), s_min, s_max, s_steps)
    elif kind == "planes":
        return planes(tuple(p[:2]) if p else (1.0, 0.0), s_min, s_max, s_steps)
    elif kind == "perturbed-planes":
        return perturbed_planes(p[0] if p else 0.1, s_min, s_max, s_steps)
    elif kind == "bent-geodesic":
        if len(p) != 3:
            raise ValueError(f"bent-geodesic needs (y0x, y0y, delta), got {p}")
        return bent_geodesic(tuple(p[:2]), p[2], s_min, s_max, s_steps)
    elif kind == "boundary-distance":
        if domain is None:
            raise ValueError("boundary-distance family needs a domain")
        return boundary_distance(domain, s_min, s_max, s_steps)
    else:
        raise ValueError(f"Unknown foliation: {kind}. Use one of {VALID_FAMILIES}")


def sample_leaf(
    sigma: SmoothFunction, s: float, domain: Domain, h: float, pad: float = 0.0
) -> np.ndarray:
    """
    Points of Σ_s ∩ Ω̄ from sign changes of σ − s along lattice edges.

    Each crossing is linearly interpolated and then moved onto the level set
    by one Newton step along ∇σ.

    Args:
        sigma: Level function
        s: Leaf value
        domain: Ω
        h: Lattice spacing
        pad: Also keep points up to this distance outside Ω

    Returns:
        Points (m, 2)
    """
    lim = domain.radius + 2 * h
    ticks = np.arange(-lim, lim + h / 2, h)
    X, Y = np.meshgrid(ticks, ticks, indexing="ij")
    P = np.stack([X, Y], -1)
    V = sigma.value(P) - s
    pts = []
    for axis in (0, 1):
        a = np.take(V, np.arange(V.shape[axis] - 1), axis=axis)
        b = np.take(V, np.arange(1, V.shape[axis]), axis=axis)
        pa = np.take(P, np.arange(P.shape[axis] - 1), axis=axis)
        pb = np.take(P, np.arange(1, P.shape[axis]), axis=axis)
        cross = (a * b < 0) | ((a == 0) & (b != 0))
        wa, wb = a[cross], b[cross]
        lam = wa / (wa - wb)
        pts.append(pa[cross] + lam[:, None] * (pb[cross] - pa[cross]))
    pts = np.concatenate(pts) if pts else np.zeros((0, 2))
    if len(pts) == 0:
        return pts
    g = sigma.grad(pts)
    g2 = np.sum(g**2, axis=-1)
    ok = g2 > 1e-24
    pts = pts[ok]
    pts = pts - ((sigma.value(pts) - s) / g2[ok])[:, None] * g[ok]
    keep = domain.signed_distance(pts) <= pad
    return pts[keep]
