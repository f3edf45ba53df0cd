"""
Smooth bounded domains Ω = {β < 0} with observation set Γ and time profile τ.

Only ellipses (disks included) are shipped; they cover every scenario and
keep the boundary projection exact up to a few Newton steps.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

VALID_DOMAINS = ["disk", "ellipse"]


@dataclass(frozen=True)
class Domain:
    """
    Ellipse x²/a² + y²/b² < 1 with an observation set and time profile.

    Attributes:
        a: Semi-axis along x¹
        b: Semi-axis along x²
        n_boundary: Number of arclength-uniform boundary samples
        gamma_arc: Optional (θ0, θ1) polar-angle interval defining Γ
        gamma_halfspace: Optional C with Γ = ∂Ω ∩ {x¹ > C}
        tau_const: Constant observation time on Γ
        tau_table: Optional τ values at equally spaced polar angles on [0, 2π)
    """

    a: float = 1.0
    b: float = 1.0
    n_boundary: int = 256
    gamma_arc: Optional[tuple[float, float]] = None
    gamma_halfspace: Optional[float] = None
    tau_const: float = np.inf
    tau_table: Optional[tuple[float, ...]] = None
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.a <= 0 or self.b <= 0:
            raise ValueError(f"Semi-axes must be positive, got a={self.a}, b={self.b}")
        if self.n_boundary < 8:
            raise ValueError(f"Need at least 8 boundary samples, got {self.n_boundary}")
        if self.gamma_arc is not None and self.gamma_halfspace is not None:
            raise ValueError("Give either gamma_arc or gamma_halfspace, not both")

    @classmethod
    def disk(cls, radius: float = 1.0, **kwargs) -> "Domain":
        return cls(a=radius, b=radius, **kwargs)

    # -- level set ---------------------------------------------------------

    def levelset(self, x: np.ndarray) -> np.ndarray:
        """β(x) = x²/a² + y²/b² − 1."""
        x = np.asarray(x, dtype=float)
        return (x[..., 0] / self.a) ** 2 + (x[..., 1] / self.b) ** 2 - 1.0

    def levelset_gradient(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.stack([2 * x[..., 0] / self.a**2, 2 * x[..., 1] / self.b**2], axis=-1)

    def contains(self, x: np.ndarray) -> np.ndarray:
        return self.levelset(x) < 0

    def point_at(self, theta: np.ndarray) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        return np.stack([self.a * np.cos(theta), self.b * np.sin(theta)], axis=-1)

    def normal_at(self, theta: np.ndarray) -> np.ndarray:
        n = self.levelset_gradient(self.point_at(theta))
        return n / np.linalg.norm(n, axis=-1, keepdims=True)

    @property
    def radius(self) -> float:
        """Radius of the smallest origin-centred disk containing Ω."""
        return max(self.a, self.b)

    @property
    def inradius(self) -> float:
        return min(self.a, self.b)

    @property
    def diameter(self) -> float:
        return 2.0 * self.radius

    # -- boundary sampling -------------------------------------------------

    def _dense(self) -> dict:
        if "dense" not in self._cache:
            theta = np.linspace(0.0, 2 * np.pi, 8193)
            pts = self.point_at(theta)
            seg = np.linalg.norm(np.diff(pts, axis=0), axis=-1)
            arc = np.concatenate([[0.0], np.cumsum(seg)])
            self._cache["dense"] = {
                "theta": theta[:-1],
                "arc": arc,
                "theta_full": theta,
                "tree": cKDTree(pts[:-1]),
            }
        return self._cache["dense"]

    @property
    def perimeter(self) -> float:
        return float(self._dense()["arc"][-1])

    def boundary_param(self, n: Optional[int] = None) -> dict:
        """
        Arclength-uniform boundary samples.

        Args:
            n: Sample count (defaults to n_boundary)

        Returns:
            Dict with 'theta', 'arc', 'points', 'normals', 'weights' (arc length per sample)
        """
        n = self.n_boundary if n is None else int(n)
        key = ("param", n)
        if key not in self._cache:
            dense = self._dense()
            arc = np.arange(n) * self.perimeter / n
            theta = np.interp(arc, dense["arc"], dense["theta_full"])
            self._cache[key] = {
                "theta": theta,
                "arc": arc,
                "points": self.point_at(theta),
                "normals": self.normal_at(theta),
                "weights": np.full(n, self.perimeter / n),
            }
        return self._cache[key]

    def project(self, x: np.ndarray, newton_steps: int = 6) -> tuple[np.ndarray, np.ndarray]:
        """
        Nearest boundary point and its parameter θ.

        Args:
            x: Points of shape (..., 2)

        Returns:
            Tuple (boundary points (..., 2), theta (...))
        """
        x = np.asarray(x, dtype=float)
        shape = x.shape[:-1]
        flat = x.reshape(-1, 2)
        dense = self._dense()
        _, idx = dense["tree"].query(flat)
        theta = dense["theta"][idx]
        a, b = self.a, self.b
        for _ in range(newton_steps):
            c, s = np.cos(theta), np.sin(theta)
            dx = a * c - flat[:, 0]
            dy = b * s - flat[:, 1]
            # derivative of ½|p(θ) − x|²
            g1 = -a * s * dx + b * c * dy
            g2 = (a * s) ** 2 + (b * c) ** 2 - a * c * dx - b * s * dy
            theta = theta - g1 / np.where(np.abs(g2) < 1e-14, 1e-14, g2)
        theta = np.mod(theta, 2 * np.pi)
        return self.point_at(theta).reshape(shape + (2,)), theta.reshape(shape)

    def signed_distance(self, x: np.ndarray) -> np.ndarray:
        """Euclidean signed distance to ∂Ω, negative inside."""
        x = np.asarray(x, dtype=float)
        p, _ = self.project(x)
        d = np.linalg.norm(x - p, axis=-1)
        return np.where(self.levelset(x) < 0, -d, d)

    # -- observation set and times ------------------------------------------

    def in_gamma(self, y: np.ndarray) -> np.ndarray:
        """Membership of boundary points y in Γ (full boundary when unset)."""
        y = np.asarray(y, dtype=float)
        if self.gamma_halfspace is not None:
            return y[..., 0] > self.gamma_halfspace
        if self.gamma_arc is not None:
            t0, t1 = self.gamma_arc
            ang = np.mod(np.arctan2(y[..., 1], y[..., 0]) - t0, 2 * np.pi)
            return ang <= np.mod(t1 - t0, 2 * np.pi)
        return np.ones(y.shape[:-1], dtype=bool)

    def tau(self, y: np.ndarray) -> np.ndarray:
        """Observation time τ(y) on Γ and 0 off Γ."""
        y = np.asarray(y, dtype=float)
        if self.tau_table is not None:
            table = np.asarray(self.tau_table, dtype=float)
            nodes = np.arange(len(table) + 1) * 2 * np.pi / len(table)
            ang = np.mod(np.arctan2(y[..., 1], y[..., 0]), 2 * np.pi)
            values = np.interp(ang, nodes, np.append(table, table[0]))
        else:
            values = np.full(y.shape[:-1], float(self.tau_const))
        return np.where(self.in_gamma(y), values, 0.0)

    @property
    def gamma_is_full(self) -> bool:
        return self.gamma_arc is None and self.gamma_halfspace is None

    def with_tau(self, tau_const: float) -> "Domain":
        """Copy with a constant observation time."""
        return Domain(
            a=self.a,
            b=self.b,
            n_boundary=self.n_boundary,
            gamma_arc=self.gamma_arc,
            gamma_halfspace=self.gamma_halfspace,
            tau_const=float(tau_const),
        )

    # -- interior sampling --------------------------------------------------

    def interior_grid(self, h: float, margin: float = 0.0) -> np.ndarray:
        """Points of the lattice hZ² inside Ω at depth ≥ margin, shape (m, 2)."""
        r = self.radius
        ticks = np.arange(-np.floor(r / h), np.floor(r / h) + 1) * h
        X, Y = np.meshgrid(ticks, ticks, indexing="ij")
        pts = np.stack([X.ravel(), Y.ravel()], axis=-1)
        pts = pts[self.contains(pts)]
        if margin > 0:
            pts = pts[self.signed_distance(pts) <= -margin]
        return pts


def make_domain(kind: str, params: list[float], **kwargs) -> Domain:
    """
    Build a Domain from a config kind and parameter list.

    Args:
        kind: 'disk' (radius) or 'ellipse' (a, b)
        params: Numbers for the kind
        **kwargs: Γ and τ settings passed to Domain
    """
    kind = kind.lower()
    if kind == "disk":
        return Domain.disk(params[0] if params else 1.0, **kwargs)
    elif kind == "ellipse":
        if len(params) != 2:
            raise ValueError(f"ellipse needs 2 parameters (a, b), got {len(params)}")
        return Domain(a=params[0], b=params[1], **kwargs)
    else:
        raise ValueError(f"Unknown domain kind: {kind}. Use one of {VALID_DOMAINS}")
