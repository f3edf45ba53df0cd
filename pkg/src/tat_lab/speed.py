"""
Sound-speed fields and the conformal metric g = c^-2 * Euclidean they induce.

A SpeedField is evaluated on arrays of points with trailing axis 2 and
returns the value, gradient and Hessian of c. Analytic kinds are
differentiated in closed form; grid-sampled fields use a bicubic spline.
"""

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.interpolate import RectBivariateSpline
from scipy.optimize import brentq

from .errors import OutOfDomainError

VALID_KINDS = ["constant", "radial", "bump-sum", "grid"]
VALID_PROFILES = ["herglotz", "ring"]


def smooth_bump(s: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Compactly supported C-infinity bump b(s) = exp(1 - 1/(1 - s^2)) with b(0) = 1.

    Args:
        s: Array of arguments; b vanishes identically for |s| >= 1

    Returns:
        Tuple (b, b', b'') evaluated elementwise
    """
    s = np.asarray(s, dtype=float)
    inside = np.abs(s) < 1.0
    m = np.where(inside, 1.0 - s**2, 1.0)
    b = np.where(inside, np.exp(1.0 - 1.0 / m), 0.0)
    db_rel = -2.0 * s / m**2
    b1 = b * db_rel
    b2 = b * (db_rel**2 - 2.0 / m**2 - 8.0 * s**2 / m**3)
    return b, np.where(inside, b1, 0.0), np.where(inside, b2, 0.0)


def _radial_profile(
    profile: str, params: dict, r: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Evaluate (c, c', c'') of a radial profile at radii r."""
    profile = profile.lower()
    if profile == "herglotz":
        k = params.get("k", 1.0)
        r_ref = params.get("r_ref", 1.0)
        c = np.exp(0.5 * k * (r**2 - r_ref**2))
        return c, k * r * c, k * c * (1.0 + k * r**2)
    elif profile == "ring":
        height = params.get("height", 1.2)
        peak = params.get("peak", 0.55)
        width = params.get("width", 0.35)
        b, b1, b2 = smooth_bump((r - peak) / width)
        c = np.exp(height * b)
        q1 = height * b1 / width
        q2 = height * b2 / width**2
        return c, c * q1, c * (q1**2 + q2)
    else:
        raise ValueError(f"Unknown radial profile: {profile}. Use one of {VALID_PROFILES}")


def radial_derivatives(
    d: np.ndarray, v1: np.ndarray, v2: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Gradient and Hessian of v(|d|) given v'(r) and v''(r)."""
    r = np.linalg.norm(d, axis=-1)
    small = r < 1e-12
    r_safe = np.where(small, 1.0, r)
    e = d / r_safe[..., None]
    grad = v1[..., None] * e
    eet = e[..., :, None] * e[..., None, :]
    eye = np.broadcast_to(np.eye(2), eet.shape)
    hess = v2[..., None, None] * eet + (v1 / r_safe)[..., None, None] * (eye - eet)
    # at the centre v'(0) = 0 and the Hessian is v''(0) * I
    hess = np.where(small[..., None, None], v2[..., None, None] * eye, hess)
    grad = np.where(small[..., None], 0.0, grad)
    return grad, hess


@dataclass(frozen=True)
class SpeedField:
    """
    Sound speed c(x) on the plane.

    Attributes:
        kind: One of 'constant', 'radial', 'bump-sum', 'grid'
        params: Kind-specific parameters
        background: Speed outside the domain (always 1 for physical fields)
    """

    kind: str
    params: dict = field(default_factory=dict)
    background: float = 1.0
    _spline: Optional[RectBivariateSpline] = field(default=None, repr=False, compare=False)

    @classmethod
    def constant(cls, value: float = 1.0) -> "SpeedField":
        if value <= 0:
            raise ValueError(f"Speed must be positive, got {value}")
        return cls("constant", {"value": float(value)})

    @classmethod
    def radial(cls, profile: str = "herglotz", **params) -> "SpeedField":
        if profile.lower() not in VALID_PROFILES:
            raise ValueError(f"Unknown radial profile: {profile}. Use one of {VALID_PROFILES}")
        return cls("radial", {"profile": profile.lower(), **params})

    @classmethod
    def bumps(cls, bumps: list[tuple[float, float, float, float]]) -> "SpeedField":
        """
        Build c = 1 + sum of amp * b(|x - centre| / radius).

        Args:
            bumps: List of (amplitude, cx, cy, radius)
        """
        for amp, _, _, radius in bumps:
            if radius <= 0:
                raise ValueError(f"Bump radius must be positive, got {radius}")
            if amp <= -1:
                raise ValueError(f"Bump amplitude must exceed -1, got {amp}")
        return cls("bump-sum", {"bumps": tuple(tuple(float(v) for v in b) for b in bumps)})

    @classmethod
    def from_grid(cls, xs: np.ndarray, ys: np.ndarray, values: np.ndarray) -> "SpeedField":
        """
        Grid-sampled speed with bicubic interpolation.

        Args:
            xs: Strictly increasing node coordinates along axis 0
            ys: Strictly increasing node coordinates along axis 1
            values: Array of shape (len(xs), len(ys)), positive
        """
        values = np.asarray(values, dtype=float)
        if values.shape != (len(xs), len(ys)):
            raise ValueError(f"Grid values shape {values.shape} != ({len(xs)}, {len(ys)})")
        if np.any(values <= 0) or not np.all(np.isfinite(values)):
            raise ValueError("Grid speed must be finite and positive")
        spline = RectBivariateSpline(xs, ys, values, kx=3, ky=3)
        params = {"x_range": (float(xs[0]), float(xs[-1])), "y_range": (float(ys[0]), float(ys[-1]))}
        return cls("grid", params, _spline=spline)

    def derivatives(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """
        Value, gradient and Hessian of c at points x.

        Args:
            x: Array of shape (..., 2)

        Returns:
            Tuple (c of shape (...), grad of shape (..., 2), hess of shape (..., 2, 2))

        Raises:
            OutOfDomainError: For grid fields queried outside their grid
        """
        x = np.asarray(x, dtype=float)
        shape = x.shape[:-1]
        kind = self.kind.lower()

        if kind == "constant":
            c = np.full(shape, self.params["value"])
            return c, np.zeros(shape + (2,)), np.zeros(shape + (2, 2))

        elif kind == "radial":
            r = np.linalg.norm(x, axis=-1)
            c, c1, c2 = _radial_profile(self.params["profile"], self.params, r)
            grad, hess = radial_derivatives(x, c1, c2)
            return c, grad, hess

        elif kind == "bump-sum":
            c = np.ones(shape)
            grad = np.zeros(shape + (2,))
            hess = np.zeros(shape + (2, 2))
            for amp, cx, cy, radius in self.params["bumps"]:
                d = x - np.array([cx, cy])
                b, b1, b2 = smooth_bump(np.linalg.norm(d, axis=-1) / radius)
                g, hmat = radial_derivatives(d, amp * b1 / radius, amp * b2 / radius**2)
                c = c + amp * b
                grad = grad + g
                hess = hess + hmat
            return c, grad, hess

        elif kind == "grid":
            self._check_grid(x)
            px, py = x[..., 0].ravel(), x[..., 1].ravel()
            sp = self._spline
            c = sp.ev(px, py).reshape(shape)
            grad = np.stack([sp.ev(px, py, dx=1), sp.ev(px, py, dy=1)], axis=-1)
            hxx = sp.ev(px, py, dx=2)
            hxy = sp.ev(px, py, dx=1, dy=1)
            hyy = sp.ev(px, py, dy=2)
            hess = np.stack([np.stack([hxx, hxy], -1), np.stack([hxy, hyy], -1)], -2)
            return c, grad.reshape(shape + (2,)), hess.reshape(shape + (2, 2))

        else:
            raise ValueError(f"Unknown speed kind: {self.kind}. Use one of {VALID_KINDS}")

    def _check_grid(self, x: np.ndarray) -> None:
        (x0, x1), (y0, y1) = self.params["x_range"], self.params["y_range"]
        tol = 1e-12
        outside = (
            (x[..., 0] < x0 - tol) | (x[..., 0] > x1 + tol) | (x[..., 1] < y0 - tol) | (x[..., 1] > y1 + tol)
        )
        if np.any(outside):
            bad = x[outside][0]
            raise OutOfDomainError(
                f"point ({bad[0]:.4g}, {bad[1]:.4g}) outside grid [{x0}, {x1}] x [{y0}, {y1}]"
            )

    def value(self, x: np.ndarray) -> np.ndarray:
        """Speed c(x) at points of shape (..., 2)."""
        x = np.asarray(x, dtype=float)
        if self.kind == "grid":
            self._check_grid(x)
            return self._spline.ev(x[..., 0].ravel(), x[..., 1].ravel()).reshape(x.shape[:-1])
        return self.derivatives(x)[0]

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.value(x)

    def sample(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        """Speed on the tensor grid xs × ys, shape (len(xs), len(ys))."""
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        return self.value(np.stack([X, Y], axis=-1))

    def log_gradient(self, x: np.ndarray) -> np.ndarray:
        """Gradient of phi = -ln c, the conformal factor exponent of g = e^(2 phi) δ."""
        c, grad, _ = self.derivatives(x)
        return -grad / c[..., None]


def radial_closed_geodesics(field: SpeedField, r_max: float, n_scan: int = 2000) -> list[dict]:
    """
    Locate circles r = r0 that are closed geodesics of a radial speed.

    A circle is a geodesic exactly when c(r0) = r0 * c'(r0), i.e. where r / c(r)
    is stationary. A local maximum of r / c traps nearby rays (stable); a local
    minimum does not (unstable).

    Args:
        field: A radial SpeedField
        r_max: Upper end of the radial scan
        n_scan: Number of scan points for sign changes

    Returns:
        List of dicts with keys 'radius' and 'stable', ordered by radius
    """
    if field.kind != "radial":
        raise ValueError(f"Closed-geodesic scan needs a radial field, got {field.kind}")

    def herglotz_defect(r):
        c, c1, _ = _radial_profile(field.params["profile"], field.params, np.asarray(r))
        return float(c - r * c1)

    rs = np.linspace(1e-6, r_max, n_scan)
    vals = np.array([herglotz_defect(r) for r in rs])
    circles = []
    for i in range(n_scan - 1):
        if vals[i] == 0.0 or vals[i] * vals[i + 1] < 0:
            r0 = rs[i] if vals[i] == 0.0 else brentq(herglotz_defect, rs[i], rs[i + 1], xtol=1e-14)
            circles.append({"radius": float(r0), "stable": bool(vals[i + 1] < vals[i])})
    return circles


def make_speed(kind: str, params: list[float]) -> SpeedField:
    """
    Build a SpeedField from a config kind and flat parameter list.

    Args:
        kind: 'constant', 'herglotz', 'ring' or 'bump-sum'
        params: Flat numbers; bump-sum takes groups of (amp, cx, cy, radius)

    Returns:
        SpeedField
    """
    kind = kind.lower()
    params = list(params)
    if kind == "constant":
        return SpeedField.constant(params[0] if params else 1.0)
    elif kind == "herglotz":
        keys = ["k", "r_ref"]
        return SpeedField.radial("herglotz", **dict(zip(keys, params)))
    elif kind == "ring":
        keys = ["height", "peak", "width"]
        return SpeedField.radial("ring", **dict(zip(keys, params)))
    elif kind == "bump-sum":
        if len(params) % 4 != 0 or not params:
            raise ValueError(f"bump-sum needs groups of 4 numbers, got {len(params)}")
        groups = [tuple(params[i : i + 4]) for i in range(0, len(params), 4)]
        return SpeedField.bumps(groups)
    else:
        raise ValueError(
            f"Unknown speed kind: {kind}. Use 'constant', 'herglotz', 'ring' or 'bump-sum'"
        )
