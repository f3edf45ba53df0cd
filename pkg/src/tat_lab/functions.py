"""
Twice-differentiable scalar functions on the plane.

Foliation level sets, phase functions and initial data are all carried as
SmoothFunction objects so that G²f and Δf are evaluated from exact
derivatives wherever a closed form exists.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .speed import radial_derivatives, smooth_bump

ArrayFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class SmoothFunction:
    """
    Scalar function with gradient and Hessian.

    Each callable takes points of shape (..., 2) and returns shapes (...),
    (..., 2) and (..., 2, 2) respectively.
    """

    value: ArrayFn
    grad: ArrayFn
    hess: ArrayFn
    label: str = "f"

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.value(np.asarray(x, dtype=float))

    def laplacian(self, x: np.ndarray) -> np.ndarray:
        h = self.hess(np.asarray(x, dtype=float))
        return h[..., 0, 0] + h[..., 1, 1]

    def sample(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        X, Y = np.meshgrid(xs, ys, indexing="ij")
        return self.value(np.stack([X, Y], axis=-1))

    def __add__(self, other: "SmoothFunction") -> "SmoothFunction":
        return SmoothFunction(
            lambda x: self.value(x) + other.value(x),
            lambda x: self.grad(x) + other.grad(x),
            lambda x: self.hess(x) + other.hess(x),
            f"({self.label} + {other.label})",
        )

    def scaled(self, alpha: float) -> "SmoothFunction":
        return SmoothFunction(
            lambda x: alpha * self.value(x),
            lambda x: alpha * self.grad(x),
            lambda x: alpha * self.hess(x),
            f"{alpha:g}*{self.label}",
        )

    def squared_half(self) -> "SmoothFunction":
        """The function r²/2 built from r, as used by the convexity conditions."""

        def grad(x):
            return self.value(x)[..., None] * self.grad(x)

        def hess(x):
            g = self.grad(x)
            outer = g[..., :, None] * g[..., None, :]
            return outer + self.value(x)[..., None, None] * self.hess(x)

        return SmoothFunction(lambda x: 0.5 * self.value(x) ** 2, grad, hess, f"{self.label}²/2")


def _zeros_like_points(x: np.ndarray, tail: tuple = ()) -> np.ndarray:
    return np.zeros(np.asarray(x).shape[:-1] + tail)


def constant(value: float) -> SmoothFunction:
    return SmoothFunction(
        lambda x: np.full(np.asarray(x).shape[:-1], float(value)),
        lambda x: _zeros_like_points(x, (2,)),
        lambda x: _zeros_like_points(x, (2, 2)),
        f"{value:g}",
    )


def linear(w: tuple[float, float], offset: float = 0.0) -> SmoothFunction:
    w_arr = np.asarray(w, dtype=float)
    return SmoothFunction(
        lambda x: np.asarray(x) @ w_arr + offset,
        lambda x: np.broadcast_to(w_arr, np.asarray(x).shape).copy(),
        lambda x: _zeros_like_points(x, (2, 2)),
        "linear",
    )


def half_square_distance(x0: tuple[float, float] = (0.0, 0.0)) -> SmoothFunction:
    """f(x) = |x − x0|²/2."""
    c = np.asarray(x0, dtype=float)
    return SmoothFunction(
        lambda x: 0.5 * np.sum((np.asarray(x) - c) ** 2, axis=-1),
        lambda x: np.asarray(x) - c,
        lambda x: np.broadcast_to(np.eye(2), np.asarray(x).shape[:-1] + (2, 2)).copy(),
        "|x-x0|²/2",
    )


def distance(x0: tuple[float, float] = (0.0, 0.0)) -> SmoothFunction:
    """r(x) = |x − x0|, smooth away from x0."""
    c = np.asarray(x0, dtype=float)

    def grad(x):
        d = np.asarray(x) - c
        return d / np.linalg.norm(d, axis=-1, keepdims=True)

    def hess(x):
        d = np.asarray(x) - c
        r = np.linalg.norm(d, axis=-1)
        e = d / r[..., None]
        return (np.eye(2) - e[..., :, None] * e[..., None, :]) / r[..., None, None]

    return SmoothFunction(lambda x: np.linalg.norm(np.asarray(x) - c, axis=-1), grad, hess, "|x-x0|")


def gaussian(
    center: tuple[float, float] = (0.0, 0.0), width: float = 0.2, amplitude: float = 1.0
) -> SmoothFunction:
    """f(x) = A exp(−|x − c|² / (2 w²)); Δf changes sign on |x − c| = √2 w."""
    c = np.asarray(center, dtype=float)

    def value(x):
        d = np.asarray(x) - c
        return amplitude * np.exp(-np.sum(d**2, axis=-1) / (2 * width**2))

    def grad(x):
        d = np.asarray(x) - c
        return -value(x)[..., None] * d / width**2

    def hess(x):
        d = np.asarray(x) - c
        outer = d[..., :, None] * d[..., None, :] / width**4
        return value(x)[..., None, None] * (outer - np.eye(2) / width**2)

    return SmoothFunction(value, grad, hess, "gaussian")


def bump(
    center: tuple[float, float] = (0.0, 0.0), radius: float = 0.5, amplitude: float = 1.0
) -> SmoothFunction:
    """Compactly supported C-infinity bump A·b(|x − c|/ρ)."""
    c = np.asarray(center, dtype=float)

    def parts(x):
        d = np.asarray(x, dtype=float) - c
        r = np.linalg.norm(d, axis=-1)
        b, b1, b2 = smooth_bump(r / radius)
        return d, r, amplitude * b, amplitude * b1 / radius, amplitude * b2 / radius**2

    def grad(x):
        d, r, _, v1, _ = parts(x)
        r_safe = np.where(r < 1e-12, 1.0, r)
        return np.where((r < 1e-12)[..., None], 0.0, v1[..., None] * d / r_safe[..., None])

    def hess(x):
        d, r, _, v1, v2 = parts(x)
        small = r < 1e-12
        r_safe = np.where(small, 1.0, r)
        e = d / r_safe[..., None]
        eet = e[..., :, None] * e[..., None, :]
        eye = np.eye(2)
        h = v2[..., None, None] * eet + (v1 / r_safe)[..., None, None] * (eye - eet)
        return np.where(small[..., None, None], v2[..., None, None] * eye, h)

    return SmoothFunction(lambda x: parts(x)[2], grad, hess, "bump")


def product(f: SmoothFunction, g: SmoothFunction) -> SmoothFunction:
    """Pointwise product with the Leibniz rule."""

    def grad(x):
        return f.grad(x) * g.value(x)[..., None] + f.value(x)[..., None] * g.grad(x)

    def hess(x):
        fg, gg = f.grad(x), g.grad(x)
        cross = fg[..., :, None] * gg[..., None, :]
        return (
            f.hess(x) * g.value(x)[..., None, None]
            + cross
            + np.swapaxes(cross, -1, -2)
            + f.value(x)[..., None, None] * g.hess(x)
        )

    return SmoothFunction(
        lambda x: f.value(x) * g.value(x), grad, hess, f"{f.label}*{g.label}"
    )


def plateau(inner: float = 0.5, outer: float = 0.9) -> SmoothFunction:
    """Radial C-infinity cutoff equal to 1 for r <= inner and 0 for r >= outer."""
    if not 0 < inner < outer:
        raise ValueError(f"Need 0 < inner < outer, got {inner}, {outer}")

    def psi(t):
        pos = t > 0
        t_safe = np.where(pos, t, 1.0)
        v = np.where(pos, np.exp(-1.0 / t_safe), 0.0)
        return v, v / t_safe**2, v * (1.0 / t_safe**4 - 2.0 / t_safe**3)

    def parts(x):
        x = np.asarray(x, dtype=float)
        r = np.linalg.norm(x, axis=-1)
        a0, a1, a2 = psi(outer - r)
        b0, b1, b2 = psi(r - inner)
        a1 = -a1
        s = a0 + b0
        s1 = a1 + b1
        num = a1 * b0 - a0 * b1
        p = a0 / s
        p1 = num / s**2
        p2 = (a2 * b0 - a0 * b2) / s**2 - 2 * num * s1 / s**3
        return x, p, p1, p2

    def grad(x):
        x, _, p1, p2 = parts(x)
        return radial_derivatives(x, p1, p2)[0]

    def hess(x):
        x, _, p1, p2 = parts(x)
        return radial_derivatives(x, p1, p2)[1]

    return SmoothFunction(lambda x: parts(x)[1], grad, hess, "plateau")


def saddle(scale: float = 1.0) -> SmoothFunction:
    """Harmonic quadratic s·(x² − y²)."""
    return SmoothFunction(
        lambda x: scale * (np.asarray(x)[..., 0] ** 2 - np.asarray(x)[..., 1] ** 2),
        lambda x: scale * np.stack([2 * np.asarray(x)[..., 0], -2 * np.asarray(x)[..., 1]], -1),
        lambda x: np.broadcast_to(
            scale * np.diag([2.0, -2.0]), np.asarray(x).shape[:-1] + (2, 2)
        ).copy(),
        "x²-y²",
    )


def from_callable(fn: ArrayFn, eps: float = 1e-4, label: Optional[str] = None) -> SmoothFunction:
    """Wrap a plain callable, differentiating by central differences."""
    e = np.eye(2) * eps

    def grad(x):
        x = np.asarray(x, dtype=float)
        return np.stack([(fn(x + e[i]) - fn(x - e[i])) / (2 * eps) for i in range(2)], -1)

    def hess(x):
        x = np.asarray(x, dtype=float)
        rows = []
        for i in range(2):
            rows.append(
                np.stack(
                    [
                        (fn(x + e[i] + e[j]) - fn(x + e[i] - e[j]) - fn(x - e[i] + e[j]) + fn(x - e[i] - e[j]))
                        / (4 * eps**2)
                        for j in range(2)
                    ],
                    -1,
                )
            )
        return np.stack(rows, -2)

    return SmoothFunction(lambda x: fn(np.asarray(x, dtype=float)), grad, hess, label or "fd")


def angular_packet(
    radius: float = 0.5,
    half_width: float = 0.1,
    order: int = 16,
    amplitude: float = 1.0,
    center: tuple[float, float] = (0.0, 0.0),
) -> SmoothFunction:
    """
    A·b((ρ − radius)/half_width)·cos(order·θ) in polar coordinates about center.

    Most of its wave front set points along the circle ρ = radius.
    """
    if not 0 < half_width < radius:
        raise ValueError(f"Need 0 < half_width < radius, got {half_width}, {radius}")
    c = np.asarray(center, dtype=float)

    def value(x):
        d = np.asarray(x, dtype=float) - c
        rho = np.linalg.norm(d, axis=-1)
        b, _, _ = smooth_bump((rho - radius) / half_width)
        return amplitude * b * np.cos(order * np.arctan2(d[..., 1], d[..., 0]))

    return from_callable(value, label="angular-packet")


def make_source(kind: str, params: list[float]) -> SmoothFunction:
    """
    Build an initial datum or source profile from a config kind.

    Args:
        kind: 'bump' (cx, cy, radius, amp), 'gaussian' (cx, cy, width, amp),
            'quadratic-bump' (inner, outer) giving |x|²/2 under a plateau,
            'saddle-bump' (inner, outer) giving (x² − y²) under a plateau,
            'angular-packet' (radius, half_width, order, amp) concentrated on a circle
        params: Numbers for the kind
    """
    kind = kind.lower()
    p = list(params)
    if kind == "bump":
        cx, cy, radius, amp = (p + [0.0, 0.0, 0.5, 1.0][len(p) :])[:4]
        return bump((cx, cy), radius, amp)
    elif kind == "gaussian":
        cx, cy, width, amp = (p + [0.0, 0.0, 0.2, 1.0][len(p) :])[:4]
        return gaussian((cx, cy), width, amp)
    elif kind == "quadratic-bump":
        inner, outer = (p + [0.5, 0.9][len(p) :])[:2]
        return product(half_square_distance(), plateau(inner, outer))
    elif kind == "saddle-bump":
        inner, outer = (p + [0.5, 0.9][len(p) :])[:2]
        return product(saddle(), plateau(inner, outer))
    elif kind == "angular-packet":
        radius, half_width, order, amp = (p + [0.5, 0.1, 16.0, 1.0][len(p) :])[:4]
        return angular_packet(radius, half_width, int(order), amp)
    else:
        raise ValueError(
            f"Unknown source kind: {kind}. "
            "Use 'bump', 'gaussian', 'quadratic-bump', 'saddle-bump' or 'angular-packet'"
        )
