"""Bundled C_b^2 test functions.

Generator evaluation, martingale residuals and norm checks all quantify over
a fixed battery of smooth bounded functions; keeping the battery canonical
makes fingerprints comparable across runs.

Each function carries the analytic data the singular quadrature needs to be
sharp: exact axis second derivatives (the inner cutoff is corrected by the
Taylor term, not just bounded), a Taylor remainder constant of stated order,
and an axis tail sup so the far-field correction -2f(x) int_{|u|>H} knows how
much the displaced terms can contribute.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class TestFunction:
    name: str
    tag: str                     # gaussian_bump | poly_bump | cosine_wave | custom
    d: int
    value: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray]
    sup_norm: float
    lip: float                   # bound on |grad f|
    hessian_sup: float           # bound on sup_x max_j |d^2 f / dx_j^2|
    support_radius: float        # inf for unbounded support
    # axis_second(x, j): exact d^2 f / dx_j^2, vectorized over points.
    axis_second: Callable[[np.ndarray, int], np.ndarray] | None = None
    # |D2f(u) - u^2 f''| <= 2 taylor_const |u|^taylor_order / taylor_order!
    taylor_order: int = 4
    taylor_const: float = np.inf
    # axis_tail_sup(x, j, H): sup over |u| >= H of |f(x +- e_j u) - limit|
    axis_tail_sup: Callable[[np.ndarray, int, float], np.ndarray] | None = None
    limit_at_infinity: float = 0.0

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.value(np.asarray(x, dtype=float))

    @property
    def compactly_supported(self) -> bool:
        return np.isfinite(self.support_radius)


def gaussian_bump(d: int, scale: float = 1.0, center=None,
                  amplitude: float = 1.0, name: str | None = None) -> TestFunction:
    c = np.zeros(d) if center is None else np.asarray(center, dtype=float)
    s2 = scale * scale

    def value(x):
        x = np.asarray(x, dtype=float)
        return amplitude * np.exp(-np.sum((x - c) ** 2, axis=-1) / (2.0 * s2))

    def gradient(x):
        x = np.asarray(x, dtype=float)
        return -(x - c) / s2 * value(x)[..., None]

    def axis_second(x, j):
        x = np.asarray(x, dtype=float)
        y = x[..., j] - c[j]
        return (y * y / (s2 * s2) - 1.0 / s2) * value(x)

    def axis_tail_sup(x, j, H):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        gap = H - np.abs(x[..., j] - c[j])
        out = np.full(gap.shape, amplitude)
        far = gap > 0
        out[far] = amplitude * np.exp(-gap[far] ** 2 / (2.0 * s2))
        return out

    return TestFunction(
        name=name or f"gauss_s{scale:g}", tag="gaussian_bump", d=d,
        value=value, gradient=gradient,
        sup_norm=amplitude,
        lip=amplitude * np.exp(-0.5) / scale,
        hessian_sup=amplitude / s2,
        support_radius=np.inf,
        axis_second=axis_second,
        taylor_order=4,
        taylor_const=3.0 * amplitude / (s2 * s2),
        axis_tail_sup=axis_tail_sup,
    )


def poly_bump(d: int, radius: float = 3.0, center=None,
              amplitude: float = 1.0, name: str | None = None) -> TestFunction:
    """Compactly supported C^2 bump (1 - |x|^2/R^2)_+^3.

    Only C^{2,1} at the support boundary, so the Taylor remainder is cubic
    with the third-derivative bound.
    """
    c = np.zeros(d) if center is None else np.asarray(center, dtype=float)
    R2 = radius * radius

    def value(x):
        x = np.asarray(x, dtype=float)
        u = np.sum((x - c) ** 2, axis=-1) / R2
        return amplitude * np.clip(1.0 - u, 0.0, None) ** 3

    def gradient(x):
        x = np.asarray(x, dtype=float)
        u = np.sum((x - c) ** 2, axis=-1) / R2
        w = np.clip(1.0 - u, 0.0, None) ** 2
        return -6.0 * amplitude / R2 * w[..., None] * (x - c)

    def axis_second(x, j):
        x = np.asarray(x, dtype=float)
        u = np.sum((x - c) ** 2, axis=-1) / R2
        v = np.clip(1.0 - u, 0.0, None)
        y2 = (x[..., j] - c[j]) ** 2
        return amplitude * (24.0 * v * y2 / (R2 * R2) - 6.0 * v * v / R2)

    def axis_tail_sup(x, j, H):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        # beyond the support there is nothing; inside, fall back to the sup
        rest = np.sum((np.delete(x, j, axis=-1)
                       - np.delete(c, j)[None, :]) ** 2, axis=-1) if d > 1 else 0.0
        gap = H - np.abs(x[..., j] - c[j])
        reach = np.where(gap > 0, gap * gap + rest, rest)
        return np.where(reach >= R2, 0.0, amplitude)

    return TestFunction(
        name=name or f"polybump_R{radius:g}", tag="poly_bump", d=d,
        value=value, gradient=gradient,
        sup_norm=amplitude,
        lip=6.0 * amplitude * 0.2862167011199269 / radius,
        hessian_sup=12.0 * amplitude / R2,
        support_radius=radius + float(np.linalg.norm(c)),
        axis_second=axis_second,
        taylor_order=3,
        taylor_const=120.0 * amplitude / (R2 * radius),
        axis_tail_sup=axis_tail_sup,
    )


def cosine_wave(d: int, wavevector, amplitude: float = 1.0,
                name: str | None = None) -> TestFunction:
    k = np.asarray(wavevector, dtype=float)
    if k.shape != (d,):
        raise ValueError("wavevector must have shape (d,)")

    def value(x):
        x = np.asarray(x, dtype=float)
        return amplitude * np.cos(np.sum(x * k, axis=-1))

    def gradient(x):
        x = np.asarray(x, dtype=float)
        return -amplitude * np.sin(np.sum(x * k, axis=-1))[..., None] * k

    def axis_second(x, j):
        return -k[j] * k[j] * value(x)

    def axis_tail_sup(x, j, H):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.full(x.shape[:-1], amplitude)

    return TestFunction(
        name=name or "cosine", tag="cosine_wave", d=d,
        value=value, gradient=gradient,
        sup_norm=amplitude,
        lip=amplitude * float(np.linalg.norm(k)),
        hessian_sup=amplitude * float(np.max(k * k)),
        support_radius=np.inf,
        axis_second=axis_second,
        taylor_order=4,
        taylor_const=amplitude * float(np.max(k * k) ** 2),
        axis_tail_sup=axis_tail_sup,
    )


def constant_function(d: int, level: float = 1.0) -> TestFunction:
    def value(x):
        x = np.asarray(x, dtype=float)
        return np.full(x.shape[:-1], level)

    def gradient(x):
        x = np.asarray(x, dtype=float)
        return np.zeros_like(x)

    return TestFunction(
        name=f"const_{level:g}", tag="custom", d=d,
        value=value, gradient=gradient,
        sup_norm=abs(level), lip=0.0, hessian_sup=0.0,
        support_radius=np.inf,
        axis_second=lambda x, j: np.zeros(np.asarray(x).shape[:-1]),
        taylor_order=4, taylor_const=0.0,
        axis_tail_sup=lambda x, j, H: np.zeros(np.asarray(x).shape[:-1]),
        limit_at_infinity=level,
    )


def combine(f: TestFunction, g: TestFunction, a: float = 1.0,
            b: float = 1.0) -> TestFunction:
    """Linear combination a f + b g, with bounds combined conservatively."""
    if f.d != g.d:
        raise ValueError("dimension mismatch")
    order = min(f.taylor_order, g.taylor_order)

    def rescale(h, o):
        # remainder constants at different orders cannot be mixed sharply;
        # downgrade the smoother one at unit offset scale
        return h.taylor_const if h.taylor_order == o else h.taylor_const * 2.0

    return TestFunction(
        name=f"{a:g}*{f.name}+{b:g}*{g.name}", tag="custom", d=f.d,
        value=lambda x: a * f.value(x) + b * g.value(x),
        gradient=lambda x: a * f.gradient(x) + b * g.gradient(x),
        sup_norm=abs(a) * f.sup_norm + abs(b) * g.sup_norm,
        lip=abs(a) * f.lip + abs(b) * g.lip,
        hessian_sup=abs(a) * f.hessian_sup + abs(b) * g.hessian_sup,
        support_radius=max(f.support_radius, g.support_radius),
        axis_second=(None if f.axis_second is None or g.axis_second is None
                     else lambda x, j: a * f.axis_second(x, j) + b * g.axis_second(x, j)),
        taylor_order=order,
        taylor_const=abs(a) * rescale(f, order) + abs(b) * rescale(g, order),
        axis_tail_sup=(None if f.axis_tail_sup is None or g.axis_tail_sup is None
                       else lambda x, j, H: (abs(a) * f.axis_tail_sup(x, j, H)
                                             + abs(b) * g.axis_tail_sup(x, j, H))),
        limit_at_infinity=a * f.limit_at_infinity + b * g.limit_at_infinity,
    )


def standard_battery(d: int) -> list[TestFunction]:
    """Gaussian bumps at three scales, a poly bump, and a cosine wave."""
    k = np.zeros(d)
    k[0] = 1.0
    if d > 1:
        k[1] = 0.5
    return [
        gaussian_bump(d, scale=0.75),
        gaussian_bump(d, scale=1.5),
        gaussian_bump(d, scale=3.0),
        poly_bump(d, radius=3.0),
        cosine_wave(d, k),
    ]


def fd_gradient_error(f: TestFunction, points: np.ndarray, h: float = 1e-5) -> float:
    """Max deviation between central differences of f and its gradient."""
    points = np.asarray(points, dtype=float)
    worst = 0.0
    for j in range(f.d):
        e = np.zeros(f.d)
        e[j] = h
        fd = (f(points + e) - f(points - e)) / (2.0 * h)
        worst = max(worst, float(np.abs(fd - f.gradient(points)[:, j]).max()))
    return worst
