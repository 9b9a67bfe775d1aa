"""Adaptive singular quadrature for second-difference jump integrals.

The raw object is

    int_{eps <= |u| <= H} (g(u) - 2 g(0) + g(-u)) c |u|^{-1-alpha} du

over dyadic shells with embedded error estimates.  What the cutoffs discard
is handled by the caller (generator module): the inner part via the Taylor
correction u^2 g''(0) with a remainder of the function's stated order, the
outer part via the -2 g(0) mass of the kernel with the displaced-term sup.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import factorial

import numpy as np
from numpy.polynomial.legendre import leggauss


@dataclass(frozen=True)
class SingularQuadrature:
    """Cutoffs and shell resolution for the singular integrals.

    With the analytic inner/tail corrections the defaults keep reported
    error bounds around 1e-5 for the bundled test library across
    alpha in [0.3, 1.8].
    """

    eps: float = 1e-4
    H: float = 1e4
    nodes_per_shell: int = 16
    max_splits: int = 4          # extra dyadic subdivisions when a shell is rough

    def __post_init__(self):
        if not (0.0 < self.eps < 1.0 < self.H):
            raise ValueError("need 0 < eps < 1 < H")
        if self.nodes_per_shell < 4:
            raise ValueError("nodes_per_shell too small")

    def scaled(self, factor: float) -> "SingularQuadrature":
        """Cutoffs multiplied by |factor| (change of variables u = factor h)."""
        f = abs(factor)
        return SingularQuadrature(self.eps * f, self.H * f,
                                  self.nodes_per_shell, self.max_splits)

    def inner_correction(self, alpha: float, c: float, g2: float) -> float:
        """Taylor value of the discarded two-sided |u| < eps part."""
        return 2.0 * c * g2 * self.eps ** (2.0 - alpha) / (2.0 - alpha)

    def inner_remainder(self, alpha: float, c: float, order: int,
                        const: float) -> float:
        """Bound on the inner correction's own error, |D2 g - u^2 g''| <=
        2 const |u|^order / order!."""
        return (2.0 * c * 2.0 * const / factorial(order)
                * self.eps ** (order - alpha) / (order - alpha))

    def inner_bound(self, alpha: float, c: float, hessian_sup: float) -> float:
        """Fallback pure bound when no exact second derivative is available."""
        return 2.0 * c * hessian_sup * self.eps ** (2.0 - alpha) / (2.0 - alpha)

    def tail_kernel_mass(self, alpha: float, c: float) -> float:
        """int_{|u| > H} c |u|^{-1-alpha} du."""
        return 2.0 * c * self.H ** (-alpha) / alpha

    def tail_correction(self, alpha: float, c: float, g0: float) -> float:
        """The -2 g(0) part of the discarded two-sided |u| > H integral."""
        return -2.0 * g0 * self.tail_kernel_mass(alpha, c)

    def tail_remainder(self, alpha: float, c: float, displaced_sup: float) -> float:
        """Bound on the displaced terms g(x +- u), |u| > H."""
        return 2.0 * displaced_sup * self.tail_kernel_mass(alpha, c)


@lru_cache(maxsize=32)
def _gauss(n: int):
    return leggauss(n)


def _shell_edges(eps: float, H: float) -> np.ndarray:
    n = int(np.ceil(np.log2(H / eps)))
    edges = eps * 2.0 ** np.arange(n + 1)
    edges[-1] = H
    return edges


def _panel_nodes(edges: np.ndarray, n_nodes: int):
    g, w = _gauss(n_nodes)
    a = edges[:-1][:, None]
    b = edges[1:][:, None]
    u = 0.5 * (a + b) + 0.5 * (b - a) * g[None, :]
    wu = 0.5 * (b - a) * np.broadcast_to(w, u.shape)
    return u, wu


def second_difference_quadrature(g, alpha: float, c: float,
                                 quad: SingularQuadrature) -> tuple[float, float]:
    """(value, error estimate) of the shell integral over eps <= |u| <= H.

    ``g`` maps a 1-d array of offsets to values; it is called on +u and -u
    node batches.  Shells whose embedded low-order estimate disagrees are
    split dyadically up to ``quad.max_splits`` times.
    """
    g0 = float(np.asarray(g(np.zeros(1)))[0])

    def panel_values(edges, n_nodes):
        # symmetrized integrand on u > 0; doubled for the two-sided integral
        u, wu = _panel_nodes(edges, n_nodes)
        flat = u.ravel()
        second = np.asarray(g(flat)) + np.asarray(g(-flat)) - 2.0 * g0
        kern = 2.0 * c * flat ** (-1.0 - alpha)
        contrib = (wu.ravel() * second * kern).reshape(u.shape)
        return contrib.sum(axis=1)

    edges = _shell_edges(quad.eps, quad.H)
    vals_hi = panel_values(edges, quad.nodes_per_shell)
    vals_lo = panel_values(edges, max(4, quad.nodes_per_shell // 2))
    errs = np.abs(vals_hi - vals_lo)

    total = 0.0
    quad_err = 0.0
    scale = max(np.abs(vals_hi).sum(), 1e-300)
    work = [(edges[i], edges[i + 1], vals_hi[i], errs[i], 0)
            for i in range(len(vals_hi))]
    while work:
        a, b, v, e, depth = work.pop()
        if e <= 1e-13 * scale or depth >= quad.max_splits:
            total += v
            quad_err += e
            continue
        mid = np.sqrt(a * b)
        for lo, hi in ((a, mid), (mid, b)):
            sub = np.array([lo, hi])
            vh = panel_values(sub, quad.nodes_per_shell)[0]
            vl = panel_values(sub, max(4, quad.nodes_per_shell // 2))[0]
            work.append((lo, hi, vh, abs(vh - vl), depth + 1))

    return float(total), float(quad_err)


def second_difference_batch(f, points: np.ndarray, axis: int, alpha: float,
                            c: float, quad: SingularQuadrature,
                            chunk: int = 2_000_000) -> np.ndarray:
    """Shell integral of f's axis-aligned second difference at many points.

    Fixed (non-adaptive) dyadic shells; used for building generator fields on
    grids and along simulated paths, where per-point adaptivity would be
    wasteful.  Matches the adaptive route within reported bounds for the
    bundled smooth functions (checked in the test suite).
    """
    points = np.asarray(points, dtype=float)
    edges = _shell_edges(quad.eps, quad.H)
    u, wu = _panel_nodes(edges, quad.nodes_per_shell)
    u = u.ravel()
    weights = 2.0 * wu.ravel() * c * u ** (-1.0 - alpha)

    n = len(points)
    out = np.empty(n)
    f0 = np.asarray(f(points))
    step = max(1, chunk // max(1, len(u)))
    offs = np.zeros((len(u), points.shape[1]))
    offs[:, axis] = u
    for i in range(0, n, step):
        p = points[i:i + step]
        plus = np.asarray(f(p[:, None, :] + offs[None, :, :]))
        minus = np.asarray(f(p[:, None, :] - offs[None, :, :]))
        out[i:i + step] = (plus + minus - 2.0 * f0[i:i + step, None]) @ weights
    return out
