"""Diagonal coefficient fields x -> diag(A_11(x), ..., A_dd(x)).

Off-diagonal entries are identically zero by construction of the type.
Fields declare sup and non-degeneracy bounds; simulation batches are checked
against them so a misdeclared field fails loudly instead of corrupting an
ensemble.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .driver import AlphaSpec, FrozenSpec


@dataclass(frozen=True)
class DiagonalCoefficientField:
    d: int
    evaluate: Callable[[np.ndarray], np.ndarray]   # (n, d) -> (n, d) diagonals
    sup_bound: float
    nondeg_bound: float
    description: str = ""

    def __post_init__(self):
        if self.nondeg_bound < 0 or self.sup_bound < self.nondeg_bound:
            raise ValueError("need 0 <= nondeg_bound <= sup_bound")

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        vals = np.asarray(self.evaluate(x[None] if single else x), dtype=float)
        return vals[0] if single else vals

    def check_bounds(self, x: np.ndarray) -> None:
        vals = np.abs(self(np.atleast_2d(np.asarray(x, dtype=float))))
        lo, hi = float(vals.min()), float(vals.max())
        tol = 1e-12 * max(1.0, self.sup_bound)
        if lo < self.nondeg_bound - tol or hi > self.sup_bound + tol:
            raise ValueError(
                f"field '{self.description}' leaves its declared bounds "
                f"[{self.nondeg_bound}, {self.sup_bound}]: observed [{lo}, {hi}]")

    def frozen_at(self, alphas: AlphaSpec, x0) -> FrozenSpec:
        x0 = np.asarray(x0, dtype=float)
        return FrozenSpec(alphas, tuple(self(x0)), tuple(x0))

    @property
    def degenerate(self) -> bool:
        return self.nondeg_bound == 0.0


def constant_field(coeffs) -> DiagonalCoefficientField:
    c = np.asarray(coeffs, dtype=float)
    if (c == 0).any():
        raise ValueError("constant field must be non-degenerate; "
                         "use zero_field for the degenerate control")
    return DiagonalCoefficientField(
        d=len(c),
        evaluate=lambda x: np.broadcast_to(c, x.shape).copy(),
        sup_bound=float(np.abs(c).max()),
        nondeg_bound=float(np.abs(c).min()),
        description=f"constant {list(c)}",
    )


def zero_field(d: int) -> DiagonalCoefficientField:
    """Degenerate control field A = 0; simulation under it freezes the state."""
    return DiagonalCoefficientField(
        d=d,
        evaluate=lambda x: np.zeros_like(x),
        sup_bound=0.0,
        nondeg_bound=0.0,
        description="zero (degenerate control)",
    )


def sine_field(base, amplitude, wavevector=None) -> DiagonalCoefficientField:
    """Smooth bounded field A_jj(x) = base_j + amp_j sin(k . x)."""
    b = np.asarray(base, dtype=float)
    a = np.asarray(amplitude, dtype=float)
    d = len(b)
    k = np.ones(d) if wavevector is None else np.asarray(wavevector, dtype=float)
    if (np.abs(a) >= np.abs(b)).any():
        raise ValueError("amplitude must stay below base for non-degeneracy")

    def evaluate(x):
        s = np.sin(x @ k)
        return b[None, :] + a[None, :] * s[:, None]

    return DiagonalCoefficientField(
        d=d, evaluate=evaluate,
        sup_bound=float((np.abs(b) + np.abs(a)).max()),
        nondeg_bound=float((np.abs(b) - np.abs(a)).min()),
        description=f"sine base={list(b)} amp={list(a)}",
    )


def oscillation_field(alphas: AlphaSpec, eta: float,
                      wavevector=None) -> DiagonalCoefficientField:
    """Field whose symbol weights oscillate exactly eta around 1.

    |A_jj(x)|^{alpha_j} = 1 + eta cos(k . x), so the coefficient-oscillation
    constant relative to any anchor with cos(k . x0) = 0 is exactly eta.
    Used to probe the locality threshold from both sides.
    """
    d = alphas.d
    if not (0.0 <= eta < 1.0):
        raise ValueError("eta must be in [0, 1)")
    k = np.ones(d) if wavevector is None else np.asarray(wavevector, dtype=float)
    inv_alpha = 1.0 / alphas.values

    def evaluate(x):
        w = 1.0 + eta * np.cos(x @ k)
        return w[:, None] ** inv_alpha[None, :]

    return DiagonalCoefficientField(
        d=d, evaluate=evaluate,
        sup_bound=float(((1.0 + eta) ** inv_alpha).max()),
        nondeg_bound=float(((1.0 - eta) ** inv_alpha).min()),
        description=f"weight-oscillation eta={eta:g}",
    )
