"""Uniform grids and grid-sampled densities.

A :class:`UniformGrid1D` is the basic carrier for densities, test functions
and operator outputs; :class:`TensorGrid` is the d-dimensional tensor product.
Grid densities remember how much probability mass the grid captures and what
the analytic tail estimate beyond the edges is, so downstream checks can
reason about truncation honestly.

CSV serialization uses 17 significant digits, which round-trips float64
exactly; suite reproducibility relies on that.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

FLOAT_FMT = "%.17g"


def _fmt(v: float) -> str:
    return FLOAT_FMT % v


class GridError(ValueError):
    """Grid-geometry or truncation-target violation."""


@dataclass(frozen=True)
class UniformGrid1D:
    """Uniform grid with n nodes covering [lo, hi] inclusive."""

    lo: float
    hi: float
    n: int

    def __post_init__(self):
        if self.n < 2:
            raise GridError("grid needs at least 2 nodes")
        if not self.hi > self.lo:
            raise GridError(f"empty grid extent [{self.lo}, {self.hi}]")

    @property
    def h(self) -> float:
        return (self.hi - self.lo) / (self.n - 1)

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n)

    @property
    def symmetric(self) -> bool:
        # symmetric about 0 with a node at 0
        return self.n % 2 == 1 and abs(self.lo + self.hi) <= 1e-12 * max(1.0, abs(self.hi))

    @staticmethod
    def centered(extent: float, n: int) -> "UniformGrid1D":
        """Symmetric grid [-extent, extent] with an odd node count."""
        if n % 2 == 0:
            n += 1
        return UniformGrid1D(-extent, extent, n)

    def trapezoid(self, values: np.ndarray) -> float:
        return float(np.trapezoid(values, dx=self.h))


@dataclass(frozen=True)
class TensorGrid:
    """Tensor product of uniform 1-d grids."""

    axes: tuple[UniformGrid1D, ...]

    def __post_init__(self):
        if len(self.axes) < 1:
            raise GridError("TensorGrid needs at least one axis")

    @property
    def d(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(g.n for g in self.axes)

    @property
    def cell_volume(self) -> float:
        return float(np.prod([g.h for g in self.axes]))

    def meshgrid(self) -> list[np.ndarray]:
        return np.meshgrid(*[g.nodes for g in self.axes], indexing="ij")

    def points(self) -> np.ndarray:
        """All nodes as an (n_total, d) array in C order."""
        mesh = self.meshgrid()
        return np.stack([m.ravel() for m in mesh], axis=-1)

    def trapezoid(self, values: np.ndarray) -> float:
        out = np.asarray(values, dtype=float)
        for ax in range(self.d - 1, -1, -1):
            out = np.trapezoid(out, dx=self.axes[ax].h, axis=ax)
        return float(out)

    @staticmethod
    def centered(extents: Sequence[float], ns: Sequence[int]) -> "TensorGrid":
        return TensorGrid(tuple(UniformGrid1D.centered(e, n) for e, n in zip(extents, ns)))


@dataclass(frozen=True)
class GridDensity1D:
    """Density values on a 1-d grid plus mass accounting.

    ``grid_mass`` is the trapezoid mass of the values on the grid;
    ``tail_mass`` the analytic estimate of the mass beyond the edges, with
    ``tail_uncertainty`` bounding the estimate's own error.  ``total_mass``
    should be 1 within tolerance for a certified probability density.
    """

    grid: UniformGrid1D
    values: np.ndarray
    grid_mass: float
    tail_mass: float
    tail_uncertainty: float
    delicate: bool = False
    meta: dict = field(default_factory=dict)

    @property
    def total_mass(self) -> float:
        return self.grid_mass + self.tail_mass

    def to_csv(self, path) -> None:
        xs = self.grid.nodes
        with open(path, "w") as fh:
            fh.write("x,value\n")
            for x, v in zip(xs, self.values):
                fh.write(f"{_fmt(x)},{_fmt(v)}\n")


@dataclass(frozen=True)
class GridDensityND:
    """Density values on a tensor grid, mass accounted per axis."""

    grid: TensorGrid
    values: np.ndarray
    grid_mass: float
    tail_mass: float
    tail_uncertainty: float
    delicate: bool = False
    meta: dict = field(default_factory=dict)

    @property
    def total_mass(self) -> float:
        return self.grid_mass + self.tail_mass

    def to_csv(self, path) -> None:
        d = self.grid.d
        pts = self.grid.points()
        vals = np.asarray(self.values).ravel()
        header = ",".join(f"x_{j + 1}" for j in range(d)) + ",value"
        with open(path, "w") as fh:
            fh.write(header + "\n")
            for row, v in zip(pts, vals):
                fh.write(",".join(_fmt(c) for c in row) + "," + _fmt(v) + "\n")


def grid_function_to_csv(grid: TensorGrid, values: np.ndarray, path) -> None:
    """Serialize any grid-sampled scalar field with the density column layout."""
    GridDensityND(grid, np.asarray(values), 0.0, 0.0, 0.0).to_csv(path)


def discrete_lp_norm(grid: TensorGrid, values: np.ndarray, p: float) -> float:
    """L^p norm of a grid function, cells weighted by volume; p=inf is the max."""
    v = np.abs(np.asarray(values, dtype=float))
    if np.isinf(p):
        return float(v.max())
    return float((np.sum(v**p) * grid.cell_volume) ** (1.0 / p))
