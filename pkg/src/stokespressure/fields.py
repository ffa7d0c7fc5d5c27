"""Field containers and discrete inner products.

Scalars and two-component vectors are stored cell-centered as (nx, ny)
arrays indexed ``[i, j]`` with i along x and j along y.  Integrals are
midpoint sums (cell volume times value), which is second-order accurate on
this layout and makes the discrete L2 inner product a plain weighted dot
product.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .grid import Grid

MEAN_PIN_TOL = 1e-12


class BoundaryCondition(Enum):
    NO_SLIP = "no-slip"
    FREE = "free"


@dataclass
class ScalarField:
    grid: Grid
    values: np.ndarray
    mean_pinned: bool = False

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ValueError(f"values shape {self.values.shape} does not match "
                             f"grid shape {self.grid.shape}")
        if self.mean_pinned:
            scale = np.max(np.abs(self.values))
            if scale > 0 and abs(self.mean()) > MEAN_PIN_TOL * scale:
                raise ValueError("field marked mean_pinned but has nonzero mean")

    @classmethod
    def zeros(cls, grid: Grid) -> "ScalarField":
        return cls(grid, np.zeros(grid.shape))

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "ScalarField":
        X, Y = grid.meshgrid()
        return cls(grid, np.asarray(fn(X, Y), dtype=float) + np.zeros(grid.shape))

    def mean(self) -> float:
        return float(self.values.mean())

    def pin_mean(self) -> "ScalarField":
        return ScalarField(self.grid, self.values - self.values.mean(), mean_pinned=True)

    def l2(self) -> float:
        return float(np.sqrt(np.sum(self.values**2) * self.grid.cell_volume))

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))

    def copy(self) -> "ScalarField":
        return ScalarField(self.grid, self.values.copy(), self.mean_pinned)

    def __add__(self, other):
        return ScalarField(self.grid, self.values + other.values)

    def __sub__(self, other):
        return ScalarField(self.grid, self.values - other.values)

    def __mul__(self, c: float):
        return ScalarField(self.grid, self.values * c)

    __rmul__ = __mul__

    def __neg__(self):
        return ScalarField(self.grid, -self.values)


@dataclass
class VectorField:
    grid: Grid
    u: np.ndarray
    v: np.ndarray
    bc: BoundaryCondition = BoundaryCondition.NO_SLIP

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        if self.u.shape != self.grid.shape or self.v.shape != self.grid.shape:
            raise ValueError("component shapes do not match grid shape")

    @classmethod
    def zeros(cls, grid: Grid, bc: BoundaryCondition = BoundaryCondition.NO_SLIP):
        return cls(grid, np.zeros(grid.shape), np.zeros(grid.shape), bc)

    @classmethod
    def from_functions(cls, grid: Grid, fu, fv,
                       bc: BoundaryCondition = BoundaryCondition.NO_SLIP):
        X, Y = grid.meshgrid()
        u = np.asarray(fu(X, Y), dtype=float) + np.zeros(grid.shape)
        v = np.asarray(fv(X, Y), dtype=float) + np.zeros(grid.shape)
        return cls(grid, u, v, bc)

    def l2(self) -> float:
        return float(np.sqrt((np.sum(self.u**2) + np.sum(self.v**2))
                             * self.grid.cell_volume))

    def max_abs(self) -> float:
        return float(max(np.max(np.abs(self.u)), np.max(np.abs(self.v))))

    def copy(self) -> "VectorField":
        return VectorField(self.grid, self.u.copy(), self.v.copy(), self.bc)

    def with_bc(self, bc: BoundaryCondition) -> "VectorField":
        return VectorField(self.grid, self.u, self.v, bc)

    def __add__(self, other):
        return VectorField(self.grid, self.u + other.u, self.v + other.v, self.bc)

    def __sub__(self, other):
        return VectorField(self.grid, self.u - other.u, self.v - other.v, self.bc)

    def __mul__(self, c: float):
        return VectorField(self.grid, self.u * c, self.v * c, self.bc)

    __rmul__ = __mul__

    def __neg__(self):
        return VectorField(self.grid, -self.u, -self.v, self.bc)


@dataclass(frozen=True)
class Norms:
    """L2 norm, H1 seminorm and Laplacian norm of a velocity-like field."""

    l2: float
    h1_semi: float
    lap_l2: float

    def __post_init__(self):
        if self.l2 < 0 or self.h1_semi < 0 or self.lap_l2 < 0:
            raise ValueError("norms must be nonnegative")


def inner(a, b) -> float:
    """Cell-volume weighted L2 inner product of two like fields."""
    if a.grid.shape != b.grid.shape:
        raise ValueError("fields live on different grids")
    w = a.grid.cell_volume
    if isinstance(a, ScalarField) and isinstance(b, ScalarField):
        return float(np.sum(a.values * b.values) * w)
    if isinstance(a, VectorField) and isinstance(b, VectorField):
        return float((np.sum(a.u * b.u) + np.sum(a.v * b.v)) * w)
    raise TypeError("inner product requires two fields of the same kind")
