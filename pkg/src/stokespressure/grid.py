"""Structured 2-D grids.

Fields live at cell centers of a uniform rectangular lattice. Three
topologies are supported:

* ``PERIODIC_CHANNEL`` -- periodic in x, no-slip walls at y = 0 and y = ly.
* ``CLOSED_BOX``       -- no-slip walls on all four sides.  The corners
  break the smooth-boundary assumptions of the underlying theory, which is
  recorded in run metadata (see :attr:`Grid.corner_flag`).
* ``PERIODIC_BOX``     -- periodic in both directions.  There is no wall
  and hence no viscous wall pressure; this topology exists as the
  degenerate harness in which the Helmholtz decomposition has a closed
  form and the wall-generated pressure must vanish identically.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np


class Topology(Enum):
    PERIODIC_CHANNEL = "channel"
    CLOSED_BOX = "box"
    PERIODIC_BOX = "periodic"

    @classmethod
    def parse(cls, name: str) -> "Topology":
        for member in cls:
            if member.value == name or member.name.lower() == name.lower():
                return member
        raise ValueError(f"unknown topology {name!r}; expected one of "
                         f"{[m.value for m in cls]}")


@dataclass(frozen=True)
class Grid:
    """Uniform cell-centered grid on [0, lx] x [0, ly]."""

    topology: Topology
    nx: int
    ny: int
    lx: float = 1.0
    ly: float = 1.0

    def __post_init__(self):
        if self.nx < 4 or self.ny < 4:
            raise ValueError("nx and ny must be at least 4")
        if self.lx <= 0 or self.ly <= 0:
            raise ValueError("lx and ly must be positive")

    @property
    def dx(self) -> float:
        return self.lx / self.nx

    @property
    def dy(self) -> float:
        return self.ly / self.ny

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def size(self) -> int:
        return self.nx * self.ny

    @property
    def cell_volume(self) -> float:
        return self.dx * self.dy

    @property
    def periodic_x(self) -> bool:
        return self.topology in (Topology.PERIODIC_CHANNEL, Topology.PERIODIC_BOX)

    @property
    def periodic_y(self) -> bool:
        return self.topology is Topology.PERIODIC_BOX

    @property
    def has_walls(self) -> bool:
        return self.topology is not Topology.PERIODIC_BOX

    @cached_property
    def x_centers(self) -> np.ndarray:
        return (np.arange(self.nx) + 0.5) * self.dx

    @cached_property
    def y_centers(self) -> np.ndarray:
        return (np.arange(self.ny) + 0.5) * self.dy

    def meshgrid(self) -> tuple[np.ndarray, np.ndarray]:
        """Cell-center coordinates as (nx, ny) arrays, index order [i, j]."""
        return np.meshgrid(self.x_centers, self.y_centers, indexing="ij")

    @property
    def corner_flag(self) -> str:
        if self.topology is Topology.CLOSED_BOX:
            return "corners: C3 boundary assumption violated"
        return "none"

    def key(self) -> tuple:
        """Hashable identity used by solver caches."""
        return (self.topology.value, self.nx, self.ny, self.lx, self.ly)

    def compatible(self, other: "Grid") -> bool:
        return self.key() == other.key()
