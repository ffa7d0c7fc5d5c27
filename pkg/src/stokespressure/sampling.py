"""Seeded random and manufactured test fields.

All randomized suites in this package draw from one explicit PCG64
generator created by :func:`generator`, so every experiment is exactly
reproducible from its seed.
"""

from __future__ import annotations

import numpy as np

from .fields import BoundaryCondition, ScalarField, VectorField
from .grid import Grid
from .operators import velocity_from_stream


def generator(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def random_scalar(grid: Grid, rng: np.random.Generator,
                  mean_zero: bool = False) -> ScalarField:
    vals = rng.standard_normal(grid.shape)
    field = ScalarField(grid, vals)
    return field.pin_mean() if mean_zero else field


def random_vector(grid: Grid, rng: np.random.Generator,
                  bc: BoundaryCondition = BoundaryCondition.FREE) -> VectorField:
    return VectorField(grid, rng.standard_normal(grid.shape),
                       rng.standard_normal(grid.shape), bc)


def _wall_envelope(coords: np.ndarray, length: float) -> np.ndarray:
    # vanishes quadratically at 0 and length; scaled to unit maximum
    e = (coords * (length - coords)) ** 2
    return e / e.max()


def random_smooth_noslip(grid: Grid, rng: np.random.Generator, modes: int = 3,
                         amplitude: float = 1.0) -> VectorField:
    """Random smooth field with both components vanishing at every wall.

    Trigonometric polynomial (random coefficients, wavenumbers up to
    ``modes``) times a quartic wall envelope per non-periodic direction.
    Not divergence-free in general.
    """
    X, Y = grid.meshgrid()
    comps = []
    for _ in range(2):
        vals = np.zeros(grid.shape)
        for kx in range(modes + 1):
            for ky in range(modes + 1):
                ax = 2 * np.pi * kx * X / grid.lx
                ay = np.pi * ky * Y / grid.ly
                a, b, c, d = rng.standard_normal(4)
                vals += (a * np.cos(ax) + b * np.sin(ax)) * np.cos(ay)
                vals += (c * np.cos(ax) + d * np.sin(ax)) * np.sin(ay)
        comps.append(vals)
    u, v = comps
    if not grid.periodic_x:
        env = _wall_envelope(X, grid.lx)
        u, v = u * env, v * env
    if not grid.periodic_y:
        env = _wall_envelope(Y, grid.ly)
        u, v = u * env, v * env
    field = VectorField(grid, u, v, BoundaryCondition.NO_SLIP)
    scale = field.l2()
    return field * (amplitude / scale) if scale > 0 else field


def random_smooth_stream(grid: Grid, rng: np.random.Generator, modes: int = 3,
                         amplitude: float = 1.0) -> ScalarField:
    """Random smooth stream function vanishing (quadratically) at walls."""
    f = random_smooth_noslip(grid, rng, modes=modes, amplitude=1.0)
    psi = ScalarField(grid, f.u)
    scale = psi.l2()
    return ScalarField(grid, psi.values * (amplitude / scale)) if scale > 0 else psi


def random_smooth_divfree(grid: Grid, rng: np.random.Generator, modes: int = 3,
                          amplitude: float = 1.0) -> VectorField:
    """Random exactly divergence-free no-slip field (curl of a stream)."""
    psi = random_smooth_stream(grid, rng, modes=modes)
    field = velocity_from_stream(psi)
    scale = field.l2()
    return field * (amplitude / scale) if scale > 0 else field


def stream_bump(grid: Grid, center: tuple[float, float] = (0.5, 0.5),
                width: tuple[float, float] = (0.55, 0.45)) -> ScalarField:
    """Smooth stream function supported strictly inside the domain.

    cos^4 bump: identically zero outside the stated support box, so the
    induced velocity has no contact with the walls (up to the stencil
    radius).  Width is the full support extent in each direction.
    """
    X, Y = grid.meshgrid()
    cx, cy = center
    wx, wy = width
    rx = np.clip((X - cx * grid.lx) / (0.5 * wx * grid.lx), -1.0, 1.0)
    ry = np.clip((Y - cy * grid.ly) / (0.5 * wy * grid.ly), -1.0, 1.0)
    vals = (np.cos(0.5 * np.pi * rx) ** 4) * (np.cos(0.5 * np.pi * ry) ** 4)
    vals[np.abs(rx) >= 1.0] = 0.0
    vals[np.abs(ry) >= 1.0] = 0.0
    return ScalarField(grid, vals)


def divergence_mode_velocity(grid: Grid, amplitude: float = 1.0) -> VectorField:
    """No-slip field whose discrete divergence is the lowest wall-compatible
    cosine mode in y (an exact eigenvector of the weak Neumann operator)."""
    X, Y = grid.meshgrid()
    v = amplitude * (grid.ly / np.pi) * np.sin(np.pi * Y / grid.ly)
    return VectorField(grid, np.zeros(grid.shape), v, BoundaryCondition.NO_SLIP)
