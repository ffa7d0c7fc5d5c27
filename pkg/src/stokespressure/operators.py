"""Discrete differential operators on cell-centered fields.

All stencils are second-order centered differences closed by ghost cells:
periodic wrap in periodic directions, and at walls either an even
reflection (ghost = nearest interior value) or an odd reflection
(ghost = minus nearest interior value).  The reflection mode encodes the
boundary condition: even for scalars with a no-flux wall condition
(pressure-like potentials), odd for quantities that vanish on the wall
(no-slip velocity components, Dirichlet scalars).

The pairing matters and is load-bearing: with ``grad`` closed by even
reflection and ``div`` closed by odd reflection the two operators are
exact negative adjoints of each other in the discrete inner product,

    inner(grad p, w) == -inner(p, div w)        (to rounding error)

for every scalar p and vector w.  The Helmholtz decomposition, the
viscous wall pressure, and every projection identity in this package
inherit their exactness from that single algebraic fact, so ``grad`` and
``div`` deliberately do not consult field metadata for their wall
closure.  One-sided stencils appear only in boundary-trace extraction
(:func:`wall_traces`), never inside anything that is later inverted.
"""

from __future__ import annotations

import numpy as np

from .fields import BoundaryCondition, Norms, ScalarField, VectorField, inner
from .grid import Grid


def _pad(values: np.ndarray, grid: Grid, wall_mode: str) -> np.ndarray:
    """Extend an (nx, ny) array by one ghost layer on each side."""
    nx, ny = values.shape
    out = np.empty((nx + 2, ny + 2))
    out[1:-1, 1:-1] = values
    if grid.periodic_x:
        out[0, 1:-1] = values[-1, :]
        out[-1, 1:-1] = values[0, :]
    elif wall_mode == "even":
        out[0, 1:-1] = values[0, :]
        out[-1, 1:-1] = values[-1, :]
    else:
        out[0, 1:-1] = -values[0, :]
        out[-1, 1:-1] = -values[-1, :]
    if grid.periodic_y:
        out[1:-1, 0] = values[:, -1]
        out[1:-1, -1] = values[:, 0]
    elif wall_mode == "even":
        out[1:-1, 0] = values[:, 0]
        out[1:-1, -1] = values[:, -1]
    else:
        out[1:-1, 0] = -values[:, 0]
        out[1:-1, -1] = -values[:, -1]
    # corners are never read by the 5-point / centered stencils below
    return out


def _ddx(padded: np.ndarray, dx: float) -> np.ndarray:
    return (padded[2:, 1:-1] - padded[:-2, 1:-1]) / (2.0 * dx)


def _ddy(padded: np.ndarray, dy: float) -> np.ndarray:
    return (padded[1:-1, 2:] - padded[1:-1, :-2]) / (2.0 * dy)


def _lap(padded: np.ndarray, dx: float, dy: float) -> np.ndarray:
    c = padded[1:-1, 1:-1]
    return ((padded[2:, 1:-1] - 2.0 * c + padded[:-2, 1:-1]) / dx**2
            + (padded[1:-1, 2:] - 2.0 * c + padded[1:-1, :-2]) / dy**2)


def grad(p: ScalarField) -> VectorField:
    """Centered gradient of a scalar, walls closed by even reflection."""
    g = p.grid
    padded = _pad(p.values, g, "even")
    return VectorField(g, _ddx(padded, g.dx), _ddy(padded, g.dy),
                       BoundaryCondition.FREE)


def div(w: VectorField) -> ScalarField:
    """Centered divergence, walls closed by odd reflection.

    This is the exact negative adjoint of :func:`grad` regardless of the
    field's ``bc`` tag; see the module docstring.
    """
    g = w.grid
    pu = _pad(w.u, g, "odd")
    pv = _pad(w.v, g, "odd")
    return ScalarField(g, _ddx(pu, g.dx) + _ddy(pv, g.dy))


def _wall_mode_for(bc: str) -> str:
    if bc in ("dirichlet", "dirichlet0"):
        return "odd"
    if bc in ("neumann", "neumann0"):
        return "even"
    raise ValueError(f"unknown boundary condition {bc!r}")


def laplacian(f, bc: str | None = None):
    """Compact 5-point Laplacian.

    ``bc`` selects the wall closure for scalars ("dirichlet" or
    "neumann").  Vector fields are differentiated componentwise with the
    closure implied by their own bc tag (no-slip -> dirichlet).
    """
    if isinstance(f, ScalarField):
        if bc is None:
            raise ValueError("scalar laplacian needs an explicit bc")
        g = f.grid
        return ScalarField(g, _lap(_pad(f.values, g, _wall_mode_for(bc)), g.dx, g.dy))
    if isinstance(f, VectorField):
        mode = "odd" if f.bc is BoundaryCondition.NO_SLIP else "even"
        if bc is not None:
            mode = _wall_mode_for(bc)
        g = f.grid
        return VectorField(g,
                           _lap(_pad(f.u, g, mode), g.dx, g.dy),
                           _lap(_pad(f.v, g, mode), g.dx, g.dy),
                           f.bc)
    raise TypeError("laplacian expects a ScalarField or VectorField")


def advect(w: VectorField) -> VectorField:
    """Convective derivative (w . grad) w, centered, no upwinding.

    Component derivatives use odd wall ghosts (no-slip extension).  Any
    stabilization would have to come from the implicit viscous solve, so
    none is added here.
    """
    g = w.grid
    pu = _pad(w.u, g, "odd")
    pv = _pad(w.v, g, "odd")
    au = w.u * _ddx(pu, g.dx) + w.v * _ddy(pu, g.dy)
    av = w.u * _ddx(pv, g.dx) + w.v * _ddy(pv, g.dy)
    return VectorField(g, au, av, w.bc)


def vorticity(w: VectorField) -> ScalarField:
    """Scalar curl dv/dx - du/dy with odd wall ghosts."""
    g = w.grid
    pu = _pad(w.u, g, "odd")
    pv = _pad(w.v, g, "odd")
    return ScalarField(g, _ddx(pv, g.dx) - _ddy(pu, g.dy))


def velocity_from_stream(psi, grid: Grid | None = None) -> VectorField:
    """Velocity (d psi/dy, -d psi/dx) from a stream function.

    Both derivatives use odd wall ghosts.  With that closure the discrete
    divergence of the result vanishes identically (the x- and y-shift
    stencils commute), so this is the canonical way to manufacture
    exactly divergence-free test fields.  The stream function should
    vanish at walls for the odd extension to be consistent.
    """
    if isinstance(psi, ScalarField):
        grid = psi.grid
        vals = psi.values
    else:
        if grid is None:
            raise ValueError("grid required when psi is a bare array")
        vals = np.asarray(psi, dtype=float)
    padded = _pad(vals, grid, "odd")
    return VectorField(grid, _ddy(padded, grid.dy), -_ddx(padded, grid.dx),
                       BoundaryCondition.NO_SLIP)


def wall_traces(w: VectorField) -> dict:
    """One-sided second-order extrapolation of both components to each wall.

    Returns a dict keyed by wall name ("y0", "y1", and for the closed box
    "x0", "x1"), each value a (2, n) array of (u, v) traces.  Used for
    no-slip validation only.
    """
    g = w.grid
    out = {}
    if not g.periodic_y:
        out["y0"] = np.stack([1.5 * w.u[:, 0] - 0.5 * w.u[:, 1],
                              1.5 * w.v[:, 0] - 0.5 * w.v[:, 1]])
        out["y1"] = np.stack([1.5 * w.u[:, -1] - 0.5 * w.u[:, -2],
                              1.5 * w.v[:, -1] - 0.5 * w.v[:, -2]])
    if not g.periodic_x:
        out["x0"] = np.stack([1.5 * w.u[0, :] - 0.5 * w.u[1, :],
                              1.5 * w.v[0, :] - 0.5 * w.v[1, :]])
        out["x1"] = np.stack([1.5 * w.u[-1, :] - 0.5 * w.u[-2, :],
                              1.5 * w.v[-1, :] - 0.5 * w.v[-2, :]])
    return out


def noslip_trace_defect(w: VectorField) -> float:
    """Largest wall-trace magnitude, relative to the field scale."""
    traces = wall_traces(w)
    if not traces:
        return 0.0
    worst = max(float(np.max(np.abs(t))) for t in traces.values())
    scale = w.max_abs()
    return worst / scale if scale > 0 else worst


def norms(w: VectorField) -> Norms:
    """L2, H1-seminorm and Laplacian norm of a no-slip velocity field.

    The H1 seminorm is the Dirichlet energy of the compact Laplacian,
    ``sqrt(inner(-lap w, w))``.  That form is symmetric positive definite
    (the centered-difference seminorm is blind to cell-to-cell
    oscillation and is not), and it is the quantity the implicit-viscosity
    energy estimates of the time stepper control exactly.
    """
    lap = laplacian(w, "dirichlet")
    h1_sq = max(0.0, -inner(lap, w))
    return Norms(l2=w.l2(), h1_semi=float(np.sqrt(h1_sq)), lap_l2=lap.l2())


def h1_seminorm(p: ScalarField) -> float:
    """|grad p| in L2, with the potential (even-reflection) gradient."""
    return grad(p).l2()
