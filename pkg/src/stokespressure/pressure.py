"""Helmholtz decomposition and the pressure splitting.

The total pressure of the unconstrained momentum equation splits into

* the convective (Euler) part ``p_E``:   P(u.grad u - f) = u.grad u - f + grad p_E,
* the viscous (Stokes) part ``p_S``:     P(-lap u) = -lap u + grad(div u) + grad p_S,
* and, under nonhomogeneous side data, a lifting part ``p_gh`` obtained
  from a weak Neumann problem driven by the prescribed divergence and the
  rate of boundary flux.

``P`` is the discrete Leray projection built from the adjoint-exact
gradient/divergence pair: P a = a + grad q with q the weak-Neumann
solution of lap q = -div a.  Because div is exactly -grad^T, P is an
exact orthogonal projector (symmetric, idempotent, Pythagorean) up to the
linear-solver tolerance, and P annihilates every discrete gradient --
in particular P grad(div u) = 0, which makes the two standard forms of
grad p_S identical here.

The viscous pressure gradient is *defined* by the projection identity
(the cross form above) rather than by discretizing its Neumann boundary
data; harmonicity and the boundary-data characterization then become
checkable properties instead of definitions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .elliptic import (DEFAULT_TOL, EllipticProblem, ProblemKind, solve,
                       solve_vector)
from .errors import IncompatibleData
from .fields import BoundaryCondition, ScalarField, VectorField, inner
from .grid import Grid
from .operators import advect as _advect
from .operators import div, grad, laplacian


@dataclass
class PressureSplit:
    """Mean-pinned pressure components; total pressure is p_E + nu p_S + p_gh."""

    p_euler: ScalarField
    p_stokes: ScalarField
    p_gh: ScalarField | None = None

    def total(self, nu: float) -> ScalarField:
        p = self.p_euler + nu * self.p_stokes
        if self.p_gh is not None:
            p = p + self.p_gh
        return p.pin_mean()


def helmholtz_project(a: VectorField, tol: float = DEFAULT_TOL,
                      method: str = "auto"):
    """Leray projection of a vector field.

    Returns ``(pa, q)`` with ``pa = a + grad q`` orthogonal to every
    discrete gradient and ``q`` the mean-pinned potential solving the
    weak Neumann problem with right-hand side ``-div a``.
    """
    problem = EllipticProblem(ProblemKind.POISSON_NEUMANN, a.grid)
    q, _ = solve(problem, -div(a), tol=tol, method=method)
    pa = a + grad(q)
    return pa, q


def stokes_pressure(u: VectorField, tol: float = DEFAULT_TOL,
                    method: str = "auto"):
    """Viscous wall pressure of a no-slip velocity field.

    Computes grad p_S = (I - P)(lap u - grad(div u)) and recovers the
    mean-pinned potential from the projection's internal Neumann solve.
    Returns ``(p_s, grad_p_s)``.
    """
    a = laplacian(u, "dirichlet") - grad(div(u))
    _, q = helmholtz_project(a, tol=tol, method=method)
    p_s = (-q).pin_mean()
    return p_s, grad(p_s)


def euler_pressure(u: VectorField, f: VectorField | None = None,
                   advection: VectorField | None = None,
                   tol: float = DEFAULT_TOL, method: str = "auto"):
    """Convective pressure: grad p_E = (P - I)(u.grad u - f).

    ``advection`` may supply a precomputed convective term (the time
    stepper reuses its own).  Returns ``(p_e, grad_p_e)``.
    """
    a = advection if advection is not None else _advect(u)
    if f is not None:
        a = a - f
    _, q = helmholtz_project(a, tol=tol, method=method)
    p_e = q.pin_mean()
    return p_e, grad(p_e)


def grad_div_dirichlet_inverse(g: VectorField, tol: float = DEFAULT_TOL,
                               method: str = "auto") -> VectorField:
    """grad(div(.)) of the componentwise Poisson solution with Dirichlet walls.

    This is the bounded operator that reproduces I - P exactly on the
    boundary-free harness; with walls, the difference (I - P - this) is
    precisely the viscous pressure gradient map.
    """
    problem = EllipticProblem(ProblemKind.POISSON_DIRICHLET, g.grid)
    sol, _ = solve_vector(problem, g, tol=tol, method=method)
    return grad(div(sol))


def _wall_flux_total(dt_g_normal: dict, grid: Grid) -> float:
    total = 0.0
    for name, vals in dt_g_normal.items():
        h = grid.dx if name.startswith("y") else grid.dy
        total += float(np.sum(vals)) * h
    return total


def nonhomogeneous_pressure(h: ScalarField, nu: float,
                            dt_h: ScalarField | None = None,
                            dt_g_normal: dict | None = None,
                            tol: float = DEFAULT_TOL, method: str = "auto",
                            strict: bool = True) -> ScalarField:
    """Pressure correction for prescribed divergence and boundary flux rate.

    Solves the weak Neumann problem

        <grad p, grad phi> = -<d/dt(n.g), phi>_wall + <d/dt h, phi>
                             + nu <grad h, grad phi>

    for all discrete phi.  ``dt_g_normal`` maps wall names ("y0", "y1",
    "x0", "x1") to arrays of d/dt of the outward normal velocity sampled
    at wall-adjacent cell centers; the wall integral is lumped onto the
    adjacent cell row.  Raises IncompatibleData when the net boundary flux
    rate does not balance the net rate of prescribed divergence.
    """
    grid = h.grid
    dt_g_normal = dt_g_normal or {}
    for name in dt_g_normal:
        if name not in ("y0", "y1", "x0", "x1"):
            raise ValueError(f"unknown wall name {name!r}")

    flux_rate = _wall_flux_total(dt_g_normal, grid)
    mass_rate = float(dt_h.values.sum()) * grid.cell_volume if dt_h is not None else 0.0
    scale = max(abs(flux_rate), abs(mass_rate), 1.0e-30)
    if strict and abs(flux_rate - mass_rate) > 1e-8 * scale:
        raise IncompatibleData(
            f"boundary flux rate {flux_rate:.6e} does not balance "
            f"divergence rate {mass_rate:.6e}")

    # cell-level right-hand side of the weak form, as a scalar field:
    #   b = dt_h + nu * (G^T G) h - (lumped wall term)
    b = np.zeros(grid.shape)
    if dt_h is not None:
        b += dt_h.values
    gh = grad(h)
    b += -nu * div(gh).values  # G^T G h = -div(grad h) with the adjoint pair
    for name, vals in dt_g_normal.items():
        vals = np.asarray(vals, dtype=float)
        if name == "y0":
            b[:, 0] -= vals / grid.dy
        elif name == "y1":
            b[:, -1] -= vals / grid.dy
        elif name == "x0":
            b[0, :] -= vals / grid.dx
        else:
            b[-1, :] -= vals / grid.dx

    # weak form reads (G^T G) p = b; the Neumann solver inverts exactly that
    # operator for "lap p = -b".
    problem = EllipticProblem(ProblemKind.POISSON_NEUMANN, grid)
    p, _ = solve(problem, ScalarField(grid, -b), tol=tol, method=method)
    return p.pin_mean()


def projection_defects(a: VectorField, tol: float = DEFAULT_TOL) -> dict:
    """Idempotence / Pythagoras / gradient-annihilation defects of P at ``a``.

    Diagnostic helper used by the verification suites; all values are
    relative to the scale of ``a``.
    """
    pa, q = helmholtz_project(a, tol=tol)
    ppa, _ = helmholtz_project(pa, tol=tol)
    scale = max(a.l2(), 1e-300)
    idem = (ppa - pa).l2() / scale
    pyth = abs(pa.l2()**2 + (a - pa).l2()**2 - a.l2()**2) / scale**2
    ortho = abs(inner(pa, grad(q))) / max(pa.l2() * grad(q).l2(), 1e-300)
    return {"idempotence": idem, "pythagoras": pyth, "orthogonality": ortho}
