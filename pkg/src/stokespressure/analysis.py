"""Numerical verification of the analytic structure.

This module measures, on assembled discrete operators, the claims the
formulation rests on:

* the viscous-pressure gradient map is strictly dominated by the
  Laplacian: |grad p_S|^2 <= beta |lap u|^2 + C |grad u|^2 with beta
  safely below 1 (:func:`estimate_domination_constant`);
* the unconstrained viscous operator B u = -P lap u - grad div u has a
  spectrum in the open right half plane (:func:`spectrum`);
* the full scheme converges at first order in time and second order in
  space on a manufactured solution (:func:`mms_convergence`);
* divergence-type quantities decay at the no-flux heat rate
  (:func:`decay_fit`).

Dense assembly builds operators column by column from the matrix-free
implementations, capped at grids of 48^2 cells; a shifted power iteration
covers the generalized eigenvalue problems beyond the dense cap.

Norm convention: for velocity fields, |grad u|^2 is the Dirichlet energy
<-lap u, u> of the compact Laplacian.  It is equivalent to the centered
gram form on smooth fields but remains positive definite on oscillatory
ones, which the penalty term of the domination estimate requires.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

from . import matrices
from .elliptic import DEFAULT_TOL, EllipticProblem, ProblemKind, solve_flat
from .errors import DegenerateSeries, GridTooLarge, NonConvergence
from .fields import BoundaryCondition, ScalarField, VectorField
from .grid import Grid, Topology
from .operators import div, grad, laplacian
from .pressure import (grad_div_dirichlet_inverse, helmholtz_project,
                       stokes_pressure)
from .timestepper import RunConfig, run

DENSE_CELL_CAP = 48 * 48
DEFAULT_C_VALUES = (0.0, 1.0, 10.0, 100.0, 1000.0, 10000.0)


class DenseOperator(Enum):
    PROJECTION = "projection"
    GRAD_DIV_INVERSE = "grad-div-inverse"
    STOKES_PRESSURE_GRAD = "stokes-pressure-grad"
    UNCONSTRAINED_STOKES = "unconstrained-stokes"


def _check_dense_cap(grid: Grid):
    if grid.size > DENSE_CELL_CAP:
        raise GridTooLarge(f"{grid.nx}x{grid.ny} exceeds the dense cap "
                           f"({DENSE_CELL_CAP} cells)")


def _apply_vector_op(op: DenseOperator, grid: Grid, vec: np.ndarray,
                     tol: float) -> np.ndarray:
    u, v = matrices.unflatten_vector(vec, grid)
    w = VectorField(grid, u, v, BoundaryCondition.NO_SLIP)
    if op is DenseOperator.PROJECTION:
        out, _ = helmholtz_project(w, tol=tol)
    elif op is DenseOperator.GRAD_DIV_INVERSE:
        out = grad_div_dirichlet_inverse(w, tol=tol)
    elif op is DenseOperator.STOKES_PRESSURE_GRAD:
        _, out = stokes_pressure(w, tol=tol)
    elif op is DenseOperator.UNCONSTRAINED_STOKES:
        pa, _ = helmholtz_project(laplacian(w, "dirichlet"), tol=tol)
        out = -pa - grad(div(w))
    else:
        raise ValueError(op)
    return matrices.flatten_vector(out.u, out.v)


def assemble_dense(op: DenseOperator, grid: Grid,
                   tol: float = DEFAULT_TOL) -> np.ndarray:
    """Dense (2N x 2N) matrix of a vector-field operator, column by column."""
    _check_dense_cap(grid)
    n = 2 * grid.size
    out = np.empty((n, n))
    e = np.zeros(n)
    for k in range(n):
        e[k] = 1.0
        out[:, k] = _apply_vector_op(op, grid, e, tol)
        e[k] = 0.0
    return out


# ---------------------------------------------------------------------------
# spectrum of the unconstrained viscous operator

@dataclass
class SpectrumReport:
    grid_size: tuple[int, int]
    eigenvalues: np.ndarray          # sorted by real part
    min_real_part: float
    min_abs: float
    neumann_smallest_nonzero: float  # comparison scale, reported not asserted

    @property
    def positive(self) -> bool:
        return self.min_real_part > 0.0


def _neumann_smallest_nonzero(grid: Grid) -> float:
    A = matrices.neumann_operator(grid).toarray()
    w = np.linalg.eigvalsh(A)
    nker = matrices.kernel_basis(grid).shape[1]
    return float(w[nker])


def spectrum(grid: Grid, tol: float = DEFAULT_TOL) -> SpectrumReport:
    """Eigenvalues of the assembled unconstrained viscous operator."""
    _check_dense_cap(grid)
    B = assemble_dense(DenseOperator.UNCONSTRAINED_STOKES, grid, tol=tol)
    ev = np.linalg.eigvals(B)
    ev = ev[np.argsort(ev.real)]
    return SpectrumReport(grid_size=grid.shape, eigenvalues=ev,
                          min_real_part=float(ev.real.min()),
                          min_abs=float(np.abs(ev).min()),
                          neumann_smallest_nonzero=_neumann_smallest_nonzero(grid))


# ---------------------------------------------------------------------------
# domination constant

@dataclass
class DominationEstimate:
    """Empirical constants of the viscous domination inequality.

    For each penalty c, ``sup_ratios[c]`` is the maximum over nonzero
    no-slip u of (|grad p_S(u)|^2 - c |grad u|^2) / |lap u|^2; ``beta`` is
    the smallest of these, clipped at zero.  ``c_star`` is the penalty at
    which the minimum is attained, so the sampled inequality
    |grad p_S|^2 <= beta |lap u|^2 + c_star |grad u|^2 holds for every
    discrete field.
    """

    grid_size: tuple[int, int]
    c_values: tuple
    sup_ratios: np.ndarray
    top_eigenvalues: np.ndarray      # top 3 per c (dense mode; NaN-padded otherwise)
    beta: float
    c_star: float
    iterations: int
    method: str


def _domination_matrices(grid: Grid, tol: float):
    S = assemble_dense(DenseOperator.STOKES_PRESSURE_GRAD, grid, tol=tol)
    L = matrices.vector_laplacian_matrix(grid, "dirichlet").toarray()
    K = -L  # Dirichlet energy matrix: |grad u|^2 = u^T K u (per unit cell volume)
    return S, L, K


def estimate_domination_constant(grid: Grid, c_values=DEFAULT_C_VALUES,
                                 method: str = "auto", tol: float = DEFAULT_TOL,
                                 power_tol: float = 1e-8,
                                 max_power_iter: int = 5000) -> DominationEstimate:
    """Estimate the domination constant on a grid.

    ``method`` is "dense" (full symmetric eigensolves, grids up to the
    dense cap), "power" (shifted power iteration on the same pencil), or
    "auto" (dense when allowed, else power).
    """
    c_values = tuple(float(c) for c in c_values)
    if method == "auto":
        method = "dense" if grid.size <= DENSE_CELL_CAP else "power"
    if method == "dense":
        return _domination_dense(grid, c_values, tol)
    if method == "power":
        return _domination_power(grid, c_values, tol, power_tol, max_power_iter)
    raise ValueError(f"unknown method {method!r}")


def _domination_dense(grid, c_values, tol):
    _check_dense_cap(grid)
    S, L, K = _domination_matrices(grid, tol)
    # substitute y = L u: the pencil becomes an ordinary symmetric eigenproblem
    Linv = sla.inv(L)
    St = S @ Linv
    A0 = St.T @ St
    Kt = Linv.T @ K @ Linv
    sups, tops = [], []
    for c in c_values:
        w = np.linalg.eigvalsh(A0 - c * Kt)
        sups.append(float(w[-1]))
        tops.append(w[-3:][::-1])
    sups = np.array(sups)
    ibest = int(np.argmin(sups))
    return DominationEstimate(grid_size=grid.shape, c_values=c_values,
                              sup_ratios=sups, top_eigenvalues=np.array(tops),
                              beta=max(0.0, float(sups.min())),
                              c_star=c_values[ibest], iterations=0, method="dense")


def _power_extreme(apply_fn, n, rng, tol, max_iter, mode="max"):
    """Largest (or smallest, mode="min") eigenvalue of an SPD-symmetrized map."""
    x = rng.standard_normal(n)
    x /= np.linalg.norm(x)
    lam = 0.0
    for it in range(1, max_iter + 1):
        y = apply_fn(x)
        lam_new = float(x @ y)
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return 0.0, it
        x = y / ny
        if abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)):
            return lam_new, it
        lam = lam_new
    raise NonConvergence(max_iter, abs(lam_new - lam))


def _domination_power(grid, c_values, tol, power_tol, max_iter):
    """Shifted power iteration on M^{-1}(S^T S - c K + sigma M), M = L^T L."""
    L = matrices.vector_laplacian_matrix(grid, "dirichlet").tocsr()
    K = (-L).tocsr()
    dirichlet = EllipticProblem(ProblemKind.POISSON_DIRICHLET, grid)

    def lap_inv(vec):
        N = grid.size
        a, _ = solve_flat(dirichlet, -vec[:N], tol)   # (-lap) x = -b, i.e. lap x = b
        b, _ = solve_flat(dirichlet, -vec[N:], tol)
        return np.concatenate([a, b])

    def m_inv(vec):
        # M = L^T L with L symmetric, so M^{-1} is two Dirichlet solves
        return lap_inv(lap_inv(vec))

    def s_apply(vec):
        return _apply_vector_op(DenseOperator.STOKES_PRESSURE_GRAD, grid, vec, tol)

    def st_apply(vec):
        # adjoint: S^T = (lap - grad div)(I - P); all three factors symmetric
        u, v = matrices.unflatten_vector(vec, grid)
        w = VectorField(grid, u, v, BoundaryCondition.NO_SLIP)
        pa, _ = helmholtz_project(w, tol=tol)
        r = pa - w  # -(I - P) w
        out = -laplacian(r, "dirichlet") + grad(div(r))
        return matrices.flatten_vector(out.u, out.v)

    rng = np.random.default_rng(1729)
    n = 2 * grid.size
    total_iters = 0

    # lower bound for |grad u|^2 / |lap u|^2 via the smallest Dirichlet
    # eigenvalue, from inverse power iteration on M = L^T L
    lam1, it0 = _power_extreme(m_inv, n, rng, power_tol, max_iter)
    total_iters += it0
    lam_min_dirichlet = 1.0 / np.sqrt(lam1)

    sups = []
    for c in c_values:
        sigma = c / lam_min_dirichlet + 1.0

        def pencil(x, c=c, sigma=sigma):
            return m_inv(st_apply(s_apply(x)) - c * (K @ x)
                         + sigma * (L.T @ (L @ x)))

        lam, it = _power_extreme(pencil, n, rng, power_tol, max_iter)
        total_iters += it
        sups.append(lam - sigma)
    sups = np.array(sups)
    ibest = int(np.argmin(sups))
    tops = np.full((len(c_values), 3), np.nan)
    tops[:, 0] = sups
    return DominationEstimate(grid_size=grid.shape, c_values=tuple(c_values),
                              sup_ratios=sups, top_eigenvalues=tops,
                              beta=max(0.0, float(sups.min())),
                              c_star=c_values[ibest], iterations=total_iters,
                              method="power")


def domination_samples(grid: Grid, estimate: DominationEstimate, n_samples: int,
                       seed: int, beta_bound: float) -> int:
    """Count sampled violations of |grad p_S|^2 <= beta_bound |lap u|^2
    + c_star |grad u|^2 over random smooth no-slip fields."""
    from .operators import norms
    from .sampling import generator, random_smooth_noslip
    rng = generator(seed)
    violations = 0
    for _ in range(n_samples):
        u = random_smooth_noslip(grid, rng)
        _, gps = stokes_pressure(u)
        nm = norms(u)
        lhs = gps.l2()**2
        rhs = beta_bound * nm.lap_l2**2 + estimate.c_star * nm.h1_semi**2
        if lhs > rhs * (1.0 + 1e-10):
            violations += 1
    return violations


# ---------------------------------------------------------------------------
# manufactured solution and convergence study

class ManufacturedSolution:
    """Divergence-free no-slip reference flow with compatible forcing.

    Stream function sin(2 pi x / lx) * y^2 (ly - y)^2 * cos(t) (times an
    amplitude), pressure cos(2 pi x / lx) cos(pi y / ly) cos(t).  The
    x-dependent wall shear makes the viscous wall pressure active.  The
    forcing is derived symbolically once and compiled to numpy.
    """

    def __init__(self, lx: float = 1.0, ly: float = 1.0, amplitude: float = 1.0):
        import sympy

        self.lx, self.ly, self.amplitude = lx, ly, amplitude
        x, y, t, nu = sympy.symbols("x y t nu")
        psi = amplitude * sympy.sin(2 * sympy.pi * x / lx) \
            * y**2 * (ly - y)**2 * sympy.cos(t)
        us = sympy.diff(psi, y)
        vs = -sympy.diff(psi, x)
        ps = amplitude * sympy.cos(2 * sympy.pi * x / lx) \
            * sympy.cos(sympy.pi * y / ly) * sympy.cos(t)

        def lap(f):
            return sympy.diff(f, x, 2) + sympy.diff(f, y, 2)

        fu = sympy.diff(us, t) + us * sympy.diff(us, x) + vs * sympy.diff(us, y) \
            + sympy.diff(ps, x) - nu * lap(us)
        fv = sympy.diff(vs, t) + us * sympy.diff(vs, x) + vs * sympy.diff(vs, y) \
            + sympy.diff(ps, y) - nu * lap(vs)
        mods = ["numpy"]
        self._u = sympy.lambdify((x, y, t), us, mods)
        self._v = sympy.lambdify((x, y, t), vs, mods)
        self._fu = sympy.lambdify((x, y, t, nu), fu, mods)
        self._fv = sympy.lambdify((x, y, t, nu), fv, mods)
        self._psi = sympy.lambdify((x, y, t), psi, mods)

    def velocity(self, t: float, grid: Grid) -> VectorField:
        X, Y = grid.meshgrid()
        return VectorField(grid, self._u(X, Y, t), self._v(X, Y, t),
                           BoundaryCondition.NO_SLIP)

    def stream(self, t: float, grid: Grid) -> ScalarField:
        X, Y = grid.meshgrid()
        return ScalarField(grid, self._psi(X, Y, t))

    def forcing(self, nu: float):
        def f(t: float, grid: Grid) -> VectorField:
            X, Y = grid.meshgrid()
            return VectorField(grid, self._fu(X, Y, t, nu),
                               self._fv(X, Y, t, nu), BoundaryCondition.FREE)
        return f

    def normalized_initial(self, grid: Grid, grad_norm: float = 1.0) -> VectorField:
        """Initial field rescaled so its Dirichlet seminorm is ``grad_norm``."""
        from .operators import norms
        u = self.velocity(0.0, grid)
        h1 = norms(u).h1_semi
        return u * (grad_norm / h1)


@dataclass
class MmsReport:
    rows: list                    # (nx, dt, error) for every run performed
    spatial_resolutions: tuple
    spatial_errors: np.ndarray
    spatial_slope: float
    dts: tuple
    temporal_errors: np.ndarray
    temporal_slope: float


def _loglog_slope(x, y):
    return float(np.polyfit(np.log(np.asarray(x, dtype=float)),
                            np.log(np.asarray(y, dtype=float)), 1)[0])


def mms_convergence(resolutions=(16, 24, 32, 48), dts=(0.025, 0.0125, 0.00625, 0.003125),
                    nu: float = 0.05, t_end_spatial: float = 0.1,
                    t_end_temporal: float = 0.2, dt_spatial: float = 2.5e-4,
                    topology: Topology = Topology.PERIODIC_CHANNEL,
                    exact: ManufacturedSolution | None = None,
                    tol: float = DEFAULT_TOL) -> MmsReport:
    """Convergence orders of the full scheme against the manufactured flow.

    Spatial sweep: error against the exact solution at ``t_end_spatial``
    with a dt small enough that spatial truncation dominates.  Temporal
    sweep: self-convergence on the finest grid against a reference run at
    one quarter of the smallest dt (spatial error cancels exactly).
    """
    ms = exact or ManufacturedSolution()
    rows = []

    def final_velocity(nx, dt, t_end):
        grid = Grid(topology, nx, nx, ms.lx, ms.ly)
        cfg = RunConfig(grid=grid, nu=nu, dt=dt, t_end=t_end,
                        forcing=ms.forcing(nu), u0=ms.velocity(0.0, grid),
                        tol=tol)
        return run(cfg).final.u, grid, cfg.n_steps * dt

    spatial_errors = []
    for nx in resolutions:
        u, grid, tf = final_velocity(nx, dt_spatial, t_end_spatial)
        err = (u - ms.velocity(tf, grid)).l2()
        spatial_errors.append(err)
        rows.append((nx, dt_spatial, err))
    spatial_slope = -_loglog_slope(resolutions, spatial_errors)

    nx = max(resolutions)
    dt_ref = min(dts) / 4.0
    u_ref, grid, _ = final_velocity(nx, dt_ref, t_end_temporal)
    temporal_errors = []
    for dt in dts:
        u, _, _ = final_velocity(nx, dt, t_end_temporal)
        err = (u - u_ref).l2()
        temporal_errors.append(err)
        rows.append((nx, dt, err))
    temporal_slope = _loglog_slope(dts, temporal_errors)

    return MmsReport(rows=rows, spatial_resolutions=tuple(resolutions),
                     spatial_errors=np.array(spatial_errors),
                     spatial_slope=spatial_slope, dts=tuple(dts),
                     temporal_errors=np.array(temporal_errors),
                     temporal_slope=temporal_slope)


# ---------------------------------------------------------------------------
# decay fitting

NOISE_FLOOR = 1e-14


def fit_exponential_rate(times, values) -> float:
    """Least-squares exponential rate: values ~ exp(-rate * t)."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(times) < 2:
        raise DegenerateSeries("need at least two samples")
    if np.any(values <= 0):
        raise DegenerateSeries("series is not strictly positive")
    return -float(np.polyfit(times, np.log(values), 1)[0])


def decay_fit(records, quantity: str = "div_norm_sq") -> float:
    """Exponential decay rate of a diagnostics quantity over the tail half.

    Quantities named ``*_sq`` are squared norms; the reported rate is for
    the norm itself (half the log-slope of the square).  Raises
    DegenerateSeries when the tail sits at the solver noise floor.
    """
    if len(records) < 10:
        raise DegenerateSeries("need at least 10 records")
    t = np.array([r.t for r in records])
    v = np.array([getattr(r, quantity) for r in records])
    tail = t >= 0.5 * t[-1]
    t, v = t[tail], v[tail]
    floor = NOISE_FLOOR**2 if quantity.endswith("_sq") else NOISE_FLOOR
    if np.any(v <= floor):
        raise DegenerateSeries(f"{quantity} tail at or below the noise floor")
    rate = fit_exponential_rate(t, v)
    return rate / 2.0 if quantity.endswith("_sq") else rate
