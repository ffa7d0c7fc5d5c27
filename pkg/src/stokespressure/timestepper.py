"""Time integration: explicit pressure and convection, implicit viscosity.

One step of the scheme, from velocity u^n to u^{n+1}:

    (u^{n+1} - u^n)/dt - nu lap u^{n+1}
        = f^n - u^n.grad u^n - grad p_E^n - nu grad p_S^n [- grad p_gh^n]

with no-slip walls enforced by the implicit solve, the two pressure
gradients evaluated from u^n by the projection formulas of
:mod:`.pressure`, and f^n the interval average of the forcing
(approximated by its midpoint sample unless exact averaging is requested).

No stability restriction links dt to the grid: the explicit viscous
pressure is dominated by the implicit viscosity term, which is the
property the analysis verification in :mod:`.analysis` measures.  A
structural consequence, checked per step by the test suite, is that the
velocity divergence obeys a discrete no-flux heat equation in weak form
and therefore decays; with prescribed divergence data h the same holds
for div u - h.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .elliptic import DEFAULT_TOL, EllipticProblem, ProblemKind, solve_vector
from .errors import Blowup
from .fields import ScalarField, VectorField, inner
from .grid import Grid
from .operators import advect, div, grad, norms
from .pressure import (PressureSplit, euler_pressure, nonhomogeneous_pressure,
                       stokes_pressure)

_GAUSS_NODES, _GAUSS_WEIGHTS = np.polynomial.legendre.leggauss(5)


@dataclass
class NonhomogeneousData:
    """Prescribed-divergence side data, restricted to zero wall-normal flux rate.

    ``h`` and ``dt_h`` may be static fields or callables ``(t, grid) ->
    ScalarField``.  The wall-normal velocity stays zero, so the lifting
    pressure is driven purely by d/dt h and nu grad h.
    """

    h: object
    dt_h: object | None = None

    def h_at(self, t: float, grid: Grid) -> ScalarField:
        return self.h(t, grid) if callable(self.h) else self.h

    def dt_h_at(self, t: float, grid: Grid) -> ScalarField | None:
        if self.dt_h is None:
            return None
        return self.dt_h(t, grid) if callable(self.dt_h) else self.dt_h


@dataclass
class RunConfig:
    grid: Grid
    nu: float
    dt: float
    t_end: float
    forcing: object | None = None          # callable (t, grid) -> VectorField
    u0: VectorField | None = None
    smooth_init: bool = False
    include_advection: bool = True
    nonhomogeneous: NonhomogeneousData | None = None
    tol: float = DEFAULT_TOL
    method: str = "auto"
    forcing_exact_average: bool = False
    blowup_threshold: float = 1e12         # on |grad u|

    def __post_init__(self):
        if self.nu <= 0:
            raise ValueError("nu must be positive")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.t_end <= 0:
            raise ValueError("t_end must be positive")
        if self.dt > self.t_end:
            raise ValueError("dt must not exceed t_end")

    @property
    def n_steps(self) -> int:
        return max(1, int(round(self.t_end / self.dt)))


@dataclass
class DiagnosticsRecord:
    step: int
    t: float
    energy: float
    grad_norm_sq: float
    lap_norm_sq: float
    div_norm_sq: float
    stokes_grad_sq: float
    dissipation_residual: float

CSV_COLUMNS = ("step", "t", "energy", "grad_norm_sq", "lap_norm_sq",
               "div_norm_sq", "stokes_grad_sq", "dissipation_residual")


@dataclass
class StepState:
    n: int
    t: float
    u: VectorField
    split: PressureSplit
    diagnostics: DiagnosticsRecord
    extras: dict = field(default_factory=dict)   # internal plumbing (norms reused by run)


@dataclass
class RunResult:
    records: list
    final: StepState
    sup_grad_sq: float
    sum_lap_sq_dt: float
    sum_rate_sq_dt: float
    sum_adv_sq_dt: float
    states: list | None = None


def forcing_average(f_spec, n: int, dt: float, grid: Grid,
                    exact: bool = False) -> VectorField | None:
    """Average of the forcing over [n dt, (n+1) dt].

    Midpoint sample by default (exact for forcings linear in t); with
    ``exact=True`` a 5-point Gauss rule integrates rougher forcings.
    """
    if f_spec is None:
        return None
    if not exact:
        return f_spec((n + 0.5) * dt, grid)
    t0 = n * dt
    total = None
    for node, weight in zip(_GAUSS_NODES, _GAUSS_WEIGHTS):
        sample = f_spec(t0 + 0.5 * dt * (node + 1.0), grid) * (0.5 * weight)
        total = sample if total is None else total + sample
    return total


def smooth_initial(u_in: VectorField, dt: float, tol: float = DEFAULT_TOL,
                   method: str = "auto") -> VectorField:
    """Mollify initial data by one implicit diffusion solve (I - dt lap)."""
    problem = EllipticProblem(ProblemKind.HELMHOLTZ_DIRICHLET, u_in.grid, alpha=dt)
    out, _ = solve_vector(problem, u_in, tol=tol, method=method)
    return out


def _w_field(u: VectorField, cfg: RunConfig, t: float) -> ScalarField:
    w = div(u)
    if cfg.nonhomogeneous is not None:
        w = w - cfg.nonhomogeneous.h_at(t, cfg.grid)
    return w


def _make_state(n: int, u: VectorField, cfg: RunConfig,
                prev: StepState | None) -> StepState:
    t = n * cfg.dt
    adv = advect(u) if cfg.include_advection else VectorField.zeros(cfg.grid)
    fn = forcing_average(cfg.forcing, n, cfg.dt, cfg.grid,
                         exact=cfg.forcing_exact_average)
    p_e, _ = euler_pressure(u, f=fn, advection=adv, tol=cfg.tol, method=cfg.method)
    p_s, gps = stokes_pressure(u, tol=cfg.tol, method=cfg.method)
    p_gh = None
    if cfg.nonhomogeneous is not None:
        p_gh = nonhomogeneous_pressure(cfg.nonhomogeneous.h_at(t, cfg.grid), cfg.nu,
                                       dt_h=cfg.nonhomogeneous.dt_h_at(t, cfg.grid),
                                       tol=cfg.tol, method=cfg.method)
    split = PressureSplit(p_euler=p_e, p_stokes=p_s, p_gh=p_gh)

    nm = norms(u)
    w = _w_field(u, cfg, t)
    w_l2_sq = w.l2()**2
    if prev is None:
        resid = 0.0
    else:
        gw = grad(w)
        resid = ((0.5 * w_l2_sq - 0.5 * prev.extras["w_l2_sq"]) / cfg.dt
                 + cfg.nu * inner(gw, gw))
    rec = DiagnosticsRecord(step=n, t=t, energy=0.5 * nm.l2**2,
                            grad_norm_sq=nm.h1_semi**2, lap_norm_sq=nm.lap_l2**2,
                            div_norm_sq=w_l2_sq, stokes_grad_sq=gps.l2()**2,
                            dissipation_residual=resid)
    if n > 0 and nm.h1_semi > cfg.blowup_threshold:
        raise Blowup(n, nm.h1_semi)
    extras = {"w_l2_sq": w_l2_sq, "adv": adv, "fn": fn,
              "adv_l2_sq": adv.l2()**2, "lap_sq": nm.lap_l2**2}
    return StepState(n=n, t=t, u=u, split=split, diagnostics=rec, extras=extras)


def initial_state(cfg: RunConfig) -> StepState:
    u0 = cfg.u0 if cfg.u0 is not None else VectorField.zeros(cfg.grid)
    if cfg.smooth_init:
        u0 = smooth_initial(u0, cfg.dt, tol=cfg.tol, method=cfg.method)
    return _make_state(0, u0, cfg, prev=None)


def step(state: StepState, cfg: RunConfig) -> StepState:
    """Advance one time step; returns the new state with fresh diagnostics."""
    u = state.u
    dt, nu = cfg.dt, cfg.nu
    adv = state.extras["adv"]
    fn = state.extras["fn"]

    rhs = u - dt * adv - dt * grad(state.split.p_euler) \
        - (nu * dt) * grad(state.split.p_stokes)
    if fn is not None:
        rhs = rhs + dt * fn
    if state.split.p_gh is not None:
        rhs = rhs - dt * grad(state.split.p_gh)

    problem = EllipticProblem(ProblemKind.HELMHOLTZ_DIRICHLET, cfg.grid,
                              alpha=nu * dt)
    u_new, _ = solve_vector(problem, rhs, tol=cfg.tol, method=cfg.method)
    return _make_state(state.n + 1, u_new, cfg, prev=state)


def run(cfg: RunConfig, keep_states: bool = False) -> RunResult:
    """Integrate to t_end, collecting per-step diagnostics and the
    stability aggregates sup |grad u|^2, sum |lap u|^2 dt,
    sum |du/dt|^2 dt and sum |u.grad u|^2 dt."""
    state = initial_state(cfg)
    records = [state.diagnostics]
    states = [state] if keep_states else None

    sup_grad = state.diagnostics.grad_norm_sq
    sum_lap = state.extras["lap_sq"] * cfg.dt
    sum_adv = state.extras["adv_l2_sq"] * cfg.dt
    sum_rate = 0.0

    for _ in range(cfg.n_steps):
        new_state = step(state, cfg)
        du = new_state.u - state.u
        sum_rate += (du.l2() / cfg.dt) ** 2 * cfg.dt
        sup_grad = max(sup_grad, new_state.diagnostics.grad_norm_sq)
        sum_lap += new_state.extras["lap_sq"] * cfg.dt
        sum_adv += new_state.extras["adv_l2_sq"] * cfg.dt
        records.append(new_state.diagnostics)
        if keep_states:
            states.append(new_state)
        state = new_state

    return RunResult(records=records, final=state, sup_grad_sq=sup_grad,
                     sum_lap_sq_dt=sum_lap, sum_rate_sq_dt=sum_rate,
                     sum_adv_sq_dt=sum_adv, states=states)
