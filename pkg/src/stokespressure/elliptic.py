"""Solvers for the constant-coefficient elliptic problems of the scheme.

Three problem kinds cover everything the formulation needs:

* ``POISSON_DIRICHLET``  -- lap x = b with homogeneous Dirichlet walls
  (compact 5-point operator, odd-reflection ghosts).
* ``POISSON_NEUMANN``    -- the weak no-flux problem; the operator is the
  wide composition G^T G of the gradient with its adjoint, which is what
  the Helmholtz decomposition inverts.  Right-hand sides are projected
  onto the operator's range (defect recorded), solutions mean-pinned.
* ``HELMHOLTZ_DIRICHLET``-- (I - alpha lap) x = b, the implicit viscosity
  operator.

On the fully periodic harness there are no walls, so the "Dirichlet"
inverse degenerates; there the wide operator is used for the Poisson
solve as well, which is the unique choice under which the discrete Hodge
identities close exactly.

Backends: ``direct`` (cached sparse LU; the default) and ``pcg``
(conjugate gradients preconditioned by y-line block relaxation, with the
operator kernel deflated explicitly).  Both are exercised against each
other by the test suite; production defaults to the direct factorization
because the largest acceptance grids (128^2) sit comfortably inside
sparse-LU territory.  Singular Neumann systems are made factorizable by
pinning one row per kernel vector; for range-compatible right-hand sides
the pinned solution solves the original system exactly, which the
returned residual verifies.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import matrices
from .errors import IncompatibleRHS, NonConvergence
from .fields import BoundaryCondition, ScalarField, VectorField
from .grid import Grid, Topology

DEFAULT_TOL = 1e-10
NEUMANN_STRICT_DEFECT = 1e-8


class ProblemKind(Enum):
    POISSON_DIRICHLET = "poisson-dirichlet"
    POISSON_NEUMANN = "poisson-neumann"
    HELMHOLTZ_DIRICHLET = "helmholtz-dirichlet"


@dataclass(frozen=True)
class EllipticProblem:
    kind: ProblemKind
    grid: Grid
    alpha: float | None = None

    def __post_init__(self):
        if self.kind is ProblemKind.HELMHOLTZ_DIRICHLET:
            if self.alpha is None or self.alpha <= 0:
                raise ValueError("HELMHOLTZ_DIRICHLET requires alpha > 0")
        elif self.alpha is not None:
            raise ValueError("alpha is only meaningful for HELMHOLTZ_DIRICHLET")

    def key(self) -> tuple:
        return (self.grid.key(), self.kind.value, self.alpha)


@dataclass
class SolveReport:
    iterations: int
    residual: float
    compat_defect: float = 0.0
    method: str = "direct"


def iteration_cap(grid: Grid) -> int:
    return 10 * (grid.nx + grid.ny)


def _is_wide(problem: EllipticProblem) -> bool:
    if problem.kind is ProblemKind.POISSON_NEUMANN:
        return True
    return (problem.kind is ProblemKind.POISSON_DIRICHLET
            and problem.grid.topology is Topology.PERIODIC_BOX)


def system_matrix(problem: EllipticProblem) -> sp.csr_matrix:
    """Positive-(semi)definite system matrix the solvers invert.

    Sign convention: the Poisson kinds solve lap x = b as (-lap) x = -b,
    so the matrix returned here is -lap in the relevant closure.
    """
    g = problem.grid
    if _is_wide(problem):
        return matrices.neumann_operator(g)
    if problem.kind is ProblemKind.POISSON_DIRICHLET:
        return (-matrices.laplacian_matrix(g, "dirichlet")).tocsr()
    return matrices.helmholtz_matrix(g, problem.alpha)


def _system_rhs(problem: EllipticProblem, b: np.ndarray) -> np.ndarray:
    if problem.kind is ProblemKind.HELMHOLTZ_DIRICHLET:
        return b
    return -b


# ---------------------------------------------------------------------------
# cached factorizations

_cache_lock = threading.Lock()
_direct_cache: dict = {}
_precond_cache: dict = {}
_matrix_cache: dict = {}


def _cached_matrix(problem: EllipticProblem) -> sp.csr_matrix:
    key = problem.key()
    with _cache_lock:
        hit = _matrix_cache.get(key)
    if hit is not None:
        return hit
    A = system_matrix(problem)
    with _cache_lock:
        _matrix_cache[key] = A
    return A


def _direct_factor(problem: EllipticProblem):
    key = problem.key()
    with _cache_lock:
        hit = _direct_cache.get(key)
    if hit is not None:
        return hit
    A = _cached_matrix(problem).tolil(copy=True)
    pins: list[int] = []
    if _is_wide(problem):
        pins = matrices.kernel_pin_cells(problem.grid)
        for r in pins:
            A.rows[r] = [r]
            A.data[r] = [1.0]
    lu = spla.splu(sp.csc_matrix(A))
    with _cache_lock:
        _direct_cache[key] = (lu, pins)
    return lu, pins


def _line_preconditioner(problem: EllipticProblem):
    """Block-diagonal y-line factorization (line relaxation) for PCG."""
    key = problem.key()
    with _cache_lock:
        hit = _precond_cache.get(key)
    if hit is not None:
        return hit
    A = _cached_matrix(problem).tocoo()
    ny = problem.grid.ny
    mask = (A.row // ny) == (A.col // ny)
    M = sp.coo_matrix((A.data[mask], (A.row[mask], A.col[mask])), shape=A.shape)
    M = M.tolil()
    for r in matrices.kernel_pin_cells(problem.grid) if _is_wide(problem) else []:
        M.rows[r] = [r]
        M.data[r] = [1.0]
    lu = spla.splu(sp.csc_matrix(M))
    with _cache_lock:
        _precond_cache[key] = lu
    return lu


def clear_caches():
    with _cache_lock:
        _direct_cache.clear()
        _precond_cache.clear()
        _matrix_cache.clear()


# ---------------------------------------------------------------------------
# backends (flat-vector level)

def _deflate(vec: np.ndarray, basis: np.ndarray | None) -> np.ndarray:
    if basis is None:
        return vec
    return vec - basis @ (basis.T @ vec)


def _solve_direct(problem, b_sys, kernel):
    lu, pins = _direct_factor(problem)
    rhs = _deflate(b_sys, kernel)
    if pins:
        rhs = rhs.copy()
        rhs[pins] = 0.0
    x = lu.solve(rhs)
    return _deflate(x, kernel), 1


def _solve_pcg(problem, b_sys, kernel, tol):
    A = _cached_matrix(problem)
    M = _line_preconditioner(problem)
    b = _deflate(b_sys, kernel)
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros_like(b), 0
    cap = iteration_cap(problem.grid)
    x = np.zeros_like(b)
    r = b.copy()
    z = _deflate(M.solve(r), kernel)
    p = z.copy()
    rz = float(r @ z)
    for it in range(1, cap + 1):
        Ap = A @ p
        alpha = rz / float(p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        if np.linalg.norm(r) <= tol * bnorm:
            return _deflate(x, kernel), it
        z = _deflate(M.solve(r), kernel)
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    raise NonConvergence(cap, float(np.linalg.norm(r) / bnorm))


def solve_flat(problem: EllipticProblem, b: np.ndarray, tol: float = DEFAULT_TOL,
               method: str = "auto", strict: bool = False):
    """Solve on a flat scalar vector; returns (x, SolveReport)."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    b = np.asarray(b, dtype=float).ravel()
    kernel = None
    defect = 0.0
    if _is_wide(problem):
        kernel = matrices.kernel_basis(problem.grid)
        scale = float(np.linalg.norm(b))
        if scale > 0:
            defect = abs(float(b.mean())) * np.sqrt(b.size) / scale
        if problem.kind is ProblemKind.POISSON_NEUMANN and strict \
                and defect > NEUMANN_STRICT_DEFECT:
            raise IncompatibleRHS(defect)

    b_sys = _system_rhs(problem, b)
    if method == "auto":
        method = "direct"
    if method == "direct":
        x, iters = _solve_direct(problem, b_sys, kernel)
    elif method == "pcg":
        x, iters = _solve_pcg(problem, b_sys, kernel, tol)
    else:
        raise ValueError(f"unknown solver method {method!r}")

    A = _cached_matrix(problem)
    b_eff = _deflate(b_sys, kernel)
    bnorm = float(np.linalg.norm(b_eff))
    residual = float(np.linalg.norm(A @ x - b_eff))
    rel = residual / bnorm if bnorm > 0 else residual
    if rel > tol and bnorm > 0:
        raise NonConvergence(iters, rel)
    return x, SolveReport(iterations=iters, residual=rel,
                          compat_defect=defect, method=method)


def solve(problem: EllipticProblem, rhs: ScalarField, tol: float = DEFAULT_TOL,
          method: str = "auto", strict: bool = False):
    """Solve the elliptic problem for a scalar right-hand side.

    Returns ``(solution, SolveReport)``.  Neumann solutions come back
    mean-pinned; the report's ``compat_defect`` records the relative mass
    removed from the right-hand side.
    """
    if rhs.grid.key() != problem.grid.key():
        raise ValueError("rhs grid does not match problem grid")
    x, report = solve_flat(problem, rhs.values.ravel(), tol, method, strict)
    vals = x.reshape(problem.grid.shape)
    pinned = _is_wide(problem)
    field = ScalarField(problem.grid, vals, mean_pinned=pinned)
    return field, report


def solve_vector(problem: EllipticProblem, rhs: VectorField,
                 tol: float = DEFAULT_TOL, method: str = "auto"):
    """Componentwise solve with Dirichlet walls; returns (field, report)."""
    xu, ru = solve_flat(problem, rhs.u.ravel(), tol, method)
    xv, rv = solve_flat(problem, rhs.v.ravel(), tol, method)
    out = VectorField(problem.grid, xu.reshape(problem.grid.shape),
                      xv.reshape(problem.grid.shape), BoundaryCondition.NO_SLIP)
    report = SolveReport(iterations=ru.iterations + rv.iterations,
                         residual=max(ru.residual, rv.residual),
                         compat_defect=max(ru.compat_defect, rv.compat_defect),
                         method=ru.method)
    return out, report
