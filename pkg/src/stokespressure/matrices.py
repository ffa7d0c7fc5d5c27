"""Sparse-matrix forms of the discrete operators.

Everything here mirrors the ghost-cell stencils of :mod:`.operators`
exactly; the test suite asserts agreement of the two code paths on random
fields.  Flattening convention: cell (i, j) -> row i * ny + j, and vector
fields stack as [u; v].

The weak (wall-compatible) Neumann operator is the composition G^T G of
the gradient with its exact adjoint.  Its stencil is wide (distance-2
differences), and on grids with an even periodic dimension its kernel
contains alternating-column patterns in addition to constants;
:func:`kernel_basis` enumerates the kernel so solvers can deflate and pin
it explicitly.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .grid import Grid, Topology


def centered_diff_1d(n: int, h: float, closure: str) -> sp.csr_matrix:
    """Centered first difference with ghost closure 'periodic'|'even'|'odd'."""
    main = np.zeros(n)
    upper = np.ones(n - 1)
    lower = -np.ones(n - 1)
    D = sp.diags([lower, main, upper], [-1, 0, 1], format="lil")
    if closure == "periodic":
        D[0, n - 1] = -1.0
        D[n - 1, 0] = 1.0
    elif closure == "even":
        D[0, 0] = -1.0
        D[n - 1, n - 1] = 1.0
    elif closure == "odd":
        D[0, 0] = 1.0
        D[n - 1, n - 1] = -1.0
    else:
        raise ValueError(f"unknown closure {closure!r}")
    return sp.csr_matrix(D / (2.0 * h))


def second_diff_1d(n: int, h: float, closure: str) -> sp.csr_matrix:
    """Compact second difference with closure 'periodic'|'dirichlet'|'neumann'."""
    T = sp.diags([np.ones(n - 1), -2.0 * np.ones(n), np.ones(n - 1)],
                 [-1, 0, 1], format="lil")
    if closure == "periodic":
        T[0, n - 1] += 1.0
        T[n - 1, 0] += 1.0
    elif closure == "dirichlet":   # odd ghost
        T[0, 0] -= 1.0
        T[n - 1, n - 1] -= 1.0
    elif closure == "neumann":     # even ghost
        T[0, 0] += 1.0
        T[n - 1, n - 1] += 1.0
    else:
        raise ValueError(f"unknown closure {closure!r}")
    return sp.csr_matrix(T / h**2)


def _x_closure(grid: Grid, wall: str) -> str:
    return "periodic" if grid.periodic_x else wall

def _y_closure(grid: Grid, wall: str) -> str:
    return "periodic" if grid.periodic_y else wall


def gradient_matrix(grid: Grid) -> sp.csr_matrix:
    """(2N x N) potential gradient: even reflection at walls."""
    Ix = sp.identity(grid.nx)
    Iy = sp.identity(grid.ny)
    Gx = sp.kron(centered_diff_1d(grid.nx, grid.dx, _x_closure(grid, "even")), Iy)
    Gy = sp.kron(Ix, centered_diff_1d(grid.ny, grid.dy, _y_closure(grid, "even")))
    return sp.vstack([Gx, Gy]).tocsr()


def divergence_matrix(grid: Grid) -> sp.csr_matrix:
    """(N x 2N) divergence; exactly minus the transpose of the gradient."""
    return (-gradient_matrix(grid).T).tocsr()


def laplacian_matrix(grid: Grid, bc: str = "dirichlet") -> sp.csr_matrix:
    """(N x N) compact 5-point Laplacian, bc in {'dirichlet', 'neumann'}."""
    Ix = sp.identity(grid.nx)
    Iy = sp.identity(grid.ny)
    Lx = sp.kron(second_diff_1d(grid.nx, grid.dx, _x_closure(grid, bc)), Iy)
    Ly = sp.kron(Ix, second_diff_1d(grid.ny, grid.dy, _y_closure(grid, bc)))
    return (Lx + Ly).tocsr()


def vector_laplacian_matrix(grid: Grid, bc: str = "dirichlet") -> sp.csr_matrix:
    """(2N x 2N) componentwise compact Laplacian."""
    L = laplacian_matrix(grid, bc)
    return sp.block_diag([L, L]).tocsr()


def helmholtz_matrix(grid: Grid, alpha: float) -> sp.csr_matrix:
    """(N x N) operator I - alpha * Laplacian with Dirichlet walls."""
    N = grid.size
    return (sp.identity(N) - alpha * laplacian_matrix(grid, "dirichlet")).tocsr()


def neumann_operator(grid: Grid) -> sp.csr_matrix:
    """(N x N) weak Neumann operator G^T G (positive semidefinite)."""
    G = gradient_matrix(grid)
    return (G.T @ G).tocsr()


def kernel_basis(grid: Grid) -> np.ndarray:
    """Orthonormal basis (N x k) of the kernel of the weak Neumann operator.

    Constants are always in the kernel.  A periodic direction with an even
    cell count contributes an alternating pattern (centered differences do
    not see it); both even periodic directions contribute their product.
    """
    vecs = [np.ones(grid.size)]
    alt_x = np.where(np.arange(grid.nx) % 2 == 0, 1.0, -1.0)
    alt_y = np.where(np.arange(grid.ny) % 2 == 0, 1.0, -1.0)
    if grid.periodic_x and grid.nx % 2 == 0:
        vecs.append(np.repeat(alt_x, grid.ny))
    if grid.periodic_y and grid.ny % 2 == 0:
        vecs.append(np.tile(alt_y, grid.nx))
    if grid.periodic_x and grid.periodic_y and grid.nx % 2 == 0 and grid.ny % 2 == 0:
        vecs.append(np.repeat(alt_x, grid.ny) * np.tile(alt_y, grid.nx))
    basis = np.stack([v / np.linalg.norm(v) for v in vecs], axis=1)
    return basis


def kernel_pin_cells(grid: Grid) -> list[int]:
    """One cell per kernel vector, chosen so the kernel minor is invertible.

    Cells (0,0), (1,0), (0,1), (1,1) cover all parity combinations of the
    alternating kernel patterns; the corresponding minor is a Hadamard-type
    matrix.
    """
    k = kernel_basis(grid).shape[1]
    cells = [0, grid.ny, 1, grid.ny + 1][:k]
    return cells


def flatten_scalar(values: np.ndarray) -> np.ndarray:
    return np.asarray(values, dtype=float).ravel()


def unflatten_scalar(vec: np.ndarray, grid: Grid) -> np.ndarray:
    return np.asarray(vec, dtype=float).reshape(grid.shape)


def flatten_vector(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.concatenate([np.ravel(u), np.ravel(v)]).astype(float, copy=False)


def unflatten_vector(vec: np.ndarray, grid: Grid) -> tuple[np.ndarray, np.ndarray]:
    N = grid.size
    return vec[:N].reshape(grid.shape), vec[N:].reshape(grid.shape)
