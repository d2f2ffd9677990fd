"""Shared sparse linear-algebra plumbing: Dirichlet reduction, SPD solves
and the cached backward-Euler stepper used by both discretizations."""

from __future__ import annotations

from typing import Optional

import numpy as np
import scipy.linalg
import scipy.sparse as sparse
import scipy.sparse.linalg as spla

RESIDUAL_TOL = 1e-10

# direct factorization memory grows quickly with the 3D oracle size;
# beyond this many unknowns the auto method switches to CG
DIRECT_DIM_LIMIT = 200_000


class SolverError(RuntimeError):
    """Linear solve failed the residual contract; carries the history."""

    def __init__(self, message: str, residuals=None):
        super().__init__(message)
        self.residuals = list(residuals) if residuals is not None else []


def free_indices(dim: int, constrained: np.ndarray) -> np.ndarray:
    """Sorted indices not listed in ``constrained``."""
    mask = np.ones(dim, dtype=bool)
    mask[constrained] = False
    return np.flatnonzero(mask)


def _relative_residual(matrix, x, rhs, rhs_norm):
    return float(np.linalg.norm(matrix @ x - rhs) / rhs_norm)


def _cg(matrix, rhs, rtol):
    """Diagonally preconditioned conjugate gradients with restarts.

    The recursion residual of CG drifts from the true one on badly
    scaled systems, so after each sweep the true residual is formed and,
    if still above the target, CG restarts from the current iterate.
    """
    diag = matrix.diagonal()
    if np.any(diag <= 0.0):
        raise SolverError("matrix diagonal not positive, CG preconditioner invalid")
    precond = spla.LinearOperator(matrix.shape, lambda v: v / diag)
    rhs_norm = np.linalg.norm(rhs)
    x = np.zeros_like(rhs)
    residuals = []
    for _ in range(6):
        x, info = spla.cg(matrix, rhs, x0=x, rtol=0.01 * rtol, atol=0.0,
                          maxiter=30000, M=precond)
        residuals.append(_relative_residual(matrix, x, rhs, rhs_norm))
        if residuals[-1] <= rtol:
            return x, residuals
        if info < 0:
            break
    raise SolverError(f"CG did not reach {rtol:.1e}, residual history {residuals}",
                      residuals)


def _refine(matrix, solve, x, rhs, rhs_norm, rtol):
    """Iterative refinement with a cached direct solve.

    The badly scaled material contrast leaves the raw direct solve
    slightly above the residual contract; one or two refinement sweeps
    close it.  ``solve`` maps a residual to a correction.
    """
    residuals = [_relative_residual(matrix, x, rhs, rhs_norm)]
    for _ in range(4):
        if residuals[-1] <= 0.1 * rtol:
            break
        x = x + solve(rhs - matrix @ x)
        residuals.append(_relative_residual(matrix, x, rhs, rhs_norm))
    return x, residuals


def solve_spd(matrix: sparse.spmatrix, rhs: np.ndarray, method: str = "direct",
              rtol: float = RESIDUAL_TOL) -> np.ndarray:
    """Solve a symmetric positive definite system to the residual contract.

    ``method`` is "direct" (sparse LU with iterative refinement), "cg"
    (diagonal-preconditioned conjugate gradients, intended for systems too
    large to factor) or "auto" (direct up to DIRECT_DIM_LIMIT unknowns,
    CG beyond).  The relative residual is checked after either path.
    """
    rhs = np.asarray(rhs, dtype=float)
    rhs_norm = np.linalg.norm(rhs)
    if rhs_norm == 0.0:
        return np.zeros_like(rhs)
    if method == "auto":
        method = "direct" if matrix.shape[0] <= DIRECT_DIM_LIMIT else "cg"
    if method == "direct":
        lu = spla.splu(matrix.tocsc())
        x, residuals = _refine(matrix, lu.solve, lu.solve(rhs), rhs, rhs_norm, rtol)
    elif method == "cg":
        x, residuals = _cg(matrix.tocsr(), rhs, rtol=rtol)
    else:
        raise ValueError(f"unknown solver method '{method}'")
    if residuals[-1] > rtol:
        raise SolverError(f"solve residual {residuals[-1]:.3e} above {rtol:.1e}",
                          residuals)
    return x


def solve_separable(line_mass: sparse.spmatrix, line_stiffness: sparse.spmatrix,
                    section_a: sparse.spmatrix, section_b: sparse.spmatrix,
                    rhs: np.ndarray, assembled: sparse.spmatrix,
                    rtol: float = RESIDUAL_TOL) -> np.ndarray:
    """Direct solve of kron(line_mass, section_a) + kron(line_stiffness, section_b).

    Fast diagonalization: the generalized eigenvectors of the small
    longitudinal pencil (line_stiffness, line_mass) decouple the
    Kronecker-sum system into one independent transversal solve per
    longitudinal mode, so only section-sized factorizations are formed.
    This keeps the memory footprint flat in the number of layers, where a
    sparse factorization of the assembled 3D matrix does not fit.

    ``rhs`` must be ordered line-major (index = line_node * section_dim +
    section_node).  ``assembled`` is the Kronecker-sum matrix itself, used
    only for the residual check and refinement sweeps.
    """
    rhs = np.asarray(rhs, dtype=float)
    rhs_norm = np.linalg.norm(rhs)
    if rhs_norm == 0.0:
        return np.zeros_like(rhs)
    num_modes = line_mass.shape[0]
    # M-orthonormal modes: Z^T line_mass Z = I, Z^T line_stiffness Z = diag(w)
    w, z = scipy.linalg.eigh(line_stiffness.toarray(), line_mass.toarray())
    factors = [spla.splu((section_a + wm * section_b).tocsc()) for wm in w]

    def tensor_solve(b):
        b_hat = z.T @ b.reshape(num_modes, -1)
        for m, lu in enumerate(factors):
            b_hat[m] = lu.solve(b_hat[m])
        return (z @ b_hat).ravel()

    x, residuals = _refine(assembled, tensor_solve, tensor_solve(rhs),
                           rhs, rhs_norm, rtol)
    if residuals[-1] > rtol:
        raise SolverError(
            f"separable solve residual {residuals[-1]:.3e} above {rtol:.1e}",
            residuals)
    return x


class BackwardEulerStepper:
    """One implicit Euler step: (M + dt K) u_next = M u + dt q.

    The factorization of (M + dt K) is computed once per (matrix, dt)
    pair and reused across steps; with the CG method the combined matrix
    is kept and re-solved each step.
    """

    def __init__(self, mass: sparse.spmatrix, stiffness: sparse.spmatrix,
                 dt: float, method: str = "direct"):
        if dt <= 0.0:
            raise ValueError("time step must be positive")
        self.dt = dt
        if method == "auto":
            method = "direct" if mass.shape[0] <= DIRECT_DIM_LIMIT else "cg"
        self.method = method
        self.mass = mass.tocsr()
        self._system = (self.mass + dt * stiffness.tocsr()).tocsc()
        self._lu = spla.splu(self._system) if method == "direct" else None

    def step(self, u: np.ndarray, load: np.ndarray) -> np.ndarray:
        rhs = self.mass @ u + self.dt * load
        rhs_norm = np.linalg.norm(rhs)
        if rhs_norm == 0.0:
            return np.zeros_like(u)
        if self.method == "direct":
            x, residuals = _refine(self._system, self._lu.solve,
                                   self._lu.solve(rhs), rhs, rhs_norm,
                                   RESIDUAL_TOL)
            if residuals[-1] > RESIDUAL_TOL:
                raise SolverError(f"step residual {residuals[-1]:.3e}", residuals)
            return x
        x, _ = _cg(self._system, rhs, rtol=0.01 * RESIDUAL_TOL)
        return x
