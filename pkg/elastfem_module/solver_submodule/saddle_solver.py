from dataclasses import dataclass, field
import logging
from typing import List

import numpy as np
import scipy.linalg
import scipy.sparse.linalg as spla

from ..utils_module.errors import SolverError
from ..utils_module.timeit_decorator import timeit

DEFAULT_TOL = 1e-10
MAX_REFINEMENTS = 3
SCHUR_MAX_DISP = 6000
ENERGY_RTOL = 1e-9
SOLVER_METHODS = ("direct", "schur")


@dataclass(eq=False)
class Solution:
    sigma: np.ndarray
    u: np.ndarray
    residual_history: List[float] = field(default_factory=list)
    method: str = "direct"

    @property
    def relative_residual(self):
        return self.residual_history[-1] if self.residual_history else 0.0


def block_residual(system, sigma, u):
    """Relative residual of the full 2x2 block system."""
    r_sigma = system.A @ sigma + system.B.T @ u
    r_u = system.B @ sigma - system.load
    norm_rhs = np.linalg.norm(system.load)
    scale = norm_rhs if norm_rhs > 0.0 else 1.0
    return float(np.sqrt(np.linalg.norm(r_sigma) ** 2 + np.linalg.norm(r_u) ** 2) / scale)


def check_nonsingular(system):
    """Every displacement row of B must couple to some stress field."""
    row_norms = np.sqrt(np.asarray(system.B.multiply(system.B).sum(axis=1)).ravel())
    zero_rows = np.flatnonzero(row_norms == 0.0)
    if zero_rows.size:
        raise SolverError(f"singular system: {zero_rows.size} displacement rows of B are zero (first {zero_rows[0]})")


def _solve_direct(system, tol, logger):
    K = system.block_matrix()
    rhs = system.rhs()
    try:
        lu = spla.splu(K)
    except RuntimeError as e:
        raise SolverError(f"sparse LU factorization failed: {e}") from e
    x = lu.solve(rhs)
    n_s = system.n_sigma
    history = [block_residual(system, x[:n_s], x[n_s:])]
    for _ in range(MAX_REFINEMENTS):
        if history[-1] <= tol:
            break
        x = x + lu.solve(rhs - K @ x)
        history.append(block_residual(system, x[:n_s], x[n_s:]))
        logger.info(f"Refinement step residual {history[-1]:.3e}")
    return x[:n_s], x[n_s:], history


def _solve_schur(system, tol, logger):
    if system.n_u > SCHUR_MAX_DISP:
        raise ValueError(
            f"schur method forms a dense {system.n_u}x{system.n_u} complement; allowed up to {SCHUR_MAX_DISP}"
        )
    try:
        lu = spla.splu(system.A.tocsc())
    except RuntimeError as e:
        raise SolverError(f"factorization of A failed: {e}") from e
    A_inv_Bt = lu.solve(system.B.T.toarray())
    schur = system.B @ A_inv_Bt
    schur = 0.5 * (schur + schur.T)
    try:
        u = scipy.linalg.solve(schur, -system.load, assume_a="pos")
    except np.linalg.LinAlgError as e:
        raise SolverError(f"Schur complement is not positive definite: {e}") from e
    sigma = -A_inv_Bt @ u
    history = [block_residual(system, sigma, u)]
    logger.info(f"Schur solve residual {history[-1]:.3e}")
    return sigma, u, history


@timeit
def solve_saddle(system, tol=DEFAULT_TOL, method="direct", logger=None) -> Solution:
    """
    Solve the mixed system to a relative block residual <= tol.

    Parameters:
    system (SaddleSystem): assembled system with its load.
    tol (float): relative residual target.
    method (str): "direct" (LU of the full block matrix with iterative refinement)
        or "schur" (factorize A, dense Schur complement; small systems only).

    Returns:
    Solution
    """
    logger = logger or logging.getLogger(__name__)
    if method not in SOLVER_METHODS:
        raise ValueError(f"unknown solver method {method!r}; expected one of {SOLVER_METHODS}")
    if not 0.0 < tol < 1.0:
        raise ValueError(f"tolerance must lie in (0, 1), got {tol}")
    check_nonsingular(system)

    if not np.any(system.load):
        return Solution(np.zeros(system.n_sigma), np.zeros(system.n_u), [0.0], method)

    solve = _solve_direct if method == "direct" else _solve_schur
    sigma, u, history = solve(system, tol, logger)
    if not np.isfinite(history[-1]) or history[-1] > tol:
        raise SolverError(f"{method} solve did not reach tolerance {tol:.1e}", history)
    logger.info(f"Solved with {method}: relative residual {history[-1]:.3e}")
    return Solution(sigma, u, history, method)


def energy_identity(system, solution):
    """
    (A sigma_h, sigma_h) and -(f, u_h), which agree for an exact solve.

    Returns:
    tuple: (energy, load_work, relative difference)
    """
    energy = float(solution.sigma @ (system.A @ solution.sigma))
    work = -float(system.load @ solution.u)
    scale = max(abs(energy), abs(work), 1e-300)
    return energy, work, abs(energy - work) / scale


def check_energy_identity(system, solution, rtol=ENERGY_RTOL, logger=None):
    """
    Raise a SolverError when (A sigma_h, sigma_h) and -(f, u_h) differ by more than rtol.

    Returns:
    tuple: (energy, load_work, relative difference)
    """
    logger = logger or logging.getLogger(__name__)
    energy, work, reldiff = energy_identity(system, solution)
    logger.info(f"Energy identity: (A sigma, sigma)={energy:.10e}, -(f, u)={work:.10e}, rel diff {reldiff:.2e}")
    if reldiff > rtol:
        raise SolverError(
            f"energy identity violated: (A sigma, sigma)={energy:.10e}, -(f, u)={work:.10e}, "
            f"relative difference {reldiff:.2e} > {rtol:.1e}",
            solution.residual_history,
        )
    return energy, work, reldiff
