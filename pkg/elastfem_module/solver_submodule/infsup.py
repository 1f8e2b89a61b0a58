"""
Discrete inf-sup constant of a mixed system.

beta_h^2 is the smallest eigenvalue of B G^{-1} B^T x = mu M x, where G is the
H(div) Gram matrix of the stress space and M the displacement mass matrix.
"""
import logging
from typing import NamedTuple

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..utils_module.errors import EigenSolveError
from ..utils_module.timeit_decorator import timeit

EIG_TOL = 1e-8
DENSE_LIMIT = 600
SHIFT = 1e-10


class InfSupResult(NamedTuple):
    beta: float
    eigenvalue: float
    residual: float
    n_sigma: int
    n_u: int


def _require_norms(system):
    if system.stress_gram is None or system.disp_mass is None:
        raise ValueError("inf-sup needs a system assembled with with_norms=True")


def _relative_residual(schur_apply, M, mu, x):
    r = schur_apply(x) - mu * (M @ x)
    scale = max(abs(mu) * np.linalg.norm(M @ x), 1e-300)
    return float(np.linalg.norm(r) / scale) if mu != 0.0 else float(np.linalg.norm(r))


def _gram_solver(G):
    try:
        return spla.splu(G.tocsc())
    except RuntimeError as e:
        raise EigenSolveError(f"factorization of the stress Gram matrix failed: {e}") from e


def _dense_smallest(system, lu):
    B = system.B
    schur = B @ lu.solve(B.T.toarray())
    schur = 0.5 * (schur + schur.T)
    M = system.disp_mass.toarray()
    try:
        values, vectors = scipy.linalg.eigh(schur, M, subset_by_index=[0, 0])
    except (np.linalg.LinAlgError, ValueError) as e:
        raise EigenSolveError(f"dense generalized eigensolve failed: {e}") from e
    return float(values[0]), vectors[:, 0]


def _sparse_smallest(system, lu, tol):
    B, M, G = system.B, system.disp_mass, system.stress_gram
    n_s, n_u = system.n_sigma, system.n_u

    def schur_apply(x):
        return B @ lu.solve(np.asarray(B.T @ x).ravel())

    shifted = sp.bmat([[G, B.T], [B, -SHIFT * M]], format="csc")
    try:
        shifted_lu = spla.splu(shifted)
    except RuntimeError as e:
        raise EigenSolveError(f"factorization of the shifted pencil failed: {e}") from e

    def shift_invert(b):
        rhs = np.concatenate([np.zeros(n_s), np.asarray(b).ravel()])
        return -shifted_lu.solve(rhs)[n_s:]

    S = spla.LinearOperator((n_u, n_u), matvec=schur_apply, dtype=float)
    OPinv = spla.LinearOperator((n_u, n_u), matvec=shift_invert, dtype=float)
    try:
        values, vectors = spla.eigsh(S, k=1, M=M, sigma=-SHIFT, which="LM", OPinv=OPinv, tol=tol)
    except spla.ArpackNoConvergence as e:
        raise EigenSolveError(f"eigsh did not converge: {e}") from e
    return float(values[0]), vectors[:, 0]


@timeit
def infsup_constant(system, tol=EIG_TOL, logger=None) -> InfSupResult:
    """
    Parameters:
    system (SaddleSystem): assembled with with_norms=True.
    tol (float): eigensolver tolerance.

    Returns:
    InfSupResult: beta_h = sqrt(max(mu_min, 0)) and the eigen-residual.
    """
    logger = logger or logging.getLogger(__name__)
    _require_norms(system)
    lu = _gram_solver(system.stress_gram)
    B = system.B

    def schur_apply(x):
        return B @ lu.solve(np.asarray(B.T @ x).ravel())

    if system.n_u <= DENSE_LIMIT:
        mu, x = _dense_smallest(system, lu)
    else:
        mu, x = _sparse_smallest(system, lu, tol)
    if not np.isfinite(mu):
        raise EigenSolveError(f"eigenvalue is not finite: {mu}")
    residual = _relative_residual(schur_apply, system.disp_mass, mu, x)
    beta = float(np.sqrt(max(mu, 0.0)))
    logger.info(f"Inf-sup: beta_h={beta:.6e} (mu={mu:.6e}, residual {residual:.2e})")
    return InfSupResult(beta, mu, residual, system.n_sigma, system.n_u)


def restrict_stress(system, keep):
    """Copy of a system with only the stress unknowns `keep` (used for ablations)."""
    keep = np.asarray(keep, dtype=np.int64)
    restricted = system.with_load(system.load)
    restricted.A = system.A[keep][:, keep].tocsr()
    restricted.B = system.B[:, keep].tocsr()
    if system.stress_gram is not None:
        restricted.stress_gram = system.stress_gram[keep][:, keep].tocsr()
    return restricted
