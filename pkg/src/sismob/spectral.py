"""Spectral machinery for Metzler and nonnegative matrices.

Every spectrum needed by the model analysis is the Perron root of a
(shifted) nonnegative matrix, so the workhorse is a plain power
iteration rather than a general nonsymmetric eigensolver.  Shifting a
Metzler matrix by ``1 + max |diagonal|`` makes it nonnegative with a
strictly positive diagonal, which renders every irreducible class
primitive and the Perron root strictly dominant.  If the plain
iteration still stalls (imprimitive or near-defective input), a
two-step averaged iteration is used as fallback: averaging consecutive
iterates damps rotated eigenvalues by |1 + e^{i theta}| / 2 < 1 while
leaving the Perron direction fixed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import graphs
from .errors import ConvergenceError

EIG_TOL = 1e-10
MAX_ITER = 100_000
METZLER_TOL = 1e-12


@dataclass
class SpectralResult:
    """Outcome of a Perron-root computation.

    ``mu`` is the spectral abscissa, ``rho`` the spectral radius
    (whichever was requested), ``perron_vector`` the positive
    eigenvector normalized to unit max entry (only for irreducible
    input), and ``residual`` the final ||G y - lambda y||_inf.
    """

    mu: float | None = None
    rho: float | None = None
    perron_vector: np.ndarray | None = None
    residual: float = np.nan
    iterations: int = 0
    converged: bool = False


def _power_iteration(S: np.ndarray, tol: float, max_iter: int):
    """Dominant eigenpair of a nonnegative matrix.

    Returns (lam, y, residual, iterations, converged) with ||y||_2 = 1.
    Convergence requires both a stable Rayleigh estimate and a small
    eigen-residual relative to ||S||_inf at tolerance ``tol``; the
    iteration then keeps polishing toward a 1e-3 finer target (or the
    iteration cap) so the reported eigenvalue is comfortably inside the
    acceptance tolerance.
    """
    n = S.shape[0]
    norm_S = max(1.0, float(np.max(np.abs(S).sum(axis=1)))) if S.size else 1.0
    fine = tol * 1e-3
    y = np.full(n, 1.0 / np.sqrt(n))
    lam = 0.0
    iterations = 0
    averaged = False
    best = None  # (lam, y, residual) at the coarse tolerance

    plain_budget = max_iter // 2

    while iterations < max_iter:
        z = S @ y
        nz = float(np.linalg.norm(z))
        if nz == 0.0:
            # y is annihilated; spectral radius along this start is zero.
            return 0.0, y, 0.0, iterations, True
        lam_new = float(y @ z)  # Rayleigh quotient, ||y||_2 = 1
        if averaged:
            y_next = y + z / nz
        else:
            y_next = z
        y_next = y_next / np.linalg.norm(y_next)
        iterations += 1

        if abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)):
            residual = float(np.max(np.abs(z - lam_new * y)))
            if residual <= tol * norm_S:
                best = (lam_new, y, residual)
                if (abs(lam_new - lam) <= fine * max(1.0, abs(lam_new))
                        and residual <= fine * norm_S):
                    return lam_new, y, residual, iterations, True
        lam = lam_new
        y = y_next

        if not averaged and iterations >= plain_budget:
            averaged = True

    if best is not None:
        return best[0], best[1], best[2], iterations, True
    z = S @ y
    residual = float(np.max(np.abs(z - lam * y)))
    return lam, y, residual, iterations, False


def _require_metzler(G: np.ndarray):
    off = G - np.diag(np.diag(G))
    worst = float(off.min()) if off.size else 0.0
    if worst < -METZLER_TOL * max(1.0, float(np.max(np.abs(G)))):
        raise ValueError(f"matrix is not Metzler: off-diagonal entry {worst}")


def _is_irreducible(G: np.ndarray) -> bool:
    n = G.shape[0]
    if n == 1:
        return True
    return graphs.is_strongly_connected(n, graphs.edges_of_matrix(G))


def spectral_abscissa(G: np.ndarray, tol: float = EIG_TOL,
                      max_iter: int = MAX_ITER) -> SpectralResult:
    """Largest real part of the spectrum of a Metzler matrix.

    The matrix is shifted by c = 1 + max |g_kk| to a nonnegative matrix
    with positive diagonal, whose Perron root is found by power
    iteration; the abscissa is that root minus c.  The Perron vector is
    reported (max-normalized) when G is irreducible.
    """
    G = np.asarray(G, dtype=float)
    _require_metzler(G)
    n = G.shape[0]
    c = 1.0 + float(np.max(np.abs(np.diag(G)))) if n else 1.0
    S = np.maximum(G + c * np.eye(n), 0.0)

    lam, y, _, iterations, converged = _power_iteration(S, tol, max_iter)
    mu = lam - c
    residual = float(np.max(np.abs(G @ y - mu * y)))
    if not converged:
        raise ConvergenceError(
            f"power iteration did not converge in {iterations} iterations "
            f"(residual {residual:.3e})")

    perron = None
    if _is_irreducible(G):
        perron = y / y.max()
        residual = float(np.max(np.abs(G @ perron - mu * perron)))
    return SpectralResult(mu=mu, perron_vector=perron, residual=residual,
                          iterations=iterations, converged=True)


def spectral_radius(G: np.ndarray, tol: float = EIG_TOL,
                    max_iter: int = MAX_ITER) -> SpectralResult:
    """Perron root of a nonnegative matrix by power iteration."""
    G = np.asarray(G, dtype=float)
    if G.size and float(G.min()) < -METZLER_TOL * max(1.0, float(np.max(np.abs(G)))):
        raise ValueError(f"matrix is not nonnegative: entry {float(G.min())}")
    G = np.maximum(G, 0.0)

    lam, y, _, iterations, converged = _power_iteration(G, tol, max_iter)
    residual = float(np.max(np.abs(G @ y - lam * y)))
    if not converged:
        raise ConvergenceError(
            f"power iteration did not converge in {iterations} iterations "
            f"(residual {residual:.3e})")

    perron = None
    if _is_irreducible(G):
        perron = y / y.max()
        residual = float(np.max(np.abs(G @ perron - lam * perron)))
    return SpectralResult(rho=lam, perron_vector=perron, residual=residual,
                          iterations=iterations, converged=True)


@dataclass
class MMatrixReport:
    """Independent nonsingular-M-matrix criteria for a Z-matrix.

    ``stability``: all eigenvalues have positive real part (checked via
    the spectral abscissa of -A).  ``inverse_positive``: A^{-1} >= 0
    entrywise (None when A is singular to tolerance).
    ``semi_positive``: some x >> 0 has Ax >> 0, with x built from the
    Perron vector(s) of the shifted matrix cI - A (per strongly
    connected component; exact for irreducible and block-diagonal A).
    ``agree`` reports whether all evaluated criteria give one verdict.
    """

    stability: bool
    inverse_positive: bool | None
    semi_positive: bool
    singular: bool
    mu_neg: float
    agree: bool


def mmatrix_checks(A: np.ndarray, tol: float = EIG_TOL) -> MMatrixReport:
    """Evaluate the stability / inverse-positivity / semi-positivity
    characterizations of a Z-matrix independently and report agreement."""
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    off = A - np.diag(np.diag(A))
    if off.size and float(off.max()) > METZLER_TOL * max(1.0, float(np.max(np.abs(A)))):
        raise ValueError("matrix is not a Z-matrix: positive off-diagonal entry")

    mu_neg = spectral_abscissa(-A).mu
    stability = mu_neg < -tol
    singular = abs(mu_neg) <= tol

    inverse_positive = None
    if not singular:
        try:
            X = np.linalg.solve(A, np.eye(n))
            inverse_positive = bool(X.min() >= -1e-10)
        except np.linalg.LinAlgError:
            singular = True

    semi_positive = _semi_positivity(A)

    verdicts = [stability, semi_positive]
    if inverse_positive is not None:
        verdicts.append(inverse_positive)
    agree = len(set(verdicts)) == 1
    return MMatrixReport(stability, inverse_positive, semi_positive, singular,
                         float(mu_neg), agree)


def _semi_positivity(A: np.ndarray, tol: float = 1e-12) -> bool:
    """Test for x >> 0 with Ax >> 0 using shifted Perron vectors.

    The candidate is assembled per strongly connected component of A's
    sparsity pattern, so block-diagonal Z-matrices are handled exactly.
    """
    n = A.shape[0]
    c = 1.0 + float(np.max(np.abs(np.diag(A)))) if n else 1.0
    S = np.maximum(c * np.eye(n) - A, 0.0)
    x = np.zeros(n)
    for comp in graphs.strongly_connected_components(A):
        idx = np.array(comp)
        lam, y, _, _, converged = _power_iteration(S[np.ix_(idx, idx)], EIG_TOL, MAX_ITER)
        if not converged:
            return False
        x[idx] = y / y.max()
    if x.min() <= tol:
        return False
    w = A @ x
    return bool(w.min() > tol * max(1.0, float(np.max(np.abs(A)))))
