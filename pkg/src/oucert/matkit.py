"""Dense square-matrix numerics shared by all other modules.

Everything here is desk-scale (dimension <= DIM_CAP) and dense.  The
tolerance policy for classifying eigenvalues as zero / real-negative is
centralized in this module so that every spectral test in the package
agrees on what "zero" means.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

DIM_CAP = 64

#: An eigenvalue lambda counts as zero iff |lambda| <= TOL_ZERO * max(1, ||A||).
TOL_ZERO = 1e-8


class MatrixError(ValueError):
    """Invalid matrix input (non-square, non-finite, oversized)."""


class NotMMatrix(ValueError):
    """Input matrix is not an M-matrix; carries the offending entry."""

    def __init__(self, msg, index=None):
        super().__init__(msg)
        self.index = index


class SolveFailure(RuntimeError):
    """A dense factorization or iteration failed; message carries diagnostics."""


def as_square(A) -> np.ndarray:
    """Validate and return A as a finite square float array."""
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise MatrixError(f"expected a square matrix, got shape {A.shape}")
    if A.shape[0] == 0 or A.shape[0] > DIM_CAP:
        raise MatrixError(f"dimension {A.shape[0]} outside (0, {DIM_CAP}]")
    if not np.all(np.isfinite(A)):
        raise MatrixError("matrix has non-finite entries")
    return A


def symmetrize(S) -> np.ndarray:
    """Return the symmetric part (S + S') / 2 after validation."""
    S = as_square(S)
    return 0.5 * (S + S.T)


def norm_scale(A) -> float:
    """Scale used in relative tolerances: max(1, ||A||_2)."""
    return max(1.0, float(np.linalg.norm(A, 2)))


def eig_general(A) -> np.ndarray:
    """Eigenvalues of a general real square matrix, multiplicities counted.

    Raises SolveFailure on QR-iteration non-convergence (never silently
    truncates the spectrum).
    """
    A = as_square(A)
    try:
        return np.linalg.eigvals(A)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - rare
        raise SolveFailure(f"eigenvalue iteration failed: {exc}") from exc


def spectral_radius(A) -> float:
    """max |lambda| over the spectrum of A."""
    return float(np.max(np.abs(eig_general(A)))) if as_square(A).size else 0.0


def is_positive_definite(S, tol: float = 0.0) -> bool:
    """True iff the smallest eigenvalue of sym(S) exceeds tol * ||S||."""
    S = symmetrize(S)
    thresh = tol * float(np.linalg.norm(S, 2))
    return bool(np.min(np.linalg.eigvalsh(S)) > thresh)


def is_zero_eig(lam: complex, scale: float, tol_zero: float = TOL_ZERO) -> bool:
    """Zero-classification rule: |lambda| <= tol_zero * max(1, scale)."""
    return abs(lam) <= tol_zero * max(1.0, scale)


def is_real_negative_eig(lam: complex, scale: float, tol_zero: float = TOL_ZERO) -> bool:
    """Real-negative rule, mirroring the zero rule symmetrically."""
    band = tol_zero * max(1.0, scale)
    return lam.real < -band and abs(lam.imag) <= band


def count_zero_eigs(eigs, scale: float, tol_zero: float = TOL_ZERO) -> int:
    return sum(1 for lam in eigs if is_zero_eig(lam, scale, tol_zero))


def is_hurwitz(A, tol_zero: float = TOL_ZERO) -> bool:
    """True iff every eigenvalue of A has real part < -tol_zero * max(1, ||A||)."""
    A = as_square(A)
    band = tol_zero * norm_scale(A)
    return bool(np.all(eig_general(A).real < -band))


@dataclass(frozen=True)
class MMatrixDecomposition:
    """R = s*I - N with N >= 0 entrywise; nonsingular iff rho(N) < s."""

    s: float
    N: np.ndarray
    rho: float
    nonsingular: bool

    def reconstruct(self) -> np.ndarray:
        return self.s * np.eye(self.N.shape[0]) - self.N


def m_matrix_decompose(R, tol_zero: float = TOL_ZERO) -> MMatrixDecomposition:
    """Decompose an M-matrix as s*I - N with s the max diagonal entry.

    Rejects (NotMMatrix) on the first strictly positive off-diagonal entry.
    """
    R = as_square(R)
    K = R.shape[0]
    off = R - np.diag(np.diag(R))
    pos = np.argwhere(off > 0)
    if pos.size:
        i, j = pos[0]
        raise NotMMatrix(
            f"positive off-diagonal entry R[{i},{j}] = {R[i, j]:g}", index=(int(i), int(j))
        )
    s = float(np.max(np.diag(R)))
    if s <= 0:
        raise NotMMatrix(f"max diagonal entry {s:g} is not positive")
    N = s * np.eye(K) - R
    rho = spectral_radius(N)
    if rho > s + tol_zero * max(1.0, s):
        raise NotMMatrix(f"spectral radius rho(N) = {rho:g} exceeds shift s = {s:g}")
    nonsingular = rho < s - tol_zero * max(1.0, s)
    return MMatrixDecomposition(s=s, N=N, rho=rho, nonsingular=nonsingular)


def is_nonsingular_m_matrix(R) -> bool:
    try:
        return m_matrix_decompose(R).nonsingular
    except NotMMatrix:
        return False


def lyapunov_solve(A, W) -> np.ndarray:
    """Solve A X + X A' = -W for symmetric X.

    Requires that A and -A share no eigenvalue (guaranteed for Hurwitz A).
    Raises SolveFailure when the Sylvester operator is near singular.
    """
    A = as_square(A)
    W = symmetrize(W)
    eigs = eig_general(A)
    sums = np.abs(eigs[:, None] + eigs[None, :])
    scale = norm_scale(A)
    if np.min(sums) <= 1e-12 * scale:
        raise SolveFailure(
            f"Sylvester operator near singular: min |lambda_i + lambda_j| = {np.min(sums):g}"
        )
    X = sla.solve_continuous_lyapunov(A, -W)
    X = 0.5 * (X + X.T)
    res = np.linalg.norm(A @ X + X @ A.T + W)
    bound = 1e-10 * (np.linalg.norm(A) * np.linalg.norm(X) + np.linalg.norm(W))
    if res > max(bound, 1e-300):
        raise SolveFailure(f"Lyapunov residual {res:g} exceeds bound {bound:g}")
    return X


def matrix_to_json(A) -> list:
    """Serialize a matrix as JSON-ready arrays-of-rows of finite doubles."""
    return np.asarray(A, dtype=float).tolist()


def matrix_from_json(rows) -> np.ndarray:
    return as_square(np.asarray(rows, dtype=float))


def spectrum_to_json(eigs) -> list:
    """Spectra serialize as [re, im] pairs."""
    return [[float(lam.real), float(lam.imag)] for lam in np.asarray(eigs, dtype=complex)]
