"""CQLF existence, construction, transfer, reduction and dual witnesses.

A common quadratic Lyapunov function (CQLF) for a matrix pair (B1, B2) is a
positive definite Q with Q B1 + B1' Q < 0 and Q B2 + B2' Q <= 0, where B1 is
Hurwitz and B2 is Hurwitz except for a simple zero eigenvalue.  For rank-1
differences B2 = B1 - g h', existence is decided purely spectrally: a CQLF
exists iff B1 B2 has no real negative eigenvalue and a simple zero eigenvalue.

Construction is a deterministic alternating-projection (Dykstra-style)
feasibility search in the space of symmetric matrices; no external solver.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from oucert import matkit

#: Semi-residual tolerance factor: the zero eigenvector of B2 forces an exact
#: zero direction in Q B2 + B2' Q, so the "<= 0" check allows 1e-9 * ||B2||.
TOL_SEMI_FACTOR = 1e-9

#: Strict-residual target factor for certificates.
TOL_STRICT_FACTOR = 1e-8


class Rank1Error(ValueError):
    """B1 - B2 is not (numerically) rank one."""


class ConstructionFailure(RuntimeError):
    """Feasibility search exhausted its iteration budget; carries residuals."""

    def __init__(self, msg, res_strict=None, res_semi=None):
        super().__init__(msg)
        self.res_strict = res_strict
        self.res_semi = res_semi


# ---------------------------------------------------------------------------
# pairs


@dataclass(frozen=True)
class MatrixPair:
    """A pair (B1, B2) with optional rank-1 data B2 = B1 - g h'."""

    B1: np.ndarray
    B2: np.ndarray
    g: np.ndarray | None = None
    h: np.ndarray | None = None

    @property
    def dim(self) -> int:
        return self.B1.shape[0]


def make_pair(B1, B2, g=None, h=None) -> MatrixPair:
    """Validate and build a MatrixPair, extracting rank-1 factors if absent.

    When only (B1, B2) are given, B1 - B2 is factored via its dominant
    singular pair; the pair is rejected if the second singular value exceeds
    1e-8 * ||B1 - B2||.
    """
    B1 = matkit.as_square(B1)
    B2 = matkit.as_square(B2)
    if B1.shape != B2.shape:
        raise matkit.MatrixError("B1 and B2 must have the same dimension")
    D = B1 - B2
    if g is not None and h is not None:
        g = np.asarray(g, dtype=float).ravel()
        h = np.asarray(h, dtype=float).ravel()
        err = np.linalg.norm(D - np.outer(g, h))
        if err > 1e-10 * (np.linalg.norm(B1) + np.linalg.norm(B2)):
            raise Rank1Error(f"B1 - B2 differs from g h' by {err:g}")
        return MatrixPair(B1=B1, B2=B2, g=g, h=h)
    nd = np.linalg.norm(D)
    if nd == 0.0:
        raise Rank1Error("B1 - B2 is zero; degenerate pair")
    U, s, Vt = np.linalg.svd(D)
    if len(s) > 1 and s[1] > 1e-8 * nd:
        raise Rank1Error(f"second singular value {s[1]:g} exceeds 1e-8 * ||B1 - B2||")
    return MatrixPair(B1=B1, B2=B2, g=U[:, 0] * s[0], h=Vt[0, :].copy())


def check_pair_spectra(pair: MatrixPair) -> tuple[bool, dict]:
    """Classify the pair's spectra against the CQLF hypotheses.

    True iff B1 is Hurwitz and B2 has all eigenvalues with negative real
    part except one simple zero (per the module-wide tolerance rules).
    """
    b1_hurwitz = matkit.is_hurwitz(pair.B1)
    eigs2 = matkit.eig_general(pair.B2)
    scale2 = matkit.norm_scale(pair.B2)
    n_zero = matkit.count_zero_eigs(eigs2, scale2)
    band = matkit.TOL_ZERO * scale2
    others_neg = all(
        lam.real < -band for lam in eigs2 if not matkit.is_zero_eig(lam, scale2)
    )
    ok = b1_hurwitz and n_zero == 1 and others_neg
    diag = {
        "b1_hurwitz": b1_hurwitz,
        "b2_zero_count": n_zero,
        "b2_others_negative": others_neg,
        "b1_spectrum": matkit.eig_general(pair.B1),
        "b2_spectrum": eigs2,
    }
    return ok, diag


# ---------------------------------------------------------------------------
# existence


@dataclass(frozen=True)
class ExistenceReport:
    verdict: str  # "exists" | "not_exists" | "precondition_failed"
    product_spectrum: np.ndarray
    failing_eigenvalue: complex | None = None
    diagnostics: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "product_spectrum": matkit.spectrum_to_json(self.product_spectrum),
            "failing_eigenvalue": (
                None
                if self.failing_eigenvalue is None
                else [self.failing_eigenvalue.real, self.failing_eigenvalue.imag]
            ),
        }


def cqlf_exists(pair: MatrixPair) -> ExistenceReport:
    """Decide CQLF existence from the spectrum of B1 B2.

    Verdict "exists" iff B1 B2 has no real negative eigenvalue and exactly
    one (simple) zero eigenvalue.  Hypothesis failures yield the verdict
    "precondition_failed" rather than an exception.
    """
    ok, diag = check_pair_spectra(pair)
    product = pair.B1 @ pair.B2
    eigs = matkit.eig_general(product)
    if not ok or pair.g is None:
        if pair.g is None:
            diag["rank1_missing"] = True
        return ExistenceReport("precondition_failed", eigs, diagnostics=diag)
    scale = matkit.norm_scale(product)
    for lam in eigs:
        if matkit.is_real_negative_eig(lam, scale):
            return ExistenceReport(
                "not_exists", eigs, failing_eigenvalue=complex(lam), diagnostics=diag
            )
    if matkit.count_zero_eigs(eigs, scale) != 1:
        return ExistenceReport("not_exists", eigs, diagnostics=diag)
    return ExistenceReport("exists", eigs, diagnostics=diag)


def strong_cqlf_exists(pair: MatrixPair) -> bool:
    """Strict-inequality variant for two Hurwitz matrices.

    True iff the spectrum of B1 B2 has no real negative eigenvalue.
    """
    if not (matkit.is_hurwitz(pair.B1) and matkit.is_hurwitz(pair.B2)):
        raise ValueError("strong CQLF test requires both matrices Hurwitz")
    product = pair.B1 @ pair.B2
    eigs = matkit.eig_general(product)
    scale = matkit.norm_scale(product)
    return not any(matkit.is_real_negative_eig(lam, scale) for lam in eigs)


def negative_product_eigenvalues(pair: MatrixPair) -> list[complex]:
    """The real negative eigenvalues of B1 B2 (for reporting)."""
    product = pair.B1 @ pair.B2
    eigs = matkit.eig_general(product)
    scale = matkit.norm_scale(product)
    return [complex(l) for l in eigs if matkit.is_real_negative_eig(l, scale)]


# ---------------------------------------------------------------------------
# the theorem pairs


def _validate_r_p(R, p):
    R = matkit.as_square(R)
    p = np.asarray(p, dtype=float).ravel()
    if p.shape[0] != R.shape[0]:
        raise ValueError("p dimension does not match R")
    if not matkit.is_nonsingular_m_matrix(R):
        raise ValueError("R is not a nonsingular M-matrix")
    eR = np.ones(R.shape[0]) @ R
    if np.any(eR < -1e-12 * matkit.norm_scale(R)):
        k = int(np.argmin(eR))
        raise ValueError(f"column-sum condition e'R >= 0' fails at component {k}: {eR[k]:g}")
    if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
        raise ValueError("p is not a probability vector")
    return R, p


def theorem1_pairs(R, p) -> tuple[tuple[MatrixPair, ExistenceReport], ...]:
    """The two pairs (-R, -R(I-pe')) and (-R, -(I-pe')R) with their verdicts.

    Requires R a nonsingular M-matrix with e'R >= 0' and p a probability
    vector; under these conditions both verdicts are "exists".
    """
    R, p = _validate_r_p(R, p)
    K = R.shape[0]
    e = np.ones(K)
    proj = np.eye(K) - np.outer(p, e)
    pair1 = make_pair(-R, -R @ proj, g=-R @ p, h=e)
    pair2 = make_pair(-R, -proj @ R, g=-p, h=R.T @ e)
    return (pair1, cqlf_exists(pair1)), (pair2, cqlf_exists(pair2))


def drift_matrix_hurwitz(R, p, alpha: float) -> bool:
    """True iff -R(I-pe') - alpha p e' is Hurwitz (always, on valid input)."""
    R, p = _validate_r_p(R, p)
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    K = R.shape[0]
    e = np.ones(K)
    A = -R @ (np.eye(K) - np.outer(p, e)) - alpha * np.outer(p, e)
    return matkit.is_hurwitz(A)


# ---------------------------------------------------------------------------
# certificates and construction


@dataclass(frozen=True)
class CqlfCertificate:
    """A certificate Q with residual diagnostics, normalized to |Q|_1 = 1.

    res_strict / res_semi are the largest eigenvalues of sym(Q B1 + B1' Q)
    and sym(Q B2 + B2' Q); the norm is the entrywise absolute sum.
    """

    Q: np.ndarray
    res_strict: float
    res_semi: float
    min_eig_Q: float

    def to_json(self) -> dict:
        return {
            "Q": matkit.matrix_to_json(self.Q),
            "res_strict": self.res_strict,
            "res_semi": self.res_semi,
            "min_eig_Q": self.min_eig_Q,
        }


def certify(pair: MatrixPair, Q) -> CqlfCertificate:
    """Residual diagnostics of Q for the pair, after |Q|_1 normalization."""
    Q = matkit.symmetrize(Q)
    n1 = float(np.sum(np.abs(Q)))
    if n1 == 0.0:
        raise ValueError("zero matrix is not a certificate")
    Q = Q / n1
    m1 = matkit.symmetrize(Q @ pair.B1 + pair.B1.T @ Q)
    m2 = matkit.symmetrize(Q @ pair.B2 + pair.B2.T @ Q)
    return CqlfCertificate(
        Q=Q,
        res_strict=float(np.max(np.linalg.eigvalsh(m1))),
        res_semi=float(np.max(np.linalg.eigvalsh(m2))),
        min_eig_Q=float(np.min(np.linalg.eigvalsh(Q))),
    )


def certificate_valid(pair: MatrixPair, cert: CqlfCertificate) -> bool:
    b1n = float(np.linalg.norm(pair.B1, 2))
    b2n = float(np.linalg.norm(pair.B2, 2))
    return (
        cert.min_eig_Q > 0.0
        and cert.res_strict <= -TOL_STRICT_FACTOR * b1n
        and cert.res_semi <= TOL_SEMI_FACTOR * b2n
    )


# -- symmetric-matrix vectorization (Frobenius-isometric) --------------------


def _sym_indices(K):
    return np.triu_indices(K)


def _sym_to_vec(S, idx):
    i, j = idx
    w = np.where(i == j, 1.0, np.sqrt(2.0))
    return S[i, j] * w


def _vec_to_sym(v, idx, K):
    i, j = idx
    w = np.where(i == j, 1.0, np.sqrt(2.0))
    S = np.zeros((K, K))
    S[i, j] = v / w
    return S + S.T - np.diag(np.diag(S))


def _null_vectors(B):
    """Right and left null vectors of B (unit norm) for a simple zero eigenvalue."""
    U, s, Vt = np.linalg.svd(B)
    return Vt[-1, :].copy(), U[:, -1].copy()


class _AffineSet:
    """Subspace {Q symmetric : w' Q v = 0 for all w orthogonal to u}.

    Necessary condition for Q B2 + B2' Q <= 0 when B2 v = 0, u' B2 = 0:
    the kernel direction forces (Q B2 + B2' Q) v = B2' Q v = 0, i.e.
    Q v in span(u).
    """

    def __init__(self, v, u, idx, K):
        basis = sla.null_space(u.reshape(1, -1))  # K x (K-1), orthonormal
        rows = []
        for k in range(basis.shape[1]):
            w = basis[:, k]
            rows.append(_sym_to_vec(0.5 * (np.outer(w, v) + np.outer(v, w)), idx))
        self.A = np.array(rows)
        self.proj = self.A.T @ np.linalg.pinv(self.A @ self.A.T) @ self.A
        self.idx, self.K = idx, K

    def project(self, Q):
        q = _sym_to_vec(Q, self.idx)
        return _vec_to_sym(q - self.proj @ q, self.idx, self.K)


def _project_psd_shift(Q, eps):
    """Metric projection onto {Q >= eps I}."""
    vals, vecs = np.linalg.eigh(matkit.symmetrize(Q))
    return (vecs * np.maximum(vals, eps)) @ vecs.T


def _project_operator_nsd(Q, B, eps):
    """Quasi-projection onto {Q : Q B + B' Q <= -eps I} for Hurwitz B.

    Projects the Lyapunov-operator image onto the shifted NSD cone by
    symmetric eigendecomposition, then pulls back through the (invertible)
    operator.
    """
    M = matkit.symmetrize(Q @ B + B.T @ Q)
    vals, vecs = np.linalg.eigh(M)
    clipped = np.minimum(vals, -eps)
    if np.all(clipped == vals):
        return Q
    Mhat = (vecs * clipped) @ vecs.T
    return matkit.symmetrize(sla.solve_continuous_lyapunov(B.T, Mhat))


class _CompressedSemiSet:
    """{Q : G'(Q B2 + B2' Q) G <= 0} with G an orthonormal basis of v-perp.

    Pullback is a minimum-norm least-squares correction through the
    compressed linear operator.
    """

    def __init__(self, B2, v, idx, K):
        self.B2 = B2
        self.G = sla.null_space(v.reshape(1, -1))  # K x (K-1)
        self.idx, self.K = idx, K
        kc = K - 1
        self.cidx = np.triu_indices(kc)
        cols = []
        dim_s = len(idx[0])
        for k in range(dim_s):
            ek = np.zeros(dim_s)
            ek[k] = 1.0
            S = _vec_to_sym(ek, idx, K)
            M = self.G.T @ matkit.symmetrize(S @ B2 + B2.T @ S) @ self.G
            cols.append(self._cvec(M))
        self.T = np.array(cols).T
        self.Tpinv = np.linalg.pinv(self.T)

    def _cvec(self, M):
        i, j = self.cidx
        w = np.where(i == j, 1.0, np.sqrt(2.0))
        return M[i, j] * w

    def project(self, Q):
        M = self.G.T @ matkit.symmetrize(Q @ self.B2 + self.B2.T @ Q) @ self.G
        vals, vecs = np.linalg.eigh(M)
        clipped = np.minimum(vals, 0.0)
        if np.all(clipped == vals):
            return Q
        Mhat = (vecs * clipped) @ vecs.T
        dq = self.Tpinv @ (self._cvec(Mhat) - self._cvec(M))
        return Q + _vec_to_sym(dq, self.idx, self.K)


def construct_cqlf(
    pair: MatrixPair,
    max_iter: int = 20000,
    eps_factor: float = 1e-6,
) -> CqlfCertificate:
    """Construct a CQLF certificate by Dykstra-style alternating projections.

    Feasibility system: Q >= eps I, Q B1 + B1' Q <= -eps I, and the
    semidefinite constraint for B2 split into its exact linear part
    (Q v in span(u) for the null vectors of B2) plus negative
    semidefiniteness compressed onto the complement of v.  Warm start is
    the Lyapunov solution for B1; the schedule is fixed, so the result is
    deterministic.  Raises ConstructionFailure (with best residuals) when
    the iteration budget runs out; this signals conditioning trouble, not
    non-existence.
    """
    report = cqlf_exists(pair)
    if report.verdict != "exists":
        raise ConstructionFailure(f"cqlf_exists verdict is {report.verdict}")
    K = pair.dim
    idx = _sym_indices(K)
    eps = eps_factor * float(np.linalg.norm(pair.B1, 2))
    v, u = _null_vectors(pair.B2)
    sets = [lambda Q: _project_psd_shift(Q, eps),
            lambda Q: _project_operator_nsd(Q, pair.B1, eps)]
    if K > 1:
        semi = _CompressedSemiSet(pair.B2, v, idx, K)
        aff = _AffineSet(v, u, idx, K)
        sets += [semi.project, aff.project]

    Q = matkit.lyapunov_solve(pair.B1, np.eye(K))
    Q = Q / np.sum(np.abs(Q))
    corrections = [np.zeros((K, K)) for _ in sets]
    best = None
    for _ in range(max_iter):
        for k, proj in enumerate(sets):
            Qc = Q + corrections[k]
            Qn = proj(Qc)
            corrections[k] = Qc - Qn
            Q = Qn
        cert = certify(pair, Q)
        if best is None or max(cert.res_strict, cert.res_semi) < max(
            best.res_strict, best.res_semi
        ):
            best = cert
        if certificate_valid(pair, cert):
            return cert
    raise ConstructionFailure(
        f"no certificate within {max_iter} iterations",
        res_strict=best.res_strict,
        res_semi=best.res_semi,
    )


def strong_cqlf_feasibility(
    pair: MatrixPair,
    max_iter: int = 5000,
    eps_factor: float = 1e-6,
) -> CqlfCertificate | None:
    """Feasibility search for a strong CQLF (both inequalities strict).

    Independent oracle for strong_cqlf_exists: returns a certificate if the
    alternating projections converge, None if the budget runs out (taken as
    evidence of infeasibility at these tolerances).
    """
    K = pair.dim
    eps = eps_factor * float(np.linalg.norm(pair.B1, 2))
    sets = [
        lambda Q: _project_psd_shift(Q, eps),
        lambda Q: _project_operator_nsd(Q, pair.B1, eps),
        lambda Q: _project_operator_nsd(Q, pair.B2, eps),
    ]
    Q = matkit.lyapunov_solve(pair.B1, np.eye(K))
    Q = Q / np.sum(np.abs(Q))
    corrections = [np.zeros((K, K)) for _ in sets]
    b1n = float(np.linalg.norm(pair.B1, 2))
    b2n = float(np.linalg.norm(pair.B2, 2))
    for _ in range(max_iter):
        for k, proj in enumerate(sets):
            Qc = Q + corrections[k]
            Qn = proj(Qc)
            corrections[k] = Qc - Qn
            Q = Qn
        cert = certify(pair, Q)
        if (
            cert.min_eig_Q > 0.0
            and cert.res_strict <= -TOL_STRICT_FACTOR * b1n
            and cert.res_semi <= -TOL_STRICT_FACTOR * b2n
        ):
            return cert
    return None


def transfer_cqlf(Q, R) -> np.ndarray:
    """Map a certificate Q for (-R, -R(I-pe')) to R' Q R for (-R, -(I-pe')R).

    Returned matrix is normalized to |.|_1 = 1; callers re-verify residuals
    via certify() against the second pair.
    """
    R = matkit.as_square(R)
    Qt = matkit.symmetrize(R.T @ matkit.symmetrize(Q) @ R)
    return Qt / np.sum(np.abs(Qt))


# ---------------------------------------------------------------------------
# Krylov reduction


@dataclass(frozen=True)
class KalmanReduction:
    """Controllability-space compression of (B, g) with rank-1 partner h.

    basis spans the Krylov space U of (B, g); B_red is the compression of B
    onto U, B_comp the compression onto the orthogonal complement.  The
    spectrum of B (B - g h') is the union of the reduced product's spectrum
    and the squared complement spectrum.
    """

    basis: np.ndarray  # K x d, orthonormal
    B_red: np.ndarray
    g_red: np.ndarray
    h_red: np.ndarray
    B_comp: np.ndarray  # compression on the complement (empty if d == K)


def kalman_reduce(B, g, h) -> KalmanReduction:
    B = matkit.as_square(B)
    g = np.asarray(g, dtype=float).ravel()
    h = np.asarray(h, dtype=float).ravel()
    K = B.shape[0]
    if g.shape[0] != K or h.shape[0] != K:
        raise ValueError("g, h must match the dimension of B")
    if np.linalg.norm(g) == 0.0:
        raise ValueError("g = 0 is degenerate: B2 = B contradicts the simple-zero hypothesis")
    krylov = np.empty((K, K))
    w = g.copy()
    for k in range(K):
        krylov[:, k] = w
        w = B @ w
    Ufull, s, _ = np.linalg.svd(krylov)
    d = int(np.sum(s > 1e-10 * s[0]))
    U = Ufull[:, :d]
    W = Ufull[:, d:]
    return KalmanReduction(
        basis=U,
        B_red=U.T @ B @ U,
        g_red=U.T @ g,
        h_red=U.T @ h,
        B_comp=W.T @ B @ W,
    )


# ---------------------------------------------------------------------------
# dual witnesses


@dataclass(frozen=True)
class WitnessResult:
    """Outcome of the dual-witness search.

    status is "witness" (nonzero PSD X, Z solving the dual equation),
    "none" (a CQLF exists; no witness), or "inconclusive" (budget
    exhausted without either certificate).
    """

    status: str
    X: np.ndarray | None = None
    Z: np.ndarray | None = None
    residual: float = np.inf


def dual_witness(
    pair: MatrixPair,
    witness_tol: float = 1e-6,
) -> WitnessResult:
    """Search for nonzero PSD (X, Z) with B1 X + X B1' + B2 Z + Z B2' = 0.

    The search is a semidefinite feasibility problem: X >= 0, Z >= 0,
    tr(X + Z) = 1, plus the matrix equation.  When B2 is singular the ray
    Z proportional to B1^{-1} g g' (B1^{-1})' solves trivially (with X = 0)
    and certifies nothing, so the overlap with that ray is minimized as the
    objective; a minimizer still on the ray means no genuine witness.  On
    no-witness outcomes the complementary certificate (a CQLF, or a strong
    CQLF for a nonsingular B2) is required before reporting "none";
    otherwise the result is "inconclusive".
    """
    import cvxpy as cp

    K = pair.dim
    scale = float(np.linalg.norm(pair.B1, 2) + np.linalg.norm(pair.B2, 2))

    b2_singular = matkit.count_zero_eigs(
        matkit.eig_general(pair.B2), matkit.norm_scale(pair.B2)
    ) > 0
    Zexc = None
    if b2_singular and pair.g is not None:
        z_exc = np.linalg.solve(pair.B1, pair.g)
        Zexc = np.outer(z_exc, z_exc)
        Zexc /= np.linalg.norm(Zexc)

    Xv = cp.Variable((K, K), symmetric=True)
    Zv = cp.Variable((K, K), symmetric=True)
    constraints = [
        Xv >> 0,
        Zv >> 0,
        cp.trace(Xv) + cp.trace(Zv) == 1,
        pair.B1 @ Xv + Xv @ pair.B1.T + pair.B2 @ Zv + Zv @ pair.B2.T == 0,
    ]
    objective = cp.Minimize(
        cp.sum(cp.multiply(Zexc, Zv)) if Zexc is not None else cp.Constant(0.0)
    )
    problem = cp.Problem(objective, constraints)
    feasible = False
    for solver in (cp.CLARABEL, cp.SCS):
        try:
            problem.solve(solver=solver)
        except cp.SolverError:  # pragma: no cover
            continue
        if problem.status in ("optimal", "optimal_inaccurate") and Zv.value is not None:
            feasible = True
            break

    if feasible:
        X = _project_psd_shift(matkit.symmetrize(Xv.value), 0.0)
        Z = _project_psd_shift(matkit.symmetrize(Zv.value), 0.0)
        E = pair.B1 @ X + X @ pair.B1.T + pair.B2 @ Z + Z @ pair.B2.T
        res = float(np.linalg.norm(E) / scale)
        nz = float(np.linalg.norm(Z))
        on_ray = (
            Zexc is not None
            and nz > 0.0
            and abs(np.sum(Z * Zexc)) / nz > 1.0 - 1e-6
            and np.trace(X) < 1e-6
        )
        degenerate = np.trace(X) < 1e-9 or np.trace(Z) < 1e-9
        if res <= witness_tol and not on_ray and not degenerate:
            return WitnessResult("witness", X=X, Z=Z, residual=res)

    # No genuine witness found; confirm the complementary certificate.
    try:
        if b2_singular:
            construct_cqlf(pair)
        elif strong_cqlf_feasibility(pair) is None:
            return WitnessResult("inconclusive")
        return WitnessResult("none")
    except ConstructionFailure:
        return WitnessResult("inconclusive")


# ---------------------------------------------------------------------------
# serialization


def pair_to_json(pair: MatrixPair, report: ExistenceReport | None = None,
                 cert: CqlfCertificate | None = None) -> dict:
    out = {
        "B1": matkit.matrix_to_json(pair.B1),
        "B2": matkit.matrix_to_json(pair.B2),
        "g": None if pair.g is None else pair.g.tolist(),
        "h": None if pair.h is None else pair.h.tolist(),
    }
    if report is not None:
        out.update(report.to_json())
    if cert is not None:
        out.update(cert.to_json())
    return out
