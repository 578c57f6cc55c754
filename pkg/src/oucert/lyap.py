"""Lyapunov functions for the piecewise OU process and drift verification.

Two families:

* quadratic L(y) = y'Qy, valid when alpha = 0 and beta > 0, with Q a CQLF
  certificate for the pair (-R, -R(I-pe'));
* smoothed non-quadratic V(y) = (e'y)^2 + kappa [y - p phi(e'y)]' Qt
  [y - p phi(e'y)], valid when alpha > 0, with Qt a CQLF certificate for
  the pair (-R, -(I-pe')R) and phi a C^2 approximation of x -> x^+.

verify_drift samples spheres (stratified across the drift regimes) and
checks the Foster-Lyapunov targets numerically; quadratic_failure_witness
demonstrates that quadratics cannot work when alpha > 0.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from oucert import cqlf, matkit, oumodel

#: Minimum fitted decay constant for the smoothed target GV <= -C |y|^2.
C_FIT_MIN = 1e-6


# ---------------------------------------------------------------------------
# the smoothing function phi


def phi(x: float, eps: float) -> float:
    """C^2 approximation of x^+: x for x >= 0, -eps/2 for x <= -eps.

    On (-eps, 0), with u = (x + eps)/eps, phi = -eps/2 + eps u^3 (1 - u/2);
    this is the minimal-degree polynomial matching values and first two
    derivatives at both endpoints, and satisfies -eps/2 <= phi(x) <= x^+
    and 0 <= phi'(x) <= 1 everywhere.
    """
    if eps <= 0:
        raise ValueError("eps must be positive")
    if x >= 0.0:
        return float(x)
    if x <= -eps:
        return -0.5 * eps
    u = (x + eps) / eps
    return -0.5 * eps + eps * u**3 * (1.0 - 0.5 * u)


def phi_dot(x: float, eps: float) -> float:
    if eps <= 0:
        raise ValueError("eps must be positive")
    if x >= 0.0:
        return 1.0
    if x <= -eps:
        return 0.0
    u = (x + eps) / eps
    return 3.0 * u**2 - 2.0 * u**3


def phi_ddot(x: float, eps: float) -> float:
    if eps <= 0:
        raise ValueError("eps must be positive")
    if x >= 0.0 or x <= -eps:
        return 0.0
    u = (x + eps) / eps
    return (6.0 * u - 6.0 * u**2) / eps


# ---------------------------------------------------------------------------
# the two Lyapunov families


@dataclass(frozen=True)
class QuadraticLyapunov:
    """L(y) = y'Qy with Q a CQLF certificate for (-R, -R(I-pe'))."""

    Q: np.ndarray

    def value(self, y) -> float:
        y = np.asarray(y, dtype=float).ravel()
        return float(y @ self.Q @ y)

    def grad(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float).ravel()
        return 2.0 * self.Q @ y

    def hess(self, y) -> np.ndarray:
        return 2.0 * self.Q


@dataclass(frozen=True)
class SmoothedLyapunov:
    """V(y) = (e'y)^2 + kappa [y - p phi(e'y)]' Qt [y - p phi(e'y)]."""

    Qtilde: np.ndarray
    kappa: float
    eps: float
    p: np.ndarray

    def value(self, y) -> float:
        y = np.asarray(y, dtype=float).ravel()
        x = float(y.sum())
        w = y - self.p * phi(x, self.eps)
        return x * x + self.kappa * float(w @ self.Qtilde @ w)

    def grad(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float).ravel()
        K = y.shape[0]
        x = float(y.sum())
        w = y - self.p * phi(x, self.eps)
        pd = phi_dot(x, self.eps)
        qw = self.Qtilde @ w
        return 2.0 * x * np.ones(K) + 2.0 * self.kappa * (qw - pd * float(self.p @ qw) * np.ones(K))

    def hess(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float).ravel()
        K = y.shape[0]
        x = float(y.sum())
        w = y - self.p * phi(x, self.eps)
        pd, pdd = phi_dot(x, self.eps), phi_ddot(x, self.eps)
        e = np.ones(K)
        J = np.eye(K) - pd * np.outer(self.p, e)  # dw/dy
        H = 2.0 * np.outer(e, e)
        H += 2.0 * self.kappa * (J.T @ self.Qtilde @ J)
        H += -2.0 * self.kappa * pdd * float(self.p @ self.Qtilde @ w) * np.outer(e, e)
        return matkit.symmetrize(H)


def build_quadratic(params: oumodel.PiecewiseOUParams) -> QuadraticLyapunov:
    """Q from the CQLF construction on (-R, -R(I-pe')); requires alpha = 0.

    Rejects alpha != 0 loudly: no quadratic can satisfy the Foster-Lyapunov
    criterion with abandonment.
    """
    if params.alpha != 0.0:
        raise ValueError(
            f"quadratic Lyapunov functions require alpha = 0, got alpha = {params.alpha:g}"
        )
    if params.beta <= 0.0:
        raise ValueError(f"quadratic drift target requires beta > 0, got {params.beta:g}")
    oumodel.require_valid(params)
    (pair1, _), _ = cqlf.theorem1_pairs(params.R, params.p)
    cert = cqlf.construct_cqlf(pair1)
    return QuadraticLyapunov(Q=cert.Q)


def build_smoothed(params: oumodel.PiecewiseOUParams, eps: float = 1e-2) -> SmoothedLyapunov:
    """Qt from the CQLF construction on (-R, -(I-pe')R); requires alpha > 0.

    Qt is renormalized to entrywise-absolute norm 1 and kappa is selected so
    the sampled drift check passes.
    """
    if params.alpha <= 0.0:
        raise ValueError(f"smoothed Lyapunov requires alpha > 0, got {params.alpha:g}")
    oumodel.require_valid(params)
    _, (pair2, _) = cqlf.theorem1_pairs(params.R, params.p)
    cert = cqlf.construct_cqlf(pair2)
    kappa = select_kappa(params, cert.Q, eps)
    return SmoothedLyapunov(Qtilde=cert.Q, kappa=kappa, eps=eps, p=params.p.copy())


def restricted_form_min_eig(params: oumodel.PiecewiseOUParams, Qtilde) -> float:
    """Smallest eigenvalue of z'[Qt(I-pe')R + R'(I-ep')Qt]z over unit z with e'z = 0.

    Positive on valid inputs; this is the decay constant of the overload
    regime restricted to the zero-sum subspace.
    """
    K = params.K
    if K == 1:
        return np.inf
    e = np.ones(K)
    M = matkit.symmetrize(
        Qtilde @ (np.eye(K) - np.outer(params.p, e)) @ params.R
        + params.R.T @ (np.eye(K) - np.outer(e, params.p)) @ Qtilde
    )
    G = sla.null_space(e.reshape(1, -1))  # K x (K-1), orthonormal
    return float(np.min(np.linalg.eigvalsh(G.T @ M @ G)))


def select_kappa(params: oumodel.PiecewiseOUParams, Qtilde, eps: float) -> float:
    """kappa from the explicit overload-regime bound, doubled until the
    sampled drift check passes (cap 2^40).

    The analytic seed makes alpha x^2 + (kappa C_z / 2)|z|^2 dominate the
    cross term 2|x e'Rz| <= 2 ||R'e|| |x| |z|, which by AM-GM needs
    kappa >= 2 ||R'e||^2 / (alpha C_z).
    """
    if params.alpha <= 0.0:
        raise ValueError("kappa selection requires alpha > 0")
    cz = restricted_form_min_eig(params, Qtilde)
    nre = float(np.linalg.norm(params.R.T @ np.ones(params.K)))
    kappa = 1.0 if not np.isfinite(cz) else max(1.0, 2.0 * nre**2 / (params.alpha * cz))
    for _ in range(41):
        spec = SmoothedLyapunov(Qtilde=Qtilde, kappa=kappa, eps=eps, p=params.p.copy())
        report = verify_drift(params, spec, radii=None, samples_per_shell=512, seed=7)
        if report.verdict == "pass":
            return kappa
        kappa *= 2.0
    raise RuntimeError(
        "kappa doubling cap reached without a passing drift check; "
        "Qtilde residuals or tolerances are suspect"
    )


# ---------------------------------------------------------------------------
# drift verification


@dataclass(frozen=True)
class DriftReport:
    """Sampled Foster-Lyapunov verification summary.

    For each shell: worst (largest) GV and worst GV/|y|^2 ratio.  M is the
    empirical threshold: twice the smallest sampled radius from which every
    larger shell meets the target.  For the smoothed family, fitted_C is the
    certified decay constant and (ergo_c, ergo_d) the global-fit constants
    of GV <= -c V + d.
    """

    family: str  # "quadratic" | "smoothed"
    radii: list
    worst_gv: list
    worst_ratio: list
    worst_regime: list
    verdict: str  # "pass" | "fail"
    M: float | None = None
    witness: np.ndarray | None = None
    fitted_C: float | None = None
    ergo_c: float | None = None
    ergo_d: float | None = None

    def to_json(self) -> dict:
        return {
            "family": self.family,
            "radii": [float(r) for r in self.radii],
            "worst_gv": [float(v) for v in self.worst_gv],
            "worst_ratio": [float(v) for v in self.worst_ratio],
            "worst_regime": list(self.worst_regime),
            "verdict": self.verdict,
            "M": None if self.M is None else float(self.M),
            "witness": None if self.witness is None else self.witness.tolist(),
            "fitted_C": None if self.fitted_C is None else float(self.fitted_C),
            "ergo_c": None if self.ergo_c is None else float(self.ergo_c),
            "ergo_d": None if self.ergo_d is None else float(self.ergo_d),
        }


def _unit_sphere(rng, n, K):
    u = rng.standard_normal((n, K))
    return u / np.linalg.norm(u, axis=1, keepdims=True)


def sample_shell(K: int, radius: float, n: int, eps: float, rng) -> np.ndarray:
    """n points on the radius-sphere, stratified across the drift regimes.

    Thirds go to overload (e'y >= 0), underload (e'y <= -eps), and the
    smoothing band (-eps <= e'y <= 0); for K = 1 the sphere is two points.
    """
    if K == 1:
        return np.array([[radius], [-radius]])
    n3 = n // 3
    pts = []
    u = _unit_sphere(rng, n3, K) * radius
    s = u.sum(axis=1, keepdims=True)
    pts.append(np.where(s >= 0, u, -u))  # overload
    u = _unit_sphere(rng, n3, K) * radius
    s = u.sum(axis=1, keepdims=True)
    pts.append(np.where(s <= 0, u, -u))  # underload (band overlap harmless)
    # band: fix x = e'y in (-eps, 0), fill the orthogonal complement
    nb = n - 2 * n3
    e = np.ones(K) / np.sqrt(K)
    xmax = min(eps, 0.99 * radius * np.sqrt(K)) if eps > 0 else 0.0
    if xmax > 0.0 and nb > 0:
        x = rng.uniform(-xmax, 0.0, size=nb)
        xi = rng.standard_normal((nb, K))
        xi -= np.outer(xi @ e, e)
        xi /= np.linalg.norm(xi, axis=1, keepdims=True)
        r_perp = np.sqrt(np.maximum(radius**2 - x**2 / K, 0.0))
        pts.append((x / K)[:, None] * np.ones(K)[None, :] + r_perp[:, None] * xi)
    elif nb > 0:
        u = _unit_sphere(rng, nb, K) * radius
        pts.append(u)
    return np.vstack(pts)


def _regime(x: float, eps: float) -> str:
    if x >= 0:
        return "overload"
    if eps > 0 and x > -eps:
        return "band"
    return "underload"


def verify_drift(
    params: oumodel.PiecewiseOUParams,
    lyapunov,
    radii=None,
    samples_per_shell: int = 4096,
    seed: int = 0,
) -> DriftReport:
    """Sample spheres and check the Foster-Lyapunov target of the family.

    Quadratic target: GV <= -1 on every shell beyond the empirical M.
    Smoothed target: GV <= -C |y|^2 with fitted C >= 1e-6, plus a global
    fit GV <= -c V + d with c > 0.  Per-shell seeds are derived
    deterministically from (seed, shell index), so reports are reproducible
    regardless of any parallel scheduling.
    """
    if isinstance(lyapunov, QuadraticLyapunov):
        if params.alpha != 0.0 or params.beta <= 0.0:
            raise ValueError("quadratic verification requires alpha = 0 and beta > 0")
        family, eps = "quadratic", 0.0
    elif isinstance(lyapunov, SmoothedLyapunov):
        if params.alpha <= 0.0:
            raise ValueError("smoothed verification requires alpha > 0")
        family, eps = "smoothed", lyapunov.eps
    else:
        raise TypeError(f"unknown Lyapunov family: {type(lyapunov).__name__}")

    if radii is None:
        base = max(1.0, drift_scale(params))
        radii = [base * f for f in (5.0, 10.0, 20.0, 50.0, 100.0, 200.0)]
    radii = sorted(float(r) for r in radii)

    worst_gv, worst_ratio, worst_regime = [], [], []
    shell_pass, witnesses, samples = [], [], []
    for k, r in enumerate(radii):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(k,)))
        pts = sample_shell(params.K, r, samples_per_shell, eps, rng)
        gv = np.array([oumodel.generator_apply(params, lyapunov, y) for y in pts])
        ratio = gv / (r * r)
        i = int(np.argmax(gv))
        worst_gv.append(float(gv[i]))
        worst_ratio.append(float(np.max(ratio)))
        worst_regime.append(_regime(float(pts[i].sum()), eps))
        if family == "quadratic":
            shell_pass.append(bool(np.all(gv <= -1.0)))
        else:
            shell_pass.append(bool(np.all(ratio <= -C_FIT_MIN)))
        witnesses.append(pts[i])
        samples.append((pts, gv))

    # Smallest radius from which every larger shell passes, then doubled.
    first_ok = None
    for k in range(len(radii)):
        if all(shell_pass[k:]):
            first_ok = k
            break
    if first_ok is None:
        bad = shell_pass.index(False)
        return DriftReport(
            family=family, radii=radii, worst_gv=worst_gv, worst_ratio=worst_ratio,
            worst_regime=worst_regime, verdict="fail", witness=witnesses[bad],
        )
    M = 2.0 * radii[first_ok]

    fitted_C = ergo_c = ergo_d = None
    if family == "smoothed":
        tail_ratio = [np.max(g / (r * r)) for (r, (_, g)) in zip(radii, samples)][first_ok:]
        fitted_C = float(-max(tail_ratio))
        vvals = np.concatenate(
            [[lyapunov.value(y) for y in pts] for pts, _ in samples]
        )
        gvals = np.concatenate([g for _, g in samples])
        tailmask = np.concatenate(
            [np.full(len(g), r >= radii[first_ok]) for (r, (_, g)) in zip(radii, samples)]
        )
        ergo_c = float(0.5 * np.min(-gvals[tailmask] / (vvals[tailmask] + 1.0)))
        ergo_d = float(max(0.0, np.max(gvals + ergo_c * vvals)))
    return DriftReport(
        family=family, radii=radii, worst_gv=worst_gv, worst_ratio=worst_ratio,
        worst_regime=worst_regime, verdict="pass", M=M,
        fitted_C=fitted_C, ergo_c=ergo_c, ergo_d=ergo_d,
    )


def drift_scale(params: oumodel.PiecewiseOUParams) -> float:
    """A crude radius scale: |beta| and covariance trace against the slowest decay."""
    decay = min(params.alpha if params.alpha > 0 else np.inf,
                float(np.min(np.linalg.eigvalsh(matkit.symmetrize(params.R)))))
    decay = max(decay, 1e-2)
    return (abs(params.beta) + np.sqrt(np.trace(params.Sigma))) / decay


# ---------------------------------------------------------------------------
# the failure of quadratics for alpha > 0


@dataclass(frozen=True)
class QuadraticFailure:
    """A direction v (with beta = 0) along which GL(tv) stays >= 0.

    which_form is 1 for the underload form Q(-R) + (-R)'Q and 2 for the
    overload form built from -R(I-pe') - alpha pe'.
    """

    beta_choice: float
    v: np.ndarray
    eigenvalue: float
    which_form: int
    t_grid: np.ndarray
    gl_values: np.ndarray
    ok: bool = field(default=True)

    def to_json(self) -> dict:
        return {
            "beta_choice": self.beta_choice,
            "v": self.v.tolist(),
            "eigenvalue": self.eigenvalue,
            "which_form": self.which_form,
            "t_grid": self.t_grid.tolist(),
            "gl_values": self.gl_values.tolist(),
            "ok": self.ok,
        }


def quadratic_failure_witness(
    params: oumodel.PiecewiseOUParams, Q, t_max: float = 1e3, n_grid: int = 61
) -> QuadraticFailure | None:
    """Find (beta = 0, v) with GL(tv) >= 0 on a geometric t-grid.

    Q must be positive semidefinite and at least one of the two drift forms
    must fail to be negative definite; the eigenvector of the largest
    (nonnegative) eigenvalue of the failing form, sign-matched to its drift
    branch, is the witness direction.  Returns None when both forms are
    negative definite (impossible for the counterexample data, possible
    only in degenerate cases such as K = 1).
    """
    if params.alpha <= 0.0:
        raise ValueError("the quadratic failure argument requires alpha > 0")
    Q = matkit.symmetrize(Q)
    if np.min(np.linalg.eigvalsh(Q)) < -1e-10 * matkit.norm_scale(Q):
        raise ValueError("Q must be positive semidefinite")
    K = params.K
    e = np.ones(K)
    A1 = -params.R
    A2 = -params.R @ (np.eye(K) - np.outer(params.p, e)) - params.alpha * np.outer(params.p, e)
    forms = [matkit.symmetrize(Q @ A + A.T @ Q) for A in (A1, A2)]
    band = 1e-12 * max(matkit.norm_scale(F) for F in forms)

    best = None
    for which, F in enumerate(forms, start=1):
        vals, vecs = np.linalg.eigh(F)
        lam = float(vals[-1])
        if lam < -band:
            continue
        v = vecs[:, -1]
        # form 1 lives on the underload branch e'y <= 0, form 2 on e'y >= 0
        sgn = -1.0 if which == 1 else 1.0
        if sgn * float(e @ v) < 0:
            v = -v
        if best is None or lam > best[1]:
            best = (which, lam, v)
    if best is None:
        return None

    which, lam, v = best
    zeroed = oumodel.make_params(params.alpha, 0.0, params.R, params.p, params.Sigma)
    L = QuadraticLyapunov(Q=Q)
    t = np.concatenate([[0.0], np.geomspace(1e-3, t_max, n_grid - 1)])
    gl = np.array([oumodel.generator_apply(zeroed, L, tv * v) for tv in t])
    ok = bool(np.all(gl >= -1e-6))
    return QuadraticFailure(
        beta_choice=0.0, v=v, eigenvalue=lam, which_form=which,
        t_grid=t, gl_values=gl, ok=ok,
    )
