"""Piecewise OU process parameters, drift, and generator application.

The process has constant covariance Sigma = sigma sigma' and an affine drift
that switches form across the hyperplane e'y = 0:

    b(y) = -beta p - R (y - p (e'y)^+) - alpha p (e'y)^+

with R a nonsingular M-matrix whose column sums are nonnegative, p a
probability vector, alpha >= 0 and beta real.  Builders are provided for the
two-phase hyperexponential queueing model and for general phase-type
primitives (P, nu).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from oucert import matkit


@dataclass(frozen=True)
class PiecewiseOUParams:
    """The tuple (alpha, beta, R, p, Sigma) defining the diffusion."""

    alpha: float
    beta: float
    R: np.ndarray
    p: np.ndarray
    Sigma: np.ndarray

    @property
    def K(self) -> int:
        return self.R.shape[0]

    def to_json(self) -> dict:
        return {
            "alpha": self.alpha,
            "beta": self.beta,
            "R": matkit.matrix_to_json(self.R),
            "p": self.p.tolist(),
            "sigma_cov": matkit.matrix_to_json(self.Sigma),
        }


def make_params(alpha, beta, R, p, Sigma=None) -> PiecewiseOUParams:
    """Build (and normalize shapes of) a parameter set; does not validate.

    Sigma defaults to the identity when not supplied; call validate() to
    collect invariant violations.
    """
    R = matkit.as_square(R)
    p = np.asarray(p, dtype=float).ravel()
    Sigma = np.eye(R.shape[0]) if Sigma is None else matkit.symmetrize(Sigma)
    return PiecewiseOUParams(alpha=float(alpha), beta=float(beta), R=R, p=p, Sigma=Sigma)


def validate(params: PiecewiseOUParams) -> list[str]:
    """All type invariants checked; returns the full list of violations."""
    problems = []
    K = params.K
    if params.p.shape[0] != K:
        problems.append(f"p has dimension {params.p.shape[0]}, R has {K}")
        return problems
    if params.Sigma.shape[0] != K:
        problems.append(f"Sigma has dimension {params.Sigma.shape[0]}, R has {K}")
        return problems
    if params.alpha < 0:
        problems.append(f"alpha = {params.alpha:g} is negative")
    try:
        if not matkit.m_matrix_decompose(params.R).nonsingular:
            problems.append("R is a singular M-matrix")
    except matkit.NotMMatrix as exc:
        problems.append(f"R is not an M-matrix: {exc}")
    eR = np.ones(K) @ params.R
    if np.any(eR < -1e-12 * matkit.norm_scale(params.R)):
        k = int(np.argmin(eR))
        problems.append(f"column-sum condition e'R >= 0' fails at component {k}: {eR[k]:g}")
    if np.any(params.p < 0):
        problems.append("p has a negative component")
    if abs(params.p.sum() - 1.0) > 1e-12:
        problems.append(f"p sums to {params.p.sum():.15g}, not 1")
    if not matkit.is_positive_definite(params.Sigma):
        problems.append("Sigma is not positive definite")
    return problems


def require_valid(params: PiecewiseOUParams) -> PiecewiseOUParams:
    problems = validate(params)
    if problems:
        raise ValueError("invalid parameters: " + "; ".join(problems))
    return params


def drift(params: PiecewiseOUParams, y) -> np.ndarray:
    """b(y) = -beta p - R (y - p (e'y)^+) - alpha p (e'y)^+.

    Accepts a single state (K,) or a batch (n, K); the kink at e'y = 0 is
    evaluated exactly.
    """
    y = np.asarray(y, dtype=float)
    batched = y.ndim == 2
    Y = y if batched else y[None, :]
    plus = np.maximum(Y.sum(axis=1), 0.0)
    B = (
        -params.beta * params.p[None, :]
        - (Y - plus[:, None] * params.p[None, :]) @ params.R.T
        - params.alpha * plus[:, None] * params.p[None, :]
    )
    return B if batched else B[0]


def drift_lipschitz_bound(params: PiecewiseOUParams) -> float:
    """A global Lipschitz constant for the drift."""
    K = params.K
    e = np.ones(K)
    nR = float(np.linalg.norm(params.R, 2))
    nRpe = float(np.linalg.norm(np.outer(params.R @ params.p, e), 2))
    npe = float(np.linalg.norm(np.outer(params.p, e), 2))
    return nR + nRpe + params.alpha * npe


def generator_apply(params: PiecewiseOUParams, V, y) -> float:
    """GV(y) = (grad V)' b(y) + (1/2) sum_ij Sigma_ij d2V/dyi dyj.

    V must supply gradient and Hessian at y (attributes grad(y), hess(y)).
    For quadratic V(y) = y'Qy the trace term reduces to sum_ij Q_ij Sigma_ij.
    """
    y = np.asarray(y, dtype=float).ravel()
    g = np.asarray(V.grad(y), dtype=float).ravel()
    H = np.asarray(V.hess(y), dtype=float)
    return float(g @ drift(params, y) + 0.5 * np.sum(params.Sigma * H))


# ---------------------------------------------------------------------------
# builders


def from_phase_type(P, nu, p, alpha, beta, Sigma=None) -> PiecewiseOUParams:
    """R = (I - P') diag(nu) from phase-transition matrix P and rate vector nu.

    P must be entrywise nonnegative with row sums <= 1 and transient
    (rho(P) < 1); the resulting parameter set passes validate().
    """
    P = matkit.as_square(P)
    nu = np.asarray(nu, dtype=float).ravel()
    K = P.shape[0]
    if nu.shape[0] != K:
        raise ValueError("nu dimension does not match P")
    if np.any(nu <= 0):
        raise ValueError("phase rates nu must be positive")
    if np.any(P < 0) or np.any(P.sum(axis=1) > 1.0 + 1e-12):
        raise ValueError("P must be substochastic (nonnegative, row sums <= 1)")
    if matkit.spectral_radius(P) >= 1.0 - 1e-12:
        raise ValueError("P is not transient: spectral radius >= 1")
    R = (np.eye(K) - P.T) @ np.diag(nu)
    return require_valid(make_params(alpha, beta, R, p, Sigma))


@dataclass(frozen=True)
class HyperexpSpec:
    """Two-phase hyperexponential service model in the Halfin-Whitt regime.

    Service is exp(nu1) w.p. p1 and exp(nu2) w.p. p2 = 1 - p1, with mean-one
    normalization p1/nu1 + p2/nu2 = 1; c parametrizes the Brownian covariance.
    """

    p1: float
    nu1: float
    nu2: float
    c: float
    alpha: float
    beta: float

    def __post_init__(self):
        if not 0.0 < self.p1 < 1.0:
            raise ValueError(f"p1 = {self.p1} outside (0, 1)")
        if self.nu1 <= 0 or self.nu2 <= 0:
            raise ValueError("service rates must be positive")
        p2 = 1.0 - self.p1
        mean = self.p1 / self.nu1 + p2 / self.nu2
        if abs(mean - 1.0) > 1e-10:
            raise ValueError(f"mean service time p1/nu1 + p2/nu2 = {mean:.12g}, not 1")


def hyperexp_model(spec: HyperexpSpec) -> PiecewiseOUParams:
    """K=2 model: R = diag(nu1, nu2), p = (p1, p2), and the limit covariance.

    Rejects c when the covariance matrix fails to be positive definite.
    """
    p1, p2, c2 = spec.p1, 1.0 - spec.p1, spec.c**2
    Sigma = np.array(
        [
            [p1 * (p1 * c2 - p1 + 2.0), p1 * p2 * (c2 - 1.0)],
            [p1 * p2 * (c2 - 1.0), p2 * (p2 * c2 - p2 + 2.0)],
        ]
    )
    if not matkit.is_positive_definite(Sigma):
        raise ValueError(f"covariance not positive definite for c = {spec.c}")
    params = make_params(
        spec.alpha, spec.beta, np.diag([spec.nu1, spec.nu2]), [p1, p2], Sigma
    )
    return require_valid(params)


# ---------------------------------------------------------------------------
# config ingestion (shared by the CLI)


def params_from_config(cfg: dict) -> PiecewiseOUParams:
    """Build parameters from a model config dict.

    Exactly one of "R", "hyperexp", "phase_type" must specify the phase
    dynamics; "alpha"/"beta" are top-level for the R and phase_type forms.
    """
    keys = [k for k in ("R", "hyperexp", "phase_type") if k in cfg]
    if len(keys) != 1:
        raise ValueError(
            f"exactly one of R / hyperexp / phase_type must be present, got {keys}"
        )
    if keys[0] == "hyperexp":
        h = cfg["hyperexp"]
        spec = HyperexpSpec(
            p1=h["p1"], nu1=h["nu1"], nu2=h["nu2"], c=h.get("c", 1.0),
            alpha=cfg.get("alpha", h.get("alpha", 0.0)),
            beta=cfg.get("beta", h.get("beta", 0.0)),
        )
        return hyperexp_model(spec)
    if keys[0] == "phase_type":
        ph = cfg["phase_type"]
        return from_phase_type(
            ph["P"], ph["nu"], ph["p"], cfg.get("alpha", 0.0), cfg.get("beta", 0.0),
            cfg.get("sigma_cov"),
        )
    return make_params(
        cfg.get("alpha", 0.0), cfg.get("beta", 0.0), cfg["R"], cfg["p"],
        cfg.get("sigma_cov"),
    )
