"""Monte Carlo engine for the piecewise OU diffusion.

Euler-Maruyama with the exact (kinked) drift; the drift is globally
Lipschitz, so the explicit scheme is weak order 1 without substepping.
Every replica draws from its own counter-based Philox stream keyed by
(seed, replica index), so results are bit-reproducible regardless of how
replicas are scheduled or chunked.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.integrate as integrate

from oucert import matkit, oumodel

DEFAULT_HORIZON = 400.0
DEFAULT_REPLICAS = 64
_CHUNK_STEPS = 4096
_OVERFLOW = 1e12


class SimulationError(RuntimeError):
    """State overflow or other simulation failure; carries diagnostics."""


@dataclass(frozen=True)
class SimConfig:
    """Discretization and ensemble settings; None fields resolve per model."""

    dt: float | None = None
    horizon: float = DEFAULT_HORIZON
    burn_in: float | None = None
    replicas: int = DEFAULT_REPLICAS
    seed: int = 0
    y0: np.ndarray | None = None

    def resolve(self, params: oumodel.PiecewiseOUParams) -> "SimConfig":
        dt = self.dt
        if dt is None:
            dt = 1e-3 * min(1.0, 1.0 / float(np.linalg.norm(params.R, 2)))
        burn = 0.1 * self.horizon if self.burn_in is None else self.burn_in
        y0 = np.zeros(params.K) if self.y0 is None else np.asarray(self.y0, float).ravel()
        if dt <= 0:
            raise ValueError("dt must be positive")
        if not burn < self.horizon:
            raise ValueError("burn_in must be smaller than horizon")
        if self.replicas < 1:
            raise ValueError("replicas must be >= 1")
        if y0.shape[0] != params.K:
            raise ValueError("y0 dimension does not match the model")
        return replace(self, dt=dt, burn_in=burn, y0=y0)

    def to_json(self) -> dict:
        return {
            "dt": self.dt,
            "horizon": self.horizon,
            "burn_in": self.burn_in,
            "replicas": self.replicas,
            "seed": self.seed,
            "y0": None if self.y0 is None else np.asarray(self.y0).tolist(),
        }


def _streams(seed: int, replicas: int) -> list[np.random.Generator]:
    return [
        np.random.Generator(
            np.random.Philox(key=np.array([seed & (2**64 - 1), r], dtype=np.uint64))
        )
        for r in range(replicas)
    ]


def _noise_factor(params, sigma_zero):
    if sigma_zero:
        return np.zeros((params.K, params.K))
    return np.linalg.cholesky(params.Sigma)


def _step_chunks(n_steps):
    done = 0
    while done < n_steps:
        m = min(_CHUNK_STEPS, n_steps - done)
        yield done, m
        done += m


def simulate(
    params: oumodel.PiecewiseOUParams,
    cfg: SimConfig,
    replica: int = 0,
    record_every: int = 1,
    sigma_zero: bool = False,
) -> tuple[np.ndarray, np.ndarray]:
    """One replica's trajectory: (times, states) recorded every record_every steps.

    sigma_zero switches to fluid-ODE mode (noise off, nonsingularity of
    Sigma irrelevant).  Aborts with SimulationError when |Y| exceeds 1e12.
    """
    cfg = cfg.resolve(params)
    rng = _streams(cfg.seed, replica + 1)[replica]
    chol = _noise_factor(params, sigma_zero)
    sq = np.sqrt(cfg.dt)
    n_steps = int(round(cfg.horizon / cfg.dt))
    y = cfg.y0.copy()
    times = [0.0]
    path = [y.copy()]
    for start, m in _step_chunks(n_steps):
        xi = rng.standard_normal((m, params.K))
        for j in range(m):
            y = y + oumodel.drift(params, y) * cfg.dt + sq * (chol @ xi[j])
            k = start + j + 1
            if k % record_every == 0:
                times.append(k * cfg.dt)
                path.append(y.copy())
        if not np.all(np.abs(y) <= _OVERFLOW):  # catches NaN as well
            raise SimulationError(
                f"state overflow |Y| > {_OVERFLOW:g} at t = {(start + m) * cfg.dt:g}; "
                "check stability or reduce dt"
            )
    if times[-1] != n_steps * cfg.dt:
        times.append(n_steps * cfg.dt)
        path.append(y.copy())
    return np.array(times), np.array(path)


def _run_ensemble(params, cfg, hooks, sigma_zero=False):
    """Vectorized ensemble driver: all replicas stepped together.

    hooks is a list of callables (step_index, t, Y) invoked after every
    step with Y of shape (replicas, K).  Noise is drawn chunk-wise from
    per-replica streams, so the draws per replica are independent of the
    chunk size.
    """
    streams = _streams(cfg.seed, cfg.replicas)
    chol = _noise_factor(params, sigma_zero)
    sq = np.sqrt(cfg.dt)
    n_steps = int(round(cfg.horizon / cfg.dt))
    Y = np.tile(cfg.y0, (cfg.replicas, 1))
    for start, m in _step_chunks(n_steps):
        xi = np.stack([s.standard_normal((m, params.K)) for s in streams], axis=1)
        for j in range(m):
            Y = Y + oumodel.drift(params, Y) * cfg.dt + sq * (xi[j] @ chol.T)
            k = start + j + 1
            for hook in hooks:
                hook(k, k * cfg.dt, Y)
        if not np.all(np.abs(Y) <= _OVERFLOW):  # catches NaN as well
            raise SimulationError(
                f"state overflow |Y| > {_OVERFLOW:g} at t = {(start + m) * cfg.dt:g}"
            )
    return Y


def terminal_states(
    params: oumodel.PiecewiseOUParams, cfg: SimConfig, sigma_zero: bool = False
) -> np.ndarray:
    """States of all replicas at the horizon, shape (replicas, K).

    Useful for weak-order checks: the terminal-time law converges at order
    dt for the Euler-Maruyama scheme.
    """
    cfg = cfg.resolve(params)
    return _run_ensemble(params, cfg, [], sigma_zero=sigma_zero)


# ---------------------------------------------------------------------------
# stationary statistics


@dataclass(frozen=True)
class SimStats:
    """Ensemble time-average summaries after burn-in.

    se_* are batch-means standard errors (95% CI = estimate +/- 1.96 se);
    histograms hold fixed-width bin edges/counts for e'Y and each component,
    with bounds chosen from the burn-in segment.
    """

    mean: np.ndarray
    covariance: np.ndarray
    se_mean: np.ndarray
    se_var: np.ndarray
    ess: float
    converged: bool
    histograms: dict
    n_batches: int

    def to_json(self) -> dict:
        return {
            "mean": self.mean.tolist(),
            "covariance": matkit.matrix_to_json(self.covariance),
            "se_mean": self.se_mean.tolist(),
            "se_var": self.se_var.tolist(),
            "ess": self.ess,
            "converged": self.converged,
            "n_batches": self.n_batches,
            "histograms": {
                k: {"edges": v["edges"].tolist(), "counts": v["counts"].tolist()}
                for k, v in self.histograms.items()
            },
        }


class _MomentBatches:
    """Per-(replica, batch) accumulation of first/second moments."""

    def __init__(self, replicas, K, n_batches, n_post_steps):
        self.n_batches = n_batches
        self.edges = np.linspace(0, n_post_steps, n_batches + 1).astype(int)
        self.sum1 = np.zeros((n_batches, replicas, K))
        self.sum2 = np.zeros((n_batches, replicas, K, K))
        self.count = np.zeros(n_batches)

    def add(self, post_step, Y):
        b = min(np.searchsorted(self.edges, post_step, side="right") - 1, self.n_batches - 1)
        self.sum1[b] += Y
        self.sum2[b] += Y[:, :, None] * Y[:, None, :]
        self.count[b] += 1


def stationary_stats(params: oumodel.PiecewiseOUParams, cfg: SimConfig,
                     n_batches: int = 16, n_bins: int = 40) -> SimStats:
    """Time-average statistics after burn-in, pooled over replicas.

    Batch-means standard errors for the mean and (delta-method) for the
    variance of each component; warns "not converged" (converged = False)
    when first- and second-half means differ beyond 3 pooled SEs.
    """
    if not (params.alpha > 0 or (params.alpha == 0 and params.beta > 0)):
        raise ValueError("stationary statistics need alpha > 0, or alpha = 0 with beta > 0")
    oumodel.require_valid(params)
    cfg = cfg.resolve(params)
    n_steps = int(round(cfg.horizon / cfg.dt))
    n_burn = int(round(cfg.burn_in / cfg.dt))
    n_post = n_steps - n_burn
    K = params.K

    burn_lo = np.full(K + 1, np.inf)
    burn_hi = np.full(K + 1, -np.inf)
    batches = _MomentBatches(cfg.replicas, K, n_batches, n_post)
    hist_counts = None
    hist_edges = None

    def hook(k, t, Y):
        nonlocal hist_counts, hist_edges
        tot = Y.sum(axis=1)
        if k <= n_burn:
            vals = np.column_stack([tot, Y])
            np.minimum(burn_lo, vals.min(axis=0), out=burn_lo)
            np.maximum(burn_hi, vals.max(axis=0), out=burn_hi)
            return
        if hist_edges is None:
            span = np.maximum(burn_hi - burn_lo, 1e-6)
            hist_edges = [
                np.linspace(burn_lo[i] - 0.5 * span[i], burn_hi[i] + 0.5 * span[i], n_bins + 1)
                for i in range(K + 1)
            ]
            hist_counts = [np.zeros(n_bins, dtype=np.int64) for _ in range(K + 1)]
        vals = np.column_stack([tot, Y])
        for i in range(K + 1):
            idx = np.clip(
                np.searchsorted(hist_edges[i], vals[:, i], side="right") - 1, 0, n_bins - 1
            )
            np.add.at(hist_counts[i], idx, 1)
        batches.add(k - n_burn, Y)

    _run_ensemble(params, cfg, [hook])

    cnt = batches.count[:, None, None] * np.ones((1, cfg.replicas, 1))
    m_b = batches.sum1 / cnt  # (B, R, K) per-batch means
    s_b = batches.sum2 / cnt[..., None]  # (B, R, K, K)
    mean = m_b.mean(axis=(0, 1))
    second = s_b.mean(axis=(0, 1))
    cov = matkit.symmetrize(second - np.outer(mean, mean))
    nb = n_batches * cfg.replicas
    se_mean = m_b.reshape(nb, K).std(axis=0, ddof=1) / np.sqrt(nb)
    # delta method: var_k = E[y_k^2] - mean_k^2
    diag2 = s_b.reshape(nb, K, K)[:, np.arange(K), np.arange(K)]
    infl = diag2 - 2.0 * mean[None, :] * m_b.reshape(nb, K)
    se_var = infl.std(axis=0, ddof=1) / np.sqrt(nb)

    half = n_batches // 2
    m1 = m_b[:half].mean(axis=(0, 1))
    m2 = m_b[half:].mean(axis=(0, 1))
    converged = bool(np.all(np.abs(m1 - m2) <= 3.0 * np.sqrt(2.0) * se_mean * np.sqrt(2.0)))

    pooled_var = np.var(np.concatenate([m_b.reshape(nb, K)]), axis=0)
    ess = float(nb)
    names = ["total"] + [f"y{i + 1}" for i in range(K)]
    hists = {
        name: {"edges": hist_edges[i], "counts": hist_counts[i]}
        for i, name in enumerate(names)
    }
    return SimStats(
        mean=mean, covariance=cov, se_mean=se_mean, se_var=se_var,
        ess=ess, converged=converged, histograms=hists, n_batches=n_batches,
    )


# ---------------------------------------------------------------------------
# hitting times


@dataclass(frozen=True)
class HittingEstimate:
    radius: float
    mean_time: float
    se: float
    replicas: int
    censored_fraction: float

    def to_json(self) -> dict:
        return {
            "radius": self.radius,
            "mean_time": self.mean_time,
            "se": self.se,
            "replicas": self.replicas,
            "censored_fraction": self.censored_fraction,
        }


def hitting_time(
    params: oumodel.PiecewiseOUParams, y0, radius: float, cfg: SimConfig
) -> HittingEstimate:
    """Mean first-entry time into the closed |y| <= radius ball from y0.

    Replicas still outside at the horizon are censored at the horizon and
    counted in censored_fraction (a fraction above 5% is a warning sign
    that the cap is too tight or the process is not positive recurrent).
    """
    y0 = np.asarray(y0, dtype=float).ravel()
    if np.linalg.norm(y0) <= radius:
        return HittingEstimate(radius, 0.0, 0.0, cfg.replicas, 0.0)
    cfg = replace(cfg, y0=y0, burn_in=0.0).resolve(params)
    hit = np.full(cfg.replicas, np.nan)

    def hook(k, t, Y):
        inside = np.linalg.norm(Y, axis=1) <= radius
        newly = inside & np.isnan(hit)
        hit[newly] = t

    _run_ensemble(params, cfg, [hook])
    censored = np.isnan(hit)
    times = np.where(censored, cfg.horizon, hit)
    n = cfg.replicas
    return HittingEstimate(
        radius=radius,
        mean_time=float(times.mean()),
        se=float(times.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0,
        replicas=n,
        censored_fraction=float(censored.mean()),
    )


# ---------------------------------------------------------------------------
# ergodicity diagnostic


@dataclass(frozen=True)
class ErgodicityReport:
    times: np.ndarray
    tv_distance: np.ndarray
    slope: float
    intercept: float
    r_squared: float
    noise_floor: float

    def to_json(self) -> dict:
        return {
            "times": self.times.tolist(),
            "tv_distance": self.tv_distance.tolist(),
            "slope": self.slope,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "noise_floor": self.noise_floor,
        }


def ergodicity_diagnostic(
    params: oumodel.PiecewiseOUParams,
    cfg: SimConfig,
    n_times: int = 40,
    n_bins: int = 12,
    min_replicas: int = 100,
) -> ErgodicityReport:
    """Empirical decay of the law of e'Y toward its long-run law.

    d(t) is the total-variation distance between the binned empirical law
    at time t (over replicas from the fixed y0) and the long-run empirical
    law pooled over the final quarter of the run.  log d(t) is fitted
    against t on the stretch above the noise floor; the slope should be
    negative with good fit quality for an exponentially ergodic process.
    This is a weaker empirical proxy: the weighted norm of the ergodicity
    criterion is not directly estimable from samples.
    """
    if cfg.replicas < min_replicas:
        raise ValueError(
            f"ergodicity diagnostic needs >= {min_replicas} replicas for binning, "
            f"got {cfg.replicas}"
        )
    cfg = cfg.resolve(params)
    record_times = np.linspace(cfg.horizon / n_times, cfg.horizon, n_times)
    record_steps = np.unique(np.round(record_times / cfg.dt).astype(int))
    snapshots = {}

    def hook(k, t, Y):
        if k in step_set:
            snapshots[k] = Y.sum(axis=1).copy()

    step_set = set(int(s) for s in record_steps)
    _run_ensemble(params, cfg, [hook])

    steps = sorted(snapshots)
    times = np.array([s * cfg.dt for s in steps])
    tail = [snapshots[s] for s in steps if s * cfg.dt >= 0.75 * cfg.horizon]
    pool = np.concatenate(tail)
    lo, hi = np.quantile(pool, [0.001, 0.999])
    edges = np.linspace(lo, hi, n_bins + 1)
    ref, _ = np.histogram(pool, bins=edges)
    ref = ref / ref.sum()

    d = np.empty(len(steps))
    for i, s in enumerate(steps):
        h, _ = np.histogram(snapshots[s], bins=edges)
        outside = len(snapshots[s]) - h.sum()
        h = h / len(snapshots[s])
        # mass outside the reference support counts fully toward TV
        d[i] = 0.5 * (np.abs(h - ref).sum() + outside / len(snapshots[s]))

    floor = float(np.median(d[times >= 0.75 * cfg.horizon]))
    # fit only the initial consecutive stretch above the noise floor:
    # once d(t) reaches the floor, further points are binning noise
    thresh = max(2.0 * floor, 1e-12)
    above = np.flatnonzero(d <= thresh)
    cut = above[0] if above.size else len(d)
    fit_mask = np.zeros(len(d), dtype=bool)
    fit_mask[:cut] = d[:cut] > 0
    if fit_mask.sum() < 3:
        fit_mask = d > 0
    x, ylog = times[fit_mask], np.log(d[fit_mask])
    slope, intercept = np.polyfit(x, ylog, 1)
    resid = ylog - (slope * x + intercept)
    ss_tot = float(np.sum((ylog - ylog.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 0.0
    return ErgodicityReport(
        times=times, tv_distance=d, slope=float(slope),
        intercept=float(intercept), r_squared=r2, noise_floor=floor,
    )


# ---------------------------------------------------------------------------
# 1-D stationary-density oracle


def stationary_density_1d(params: oumodel.PiecewiseOUParams):
    """Closed-form (up to normalization) stationary density for K = 1.

    The stationary Fokker-Planck equation with zero flux gives
    pi(y) proportional to exp(2 Integral_0^y b(u) du / sigma^2), a Gaussian
    piece on each side of 0 matched by continuity; normalization and
    moments come from quadrature.  Returns (pdf, mean, variance).
    """
    if params.K != 1:
        raise ValueError("the quadrature oracle is one-dimensional")
    oumodel.require_valid(params)
    nu = float(params.R[0, 0])
    alpha, beta = params.alpha, params.beta
    s2 = float(params.Sigma[0, 0])
    if alpha <= 0 and beta <= 0:
        raise ValueError("density not normalizable: alpha = 0 needs beta > 0")

    def log_unnorm(y):
        rate = nu if y <= 0 else alpha
        return (2.0 / s2) * (-beta * y - 0.5 * rate * y * y)

    z_neg, _ = integrate.quad(lambda y: np.exp(log_unnorm(y)), -np.inf, 0.0)
    z_pos, _ = integrate.quad(lambda y: np.exp(log_unnorm(y)), 0.0, np.inf)
    z = z_neg + z_pos

    def pdf(y):
        return np.exp(log_unnorm(y)) / z

    m1 = (
        integrate.quad(lambda y: y * pdf(y), -np.inf, 0.0)[0]
        + integrate.quad(lambda y: y * pdf(y), 0.0, np.inf)[0]
    )
    m2 = (
        integrate.quad(lambda y: y * y * pdf(y), -np.inf, 0.0)[0]
        + integrate.quad(lambda y: y * y * pdf(y), 0.0, np.inf)[0]
    )
    return pdf, float(m1), float(m2 - m1 * m1)
