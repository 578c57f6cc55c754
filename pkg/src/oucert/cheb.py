"""Second-kind Chebyshev machinery and the resolvent-row positivity check.

The central object is the coefficient family C_n(y) = U_n(sqrt(y)) * sqrt(y)^n,
which expands 1 / (y (1-x)^2 + 1 - y) as a power series in x and, in matrix
form, expands (y (I-N)^2 + (1-y) I)^{-1} as a series in N.
"""

from __future__ import annotations

import math

import numpy as np

from oucert import matkit

# Below this |sin(theta)| the trigonometric quotient form cancels badly;
# the recurrence is used instead.
_SIN_CUTOFF = 1e-6


def cheb_u(n: int, z: float) -> float:
    """U_n(z) on [-1, 1] by three-term recurrence.

    At the endpoints the recurrence reproduces the limit values
    U_n(1) = n + 1 and U_n(-1) = (-1)^n (n + 1) exactly.
    """
    if n < 0:
        raise ValueError("order must be nonnegative")
    if abs(z) > 1 + 1e-12:
        raise ValueError(f"argument {z} outside [-1, 1]")
    z = min(1.0, max(-1.0, z))
    u_prev, u = 1.0, 2.0 * z
    if n == 0:
        return u_prev
    for _ in range(n - 1):
        u_prev, u = u, 2.0 * z * u - u_prev
    return u


def cheb_u_trig(n: int, theta: float) -> float:
    """sin((n+1) theta) / sin(theta), falling back to the recurrence near 0, pi."""
    s = math.sin(theta)
    if abs(s) < _SIN_CUTOFF:
        return cheb_u(n, math.cos(theta))
    return math.sin((n + 1) * theta) / s


def series_coefficients(y: float, m: int) -> np.ndarray:
    """C_0(y) .. C_m(y) with C_n(y) = U_n(sqrt(y)) sqrt(y)^n.

    Computed by the scaled recurrence in t = sqrt(y):
    C_{n+1} = 2 y C_n - y C_{n-1}, which avoids forming U_n and t^n
    separately.  C_0 = 1 always.
    """
    if not 0.0 < y < 1.0:
        raise ValueError(f"y = {y} outside (0, 1)")
    if m < 0:
        raise ValueError("truncation order must be nonnegative")
    coeffs = np.empty(m + 1)
    coeffs[0] = 1.0
    if m >= 1:
        coeffs[1] = 2.0 * y
    for n in range(1, m):
        coeffs[n + 1] = 2.0 * y * coeffs[n] - y * coeffs[n - 1]
    return coeffs


def partial_sum_closed_form(y: float, m: int) -> tuple[float, float]:
    """(direct sum, closed form) of sum_{n=1}^m C_n(y).

    The closed form is (cos^2 th / sin^2 th) * (1 - cos^{m-1} th * cos((m+1) th))
    with th = arccos(sqrt(y)).  Both values are strictly positive on (0, 1).
    """
    if m < 1:
        raise ValueError("m must be positive")
    direct = float(np.sum(series_coefficients(y, m)[1:]))
    theta = math.acos(math.sqrt(y))
    c, s = math.cos(theta), math.sin(theta)
    closed = (c * c) / (s * s) * (1.0 - c ** (m - 1) * math.cos((m + 1) * theta))
    return direct, closed


def scalar_expansion_check(x: float, y: float, m: int) -> float:
    """|1/(y(1-x)^2 + 1-y) - sum_{n<=m} C_n(y) x^n|; tends to 0 as m grows."""
    if not 0.0 < x < 1.0 or not 0.0 < y < 1.0:
        raise ValueError("x and y must lie in (0, 1)")
    lhs = 1.0 / (y * (1.0 - x) ** 2 + 1.0 - y)
    coeffs = series_coefficients(y, m)
    partial = float(np.polynomial.polynomial.polyval(x, coeffs))
    return abs(lhs - partial)


def truncation_order(rho: float, y: float, tail_tol: float = 1e-12, m_max: int = 100000) -> int:
    """Truncation m so the geometric tail bound of the matrix series is < tail_tol.

    Uses rho_hat = rho + 1e-12 and bounds |C_n(y)| <= n + 1 (since
    |U_n(t)| <= n+1 and t^n <= 1 on [0, 1]); the tail after m terms is
    below max_n C_n * rho_hat^m / (1 - rho_hat).
    """
    rho_hat = rho + 1e-12
    if rho_hat >= 1.0:
        raise ValueError(f"spectral radius {rho} not < 1")
    if rho_hat == 0.0:
        return 1
    m = 1
    while m < m_max:
        cmax = float(np.max(series_coefficients(y, m)))
        if cmax * rho_hat ** m / (1.0 - rho_hat) < tail_tol:
            return m
        m = max(m + 1, int(m * 1.5))
    return m_max


def resolvent_row_positivity(N, y: float) -> tuple[np.ndarray, bool]:
    """Row e'(y (I-N)^2 + (1-y) I)^{-1} with a positivity verdict.

    Requires N >= 0 entrywise, rho(N) < 1 and e' >= e'N.  The row is computed
    both by a direct linear solve and by the truncated Chebyshev matrix
    series; the two must agree to 1e-8, and positivity means every component
    is >= 1 - 1e-10 (the series argument shows the row dominates e').
    """
    N = matkit.as_square(N)
    if not 0.0 < y < 1.0:
        raise ValueError(f"y = {y} outside (0, 1)")
    if np.any(N < 0):
        raise ValueError("N has a negative entry")
    rho = matkit.spectral_radius(N)
    if rho >= 1.0:
        raise ValueError(f"spectral radius {rho:g} not < 1")
    K = N.shape[0]
    e = np.ones(K)
    colsum = e @ N
    if np.any(colsum > 1.0 + 1e-12):
        raise ValueError("column-sum condition e' >= e'N violated")

    A = y * (np.eye(K) - N) @ (np.eye(K) - N) + (1.0 - y) * np.eye(K)
    row_direct = np.linalg.solve(A.T, e)

    m = truncation_order(rho, y)
    coeffs = series_coefficients(y, m)
    row_series = np.zeros(K)
    power_row = e.copy()  # e' N^n, updated in place
    for c in coeffs:
        row_series += c * power_row
        power_row = power_row @ N
    if np.max(np.abs(row_direct - row_series)) > 1e-8:
        raise matkit.SolveFailure(
            "direct solve and Chebyshev series disagree beyond 1e-8"
        )
    ok = bool(np.all(row_direct >= 1.0 - 1e-10))
    return row_direct, ok


def selftest(n_random: int = 1000, seed: int = 0) -> dict:
    """Full identity sweep; returns a JSON-ready pass/fail report.

    Covers the generating-function identity, the partial-sum closed form
    (agreement and strict positivity), the scalar expansion, and the
    resolvent-row positivity check on random valid (N, y).
    """
    rng = np.random.default_rng(seed)
    report = {"pass": True, "checks": {}}

    # Generating function: sum U_n(z) t^n = 1 / (1 - 2tz + t^2).
    worst = 0.0
    for z in np.linspace(-0.95, 0.95, 13):
        for t in np.linspace(-0.9, 0.9, 13):
            if abs(t) < 1e-12:
                continue
            total = sum(cheb_u(n, z) * t**n for n in range(0, 400))
            worst = max(worst, abs(total - 1.0 / (1.0 - 2.0 * t * z + t * t)))
    report["checks"]["generating_function"] = {"worst_residual": worst, "pass": worst <= 1e-10}

    # Partial-sum closed form: agreement (relative, since the sum grows
    # like m^2 as y -> 1 and absolute 1e-12 is below double resolution
    # there) and strict positivity.
    worst, min_val = 0.0, np.inf
    for _ in range(n_random):
        y = rng.uniform(1e-3, 1.0 - 1e-3)
        m = int(rng.integers(1, 201))
        direct, closed = partial_sum_closed_form(y, m)
        worst = max(worst, abs(direct - closed) / max(1.0, abs(direct)))
        min_val = min(min_val, direct, closed)
    report["checks"]["partial_sum"] = {
        "worst_residual": worst,
        "min_value": min_val,
        "pass": worst <= 1e-12 and min_val > 0.0,
    }

    # Scalar expansion at a few (x, y, m).
    worst = max(
        scalar_expansion_check(0.5, 0.5, 80),
        scalar_expansion_check(0.25, 0.75, 120),
    )
    report["checks"]["scalar_expansion"] = {"worst_residual": worst, "pass": worst <= 1e-10}

    # Resolvent-row positivity sweep on random valid (N, y), K <= 6.
    n_fail, min_comp = 0, np.inf
    for _ in range(n_random):
        K = int(rng.integers(1, 7))
        N = random_valid_n(rng, K)
        y = rng.uniform(1e-3, 1.0 - 1e-3)
        row, ok = resolvent_row_positivity(N, y)
        min_comp = min(min_comp, float(np.min(row)))
        n_fail += 0 if ok else 1
    report["checks"]["resolvent_row"] = {
        "failures": n_fail,
        "min_component": min_comp,
        "pass": n_fail == 0,
    }

    report["pass"] = all(c["pass"] for c in report["checks"].values())
    return report


def random_valid_n(rng: np.random.Generator, K: int, rho_max: float = 0.95) -> np.ndarray:
    """Random nonnegative N with rho(N) < 1 and e' >= e'N (column sums <= 1)."""
    N = rng.uniform(0.0, 1.0, size=(K, K))
    colsum = N.sum(axis=0)
    N = N / np.maximum(colsum, 1.0) * rng.uniform(0.1, 1.0)
    # Column sums <= 1 bound the spectral radius by 1; shrink for margin.
    rho = matkit.spectral_radius(N)
    if rho >= rho_max:
        N *= rho_max / (rho + 1e-9)
    return N
