"""Exact univariate Gaussian ARMA likelihood, autocovariance and residuals.

These are the per-site building blocks of the first estimation stage: each
site's time series is a stationary ARMA(p, q) whose innovations have unit
variance scaled by sigma. Fitting maximizes the exact (unconditional)
likelihood; residual extraction uses the conditional recursion so that
residual vectors align in time across sites.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_discrete_lyapunov, toeplitz

from .model import ArmaSpec, ar_root_moduli
from .optimize import OptimizerConfig, nelder_mead

__all__ = [
    "ArmaFit",
    "arma_autocovariance",
    "arma_loglik",
    "arma_conditional_loglik",
    "arma_residuals",
    "fit_arma",
    "select_arma_order",
    "ljung_box",
    "psi_weights",
]

LOG_2PI = float(np.log(2.0 * np.pi))
NEG_INF = float("-inf")


def psi_weights(phi, pi_ma, n_terms: int) -> np.ndarray:
    """First ``n_terms + 1`` weights of the infinite moving-average expansion."""
    phi = np.asarray(phi, dtype=float)
    pi_ma = np.asarray(pi_ma, dtype=float)
    p, q = phi.size, pi_ma.size
    psi = np.zeros(n_terms + 1)
    psi[0] = 1.0
    for i in range(1, n_terms + 1):
        acc = pi_ma[i - 1] if i <= q else 0.0
        kmax = min(i, p)
        for k in range(1, kmax + 1):
            acc += phi[k - 1] * psi[i - k]
        psi[i] = acc
    return psi


def _autocov_ma_expansion(spec: ArmaSpec, max_lag: int, rel_tol: float = 1e-12) -> np.ndarray:
    """gamma(0..max_lag) by expanding psi until the tail is negligible."""
    phi = np.asarray(spec.phi, dtype=float)
    if phi.size == 0:
        lam = 0.0
    else:
        lam = 1.0 / float(np.min(ar_root_moduli(phi)))
        if lam >= 1.0:
            raise ValueError("non-stationary AR polynomial")
    # Tail of sum(psi_i^2) behaves like lam^(2n); grow n until the bound is
    # below rel_tol relative to gamma(0).
    n = max(spec.p + spec.q + 8, max_lag + 1, 32)
    while True:
        psi = psi_weights(spec.phi, spec.pi_ma, n)
        g0 = float(np.dot(psi, psi))
        tail_scale = float(np.max(np.abs(psi[-(spec.p + 1):]))) if spec.p else 0.0
        tail = tail_scale**2 * lam**2 / max(1.0 - lam**2, 1e-300) * (spec.p + 1)
        if tail <= rel_tol * g0 or n > 2_000_000:
            break
        n *= 2
    sig2 = spec.sigma**2
    gam = np.empty(max_lag + 1)
    for h in range(max_lag + 1):
        gam[h] = sig2 * float(np.dot(psi[h:], psi[: psi.size - h])) if h < psi.size else 0.0
    return gam


def _autocov_exact(spec: ArmaSpec, max_lag: int) -> np.ndarray:
    """gamma(0..max_lag) from the extended Yule-Walker linear system."""
    phi = np.asarray(spec.phi, dtype=float)
    pi_full = np.concatenate(([1.0], np.asarray(spec.pi_ma, dtype=float)))
    p, q = spec.p, spec.q
    sig2 = spec.sigma**2
    r = max(p, q)
    psi = psi_weights(spec.phi, spec.pi_ma, q)

    a = np.zeros((r + 1, r + 1))
    rhs = np.zeros(r + 1)
    for k in range(r + 1):
        a[k, k] += 1.0
        for i in range(1, p + 1):
            a[k, abs(k - i)] -= phi[i - 1]
        rhs[k] = sig2 * sum(pi_full[j] * psi[j - k] for j in range(k, q + 1))
    gam_head = np.linalg.solve(a, rhs)

    gam = np.empty(max_lag + 1)
    upto = min(r, max_lag)
    gam[: upto + 1] = gam_head[: upto + 1]
    for k in range(r + 1, max_lag + 1):
        gam[k] = sum(phi[i - 1] * gam[k - i] for i in range(1, p + 1))
    return gam


def arma_autocovariance(spec: ArmaSpec, max_lag: int, method: str = "exact") -> np.ndarray:
    """Stationary autocovariances gamma(0..max_lag) of an ARMA(p, q) process.

    method="exact" solves the extended Yule-Walker system; method="ma"
    truncates the infinite moving-average expansion. The two agree to 1e-10
    relative and are cross-checked in the test suite.
    """
    if max_lag < 0:
        raise ValueError("max_lag must be non-negative")
    if not spec.is_stationary():
        raise ValueError("non-stationary AR polynomial")
    if method == "exact":
        return _autocov_exact(spec, max_lag)
    if method == "ma":
        return _autocov_ma_expansion(spec, max_lag)
    raise ValueError(f"unknown method {method!r}")


def _detrended(series: np.ndarray, mu: float, beta1: float, t0: int) -> np.ndarray:
    z = series - mu
    if beta1 != 0.0:
        z = z - beta1 * (t0 + np.arange(series.size))
    return z


def _ar_gamma_head(phi: np.ndarray, sigma: float, n: int) -> np.ndarray:
    spec = ArmaSpec(p=phi.size, q=0, sigma=sigma, phi=tuple(phi))
    return _autocov_exact(spec, n - 1)


def _dense_gaussian_from_gamma(z: np.ndarray, gam: np.ndarray) -> float:
    cov = toeplitz(gam[: z.size])
    chol = np.linalg.cholesky(cov)
    v = np.linalg.solve(chol, z)
    return -0.5 * z.size * LOG_2PI - float(np.sum(np.log(np.diag(chol)))) - 0.5 * float(v @ v)


def _ar_head_loglik(z_head: np.ndarray, phi: np.ndarray, sigma: float) -> float:
    """Density of the first p observations under the stationary law.

    Closed forms for p <= 2 keep the fit objective cheap; higher orders go
    through the Yule-Walker solve.
    """
    p = phi.size
    sig2 = sigma * sigma
    if p == 1:
        g0 = sig2 / (1.0 - phi[0] ** 2)
        return -0.5 * (LOG_2PI + np.log(g0) + z_head[0] ** 2 / g0)
    if p == 2:
        a, b = phi
        g0 = (1.0 - b) * sig2 / ((1.0 + b) * ((1.0 - b) ** 2 - a * a))
        g1 = a * g0 / (1.0 - b)
        det = g0 * g0 - g1 * g1
        if det <= 0.0 or g0 <= 0.0:
            return NEG_INF
        quad = (g0 * (z_head[0] ** 2 + z_head[1] ** 2) - 2.0 * g1 * z_head[0] * z_head[1]) / det
        return -LOG_2PI - 0.5 * np.log(det) - 0.5 * quad
    return _dense_gaussian_from_gamma(z_head, _ar_gamma_head(phi, sigma, p))


def _ar_exact_loglik(z: np.ndarray, phi: np.ndarray, sigma: float) -> float:
    """Exact likelihood of a zero-mean AR(p): stationary head + white tail."""
    t = z.size
    p = phi.size
    if p == 0:
        return -0.5 * t * LOG_2PI - t * np.log(sigma) - 0.5 * float(z @ z) / sigma**2
    if t <= p:
        return _dense_gaussian_from_gamma(z, _ar_gamma_head(phi, sigma, t))
    head = _ar_head_loglik(z[:p], phi, sigma)
    if head == NEG_INF:
        return NEG_INF
    resid = z[p:].copy()
    for i in range(1, p + 1):
        resid -= phi[i - 1] * z[p - i : t - i]
    tail = (
        -0.5 * (t - p) * LOG_2PI
        - (t - p) * np.log(sigma)
        - 0.5 * float(resid @ resid) / sigma**2
    )
    return head + tail


def _kalman_loglik(z: np.ndarray, phi: np.ndarray, pi_ma: np.ndarray, sigma: float) -> float:
    """Exact ARMA likelihood by prediction-error decomposition."""
    p, q = phi.size, pi_ma.size
    m = max(p, q + 1)
    a_mat = np.zeros((m, m))
    a_mat[0, :p] = phi
    for i in range(1, m):
        a_mat[i, i - 1] = 1.0
    g = np.zeros(m)
    g[0] = 1.0
    zrow = np.zeros(m)
    zrow[0] = 1.0
    zrow[1 : q + 1] = pi_ma
    q_mat = sigma**2 * np.outer(g, g)

    cov = solve_discrete_lyapunov(a_mat, q_mat)
    state = np.zeros(m)
    ll = 0.0
    for obs in z:
        mean = float(zrow @ state)
        f = float(zrow @ cov @ zrow)
        if not np.isfinite(f) or f <= 0.0:
            return NEG_INF
        v = obs - mean
        ll += -0.5 * (LOG_2PI + np.log(f) + v * v / f)
        gain = (a_mat @ cov @ zrow) / f
        state = a_mat @ state + gain * v
        cov = a_mat @ cov @ a_mat.T + q_mat - np.outer(gain, gain) * f
    return ll


def _loglik_raw(
    z: np.ndarray, phi: np.ndarray, pi_ma: np.ndarray, sigma: float
) -> float:
    try:
        if pi_ma.size == 0:
            return _ar_exact_loglik(z, phi, sigma)
        return _kalman_loglik(z, phi, pi_ma, sigma)
    except np.linalg.LinAlgError:
        # borderline-stationary proposals can break the Cholesky of the
        # stationary head; treat them like rejections
        return NEG_INF


def arma_loglik(series, spec: ArmaSpec, t0: int = 1) -> float:
    """Exact Gaussian log-likelihood of the detrended series under ``spec``.

    Returns ``-inf`` for a non-stationary spec (a rejection sentinel, distinct
    from numeric failure which raises). Raises ValueError when the series is
    shorter than p + q + 1 observations.
    """
    series = np.asarray(series, dtype=float)
    if series.ndim != 1:
        raise ValueError("series must be one-dimensional")
    if series.size <= spec.p + spec.q:
        raise ValueError(f"series too short: T={series.size} <= p+q={spec.p + spec.q}")
    if not spec.is_stationary():
        return NEG_INF
    z = _detrended(series, spec.mu, spec.beta1, t0)
    return _loglik_raw(z, np.asarray(spec.phi), np.asarray(spec.pi_ma), spec.sigma)


def arma_residuals(series, spec: ArmaSpec, t0: int = 1) -> np.ndarray:
    """Standardized innovations u_t for t = p+1..T by the conditional recursion.

    Pre-sample innovations are taken as zero, so the first few residuals of a
    process with moving-average terms carry a transient that dies off
    geometrically. Under the true model the output has mean near 0 and
    variance near 1.
    """
    series = np.asarray(series, dtype=float)
    if series.size <= spec.p + spec.q:
        raise ValueError("series too short for residual extraction")
    if not spec.is_stationary():
        raise ValueError("non-stationary AR polynomial")
    z = _detrended(series, spec.mu, spec.beta1, t0)
    p, q = spec.p, spec.q
    t = z.size
    phi = np.asarray(spec.phi)
    if q == 0:
        pred = np.zeros(t - p)
        for i in range(1, p + 1):
            pred += phi[i - 1] * z[p - i : t - i]
        return (z[p:] - pred) / spec.sigma
    pi_ma = np.asarray(spec.pi_ma)
    u = np.zeros(t - p)
    for i in range(p, t):
        acc = z[i]
        for k in range(1, p + 1):
            acc -= phi[k - 1] * z[i - k]
        for j in range(1, q + 1):
            back = i - j - p
            if back >= 0:
                acc -= pi_ma[j - 1] * spec.sigma * u[back]
        u[i - p] = acc / spec.sigma
    return u


def arma_conditional_loglik(series, spec: ArmaSpec, t0: int = 1) -> float:
    """Conditional (innovation-form) log-likelihood from the residual recursion."""
    u = arma_residuals(series, spec, t0=t0)
    tp = u.size
    return -0.5 * tp * LOG_2PI - tp * np.log(spec.sigma) - 0.5 * float(u @ u)


# ---------------------------------------------------------------------------
# Fitting.
# ---------------------------------------------------------------------------


@dataclass
class ArmaFit:
    """Per-site fit result with optimizer metadata."""

    spec: ArmaSpec
    loglik: float
    iterations: int
    evaluations: int
    converged: bool
    site: int | None = None
    boundary: bool = False
    mean_structure: str = "constant"

    def __post_init__(self):
        if not np.isfinite(self.loglik):
            raise ValueError("fit produced a non-finite log-likelihood")


def _stationary_margin_ok(phi: np.ndarray, margin: float = 1e-7) -> bool:
    p = phi.size
    if p == 0:
        return True
    if p == 1:
        return abs(phi[0]) < 1.0 - margin
    if p == 2:
        a, b = phi
        return (abs(b) < 1.0 - margin) and (a + b < 1.0 - margin) and (b - a < 1.0 - margin)
    return bool(np.all(ar_root_moduli(phi) > 1.0 + margin))


def _yule_walker_phi(z: np.ndarray, p: int) -> np.ndarray:
    if p == 0:
        return np.zeros(0)
    t = z.size
    g0 = float(z @ z) / t
    if g0 <= 0:
        return np.zeros(p)
    r = np.array([float(z[k:] @ z[: t - k]) / t for k in range(p + 1)]) / g0
    try:
        phi = np.linalg.solve(toeplitz(r[:p]), r[1 : p + 1])
    except np.linalg.LinAlgError:
        return np.zeros(p)
    while not _stationary_margin_ok(phi, 1e-4):
        phi *= 0.9
    return phi


def fit_arma(
    series,
    p: int,
    q: int,
    mean_structure: str = "constant",
    t0: int = 1,
    config: OptimizerConfig | None = None,
    sigma_floor: float = 1e-8,
    site: int | None = None,
) -> ArmaFit:
    """Maximize the exact ARMA likelihood over (mu[, beta1], sigma, phi, pi).

    Starts from method-of-moments values: sample mean (and OLS trend), sample
    standard deviation, Yule-Walker AR coefficients and zero MA coefficients.
    Non-stationary or non-positive-scale proposals are rejected through the
    optimizer's -inf sentinel. A fit whose scale lands on the lower bound is
    flagged via ``boundary``.
    """
    series = np.asarray(series, dtype=float)
    t = series.size
    floor_t = 3 * (p + q) + 5
    if t <= floor_t:
        raise ValueError(f"series too short to fit: T={t} <= {floor_t}")

    ts = t0 + np.arange(t, dtype=float)
    if mean_structure == "linear":
        design = np.column_stack([np.ones(t), ts])
        coef, *_ = np.linalg.lstsq(design, series, rcond=None)
        mu0, b10 = float(coef[0]), float(coef[1])
        z0 = series - design @ coef
    elif mean_structure == "constant":
        mu0, b10 = float(series.mean()), 0.0
        z0 = series - mu0
    elif mean_structure == "zero":
        mu0, b10 = 0.0, 0.0
        z0 = series
    else:
        raise ValueError(f"unknown mean structure {mean_structure!r}")

    sigma0 = float(z0.std())
    if sigma0 <= 0:
        sigma0 = 1e-3
    phi0 = _yule_walker_phi(z0, p)

    with_mu = mean_structure in ("constant", "linear")
    with_b1 = mean_structure == "linear"
    x0: list[float] = []
    steps: list[float] = []
    if with_mu:
        x0.append(mu0)
        steps.append(0.1 * max(sigma0, 0.1))
    if with_b1:
        x0.append(b10)
        steps.append(max(sigma0 / t, 1e-4))
    x0.append(sigma0)
    steps.append(0.1 * sigma0)
    x0.extend(phi0)
    steps.extend([0.1] * p)
    x0.extend([0.0] * q)
    steps.extend([0.1] * q)

    n_mean = int(with_mu) + int(with_b1)

    def objective(x: np.ndarray) -> float:
        sigma = x[n_mean]
        if sigma <= sigma_floor:
            return NEG_INF
        phi = x[n_mean + 1 : n_mean + 1 + p]
        if not _stationary_margin_ok(phi):
            return NEG_INF
        mu = x[0] if with_mu else 0.0
        b1 = x[1] if with_b1 else 0.0
        z = series - mu
        if b1 != 0.0:
            z = z - b1 * ts
        return _loglik_raw(z, phi, x[n_mean + 1 + p :], sigma)

    cfg = config or OptimizerConfig()
    cfg = OptimizerConfig(
        init_step=tuple(steps),
        ftol=cfg.ftol,
        xtol=cfg.xtol,
        max_iters=cfg.max_iters,
        restarts=cfg.restarts,
        seed=cfg.seed,
        record_trace=cfg.record_trace,
    )
    result = nelder_mead(objective, np.array(x0), cfg)

    xb = result.x
    mu_hat = float(xb[0]) if with_mu else 0.0
    b1_hat = float(xb[1]) if with_b1 else 0.0
    sigma_hat = float(xb[n_mean])
    spec = ArmaSpec(
        p=p,
        q=q,
        mu=mu_hat,
        beta1=b1_hat,
        sigma=sigma_hat,
        phi=tuple(xb[n_mean + 1 : n_mean + 1 + p]),
        pi_ma=tuple(xb[n_mean + 1 + p :]),
    )
    boundary = sigma_hat <= 10.0 * sigma_floor
    if boundary:
        warnings.warn("fitted scale collapsed to its lower bound", UserWarning, stacklevel=2)
    return ArmaFit(
        spec=spec,
        loglik=result.fval,
        iterations=result.iterations,
        evaluations=result.evaluations,
        converged=result.converged,
        site=site,
        boundary=boundary,
        mean_structure=mean_structure,
    )


def select_arma_order(
    series,
    max_p: int = 3,
    max_q: int = 2,
    mean_structure: str = "constant",
    t0: int = 1,
    config: OptimizerConfig | None = None,
) -> tuple[ArmaFit, list[tuple[int, int, float]]]:
    """Fit every (p, q) on a grid and pick the AIC minimizer.

    Returns the winning fit and the (p, q, aic) table for all attempted
    orders. Orders whose parameter count is too large for the series length
    are skipped.
    """
    series = np.asarray(series, dtype=float)
    n_mean = {"zero": 0, "constant": 1, "linear": 2}[mean_structure]
    table: list[tuple[int, int, float]] = []
    best: ArmaFit | None = None
    best_aic = float("inf")
    for p in range(max_p + 1):
        for q in range(max_q + 1):
            if series.size <= 3 * (p + q) + 5:
                continue
            fit = fit_arma(series, p, q, mean_structure=mean_structure, t0=t0, config=config)
            k = n_mean + 1 + p + q
            aic = 2.0 * k - 2.0 * fit.loglik
            table.append((p, q, aic))
            if aic < best_aic:
                best, best_aic = fit, aic
    if best is None:
        raise ValueError("series too short for every order on the grid")
    return best, table


def ljung_box(residuals, n_lags: int) -> float:
    """Ljung-Box portmanteau statistic over the first ``n_lags`` lags."""
    u = np.asarray(residuals, dtype=float)
    t = u.size
    u = u - u.mean()
    denom = float(u @ u)
    stat = 0.0
    for k in range(1, n_lags + 1):
        rho = float(u[k:] @ u[: t - k]) / denom
        stat += rho * rho / (t - k)
    return t * (t + 2.0) * stat
