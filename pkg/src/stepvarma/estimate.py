"""Stepwise maximum-likelihood estimation and the joint MLE comparison path.

The stepwise fit executes a validated parameter partition stage by stage.
Within a stage, steps only need estimates from strictly earlier stages, so
they run concurrently; a barrier separates stages. All step executors are
pure functions of (data, prior estimates), so thread count and execution
order never change the numbers.

The joint path maximizes the innovation-form (conditional) likelihood over
every free parameter at once with a single simplex run. It exists for
head-to-head efficiency comparisons and is guarded by a parameter-count cap.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.linalg import solve_triangular

from .arma import arma_residuals, fit_arma, _stationary_margin_ok
from .matern import (
    CorrelationBuilder,
    CorrelationMatrixFactor,
    fit_innovation_matern,
    innovation_loglik,
)
from .model import (
    ArmaSpec,
    AxialStructure,
    DenseStructure,
    DiagonalVarmaModel,
    FixedStructure,
    MaternStructure,
    ModelSkeleton,
    ParameterPartition,
    SpaceTimeData,
    canonical_partition,
    validate_partition,
)
from .optimize import OptimizerConfig, nelder_mead
from .spectral import (
    axial_dense_correlation,
    fit_coherence,
    fit_whittle,
    modified_matern_mass,
)

__all__ = [
    "EstimationConfig",
    "EstimationError",
    "FitReport",
    "StepReport",
    "smle_fit",
    "mle_fit",
    "joint_conditional_loglik",
    "residual_matrix",
    "specs_from_params",
]

LOG_2PI = float(np.log(2.0 * np.pi))
NEG_INF = float("-inf")


class EstimationError(RuntimeError):
    pass


@dataclass(frozen=True)
class EstimationConfig:
    """Run-level settings shared by the stepwise and joint fitters."""

    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)
    threads: int | None = None
    serial: bool = False
    sigma_floor: float = 1e-8
    param_cap: int = 100
    jitter: float = 0.0

    def n_workers(self) -> int:
        if self.serial:
            return 1
        if self.threads is not None:
            return max(1, self.threads)
        return max(1, min(8, os.cpu_count() or 1))


@dataclass
class StepReport:
    """Outcome of one partition step."""

    step: int
    stage: int
    theta: tuple[str, ...]
    iterations: int
    evaluations: int
    wall_seconds: float
    loglik: float
    converged: bool
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "step": self.step,
            "stage": self.stage,
            "theta": list(self.theta),
            "iterations": self.iterations,
            "evaluations": self.evaluations,
            "wall_seconds": self.wall_seconds,
            "loglik": self.loglik,
            "converged": self.converged,
            "error": self.error,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "StepReport":
        d = dict(d)
        d["theta"] = tuple(d["theta"])
        return cls(**d)


@dataclass
class FitReport:
    """Estimates plus per-step optimizer metadata and wall times."""

    method: str
    estimates: dict[str, float]
    per_step: list[StepReport]
    stage_wall_seconds: list[float]
    total_wall_seconds: float

    @property
    def ok(self) -> bool:
        return all(st.error is None for st in self.per_step)

    def step_errors(self) -> list[StepReport]:
        return [st for st in self.per_step if st.error is not None]

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "estimates": dict(self.estimates),
            "per_step": [st.to_dict() for st in self.per_step],
            "stage_wall_seconds": list(self.stage_wall_seconds),
            "total_wall_seconds": self.total_wall_seconds,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FitReport":
        return cls(
            method=d["method"],
            estimates={k: float(v) for k, v in d["estimates"].items()},
            per_step=[StepReport.from_dict(x) for x in d["per_step"]],
            stage_wall_seconds=[float(x) for x in d["stage_wall_seconds"]],
            total_wall_seconds=float(d["total_wall_seconds"]),
        )


# ---------------------------------------------------------------------------
# Parameter-map plumbing.
# ---------------------------------------------------------------------------


def _site_spec(skeleton: ModelSkeleton, params: Mapping[str, float], s: int) -> ArmaSpec:
    p, q = skeleton.p[s], skeleton.q[s]
    return ArmaSpec(
        p=p,
        q=q,
        mu=float(params.get(f"site{s}.mu", 0.0)),
        beta1=float(params.get(f"site{s}.beta1", 0.0)),
        sigma=float(params[f"site{s}.sigma"]),
        phi=tuple(float(params[f"site{s}.phi{i}"]) for i in range(1, p + 1)),
        pi_ma=tuple(float(params[f"site{s}.pi{j}"]) for j in range(1, q + 1)),
    )


def specs_from_params(skeleton: ModelSkeleton, params: Mapping[str, float]) -> list[ArmaSpec]:
    """Assemble one ArmaSpec per site from a named parameter map."""
    return [_site_spec(skeleton, params, s) for s in range(skeleton.n_sites)]


def params_from_model(model: DiagonalVarmaModel, mean_structure: str | None = None) -> dict[str, float]:
    """Named parameter map of a concrete model (useful as truth or MLE init)."""
    sk = model.skeleton(mean_structure)
    out: dict[str, float] = {}
    for s, sp in enumerate(model.arma):
        if sk.mean_structure in ("constant", "linear"):
            out[f"site{s}.mu"] = sp.mu
        if sk.mean_structure == "linear":
            out[f"site{s}.beta1"] = sp.beta1
        out[f"site{s}.sigma"] = sp.sigma
        for i, v in enumerate(sp.phi, start=1):
            out[f"site{s}.phi{i}"] = v
        for j, v in enumerate(sp.pi_ma, start=1):
            out[f"site{s}.pi{j}"] = v
    inn = model.innovation
    if isinstance(sk.innovation, MaternStructure):
        out["spatial.alpha"] = inn.alpha
        out["spatial.kappa"] = inn.kappa
    elif isinstance(sk.innovation, AxialStructure):
        for m in range(inn.n_lat):
            out[f"lat{m}.alpha"] = inn.alpha_m[m]
            out[f"lat{m}.kappa"] = inn.kappa_m[m]
        out["coherence.xi"] = inn.xi
        out["coherence.tau"] = inn.tau
    elif isinstance(sk.innovation, DenseStructure):
        for i in range(model.n_sites):
            for j in range(i + 1, model.n_sites):
                out[f"spatial.corr[{i},{j}]"] = float(inn.R[i, j])
    return out


def residual_matrix(data: SpaceTimeData, specs, align_p: int | None = None) -> np.ndarray:
    """Aligned standardized residuals: rows are the last T - max_p time points."""
    specs = list(specs)
    p_max = align_p if align_p is not None else max(sp.p for sp in specs)
    tp = data.n_time - p_max
    if tp < 1:
        raise ValueError("series too short for residual extraction")
    u = np.empty((tp, data.n_sites))
    for s, sp in enumerate(specs):
        us = arma_residuals(data.values[:, s], sp, t0=data.t0)
        u[:, s] = us[us.size - tp :]
    return u


def _dense_correlation_estimate(u: np.ndarray) -> np.ndarray:
    tp, s = u.shape
    if tp <= s:
        raise EstimationError(
            f"need more residual rows ({tp}) than sites ({s}) for a dense correlation estimate"
        )
    c = (u.T @ u) / tp
    d = np.sqrt(np.diag(c))
    r = c / np.outer(d, d)
    r = 0.5 * (r + r.T)
    np.fill_diagonal(r, 1.0)
    return r


# ---------------------------------------------------------------------------
# Stepwise fit.
# ---------------------------------------------------------------------------


def _check_data(data: SpaceTimeData, skeleton: ModelSkeleton) -> None:
    if data.sites != skeleton.sites:
        raise ValueError("data sites do not match the model skeleton sites")


def smle_fit(
    data: SpaceTimeData,
    skeleton: ModelSkeleton,
    partition: ParameterPartition | None = None,
    config: EstimationConfig | None = None,
) -> FitReport:
    """Stepwise maximum likelihood over a validated parameter partition.

    Stages run in order; the steps inside a stage run on a thread pool (or
    serially under ``config.serial``) and are assembled by step index, so the
    estimates are identical either way. A step that raises is recorded with
    its error; later steps whose nuisance parameters depend on it are skipped
    with a dependency error instead of running on garbage.
    """
    cfg = config or EstimationConfig()
    _check_data(data, skeleton)
    part = partition if partition is not None else canonical_partition(skeleton)
    schedule = validate_partition(part, skeleton)

    state: dict[str, float] = {}
    failed: set[str] = set()
    reports: dict[int, StepReport] = {}
    stage_walls: list[float] = []
    u_cache: dict[str, np.ndarray] = {}

    p_global = max(skeleton.p)

    def full_residuals() -> np.ndarray:
        if "u" not in u_cache:
            specs = specs_from_params(skeleton, state)
            u_cache["u"] = residual_matrix(data, specs)
        return u_cache["u"]

    def ring_residuals(m: int) -> np.ndarray:
        # only this latitude's temporal estimates are needed, so a failure
        # elsewhere on the grid cannot poison this step
        idx = skeleton.lat_site_indices(m)
        tp = data.n_time - p_global
        u = np.empty((tp, idx.size))
        for col, s in enumerate(idx):
            us = arma_residuals(
                data.values[:, int(s)], _site_spec(skeleton, state, int(s)), t0=data.t0
            )
            u[:, col] = us[us.size - tp :]
        return u

    def run_step(k: int) -> tuple[StepReport, dict[str, float]]:
        step = part.steps[k]
        kind, _, arg = step.data_subset.partition(":")
        start = time.perf_counter()
        if kind == "site":
            s = int(arg)
            fit = fit_arma(
                data.values[:, s],
                skeleton.p[s],
                skeleton.q[s],
                mean_structure=skeleton.mean_structure,
                t0=data.t0,
                config=cfg.optimizer,
                sigma_floor=cfg.sigma_floor,
                site=s,
            )
            sp = fit.spec
            values = []
            if skeleton.mean_structure in ("constant", "linear"):
                values.append(sp.mu)
            if skeleton.mean_structure == "linear":
                values.append(sp.beta1)
            values.append(sp.sigma)
            values.extend(sp.phi)
            values.extend(sp.pi_ma)
            est = dict(zip(step.theta, values))
            report = StepReport(
                step=k, stage=step.stage, theta=step.theta,
                iterations=fit.iterations, evaluations=fit.evaluations,
                wall_seconds=time.perf_counter() - start,
                loglik=fit.loglik, converged=fit.converged,
            )
            return report, est
        if kind == "lat":
            m = int(arg)
            rings = ring_residuals(m)
            fit = fit_whittle(rings, config=cfg.optimizer)
            est = {f"lat{m}.alpha": fit.alpha, f"lat{m}.kappa": fit.kappa}
            report = StepReport(
                step=k, stage=step.stage, theta=step.theta,
                iterations=fit.iterations, evaluations=fit.evaluations,
                wall_seconds=time.perf_counter() - start,
                loglik=fit.loglik, converged=fit.converged,
            )
            return report, est
        # joint spatial step ("all"): dispatch on the innovation structure
        inn = skeleton.innovation
        u = full_residuals()
        if isinstance(inn, MaternStructure):
            fit = fit_innovation_matern(u, skeleton.sites, config=cfg.optimizer, jitter=cfg.jitter)
            est = {"spatial.alpha": fit.alpha, "spatial.kappa": fit.kappa}
            report = StepReport(
                step=k, stage=step.stage, theta=step.theta,
                iterations=fit.iterations, evaluations=fit.evaluations,
                wall_seconds=time.perf_counter() - start,
                loglik=fit.loglik, converged=fit.converged,
            )
            return report, est
        if isinstance(inn, DenseStructure):
            r = _dense_correlation_estimate(u)
            factor = CorrelationMatrixFactor.from_matrix(r)
            ll = innovation_loglik(u, factor)
            est = {
                f"spatial.corr[{i},{j}]": float(r[i, j])
                for i in range(r.shape[0])
                for j in range(i + 1, r.shape[0])
            }
            report = StepReport(
                step=k, stage=step.stage, theta=step.theta,
                iterations=0, evaluations=0,
                wall_seconds=time.perf_counter() - start,
                loglik=ll, converged=True,
            )
            return report, est
        if isinstance(inn, AxialStructure):
            masses = [
                modified_matern_mass(state[f"lat{m}.alpha"], state[f"lat{m}.kappa"], inn.n_lon)
                for m in range(inn.n_lat)
            ]
            fit = fit_coherence(u, masses, inn.latitudes, config=cfg.optimizer)
            est = {"coherence.xi": fit.xi, "coherence.tau": fit.tau}
            report = StepReport(
                step=k, stage=step.stage, theta=step.theta,
                iterations=fit.iterations, evaluations=fit.evaluations,
                wall_seconds=time.perf_counter() - start,
                loglik=fit.loglik, converged=fit.converged,
            )
            return report, est
        raise EstimationError(f"no executor for step {k} ({step.data_subset!r})")

    n_workers = cfg.n_workers()
    for stage_steps in schedule:
        stage_start = time.perf_counter()
        runnable: list[int] = []
        for k in stage_steps:
            blocked = set(part.steps[k].eta) & failed
            if blocked:
                reports[k] = StepReport(
                    step=k, stage=part.steps[k].stage, theta=part.steps[k].theta,
                    iterations=0, evaluations=0, wall_seconds=0.0,
                    loglik=float("nan"), converged=False,
                    error=f"dependency failure: {sorted(blocked)[:4]} unavailable",
                )
                failed |= set(part.steps[k].theta)
            else:
                runnable.append(k)

        def safe(k: int):
            try:
                return k, run_step(k), None
            except Exception as exc:  # recorded, never silently dropped
                return k, None, f"{type(exc).__name__}: {exc}"

        if n_workers > 1 and len(runnable) > 1:
            with ThreadPoolExecutor(max_workers=n_workers) as pool:
                outcomes = list(pool.map(safe, runnable))
        else:
            outcomes = [safe(k) for k in runnable]

        for k, payload, err in sorted(outcomes, key=lambda kv: kv[0]):
            if err is not None:
                step = part.steps[k]
                reports[k] = StepReport(
                    step=k, stage=step.stage, theta=step.theta,
                    iterations=0, evaluations=0, wall_seconds=0.0,
                    loglik=float("nan"), converged=False, error=err,
                )
                failed |= set(step.theta)
            else:
                report, est = payload
                reports[k] = report
                state.update(est)
        stage_walls.append(time.perf_counter() - stage_start)

    per_step = [reports[k] for k in range(part.n_steps)]
    return FitReport(
        method="SMLE",
        estimates=state,
        per_step=per_step,
        stage_wall_seconds=stage_walls,
        total_wall_seconds=float(sum(stage_walls)),
    )


# ---------------------------------------------------------------------------
# Joint conditional likelihood and one-shot MLE.
# ---------------------------------------------------------------------------


def _innovation_factor(skeleton: ModelSkeleton, params: Mapping[str, float]):
    """Correlation factor implied by the named spatial parameters, or None."""
    inn = skeleton.innovation
    if isinstance(inn, MaternStructure):
        alpha = float(params["spatial.alpha"])
        kappa = float(params["spatial.kappa"])
        if alpha <= 0 or kappa <= 0:
            return None
        try:
            return CorrelationBuilder(skeleton.sites).factor(alpha, kappa)
        except np.linalg.LinAlgError:
            return None
    if isinstance(inn, FixedStructure):
        r = inn.R if inn.R is not None else np.eye(skeleton.n_sites)
        return CorrelationMatrixFactor.from_matrix(np.asarray(r, dtype=float))
    if isinstance(inn, DenseStructure):
        s = skeleton.n_sites
        r = np.eye(s)
        for i in range(s):
            for j in range(i + 1, s):
                r[i, j] = r[j, i] = float(params[f"spatial.corr[{i},{j}]"])
        try:
            return CorrelationMatrixFactor.from_matrix(r)
        except np.linalg.LinAlgError:
            return None
    if isinstance(inn, AxialStructure):
        try:
            masses = [
                modified_matern_mass(
                    float(params[f"lat{m}.alpha"]), float(params[f"lat{m}.kappa"]), inn.n_lon
                )
                for m in range(inn.n_lat)
            ]
            r = axial_dense_correlation(
                masses, float(params["coherence.xi"]), float(params["coherence.tau"]),
                inn.latitudes,
            )
            return CorrelationMatrixFactor.from_matrix(r)
        except (ValueError, np.linalg.LinAlgError):
            return None
    raise TypeError(f"unknown innovation structure {type(inn).__name__}")


def joint_conditional_loglik(
    data: SpaceTimeData, params: Mapping[str, float], skeleton: ModelSkeleton
) -> float:
    """Innovation-form joint log-likelihood at a full named parameter vector.

    Residuals are extracted per site at the proposed temporal parameters and
    scored against N(0, R); the change of variables from observations to
    standardized residuals contributes -T' * sum(log sigma_s). Non-stationary
    or otherwise invalid proposals return ``-inf``.
    """
    _check_data(data, skeleton)
    sigmas = np.array([float(params[f"site{s}.sigma"]) for s in range(skeleton.n_sites)])
    if np.any(sigmas <= 0):
        return NEG_INF
    specs = specs_from_params(skeleton, params)
    if any(not sp.is_stationary() for sp in specs):
        return NEG_INF
    factor = _innovation_factor(skeleton, params)
    if factor is None:
        return NEG_INF
    u = residual_matrix(data, specs)
    tp = u.shape[0]
    return innovation_loglik(u, factor) - tp * float(np.sum(np.log(sigmas)))


class _FastJointObjective:
    """Vectorized innovation-form likelihood for pure-AR skeletons.

    Covers q = 0 with an isotropic Matern or fixed innovation model, which is
    what the joint-MLE benchmarks use. Anything else falls back to the
    generic (much slower) named-parameter path.
    """

    def __init__(self, data: SpaceTimeData, skeleton: ModelSkeleton, names, fixed: Mapping[str, float], sigma_floor: float):
        self.values = data.values
        self.t_index = data.times.astype(float)
        self.skeleton = skeleton
        self.names = list(names)
        self.fixed = dict(fixed)
        self.sigma_floor = sigma_floor
        s = skeleton.n_sites
        self.p_orders = np.array(skeleton.p)
        self.p_max = int(self.p_orders.max())
        self.tp = data.n_time - self.p_max

        full = {name: np.nan for name in skeleton.param_names()}
        full.update(self.fixed)
        self.base_mu = np.zeros(s)
        self.base_b1 = np.zeros(s)
        self.base_sigma = np.zeros(s)
        self.base_phi = np.zeros((self.p_max, s))
        self.base_alpha = np.nan
        self.base_kappa = np.nan
        self._apply(full)

        self.slot: list[tuple[str, int, int]] = []
        for name in self.names:
            self.slot.append(self._slot_of(name))
        self.matern = isinstance(skeleton.innovation, MaternStructure)
        if self.matern:
            self.builder = CorrelationBuilder(skeleton.sites)
            self.fixed_factor = None
        else:
            inn = skeleton.innovation
            r = inn.R if inn.R is not None else np.eye(s)
            self.fixed_factor = CorrelationMatrixFactor.from_matrix(np.asarray(r, dtype=float))

    def _slot_of(self, name: str) -> tuple[str, int, int]:
        if name == "spatial.alpha":
            return ("alpha", 0, 0)
        if name == "spatial.kappa":
            return ("kappa", 0, 0)
        site, _, tail = name.partition(".")
        s = int(site.removeprefix("site"))
        if tail == "mu":
            return ("mu", s, 0)
        if tail == "beta1":
            return ("b1", s, 0)
        if tail == "sigma":
            return ("sigma", s, 0)
        if tail.startswith("phi"):
            return ("phi", s, int(tail.removeprefix("phi")) - 1)
        raise EstimationError(f"fast joint objective cannot handle parameter {name!r}")

    def _apply(self, params: Mapping[str, float]) -> None:
        sk = self.skeleton
        for s in range(sk.n_sites):
            if sk.mean_structure in ("constant", "linear"):
                self.base_mu[s] = params.get(f"site{s}.mu", np.nan)
            if sk.mean_structure == "linear":
                self.base_b1[s] = params.get(f"site{s}.beta1", np.nan)
            self.base_sigma[s] = params.get(f"site{s}.sigma", np.nan)
            for i in range(sk.p[s]):
                self.base_phi[i, s] = params.get(f"site{s}.phi{i + 1}", np.nan)
        if isinstance(sk.innovation, MaternStructure):
            self.base_alpha = params.get("spatial.alpha", np.nan)
            self.base_kappa = params.get("spatial.kappa", np.nan)

    def __call__(self, x: np.ndarray) -> float:
        mu = self.base_mu
        b1 = self.base_b1
        sigma = self.base_sigma.copy()
        phi = self.base_phi.copy()
        alpha, kappa = self.base_alpha, self.base_kappa
        mu_dirty = b1_dirty = False
        for val, (kind, s, i) in zip(x, self.slot):
            if kind == "sigma":
                sigma[s] = val
            elif kind == "phi":
                phi[i, s] = val
            elif kind == "mu":
                if not mu_dirty:
                    mu = mu.copy()
                    mu_dirty = True
                mu[s] = val
            elif kind == "b1":
                if not b1_dirty:
                    b1 = b1.copy()
                    b1_dirty = True
                b1[s] = val
            elif kind == "alpha":
                alpha = val
            else:
                kappa = val

        if np.any(sigma <= self.sigma_floor):
            return NEG_INF
        if self.p_max == 1:
            if np.any(np.abs(phi[0]) >= 1.0 - 1e-7):
                return NEG_INF
        elif self.p_max == 2:
            a, b = phi[0], phi[1]
            if np.any(np.abs(b) >= 1.0 - 1e-7) or np.any(a + b >= 1.0 - 1e-7) or np.any(b - a >= 1.0 - 1e-7):
                return NEG_INF
        elif self.p_max > 2:
            for s in range(phi.shape[1]):
                if not _stationary_margin_ok(phi[: self.p_orders[s], s]):
                    return NEG_INF

        if self.matern:
            if alpha <= 0 or kappa <= 0:
                return NEG_INF
            try:
                factor = self.builder.factor(float(alpha), float(kappa))
            except np.linalg.LinAlgError:
                return NEG_INF
        else:
            factor = self.fixed_factor

        z = self.values - mu[None, :]
        if np.any(b1 != 0.0):
            z = z - b1[None, :] * self.t_index[:, None]
        t = z.shape[0]
        resid = z[self.p_max :].copy()
        for i in range(1, self.p_max + 1):
            resid -= phi[i - 1][None, :] * z[self.p_max - i : t - i]
        u = resid / sigma[None, :]

        v = solve_triangular(factor.chol, u.T, lower=True, check_finite=False)
        quad = float(np.sum(v * v))
        s = u.shape[1]
        return (
            -0.5 * self.tp * s * LOG_2PI
            - 0.5 * self.tp * factor.logdet
            - 0.5 * quad
            - self.tp * float(np.sum(np.log(sigma)))
        )


def _default_joint_init(data: SpaceTimeData, skeleton: ModelSkeleton) -> dict[str, float]:
    """Moment-based start for the joint fit (used when no init is supplied)."""
    from .arma import _yule_walker_phi

    init: dict[str, float] = {}
    ts = data.times.astype(float)
    for s in range(skeleton.n_sites):
        y = data.values[:, s]
        if skeleton.mean_structure == "linear":
            design = np.column_stack([np.ones(y.size), ts])
            coef, *_ = np.linalg.lstsq(design, y, rcond=None)
            init[f"site{s}.mu"], init[f"site{s}.beta1"] = float(coef[0]), float(coef[1])
            z = y - design @ coef
        elif skeleton.mean_structure == "constant":
            init[f"site{s}.mu"] = float(y.mean())
            z = y - y.mean()
        else:
            z = y
        init[f"site{s}.sigma"] = float(max(z.std(), 1e-3))
        phi0 = _yule_walker_phi(z, skeleton.p[s])
        for i, v in enumerate(phi0, start=1):
            init[f"site{s}.phi{i}"] = float(v)
        for j in range(1, skeleton.q[s] + 1):
            init[f"site{s}.pi{j}"] = 0.0
    inn = skeleton.innovation
    if isinstance(inn, MaternStructure):
        builder = CorrelationBuilder(skeleton.sites)
        init["spatial.alpha"] = 1.0 / builder.median_distance
        init["spatial.kappa"] = 1.0
    elif isinstance(inn, AxialStructure):
        for m in range(inn.n_lat):
            init[f"lat{m}.alpha"] = 1.0
            init[f"lat{m}.kappa"] = 1.0
        init["coherence.xi"] = 0.5
        init["coherence.tau"] = 0.1
    elif isinstance(inn, DenseStructure):
        for i in range(skeleton.n_sites):
            for j in range(i + 1, skeleton.n_sites):
                init[f"spatial.corr[{i},{j}]"] = 0.0
    return init


def mle_fit(
    data: SpaceTimeData,
    skeleton: ModelSkeleton,
    mode: str = "full",
    config: EstimationConfig | None = None,
    init: Mapping[str, float] | None = None,
    fixed_sigma: float | Mapping[str, float] | None = None,
) -> FitReport:
    """One-shot Nelder-Mead over the joint conditional likelihood.

    mode="full" frees every parameter; mode="fixed_sigma" pins each site's
    scale at ``fixed_sigma`` (a scalar, or a map of sigma names to values)
    and frees the rest. Refuses to run above ``config.param_cap`` free
    parameters: the evaluation count of a simplex search grows too fast in
    the dimension for that to be a sensible request.
    """
    cfg = config or EstimationConfig()
    _check_data(data, skeleton)
    all_names = list(skeleton.param_names())

    fixed: dict[str, float] = {}
    if mode == "fixed_sigma":
        if fixed_sigma is None:
            raise ValueError("fixed_sigma mode needs the pinned scale value(s)")
        for s in range(skeleton.n_sites):
            name = f"site{s}.sigma"
            value = fixed_sigma[name] if isinstance(fixed_sigma, Mapping) else float(fixed_sigma)
            fixed[name] = float(value)
        method = "FixedMLE"
    elif mode == "full":
        method = "FullMLE"
    else:
        raise ValueError(f"unknown mode {mode!r}")

    free = [n for n in all_names if n not in fixed]
    if len(free) > cfg.param_cap:
        raise EstimationError(
            f"{len(free)} free parameters exceed the joint-MLE cap of {cfg.param_cap}"
        )

    start_map = dict(_default_joint_init(data, skeleton))
    if init is not None:
        start_map.update({k: float(v) for k, v in init.items()})
    start_map.update(fixed)
    x0 = np.array([start_map[n] for n in free])

    fast_ok = (
        all(q == 0 for q in skeleton.q)
        and isinstance(skeleton.innovation, (MaternStructure, FixedStructure))
    )
    if fast_ok:
        objective = _FastJointObjective(data, skeleton, free, fixed, cfg.sigma_floor)
    else:
        def objective(x: np.ndarray) -> float:
            params = dict(fixed)
            params.update(zip(free, x))
            return joint_conditional_loglik(data, params, skeleton)

    steps = np.where(np.abs(x0) > 1e-12, 0.1 * np.abs(x0), 0.1)
    opt_cfg = OptimizerConfig(
        init_step=tuple(steps),
        ftol=cfg.optimizer.ftol,
        xtol=cfg.optimizer.xtol,
        max_iters=cfg.optimizer.max_iters,
        restarts=cfg.optimizer.restarts,
        seed=cfg.optimizer.seed,
        record_trace=cfg.optimizer.record_trace,
    )
    start = time.perf_counter()
    result = nelder_mead(objective, x0, opt_cfg)
    wall = time.perf_counter() - start

    estimates = {n: float(v) for n, v in zip(free, result.x)}
    report = StepReport(
        step=0, stage=0, theta=tuple(free),
        iterations=result.iterations, evaluations=result.evaluations,
        wall_seconds=wall, loglik=result.fval, converged=result.converged,
    )
    return FitReport(
        method=method,
        estimates=estimates,
        per_step=[report],
        stage_wall_seconds=[wall],
        total_wall_seconds=wall,
    )
