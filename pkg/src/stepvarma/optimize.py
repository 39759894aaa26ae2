"""Derivative-free maximization with the Nelder-Mead simplex.

All model fitting in this package goes through :func:`nelder_mead`. The
implementation maximizes directly (no sign flipping by callers) and accepts
``-inf`` as a rejection sentinel from the objective, so constraint handling
(positivity, stationarity) can live in the objective itself.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = ["OptimizerConfig", "OptimizerError", "OptimizerResult", "nelder_mead"]

NEG_INF = float("-inf")


class OptimizerError(ValueError):
    """Unusable objective: non-finite at the start point, or NaN output."""


@dataclass(frozen=True)
class OptimizerConfig:
    """Nelder-Mead settings.

    init_step may be a scalar or a per-coordinate sequence; it sets the size
    of the initial simplex around the start point. ftol is relative on the
    spread of simplex function values, xtol is relative (against 1 + |x|) on
    the coordinate spread. Both must drop below tolerance to declare
    convergence. max_iters applies per start; restarts re-seed a smaller
    simplex at the incumbent when a start ends unconverged. seed is reserved
    for tie-breaking jitter; the current implementation breaks ties by vertex
    index, which is already deterministic.
    """

    init_step: float | Sequence[float] = 0.1
    ftol: float = 1e-8
    xtol: float = 1e-8
    max_iters: int = 5000
    restarts: int = 2
    seed: int = 0
    record_trace: bool = False

    def __post_init__(self) -> None:
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.ftol <= 0 or self.xtol <= 0:
            raise ValueError("tolerances must be positive")
        step = np.atleast_1d(np.asarray(self.init_step, dtype=float))
        if np.any(step <= 0):
            raise ValueError("init_step must be positive")


@dataclass
class OptimizerResult:
    """Outcome of a Nelder-Mead run.

    fval is the maximum over every point evaluated, not just the surviving
    simplex. trace (when recorded) holds the incumbent best value after each
    iteration; eval_trace holds the cumulative evaluation count on the same
    grid. final_simplex/final_fvals expose the terminal simplex so callers
    can diagnose flat directions.
    """

    x: np.ndarray
    fval: float
    iterations: int
    evaluations: int
    converged: bool
    trace: list[float] | None
    eval_trace: list[int] | None
    final_simplex: np.ndarray
    final_fvals: np.ndarray
    restarts_used: int = 0

    def flat_directions(self, ftol: float, xtol: float, factor: float = 1000.0) -> bool:
        """True when the terminal simplex collapsed in value but not in space.

        This is the signature of a ridge: function values agree to ftol while
        vertices stay more than ``factor * xtol`` apart.
        """
        f = self.final_fvals
        if not np.all(np.isfinite(f)):
            return False
        fspread = float(f.max() - f.min())
        if fspread > ftol * (abs(float(f.max())) + ftol):
            return False
        xbest = self.final_simplex[0]
        xspread = float(np.max(np.abs(self.final_simplex - xbest)))
        return xspread > factor * xtol * (1.0 + float(np.max(np.abs(xbest))))


def _initial_simplex(x0: np.ndarray, step: np.ndarray) -> np.ndarray:
    n = x0.size
    simplex = np.tile(x0, (n + 1, 1))
    for i in range(n):
        simplex[i + 1, i] += step[i]
    return simplex


class _Evaluator:
    """Wraps the objective: counts calls, rejects NaN, tracks the best point."""

    def __init__(self, func: Callable[[np.ndarray], float]):
        self.func = func
        self.count = 0
        self.best_f = NEG_INF
        self.best_x: np.ndarray | None = None

    def __call__(self, x: np.ndarray) -> float:
        f = float(self.func(x))
        self.count += 1
        if np.isnan(f) or f == float("inf"):
            raise OptimizerError(f"objective returned non-comparable value {f!r} at {x!r}")
        if f > self.best_f:
            self.best_f = f
            self.best_x = x.copy()
        return f


def _run_once(
    ev: _Evaluator,
    x0: np.ndarray,
    step: np.ndarray,
    cfg: OptimizerConfig,
    trace: list[float] | None,
    eval_trace: list[int] | None,
) -> tuple[np.ndarray, np.ndarray, int, bool]:
    n = x0.size
    simplex = _initial_simplex(x0, step)
    fvals = np.array([ev(v) for v in simplex])

    iterations = 0
    converged = False
    while True:
        order = np.argsort(-fvals, kind="stable")
        simplex = simplex[order]
        fvals = fvals[order]

        if np.isfinite(fvals[-1]):
            fbest = fvals[0]
            fspread = fbest - fvals[-1]
            xspread = np.max(np.abs(simplex - simplex[0]))
            xscale = 1.0 + np.max(np.abs(simplex[0]))
            if fspread <= cfg.ftol * (abs(fbest) + cfg.ftol) and xspread <= cfg.xtol * xscale:
                converged = True
                break
        if iterations >= cfg.max_iters:
            break
        iterations += 1

        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]
        f_worst = fvals[-1]
        f_second = fvals[-2]

        xr = centroid + (centroid - worst)
        fr = ev(xr)
        if fr > fvals[0]:
            xe = centroid + 2.0 * (centroid - worst)
            fe = ev(xe)
            if fe > fr:
                simplex[-1], fvals[-1] = xe, fe
            else:
                simplex[-1], fvals[-1] = xr, fr
        elif fr > f_second:
            simplex[-1], fvals[-1] = xr, fr
        else:
            if fr > f_worst:
                xc = centroid + 0.5 * (centroid - worst)
                fc = ev(xc)
                accept = fc >= fr
            else:
                xc = centroid - 0.5 * (centroid - worst)
                fc = ev(xc)
                accept = fc > f_worst
            if accept:
                simplex[-1], fvals[-1] = xc, fc
            else:
                best = simplex[0]
                for i in range(1, n + 1):
                    simplex[i] = best + 0.5 * (simplex[i] - best)
                    fvals[i] = ev(simplex[i])

        if trace is not None:
            trace.append(ev.best_f)
            eval_trace.append(ev.count)  # type: ignore[union-attr]

    return simplex, fvals, iterations, converged


def nelder_mead(
    objective: Callable[[np.ndarray], float],
    x0: Sequence[float] | np.ndarray,
    config: OptimizerConfig | None = None,
) -> OptimizerResult:
    """Maximize ``objective`` from ``x0`` with the Nelder-Mead simplex.

    Uses the classic reflection/expansion/contraction/shrink coefficients
    (1, 2, 1/2, 1/2). The objective may return ``-inf`` to reject a point;
    such values rank worst and never enter any arithmetic. NaN (or +inf)
    output raises :class:`OptimizerError`, as does ``-inf`` at ``x0``.
    Deterministic: same objective, start and config give bit-identical runs.
    """
    cfg = config or OptimizerConfig()
    x0 = np.asarray(x0, dtype=float).ravel()
    if x0.size == 0:
        raise OptimizerError("empty parameter vector")
    step = np.broadcast_to(
        np.atleast_1d(np.asarray(cfg.init_step, dtype=float)), x0.shape
    ).astype(float)

    ev = _Evaluator(objective)
    f0 = ev(x0)
    if f0 == NEG_INF:
        raise OptimizerError("objective is -inf at the start point")

    trace: list[float] | None = [] if cfg.record_trace else None
    eval_trace: list[int] | None = [] if cfg.record_trace else None

    total_iters = 0
    restarts_used = 0
    x_start = x0
    cur_step = step.copy()
    converged = False
    for attempt in range(cfg.restarts + 1):
        simplex, fvals, iters, converged = _run_once(
            ev, x_start, cur_step, cfg, trace, eval_trace
        )
        total_iters += iters
        if converged:
            break
        if attempt < cfg.restarts:
            restarts_used += 1
            x_start = ev.best_x.copy()  # type: ignore[union-attr]
            cur_step = cur_step * 0.5

    assert ev.best_x is not None
    return OptimizerResult(
        x=ev.best_x,
        fval=ev.best_f,
        iterations=total_iters,
        evaluations=ev.count,
        converged=converged,
        trace=trace,
        eval_trace=eval_trace,
        final_simplex=simplex,
        final_fvals=fvals,
        restarts_used=restarts_used,
    )
