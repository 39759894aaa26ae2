"""Benchmark experiments: estimate-recovery tables, timing, consistency
curves, and the three-stage grid fit on synthetic data.

Every experiment is deterministic given (config, seed): replicate r uses a
seed derived from SeedSequence((seed, r)), so thread counts and execution
order never change the numbers, only the wall times.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Iterable

import numpy as np

from .estimate import EstimationConfig, FitReport, mle_fit, params_from_model, smle_fit
from .model import (
    ArmaSpec,
    AxiallySymmetric,
    DiagonalVarmaModel,
    IsotropicMatern,
    grid_sites,
)
from .optimize import OptimizerConfig
from .simulate import SimulationDesign, simulate
from .spectral import (
    cross_spectral_mass,
    mean_periodogram,
    modified_matern_mass,
    unitary_dft,
)

__all__ = [
    "ExperimentConfig",
    "line_design_model",
    "grid_design_model",
    "replicate_seed",
    "run_methods",
    "write_table1",
    "write_timing",
    "run_mse_curves",
    "run_grid_fit",
]

TEMPORAL_KEYS = ("sigma", "phi1", "phi2")
SPATIAL_KEYS = ("alpha", "kappa")


@dataclass(frozen=True)
class ExperimentConfig:
    """All experiment knobs, JSON-overridable from the command line.

    The line-design fields reproduce the small simulation study; the grid
    fields drive the synthetic three-stage fit. Replicate counts must be
    positive; a zero-replicate request is a configuration error, not an
    empty result.
    """

    out_dir: str = "out"
    seed: int = 20260810
    threads: int | None = None
    serial: bool = False

    # line design (estimate-recovery table and timing)
    T: int = 50
    S: int = 20
    sigma: float = 1.2
    phi1: float = 0.50
    phi2: float = 0.25
    alpha: float = 0.3
    kappa: float = 1.5
    replicates: int = 30
    methods: tuple[str, ...] = ("smle", "fixed_mle", "full_mle")
    full_mle_replicates: int = 3
    full_mle_max_iters: int = 150_000
    fixed_mle_max_iters: int = 40_000

    # consistency curves
    t_grid: tuple[int, ...] = (20, 40, 60, 80, 100)
    s_grid: tuple[int, ...] = (10, 20, 30, 45)
    mse_t_fixed: int = 100
    mse_s_fixed: int = 20

    # synthetic grid fit
    n_lon: int = 48
    n_lat: int = 24
    grid_T: int = 95
    xi: float = 0.9
    tau: float = 0.3

    def __post_init__(self):
        if self.replicates < 1:
            raise ValueError("replicate count must be at least 1")
        if self.full_mle_replicates < 1:
            raise ValueError("full_mle_replicates must be at least 1")
        if not self.t_grid or not self.s_grid:
            raise ValueError("consistency grids must be non-empty")
        unknown = set(self.methods) - {"smle", "fixed_mle", "full_mle"}
        if unknown:
            raise ValueError(f"unknown methods: {sorted(unknown)}")

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        d = dict(d)
        for key in ("methods", "t_grid", "s_grid"):
            if key in d and d[key] is not None:
                d[key] = tuple(d[key])
        return cls(**d)

    def estimation_config(self, max_iters: int | None = None) -> EstimationConfig:
        opt = OptimizerConfig() if max_iters is None else OptimizerConfig(max_iters=max_iters, restarts=0)
        return EstimationConfig(optimizer=opt, threads=self.threads, serial=self.serial)


def replicate_seed(seed: int, rep: int) -> int:
    return int(np.random.SeedSequence((seed, rep)).generate_state(1)[0])


def line_design_model(cfg: ExperimentConfig, T: int | None = None, S: int | None = None) -> DiagonalVarmaModel:
    """Centered diagonal VAR(2) on a regular unit-spaced line of sites."""
    s = cfg.S if S is None else S
    spec = ArmaSpec(p=2, q=0, sigma=cfg.sigma, phi=(cfg.phi1, cfg.phi2))
    return DiagonalVarmaModel(
        sites=tuple((float(i),) for i in range(s)),
        arma=(spec,) * s,
        innovation=IsotropicMatern(alpha=cfg.alpha, kappa=cfg.kappa),
    )


# ---------------------------------------------------------------------------
# Recovery table and timing (line design).
# ---------------------------------------------------------------------------


@dataclass
class MethodRun:
    method: str
    reports: list[FitReport | None]
    errors: list[str | None]

    def ok_reports(self) -> list[FitReport]:
        return [r for r in self.reports if r is not None]


@dataclass
class LineStudy:
    config: ExperimentConfig
    runs: dict[str, MethodRun]

    def site_averaged(self, method: str, key: str) -> np.ndarray:
        """Per-replicate site averages of a temporal parameter."""
        out = []
        for rpt in self.runs[method].ok_reports():
            if key in SPATIAL_KEYS:
                out.append(rpt.estimates[f"spatial.{key}"])
            else:
                vals = [
                    rpt.estimates[f"site{s}.{key}"]
                    for s in range(self.config.S)
                    if f"site{s}.{key}" in rpt.estimates
                ]
                out.append(float(np.mean(vals)) if vals else float("nan"))
        return np.asarray(out)

    def pooled(self, method: str, key: str) -> np.ndarray:
        """Per-site estimates pooled over replicates (temporal parameters)."""
        out: list[float] = []
        for rpt in self.runs[method].ok_reports():
            if key in SPATIAL_KEYS:
                out.append(rpt.estimates[f"spatial.{key}"])
            else:
                out.extend(
                    rpt.estimates[f"site{s}.{key}"]
                    for s in range(self.config.S)
                    if f"site{s}.{key}" in rpt.estimates
                )
        return np.asarray(out)


def run_methods(cfg: ExperimentConfig) -> LineStudy:
    """Simulate replicates of the line design and fit with each method.

    All methods see the same simulated data per replicate. The joint MLE
    runs are initialized at the true parameter values (a 62-dimensional
    simplex search from an arbitrary point would measure starting-point
    quality, not the estimator); the stepwise fit initializes from data
    moments like any real use would.
    """
    model = line_design_model(cfg)
    skeleton = model.skeleton()
    truth = params_from_model(model)

    runs: dict[str, MethodRun] = {
        m: MethodRun(method=m, reports=[], errors=[]) for m in cfg.methods
    }
    smle_cfg = cfg.estimation_config()
    fixed_cfg = cfg.estimation_config(cfg.fixed_mle_max_iters)
    full_cfg = cfg.estimation_config(cfg.full_mle_max_iters)

    for rep in range(cfg.replicates):
        data = simulate(
            SimulationDesign(model=model, T=cfg.T, seed=replicate_seed(cfg.seed, rep))
        )
        for method in cfg.methods:
            if method == "full_mle" and rep >= cfg.full_mle_replicates:
                continue
            try:
                if method == "smle":
                    rpt = smle_fit(data, skeleton, config=smle_cfg)
                elif method == "fixed_mle":
                    rpt = mle_fit(
                        data, skeleton, mode="fixed_sigma", config=fixed_cfg,
                        init=truth, fixed_sigma=cfg.sigma,
                    )
                else:
                    rpt = mle_fit(data, skeleton, mode="full", config=full_cfg, init=truth)
                runs[method].reports.append(rpt)
                runs[method].errors.append(None)
            except Exception as exc:  # recorded per row, never fatal
                runs[method].reports.append(None)
                runs[method].errors.append(f"{type(exc).__name__}: {exc}")
    return LineStudy(config=cfg, runs=runs)


def _mean_sd(values: np.ndarray) -> tuple[float, float]:
    values = values[np.isfinite(values)]
    if values.size == 0:
        return float("nan"), float("nan")
    sd = float(values.std(ddof=1)) if values.size > 1 else float("nan")
    return float(values.mean()), sd


def write_table1(study: LineStudy, out_dir: Path) -> dict[str, dict[str, float]]:
    """Recovery table in the row-per-method layout, plus per-replicate rows.

    Temporal parameters are summarized over per-site estimates pooled across
    replicates; the two spatial parameters over replicates. The fixed-sigma
    method reports no sigma column.
    """
    cfg = study.config
    out_dir.mkdir(parents=True, exist_ok=True)
    summary: dict[str, dict[str, float]] = {}
    keys = TEMPORAL_KEYS + SPATIAL_KEYS
    with open(out_dir / "table1.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["method"]
        for key in keys:
            header += [f"{key}_mean", f"{key}_sd"]
        writer.writerow(header + ["replicates_ok", "replicates_failed"])
        for method in cfg.methods:
            run = study.runs[method]
            row: list = [method]
            summary[method] = {}
            for key in keys:
                if method == "fixed_mle" and key == "sigma":
                    row += ["NA", "NA"]
                    continue
                mean, sd = _mean_sd(study.pooled(method, key))
                summary[method][key] = mean
                summary[method][f"{key}_sd"] = sd
                row += [f"{mean:.6g}", f"{sd:.6g}" if math.isfinite(sd) else "NA"]
            n_ok = len(run.ok_reports())
            writer.writerow(row + [n_ok, len(run.reports) - n_ok])
        truth_row = ["true_values"]
        for key, val in zip(keys, (cfg.sigma, cfg.phi1, cfg.phi2, cfg.alpha, cfg.kappa)):
            truth_row += [f"{val:.6g}", ""]
        writer.writerow(truth_row + ["", ""])

    with open(out_dir / "table1_replicates.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "replicate", *keys, "error"])
        for method in cfg.methods:
            run = study.runs[method]
            for rep, (rpt, err) in enumerate(zip(run.reports, run.errors)):
                if rpt is None:
                    writer.writerow([method, rep, *([""] * len(keys)), err])
                    continue
                vals = []
                for key in keys:
                    if key in SPATIAL_KEYS:
                        vals.append(f"{rpt.estimates[f'spatial.{key}']:.8g}")
                    else:
                        site_vals = [
                            rpt.estimates[f"site{s}.{key}"]
                            for s in range(cfg.S)
                            if f"site{s}.{key}" in rpt.estimates
                        ]
                        vals.append(f"{np.mean(site_vals):.8g}" if site_vals else "NA")
                writer.writerow([method, rep, *vals, ""])
    return summary


def smle_iteration_split(rpt: FitReport) -> tuple[float, float, float]:
    """(mean stage-1 iterations per site fit, stage-2 iterations, total)."""
    st1 = [st.iterations for st in rpt.per_step if st.stage == 0]
    st2 = [st.iterations for st in rpt.per_step if st.stage > 0]
    a = float(np.mean(st1)) if st1 else 0.0
    b = float(np.sum(st2)) if st2 else 0.0
    return a, b, a + b


def write_timing(study: LineStudy, out_dir: Path) -> dict[str, dict[str, float]]:
    """Per-method wall times and iteration counts, stage-split for SMLE."""
    out_dir.mkdir(parents=True, exist_ok=True)
    rows: list[list] = []
    summary: dict[str, dict[str, float]] = {}

    def add(method: str, segment: str, times: Iterable[float], iters: Iterable[float]):
        t_mean, t_sd = _mean_sd(np.asarray(list(times), dtype=float))
        i_mean, i_sd = _mean_sd(np.asarray(list(iters), dtype=float))
        rows.append(
            [method, segment, f"{t_mean:.6g}", f"{t_sd:.6g}", f"{i_mean:.6g}", f"{i_sd:.6g}"]
        )
        summary[f"{method}.{segment}.time"] = t_mean
        summary[f"{method}.{segment}.iterations"] = i_mean

    for method in study.config.methods:
        reports = study.runs[method].ok_reports()
        if not reports:
            continue
        if method == "smle":
            splits = [smle_iteration_split(r) for r in reports]
            add(
                "smle", "step1",
                [r.stage_wall_seconds[0] for r in reports],
                [s[0] for s in splits],
            )
            add(
                "smle", "step2",
                [sum(r.stage_wall_seconds[1:]) for r in reports],
                [s[1] for s in splits],
            )
            add(
                "smle", "total",
                [r.total_wall_seconds for r in reports],
                [s[2] for s in splits],
            )
        else:
            add(
                method, "total",
                [r.total_wall_seconds for r in reports],
                [r.per_step[0].iterations for r in reports],
            )

    with open(out_dir / "timing.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "segment", "time_mean_s", "time_sd_s", "iters_mean", "iters_sd"])
        writer.writerows(rows)
    return summary


# ---------------------------------------------------------------------------
# Consistency curves.
# ---------------------------------------------------------------------------


def _smle_spatial_estimates(cfg: ExperimentConfig, T: int, S: int) -> np.ndarray:
    """(replicates, 2) array of (alpha, kappa) SMLE estimates."""
    model = line_design_model(cfg, S=S)
    skeleton = model.skeleton()
    est_cfg = cfg.estimation_config()
    out = np.empty((cfg.replicates, 2))
    for rep in range(cfg.replicates):
        data = simulate(
            SimulationDesign(model=model, T=T, seed=replicate_seed(cfg.seed, rep))
        )
        rpt = smle_fit(data, skeleton, config=est_cfg)
        out[rep, 0] = rpt.estimates["spatial.alpha"]
        out[rep, 1] = rpt.estimates["spatial.kappa"]
    return out


def run_mse_curves(cfg: ExperimentConfig, out_dir: Path, make_plots: bool = True) -> list[dict]:
    """Bias^2, variance and MSE of the spatial estimates along T and S grids.

    Variance is the population variance so MSE = bias^2 + variance exactly.
    Writes one CSV row per grid point and a two-panel plot per sweep axis.
    """
    out_dir.mkdir(parents=True, exist_ok=True)
    rows: list[dict] = []
    sweeps = [("T", cfg.t_grid, cfg.mse_s_fixed), ("S", cfg.s_grid, cfg.mse_t_fixed)]
    for axis, grid, fixed in sweeps:
        for value in grid:
            T, S = (value, fixed) if axis == "T" else (fixed, value)
            est = _smle_spatial_estimates(cfg, T=T, S=S)
            row: dict = {"axis": axis, "value": value, "T": T, "S": S, "replicates": cfg.replicates}
            for j, (key, truth) in enumerate(zip(SPATIAL_KEYS, (cfg.alpha, cfg.kappa))):
                bias2 = float((est[:, j].mean() - truth) ** 2)
                var = float(est[:, j].var())
                row[f"{key}_bias2"] = bias2
                row[f"{key}_var"] = var
                row[f"{key}_mse"] = bias2 + var
            rows.append(row)

    with open(out_dir / "mse_curves.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)

    if make_plots:
        _plot_mse(rows, out_dir)
    return rows


def _plot_mse(rows: list[dict], out_dir: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    for axis in ("T", "S"):
        sub = [r for r in rows if r["axis"] == axis]
        xs = [r["value"] for r in sub]
        fig, axes = plt.subplots(1, 2, figsize=(9, 3.4), sharex=True)
        for ax, key in zip(axes, SPATIAL_KEYS):
            ax.plot(xs, [r[f"{key}_bias2"] for r in sub], "o-", label="bias$^2$")
            ax.plot(xs, [r[f"{key}_var"] for r in sub], "s-", label="variance")
            ax.plot(xs, [r[f"{key}_mse"] for r in sub], "^-", label="MSE")
            ax.set_xlabel(axis)
            ax.set_title(key)
            ax.set_yscale("log")
        axes[0].legend(frameon=False, fontsize=8)
        fig.tight_layout()
        fig.savefig(out_dir / f"mse_{axis}.png", dpi=130)
        plt.close(fig)


# ---------------------------------------------------------------------------
# Synthetic three-stage grid fit.
# ---------------------------------------------------------------------------


def grid_design_model(cfg: ExperimentConfig) -> DiagonalVarmaModel:
    """Synthetic lon x lat truth with smooth latitude profiles and trends."""
    n, m = cfg.n_lon, cfg.n_lat
    lats = np.arange(m, dtype=float)
    frac = lats / max(m - 1, 1)
    alpha_m = 0.35 + 0.4 * np.sin(np.pi * frac) ** 2
    kappa_m = 0.7 + 0.8 * np.sin(0.5 * np.pi * frac) ** 2

    specs = []
    for mi in range(m):
        for j in range(n):
            lam = 2.0 * np.pi * j / n
            fr = frac[mi]
            specs.append(
                ArmaSpec(
                    p=2,
                    q=0,
                    mu=10.0 + 5.0 * np.sin(np.pi * fr) + 2.0 * np.cos(lam),
                    beta1=0.02 + 0.08 * np.sin(np.pi * fr) + 0.05 * np.cos(lam),
                    sigma=0.9 + 0.3 * np.sin(np.pi * fr),
                    phi=(0.35 + 0.2 * np.sin(np.pi * fr), 0.15 + 0.05 * np.cos(lam)),
                )
            )
    innovation = AxiallySymmetric(
        alpha_m=tuple(alpha_m),
        kappa_m=tuple(kappa_m),
        xi=cfg.xi,
        tau=cfg.tau,
        n_lon=n,
        latitudes=tuple(lats),
    )
    return DiagonalVarmaModel(sites=grid_sites(n, m), arma=tuple(specs), innovation=innovation)


def run_grid_fit(cfg: ExperimentConfig, out_dir: Path, make_plots: bool = True) -> dict:
    """Simulate the synthetic grid and run the three-stage fit.

    Writes per-cell parameter maps, per-latitude spectral estimates, the
    global coherence pair, stage wall times in the stage/params/data layout,
    and periodogram overlays at four evenly spaced latitudes. Returns a
    summary with recovery diagnostics for the test suite.
    """
    out_dir.mkdir(parents=True, exist_ok=True)
    model = grid_design_model(cfg)
    skeleton = model.skeleton("linear")
    n, m = cfg.n_lon, cfg.n_lat

    data = simulate(SimulationDesign(model=model, T=cfg.grid_T, seed=replicate_seed(cfg.seed, 0)))
    rpt = smle_fit(data, skeleton, config=cfg.estimation_config())
    if not rpt.ok:
        bad = rpt.step_errors()
        raise RuntimeError(f"{len(bad)} steps failed; first: {bad[0].error}")

    est = rpt.estimates
    cell_keys = ("mu", "beta1", "sigma", "phi1")
    with open(out_dir / "grid_cell_maps.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["lon", "lat"]
        for key in cell_keys:
            header += [f"{key}_hat", f"{key}_true"]
        writer.writerow(header)
        for mi in range(m):
            for j in range(n):
                s = mi * n + j
                sp = model.arma[s]
                truth = {"mu": sp.mu, "beta1": sp.beta1, "sigma": sp.sigma, "phi1": sp.phi[0]}
                row = [j, mi]
                for key in cell_keys:
                    row += [f"{est[f'site{s}.{key}']:.8g}", f"{truth[key]:.8g}"]
                writer.writerow(row)

    inn = model.innovation
    with open(out_dir / "grid_latitude_params.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lat", "alpha_hat", "kappa_hat", "alpha_true", "kappa_true"])
        for mi in range(m):
            writer.writerow(
                [
                    mi,
                    f"{est[f'lat{mi}.alpha']:.8g}",
                    f"{est[f'lat{mi}.kappa']:.8g}",
                    f"{inn.alpha_m[mi]:.8g}",
                    f"{inn.kappa_m[mi]:.8g}",
                ]
            )

    with open(out_dir / "grid_global_params.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["param", "estimate", "true"])
        writer.writerow(["xi", f"{est['coherence.xi']:.8g}", f"{inn.xi:.8g}"])
        writer.writerow(["tau", f"{est['coherence.tau']:.8g}", f"{inn.tau:.8g}"])

    stage_names = ("Temporal", "Longitudinal", "Latitudinal")
    stage_params = (5, 2, 2)
    tp = cfg.grid_T - 2
    stage_data = (cfg.grid_T, tp * n, tp * n * m)
    with open(out_dir / "grid_stage_times.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["stage", "time_s", "params_per_marginal_model", "data_per_marginal_model"])
        for name, wall, npar, ndat in zip(
            stage_names, rpt.stage_wall_seconds, stage_params, stage_data
        ):
            writer.writerow([name, f"{wall:.4g}", npar, ndat])

    # periodogram and cross-periodogram dumps at four evenly spaced latitudes
    chosen = sorted(set(int(round(v)) for v in np.linspace(0, m - 1, 4)))
    from .estimate import residual_matrix, specs_from_params

    u = residual_matrix(data, specs_from_params(skeleton, est))
    spectra_rows: list[list] = []
    cross_rows: list[list] = []
    overlays = []
    for mi in chosen:
        rings = u[:, mi * n : (mi + 1) * n]
        pgram = mean_periodogram(rings)
        mass = modified_matern_mass(est[f"lat{mi}.alpha"], est[f"lat{mi}.kappa"], n)
        overlays.append((mi, pgram, mass.values))
        for c in range(n):
            spectra_rows.append([mi, c, f"{pgram[c]:.8g}", f"{mass.values[c]:.8g}"])
        m2 = min(mi + 1, m - 1)
        if m2 == mi:
            continue
        rings2 = u[:, m2 * n : (m2 + 1) * n]
        f1 = unitary_dft(rings)
        f2 = unitary_dft(rings2)
        cross_pgram = np.mean(np.real(f1 * np.conj(f2)), axis=0)
        mass2 = modified_matern_mass(est[f"lat{m2}.alpha"], est[f"lat{m2}.kappa"], n)
        fitted = cross_spectral_mass(
            mass, mass2, est["coherence.xi"], est["coherence.tau"],
            abs(inn.latitudes[mi] - inn.latitudes[m2]),
        )
        for c in range(n):
            cross_rows.append([mi, m2, c, f"{cross_pgram[c]:.8g}", f"{fitted[c]:.8g}"])

    with open(out_dir / "periodograms.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lat", "wavenumber", "periodogram", "fitted_mass"])
        writer.writerows(spectra_rows)
    with open(out_dir / "cross_periodograms.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lat1", "lat2", "wavenumber", "cross_periodogram", "fitted_cross_mass"])
        writer.writerows(cross_rows)

    if make_plots:
        _plot_grid(cfg, model, est, overlays, cross_rows, out_dir)

    alpha_hat = np.array([est[f"lat{mi}.alpha"] for mi in range(m)])
    kappa_hat = np.array([est[f"lat{mi}.kappa"] for mi in range(m)])
    kappa_rel_err = np.abs(kappa_hat - np.asarray(inn.kappa_m)) / np.asarray(inn.kappa_m)
    beta1_hat = np.array([est[f"site{s}.beta1"] for s in range(n * m)])
    beta1_true = np.array([sp.beta1 for sp in model.arma])
    beta1_corr = float(np.corrcoef(beta1_hat, beta1_true)[0, 1])
    return {
        "report": rpt,
        "stage_wall_seconds": list(rpt.stage_wall_seconds),
        "kappa_rel_err": kappa_rel_err,
        "alpha_hat": alpha_hat,
        "kappa_hat": kappa_hat,
        "xi_hat": est["coherence.xi"],
        "tau_hat": est["coherence.tau"],
        "beta1_corr": beta1_corr,
        "chosen_latitudes": chosen,
    }


def _plot_grid(cfg, model, est, overlays, cross_rows, out_dir: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    n, m = cfg.n_lon, cfg.n_lat
    cell_keys = ("mu", "beta1", "sigma", "phi1")
    fig, axes = plt.subplots(2, 2, figsize=(9, 6))
    for ax, key in zip(axes.ravel(), cell_keys):
        img = np.array(
            [[est[f"site{mi * n + j}.{key}"] for j in range(n)] for mi in range(m)]
        )
        pc = ax.imshow(img, origin="lower", aspect="auto")
        ax.set_title(f"{key} estimate")
        ax.set_xlabel("lon index")
        ax.set_ylabel("lat index")
        fig.colorbar(pc, ax=ax, shrink=0.85)
    fig.tight_layout()
    fig.savefig(out_dir / "grid_maps.png", dpi=130)
    plt.close(fig)

    fig, axes = plt.subplots(1, len(overlays), figsize=(3.2 * len(overlays), 3.0), sharey=True)
    for ax, (mi, pgram, fitted) in zip(np.atleast_1d(axes), overlays):
        ax.semilogy(pgram, color="tab:blue", lw=1, label="periodogram")
        ax.semilogy(fitted, color="tab:red", lw=1.6, label="fitted mass")
        ax.set_title(f"latitude {mi}")
        ax.set_xlabel("wavenumber")
    np.atleast_1d(axes)[0].legend(frameon=False, fontsize=8)
    fig.tight_layout()
    fig.savefig(out_dir / "grid_spectra.png", dpi=130)
    plt.close(fig)

    pairs = sorted({(r[0], r[1]) for r in cross_rows})
    if pairs:
        fig, axes = plt.subplots(1, len(pairs), figsize=(3.2 * len(pairs), 3.0))
        for ax, (m1, m2) in zip(np.atleast_1d(axes), pairs):
            sub = [r for r in cross_rows if (r[0], r[1]) == (m1, m2)]
            ax.plot([float(r[3]) for r in sub], color="tab:blue", lw=1, label="cross-periodogram")
            ax.plot([float(r[4]) for r in sub], color="tab:red", lw=1.6, label="fitted cross mass")
            ax.set_title(f"latitudes {m1},{m2}")
            ax.set_xlabel("wavenumber")
        np.atleast_1d(axes)[0].legend(frameon=False, fontsize=8)
        fig.tight_layout()
        fig.savefig(out_dir / "grid_cross_spectra.png", dpi=130)
        plt.close(fig)
