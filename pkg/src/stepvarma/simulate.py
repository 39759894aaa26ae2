"""Seeded generation of diagonal VARMA data with correlated innovations."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .matern import CorrelationBuilder
from .model import (
    AxiallySymmetric,
    DenseCorrelation,
    DiagonalVarmaModel,
    IsotropicMatern,
    SpaceTimeData,
)
from .spectral import modified_matern_mass, wavenumber_covariances

__all__ = ["SimulationDesign", "simulate", "default_burn_in"]


def default_burn_in(model: DiagonalVarmaModel) -> int:
    """50 * max(p, q) + 50: long enough to forget the zero initial state."""
    mx = max(max(sp.p, sp.q) for sp in model.arma)
    return 50 * mx + 50


@dataclass(frozen=True)
class SimulationDesign:
    """True model, sample length, burn-in, seed and recording flag.

    burn_in=None selects :func:`default_burn_in`. The generator is the
    counter-based Philox keyed by ``seed``, so output is bit-reproducible.
    """

    model: DiagonalVarmaModel
    T: int
    burn_in: int | None = None
    seed: int = 0
    record_innovations: bool = False

    def __post_init__(self):
        if self.T < 1:
            raise ValueError("T must be at least 1")
        if self.burn_in is not None and self.burn_in < 0:
            raise ValueError("burn_in must be non-negative")

    @property
    def effective_burn_in(self) -> int:
        return default_burn_in(self.model) if self.burn_in is None else self.burn_in


def _axial_innovations(inn: AxiallySymmetric, n_steps: int, rng) -> np.ndarray:
    """Draw N(0, R) grid innovations wavenumber by wavenumber.

    For each wavenumber the M-vector of ring DFT coefficients is an
    independent (complex for interior wavenumbers) Gaussian with covariance
    F(c); an inverse unitary DFT maps the draws back to longitude space.
    Equivalent in law to a dense Cholesky draw against the block-circulant
    correlation matrix.
    """
    n, m = inn.n_lon, inn.n_lat
    masses = [
        modified_matern_mass(a, k, n) for a, k in zip(inn.alpha_m, inn.kappa_m)
    ]
    fcov = wavenumber_covariances(masses, inn.xi, inn.tau, inn.latitudes)
    half = n // 2
    chols = np.linalg.cholesky(fcov[: half + 1])

    z = rng.standard_normal((n_steps, m, n))
    ut = np.zeros((n_steps, m, n), dtype=complex)
    ut[:, :, 0] = z[:, :, 0] @ chols[0].T
    for c in range(1, (n - 1) // 2 + 1):
        w = ((z[:, :, c] + 1j * z[:, :, n - c]) / np.sqrt(2.0)) @ chols[c].T
        ut[:, :, c] = w
        ut[:, :, n - c] = np.conj(w)
    if n % 2 == 0:
        ut[:, :, half] = z[:, :, half] @ chols[half].T
    u = np.real(np.fft.fft(ut, axis=-1)) / np.sqrt(n)
    return u.reshape(n_steps, m * n)


def _draw_innovations(model: DiagonalVarmaModel, n_steps: int, rng) -> np.ndarray:
    inn = model.innovation
    if isinstance(inn, AxiallySymmetric):
        return _axial_innovations(inn, n_steps, rng)
    if isinstance(inn, IsotropicMatern):
        chol = CorrelationBuilder(model.sites).factor(inn.alpha, inn.kappa).chol
    elif isinstance(inn, DenseCorrelation):
        chol = np.linalg.cholesky(inn.R)
    else:
        raise TypeError(f"unknown innovation model {type(inn).__name__}")
    z = rng.standard_normal((n_steps, model.n_sites))
    return z @ chol.T


def simulate(design: SimulationDesign, t0: int = 1):
    """Generate a seeded realization of the model.

    Iterates the VARMA recursion from a zero initial state through the
    burn-in, keeps the last T steps, and adds each site's mean and trend
    evaluated at times t0..t0+T-1. Returns SpaceTimeData, or a
    (SpaceTimeData, innovations) pair when the design records the unscaled
    innovation draws for the retained window.
    """
    model = design.model
    model.validate()
    burn = design.effective_burn_in
    n_steps = burn + design.T
    s = model.n_sites

    p_max = max(sp.p for sp in model.arma)
    q_max = max(sp.q for sp in model.arma)
    phi = np.zeros((p_max, s))
    pi_ma = np.zeros((q_max, s))
    for j, sp in enumerate(model.arma):
        phi[: sp.p, j] = sp.phi
        pi_ma[: sp.q, j] = sp.pi_ma
    sigma = np.array([sp.sigma for sp in model.arma])
    mu = np.array([sp.mu for sp in model.arma])
    beta1 = np.array([sp.beta1 for sp in model.arma])

    rng = np.random.Generator(np.random.Philox(design.seed))
    innov = _draw_innovations(model, n_steps, rng)

    x = np.zeros((n_steps, s))
    for t in range(n_steps):
        acc = innov[t].copy()
        for j in range(1, min(q_max, t) + 1):
            acc += pi_ma[j - 1] * innov[t - j]
        acc *= sigma
        for i in range(1, min(p_max, t) + 1):
            acc += phi[i - 1] * x[t - i]
        x[t] = acc

    times = t0 + np.arange(design.T, dtype=float)
    values = x[burn:] + mu[None, :] + beta1[None, :] * times[:, None]
    data = SpaceTimeData(values=values, sites=model.sites, t0=t0)
    if design.record_innovations:
        return data, innov[burn:]
    return data
