"""Model data types and the stepwise parameter-partition structure.

A diagonal VARMA model couples one univariate ARMA spec per site with a
cross-site innovation correlation model. Estimation proceeds over a
:class:`ParameterPartition`: an ordered list of steps, each owning a disjoint
block of "primary" parameters plus "nuisance" parameters estimated in earlier
steps. Steps that share a stage index can run in parallel because their
nuisance blocks are all settled by the preceding stages.

Parameter identifiers are structured strings (``site3.phi1``, ``lat2.alpha``,
``coherence.xi``) so partition checks reduce to set algebra.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

__all__ = [
    "ArmaSpec",
    "IsotropicMatern",
    "AxiallySymmetric",
    "DenseCorrelation",
    "InnovationModel",
    "DiagonalVarmaModel",
    "SpaceTimeData",
    "PartitionStep",
    "ParameterPartition",
    "ModelSkeleton",
    "MaternStructure",
    "AxialStructure",
    "DenseStructure",
    "FixedStructure",
    "PartitionError",
    "OverlapError",
    "CoverageError",
    "NuisanceOrderError",
    "StageError",
    "canonical_partition",
    "validate_partition",
]

MEAN_STRUCTURES = ("zero", "constant", "linear")


def _as_float_tuple(x) -> tuple[float, ...]:
    return tuple(float(v) for v in np.atleast_1d(np.asarray(x, dtype=float)))


def ar_root_moduli(phi: Sequence[float]) -> np.ndarray:
    """Moduli of the roots of 1 - phi_1 z - ... - phi_p z^p."""
    phi = np.asarray(phi, dtype=float)
    if phi.size == 0:
        return np.array([])
    coeffs = np.concatenate(([1.0], -phi))[::-1]
    return np.abs(np.roots(coeffs))


@dataclass(frozen=True)
class ArmaSpec:
    """Univariate ARMA(p, q) parameters for one site.

    mu is the process mean and beta1 a linear trend per time step (both in
    deviation form: the recursion acts on y_t - mu - beta1 * t). sigma scales
    the unit-variance innovations. Stationarity of phi is *not* enforced at
    construction so that likelihood code can probe invalid proposals and
    return a sentinel; call :meth:`is_stationary` or model validation for the
    hard check.
    """

    p: int
    q: int
    mu: float = 0.0
    beta1: float = 0.0
    sigma: float = 1.0
    phi: tuple[float, ...] = ()
    pi_ma: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "phi", _as_float_tuple(self.phi))
        object.__setattr__(self, "pi_ma", _as_float_tuple(self.pi_ma))
        if self.p < 0 or self.q < 0:
            raise ValueError("orders must be non-negative")
        if len(self.phi) != self.p:
            raise ValueError(f"phi has length {len(self.phi)}, expected p={self.p}")
        if len(self.pi_ma) != self.q:
            raise ValueError(f"pi_ma has length {len(self.pi_ma)}, expected q={self.q}")
        if not (self.sigma > 0.0 and np.isfinite(self.sigma)):
            raise ValueError("sigma must be a positive finite real")

    def is_stationary(self, margin: float = 0.0) -> bool:
        if self.p == 0:
            return True
        return bool(np.all(ar_root_moduli(self.phi) > 1.0 + margin))

    def mean_at(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return self.mu + self.beta1 * t


@dataclass(frozen=True)
class IsotropicMatern:
    """Isotropic Matern innovation correlation over site distances."""

    alpha: float
    kappa: float

    def __post_init__(self):
        if not (self.alpha > 0 and self.kappa > 0):
            raise ValueError("alpha and kappa must be positive")


@dataclass(frozen=True)
class AxiallySymmetric:
    """Innovations on a lon x lat grid, stationary around each latitude ring.

    Per-latitude spectral mass is a modified Matern in (alpha_m, kappa_m);
    coherence between latitudes decays as xi^|dL| with extra wavenumber decay
    rate tau. Sites are ordered latitude-major: index = m * n_lon + j.
    """

    alpha_m: tuple[float, ...]
    kappa_m: tuple[float, ...]
    xi: float
    tau: float
    n_lon: int
    latitudes: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "alpha_m", _as_float_tuple(self.alpha_m))
        object.__setattr__(self, "kappa_m", _as_float_tuple(self.kappa_m))
        object.__setattr__(self, "latitudes", _as_float_tuple(self.latitudes))
        m = len(self.latitudes)
        if not (len(self.alpha_m) == len(self.kappa_m) == m):
            raise ValueError("alpha_m, kappa_m and latitudes must share length M")
        if m < 1 or self.n_lon < 2:
            raise ValueError("need at least one latitude and two longitudes")
        if any(a <= 0 for a in self.alpha_m) or any(k <= 0 for k in self.kappa_m):
            raise ValueError("spectral scale/smoothness entries must be positive")
        if not (0.0 < self.xi < 1.0):
            raise ValueError("xi must lie in (0, 1)")
        if self.tau < 0:
            raise ValueError("tau must be non-negative")

    @property
    def n_lat(self) -> int:
        return len(self.latitudes)


@dataclass(frozen=True)
class DenseCorrelation:
    """Unstructured unit-diagonal correlation matrix."""

    R: np.ndarray

    def __post_init__(self):
        R = np.array(self.R, dtype=float)
        if R.ndim != 2 or R.shape[0] != R.shape[1]:
            raise ValueError("R must be square")
        if not np.allclose(R, R.T, atol=1e-12, rtol=0.0):
            raise ValueError("R must be symmetric")
        R = 0.5 * (R + R.T)
        if not np.allclose(np.diag(R), 1.0, atol=1e-12, rtol=0.0):
            raise ValueError("R must have unit diagonal")
        np.fill_diagonal(R, 1.0)
        try:
            np.linalg.cholesky(R)
        except np.linalg.LinAlgError as exc:
            raise ValueError("R is not positive definite") from exc
        R.setflags(write=False)
        object.__setattr__(self, "R", R)

    @property
    def n_sites(self) -> int:
        return self.R.shape[0]


InnovationModel = Union[IsotropicMatern, AxiallySymmetric, DenseCorrelation]


def grid_sites(n_lon: int, n_lat: int) -> tuple[tuple[float, float], ...]:
    """Latitude-major (lon index, lat index) site list for a full grid."""
    return tuple((float(j), float(m)) for m in range(n_lat) for j in range(n_lon))


@dataclass(frozen=True)
class DiagonalVarmaModel:
    """S sites, one ArmaSpec each, plus a cross-site innovation model."""

    sites: tuple[tuple[float, ...], ...]
    arma: tuple[ArmaSpec, ...]
    innovation: InnovationModel

    def __post_init__(self):
        sites = tuple(tuple(float(c) for c in np.atleast_1d(s)) for s in self.sites)
        object.__setattr__(self, "sites", sites)
        object.__setattr__(self, "arma", tuple(self.arma))

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    def validate(self) -> None:
        """Hard checks: dimensions line up and every site is stationary."""
        s = self.n_sites
        if s < 1:
            raise ValueError("need at least one site")
        if len(self.arma) != s:
            raise ValueError("one ArmaSpec required per site")
        inn = self.innovation
        if isinstance(inn, DenseCorrelation) and inn.n_sites != s:
            raise ValueError("dense correlation dimension does not match site count")
        if isinstance(inn, AxiallySymmetric):
            if s != inn.n_lon * inn.n_lat:
                raise ValueError("axially symmetric model needs S = n_lon * n_lat sites")
            if set(self.sites) != set(grid_sites(inn.n_lon, inn.n_lat)):
                raise ValueError("sites must form the full (lon, lat) index grid")
        for k, spec in enumerate(self.arma):
            if not spec.is_stationary():
                raise ValueError(f"site {k}: AR polynomial has a root inside the unit circle")

    def skeleton(self, mean_structure: str | None = None) -> "ModelSkeleton":
        """Structural view of this model (orders + innovation family).

        When mean_structure is None it is inferred from the values: "zero"
        if every site has mu == beta1 == 0, else "linear" if any beta1 is
        nonzero, else "constant".
        """
        if mean_structure is None:
            if all(sp.mu == 0.0 and sp.beta1 == 0.0 for sp in self.arma):
                mean_structure = "zero"
            elif any(sp.beta1 != 0.0 for sp in self.arma):
                mean_structure = "linear"
            else:
                mean_structure = "constant"
        inn = self.innovation
        structure: InnovationStructure
        if isinstance(inn, IsotropicMatern):
            structure = MaternStructure()
        elif isinstance(inn, AxiallySymmetric):
            structure = AxialStructure(n_lon=inn.n_lon, latitudes=inn.latitudes)
        else:
            structure = DenseStructure()
        return ModelSkeleton(
            sites=self.sites,
            p=tuple(sp.p for sp in self.arma),
            q=tuple(sp.q for sp in self.arma),
            mean_structure=mean_structure,
            innovation=structure,
        )


@dataclass(frozen=True)
class SpaceTimeData:
    """T x S data matrix with site coordinates and an integer time origin."""

    values: np.ndarray
    sites: tuple[tuple[float, ...], ...]
    t0: int = 1

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 2:
            raise ValueError("values must be a T x S matrix")
        if not np.all(np.isfinite(values)):
            raise ValueError("missing or non-finite values are not supported")
        sites = tuple(tuple(float(c) for c in np.atleast_1d(s)) for s in self.sites)
        if values.shape[1] != len(sites):
            raise ValueError("column count must match the number of sites")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "sites", sites)
        object.__setattr__(self, "t0", int(self.t0))

    @property
    def n_time(self) -> int:
        return self.values.shape[0]

    @property
    def n_sites(self) -> int:
        return self.values.shape[1]

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.n_time)


# ---------------------------------------------------------------------------
# Skeletons: which parameters are free, without committing to values.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MaternStructure:
    """Free isotropic Matern correlation (alpha, kappa)."""


@dataclass(frozen=True)
class AxialStructure:
    """Free per-latitude spectral masses plus a global coherence pair."""

    n_lon: int
    latitudes: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "latitudes", _as_float_tuple(self.latitudes))
        if self.n_lon < 2 or len(self.latitudes) < 1:
            raise ValueError("need n_lon >= 2 and at least one latitude")

    @property
    def n_lat(self) -> int:
        return len(self.latitudes)


@dataclass(frozen=True)
class DenseStructure:
    """Free unstructured correlation (one parameter per site pair)."""


@dataclass(frozen=True)
class FixedStructure:
    """Known innovation correlation; R=None means white (identity)."""

    R: np.ndarray | None = None

    def __post_init__(self):
        if self.R is not None:
            R = np.array(self.R, dtype=float)
            R.setflags(write=False)
            object.__setattr__(self, "R", R)


InnovationStructure = Union[MaternStructure, AxialStructure, DenseStructure, FixedStructure]


def temporal_param_names(site: int, p: int, q: int, mean_structure: str) -> tuple[str, ...]:
    if mean_structure not in MEAN_STRUCTURES:
        raise ValueError(f"unknown mean structure {mean_structure!r}")
    names: list[str] = []
    if mean_structure in ("constant", "linear"):
        names.append(f"site{site}.mu")
    if mean_structure == "linear":
        names.append(f"site{site}.beta1")
    names.append(f"site{site}.sigma")
    names.extend(f"site{site}.phi{i}" for i in range(1, p + 1))
    names.extend(f"site{site}.pi{j}" for j in range(1, q + 1))
    return tuple(names)


@dataclass(frozen=True)
class ModelSkeleton:
    """Free-parameter structure of a diagonal VARMA model.

    p and q may be a single order for all sites or a per-site sequence.
    """

    sites: tuple[tuple[float, ...], ...]
    p: int | tuple[int, ...]
    q: int | tuple[int, ...]
    mean_structure: str = "constant"
    innovation: InnovationStructure = field(default_factory=MaternStructure)

    def __post_init__(self):
        sites = tuple(tuple(float(c) for c in np.atleast_1d(s)) for s in self.sites)
        object.__setattr__(self, "sites", sites)
        s = len(sites)
        if s < 1:
            raise ValueError("need at least one site")
        for name in ("p", "q"):
            val = getattr(self, name)
            orders = tuple(int(v) for v in (val,) * s) if np.isscalar(val) else tuple(int(v) for v in val)
            if len(orders) != s:
                raise ValueError(f"{name} must be scalar or one order per site")
            if any(v < 0 for v in orders):
                raise ValueError("orders must be non-negative")
            object.__setattr__(self, name, orders)
        if self.mean_structure not in MEAN_STRUCTURES:
            raise ValueError(f"unknown mean structure {self.mean_structure!r}")
        if isinstance(self.innovation, AxialStructure):
            inn = self.innovation
            if s != inn.n_lon * inn.n_lat:
                raise ValueError("axial structure needs S = n_lon * n_lat sites")

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    def temporal_names(self, site: int) -> tuple[str, ...]:
        return temporal_param_names(site, self.p[site], self.q[site], self.mean_structure)

    def spatial_names(self) -> tuple[str, ...]:
        inn = self.innovation
        if isinstance(inn, MaternStructure):
            return ("spatial.alpha", "spatial.kappa")
        if isinstance(inn, DenseStructure):
            s = self.n_sites
            return tuple(f"spatial.corr[{i},{j}]" for i in range(s) for j in range(i + 1, s))
        if isinstance(inn, AxialStructure):
            names = []
            for m in range(inn.n_lat):
                names.extend((f"lat{m}.alpha", f"lat{m}.kappa"))
            names.extend(("coherence.xi", "coherence.tau"))
            return tuple(names)
        return ()

    def param_names(self) -> tuple[str, ...]:
        names: list[str] = []
        for s in range(self.n_sites):
            names.extend(self.temporal_names(s))
        names.extend(self.spatial_names())
        return tuple(names)

    def lat_site_indices(self, m: int) -> np.ndarray:
        """Site indices of latitude ring m (latitude-major grid ordering)."""
        inn = self.innovation
        if not isinstance(inn, AxialStructure):
            raise ValueError("not an axially symmetric skeleton")
        return m * inn.n_lon + np.arange(inn.n_lon)


# ---------------------------------------------------------------------------
# Partitions.
# ---------------------------------------------------------------------------


class PartitionError(ValueError):
    """A parameter partition violates the stepwise-estimation conditions."""


class OverlapError(PartitionError):
    """Primary parameter blocks are not disjoint."""


class CoverageError(PartitionError):
    """Primary blocks do not cover the model parameter set, or name unknowns."""


class NuisanceOrderError(PartitionError):
    """A nuisance set references parameters not owned by earlier steps."""


class StageError(PartitionError):
    """A stage's steps need parameters not settled by strictly earlier stages."""


@dataclass(frozen=True)
class PartitionStep:
    """One estimation step: primary block, nuisance block, data subset, stage."""

    theta: tuple[str, ...]
    eta: tuple[str, ...]
    data_subset: str
    stage: int

    def __post_init__(self):
        object.__setattr__(self, "theta", tuple(self.theta))
        object.__setattr__(self, "eta", tuple(self.eta))


@dataclass(frozen=True)
class ParameterPartition:
    steps: tuple[PartitionStep, ...]

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))

    @property
    def n_steps(self) -> int:
        return len(self.steps)


def _skeleton_of(model) -> ModelSkeleton:
    if isinstance(model, ModelSkeleton):
        return model
    if isinstance(model, DiagonalVarmaModel):
        return model.skeleton()
    raise TypeError("expected a DiagonalVarmaModel or ModelSkeleton")


def canonical_partition(model: DiagonalVarmaModel | ModelSkeleton) -> ParameterPartition:
    """The natural partition: one step per site, then the spatial step(s).

    Isotropic-Matern and dense innovations get a single joint spatial step;
    axially symmetric innovations get one spectral step per latitude followed
    by a coherence step, giving three stages in total. Fixed innovations
    contribute no step. A single-step result is admitted with a warning since
    the stepwise structure is then degenerate.
    """
    sk = _skeleton_of(model)
    steps: list[PartitionStep] = []
    temporal: list[str] = []
    for s in range(sk.n_sites):
        names = sk.temporal_names(s)
        temporal.extend(names)
        steps.append(PartitionStep(theta=names, eta=(), data_subset=f"site:{s}", stage=0))

    inn = sk.innovation
    if isinstance(inn, (MaternStructure, DenseStructure)):
        spatial = sk.spatial_names()
        if spatial:
            steps.append(
                PartitionStep(theta=spatial, eta=tuple(temporal), data_subset="all", stage=1)
            )
    elif isinstance(inn, AxialStructure):
        lat_names: list[str] = []
        for m in range(inn.n_lat):
            theta = (f"lat{m}.alpha", f"lat{m}.kappa")
            lat_names.extend(theta)
            eta = tuple(
                name
                for s in sk.lat_site_indices(m)
                for name in sk.temporal_names(int(s))
            )
            steps.append(PartitionStep(theta=theta, eta=eta, data_subset=f"lat:{m}", stage=1))
        steps.append(
            PartitionStep(
                theta=("coherence.xi", "coherence.tau"),
                eta=tuple(temporal) + tuple(lat_names),
                data_subset="all",
                stage=2,
            )
        )

    if len(steps) == 1:
        warnings.warn(
            "single-step partition: the stepwise structure is degenerate (K = 1)",
            UserWarning,
            stacklevel=2,
        )
    return ParameterPartition(steps=tuple(steps))


def validate_partition(
    partition: ParameterPartition,
    model: DiagonalVarmaModel | ModelSkeleton | Iterable[str],
) -> list[list[int]]:
    """Check partition invariants against the model's named parameters.

    Returns the stage schedule: stages in increasing stage order, each a list
    of step indices runnable in parallel. Raises a :class:`PartitionError`
    subclass naming the first violated condition.
    """
    if isinstance(model, (DiagonalVarmaModel, ModelSkeleton)):
        full = set(_skeleton_of(model).param_names())
    else:
        full = set(model)

    steps = partition.steps
    if not steps:
        raise CoverageError("partition has no steps")

    seen: set[str] = set()
    for k, step in enumerate(steps):
        theta = set(step.theta)
        if not theta:
            raise CoverageError(f"step {k}: empty primary parameter block")
        unknown = theta - full
        if unknown:
            raise CoverageError(f"step {k}: unknown parameters {sorted(unknown)}")
        clash = theta & seen
        if clash:
            raise OverlapError(f"step {k}: parameters {sorted(clash)} already owned by an earlier step")
        bad_eta = set(step.eta) - seen
        if bad_eta:
            raise NuisanceOrderError(
                f"step {k}: nuisance parameters {sorted(bad_eta)} are not owned by earlier steps"
            )
        seen |= theta

    uncovered = full - seen
    if uncovered:
        raise CoverageError(f"parameters not assigned to any step: {sorted(uncovered)}")

    stages = sorted({step.stage for step in steps})
    available: set[str] = set()
    schedule: list[list[int]] = []
    for stage in stages:
        idx = [k for k, step in enumerate(steps) if step.stage == stage]
        for k in idx:
            missing = set(steps[k].eta) - available
            if missing:
                raise StageError(
                    f"step {k} in stage {stage}: nuisance parameters {sorted(missing)} "
                    "are not settled by strictly earlier stages"
                )
        for k in idx:
            available |= set(steps[k].theta)
        schedule.append(idx)

    if len(steps) == 1:
        warnings.warn(
            "single-step partition: the stepwise structure is degenerate (K = 1)",
            UserWarning,
            stacklevel=2,
        )
    return schedule
