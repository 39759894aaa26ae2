"""Stepwise maximum-likelihood fitting of spatio-temporal diagonal VARMA models.

The model couples an independent univariate ARMA per site with a cross-site
innovation correlation (isotropic Matern over distances, an axially symmetric
spectral model on lon/lat grids, or an unstructured matrix). Because the
AR/MA coefficient matrices are diagonal, each site's marginal is a plain
ARMA, and the full parameter set splits into blocks that can be estimated in
stages: temporal per site, then spatial, with per-stage parallelism.
"""

from .arma import (
    ArmaFit,
    arma_autocovariance,
    arma_conditional_loglik,
    arma_loglik,
    arma_residuals,
    fit_arma,
    ljung_box,
    select_arma_order,
)
from .estimate import (
    EstimationConfig,
    EstimationError,
    FitReport,
    StepReport,
    joint_conditional_loglik,
    mle_fit,
    params_from_model,
    residual_matrix,
    smle_fit,
    specs_from_params,
)
from .matern import (
    CholeskyError,
    CorrelationBuilder,
    CorrelationMatrixFactor,
    MaternFit,
    build_correlation,
    fit_innovation_matern,
    innovation_loglik,
    matern_correlation,
)
from .model import (
    ArmaSpec,
    AxiallySymmetric,
    AxialStructure,
    CoverageError,
    DenseCorrelation,
    DenseStructure,
    DiagonalVarmaModel,
    FixedStructure,
    IsotropicMatern,
    MaternStructure,
    ModelSkeleton,
    NuisanceOrderError,
    OverlapError,
    ParameterPartition,
    PartitionError,
    PartitionStep,
    SpaceTimeData,
    StageError,
    canonical_partition,
    grid_sites,
    validate_partition,
)
from .optimize import OptimizerConfig, OptimizerError, OptimizerResult, nelder_mead
from .simulate import SimulationDesign, default_burn_in, simulate
from .spectral import (
    CoherenceFit,
    RingSpectrum,
    SpectralMass,
    SpectralModelError,
    WhittleFit,
    axial_dense_correlation,
    coherence,
    coherence_loglik,
    cross_spectral_mass,
    fit_coherence,
    fit_whittle,
    mean_periodogram,
    modified_matern_mass,
    unitary_dft,
    wavenumber_covariances,
    whittle_loglik,
)

__version__ = "0.1.0"
