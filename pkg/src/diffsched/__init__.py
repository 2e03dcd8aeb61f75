"""Spectral transfer functions of discrete diffusion samplers and
noise-schedule optimization for Gaussian targets."""

__version__ = "0.1.0"

from .spectral import (
    DEFAULT_EPS0,
    DEFAULT_EPSS,
    GaussianDiag,
    Schedule,
    SpectralModel,
    Transfer,
    VeSchedule,
    ddim_gains,
    ddim_transfer,
    ddpm_transfer,
    intermediate_distribution,
    mean_bias,
    output_distribution,
    ve_ddim_transfer,
    ve_to_vp,
    vp_to_ve,
    wiener_denoise,
)
from .schedules import (
    cosine_schedule,
    edm_schedule,
    fit_parametric,
    linear_schedule,
    sigmoid_schedule,
    warm_start_interpolate,
)
from .losses import (
    LAMBDA_FLOOR,
    LossKind,
    kl_loss,
    loss_gradient,
    w2_loss,
    weighted_l1_loss,
)
from .optimize import (
    OptimizeConfig,
    OptimizeReport,
    isotonic_project,
    optimize_schedule,
    single_eigenvalue_problem,
)
from .simulate import (
    DenseGaussian,
    SimConfig,
    empirical_moments,
    relative_error_dynamics,
    simulate_reverse,
    w2_dynamics,
)
from .estimate import (
    CovarianceEstimate,
    EstimationConfig,
    circulant_projection,
    pca_truncate,
    sliding_window_covariance,
    spectral_model_from_covariance,
    synthetic_circulant_model,
    toeplitz_average,
)
