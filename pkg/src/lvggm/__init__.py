"""Sparse plus low-rank precision matrix estimation for latent-variable
Gaussian graphical models, by alternating thresholded gradient descent."""
from .baseline import AdmmConfig, AdmmResult, admm_fit
from .initialization import estimate_scales, initialize, spectral_init
from .likelihood import gradients, grad_s, grad_z, objective, sample_covariance
from .metrics import frobenius_error, procrustes_distance, spikiness, support_metrics
from .model import (
    BudgetTooSmall,
    CovarianceEstimate,
    CovarianceSingular,
    Dataset,
    Decomposition,
    FitConfig,
    FitTrace,
    GroundTruth,
    InputError,
    NotPositiveDefinite,
    StepFailure,
    TraceRecord,
)
from .optimizer import FitResult, StepSizePolicy, altgd_step, fit, step_sizes
from .pipeline import evaluate, run_admm, run_altgd
from .synth import GenericSpec, LvggmSpec, generate_generic, generate_lvggm, sample_gaussian
from .thresholding import hard_threshold, hard_threshold_sym, support

__version__ = "0.1.0"
