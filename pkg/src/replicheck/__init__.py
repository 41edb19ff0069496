"""Internal replication analysis for batched experiments."""

__version__ = "0.1.0"

from .anova import AnovaRow, AnovaTable, Verdict, complete_table, grbd_anova, reproducibility_verdict
from .domain import (
    Dataset, DesignSummary, Independence, Observation, ReplicationClass, Timing, ValidationReport,
    classify_replication, summarize_design, validate_grbd,
)
from .effects import BatchEffect, EffectSet, effect_heterogeneity, per_batch_effects
from .estimator import GRBDAnova
from .linmodel import encode, fit_ols, sequential_ss
from .sim import SimParams, calibration_study, generate_grbd, permutation_pvalue
from .special import f_sf, ln_gamma, reg_inc_beta, t_quantile

__all__ = [
    "AnovaRow", "AnovaTable", "BatchEffect", "Dataset", "DesignSummary", "EffectSet", "GRBDAnova",
    "Independence", "Observation", "ReplicationClass", "SimParams", "Timing", "ValidationReport",
    "Verdict", "calibration_study", "classify_replication", "complete_table", "effect_heterogeneity",
    "encode", "f_sf", "fit_ols", "generate_grbd", "grbd_anova", "ln_gamma", "per_batch_effects",
    "permutation_pvalue", "reg_inc_beta", "reproducibility_verdict", "sequential_ss",
    "summarize_design", "t_quantile", "validate_grbd",
]
