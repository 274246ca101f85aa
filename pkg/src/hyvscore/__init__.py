"""Bayesian model selection with the Hyvarinen score.

The Hyvarinen score depends on a forecast density only through derivatives
of its logarithm, so it is unaffected by the arbitrary scale of an improper
prior. This package scores normal linear models under flat priors, both as
a single multivariate forecast and prequentially, and includes a Monte
Carlo harness for studying how the resulting selection behaves as n grows.
"""
__version__ = "0.1.0"

from .exceptions import (
    DegeneratePredictiveError,
    HyvScoreError,
    InsufficientDataError,
    InvalidInputError,
    OrderingError,
    RankDeficiencyError,
)
from .scoring import LogDensityDerivatives, homogeneity_check, hyvarinen_score, log_score
from .gaussian import (
    GaussianSpec,
    UniGaussianSpec,
    hyv_disc_mvn,
    hyv_disc_uni,
    hyv_score_mvn,
    hyv_score_uni,
    kl_uni,
)
from .linear_model import (
    ImproperFlat,
    LinearModelSpec,
    PredictiveStep,
    ProperNormal,
    RlsState,
    incremental_score_known,
    incremental_score_unknown,
    marginal_precision,
    multivariate_score_known,
    multivariate_score_unknown,
    rls_init,
    rls_sweep,
    rls_update,
)
from .bayes import ExpFamilyEval, ParticlePosterior, expfam_hyv_score, mixture_hyv_score
from .selection import (
    AlignmentPolicy,
    Mode,
    ScoreTrace,
    SelectionResult,
    run_multivariate,
    run_prequential,
    score_gap_trace,
)
from .estimators import HyvarinenSelector, PrequentialLinearRegression
