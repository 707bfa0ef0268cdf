"""Prior adaptation and affine calibration for black-box classifier posteriors."""
from .adaptation import (
    AdaptationResult,
    Empirical,
    Explicit,
    FixedPointConfig,
    Uniform,
    adapt_naive,
    apply_beta,
    estimate_model_prior,
    resolve_target_prior,
    solve_beta_fixed_point,
)
from .calibration import (
    AffineParams,
    CalibrationMode,
    FitConfig,
    apply_affine,
    cross_entropy_loss,
    fit_affine,
    loss_gradient,
)
from .core import (
    LabelVector,
    LogScoreMatrix,
    PosteriorMatrix,
    PriorVector,
    compose_label_score,
    normalize_scores,
    predict,
)
from .errors import (
    DegenerateColumn,
    DegeneratePrior,
    DegenerateReference,
    DuplicateId,
    EmptyLabel,
    EmptyTrainingSet,
    InvalidLabels,
    InvalidPosteriors,
    InvalidPrior,
    InvalidScores,
    InvalidTokenProb,
    IoError,
    ParseError,
    PriorShiftError,
    SchemaError,
    ZeroClassCount,
)
from .metrics import (
    BootstrapConfig,
    EvaluationReport,
    bootstrap_evaluate,
    cross_entropy,
    error_rate,
    naive_cross_entropy,
    normalized_cross_entropy,
)
from .synthgen import SynthConfig, generate

__version__ = "0.1.0"
