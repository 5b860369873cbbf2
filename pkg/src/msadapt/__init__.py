"""Multiple-source domain adaptation with limited labeled target data.

Mixture-weighted empirical risk minimization over p source domains, simplex
cover model selection, an ensemble/boosting variant, a min-max saddle-point
variant, discrepancy-based baselines, and desk-scale simulators for the
synthetic benchmark and the model-selection penalty scaling law.
"""

from .baselines import BaselineKind, conv_disc_penalty, run_baseline
from .core import (
    CLASSIFICATION,
    REGRESSION,
    CalibrationError,
    ConfigError,
    Dataset,
    DimensionError,
    DomainCollection,
    Hypothesis,
    LabeledExample,
    LossSpec,
    MsaError,
    NumericalError,
    TractabilityError,
    empirical_loss,
    example_loss,
    example_losses,
    load_dataset,
    multinomial_log_loss,
    save_dataset,
    squared_loss,
    zero_one_loss,
)
from .discrepancy import DiscEstimate, disc_estimate, pairwise_disc_matrix
from .erm import (
    MixtureSolver,
    TrainConfig,
    load_model,
    save_model,
    train_dataset,
    train_on_mixture,
    train_weighted,
)
from .lmsa import (
    EnsembleHypothesis,
    ExcessDiag,
    LmsaReport,
    MinmaxConfig,
    MinmaxState,
    excess_bound_diag,
    lmsa_boost,
    lmsa_minmax,
    lmsa_select,
)
from .lowerbound import (
    LowerBoundInstance,
    PenaltyRow,
    build_instance,
    excess_risk,
    plug_in_majority,
    sample_target,
    simulate_penalty,
)
from .simplex import (
    SimplexCover,
    default_cover_epsilon,
    load_cover,
    make_cover,
    mix_weights,
    save_cover,
    skewness,
    validate_mixture,
)
from .synth import (
    Example1Oracle,
    ToyOracle,
    ToyRegressionSpec,
    gen_example1,
    gen_toy_regression,
    subset_target,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
