"""Matched subspace detection for 2-D signals with missing entries.

The model span is the Kronecker product of a row-factor and a
column-factor subspace; the package computes coherences, restricted
projection residuals under two missing-data regimes, closed-form
probabilistic bounds on those residuals, the corresponding hypothesis
tests, and a reproducible Monte Carlo harness.
"""

__version__ = "0.1.0"

from .bounds import (
    BoundInputs,
    BoundReport,
    evaluate_bounds,
    incoherent_lower_bound,
    intersection_bounds,
    intersection_params,
    min_samples,
    union_bounds,
    union_params,
)
from .densecore import (
    frobenius_norm_sq,
    infinity_entry_norm,
    kron,
    pseudoinverse_gram,
    read_matrix,
    standard_basis_vector,
    unvectorize,
    vectorize,
    write_matrix,
)
from .detector import (
    DetectionOutcome,
    NoiseModel,
    ResidualResult,
    detect_noiseless,
    detect_noisy,
    detection_probability,
    full_residual,
    noncentral_chisq_cdf,
    residual,
    residual_discrete,
    residual_intersection,
)
from .errors import (
    DegenerateSignalError,
    DimensionError,
    EmptyComplementError,
    InputFormatError,
    KsdetectError,
    SingularityError,
    UndersampledError,
)
from .montecarlo import (
    ExperimentConfig,
    IdentityCheck,
    Regime,
    SignalCase,
    TrialSummary,
    default_k_grid,
    make_signal,
    positivity_threshold,
    run_residual_sweep,
    validate_expectations,
)
from .sampling import (
    DiscretePattern,
    IntersectionPattern,
    SampleCounts,
    derive_counts,
    restrict_rows,
    restrict_signal,
    sample_discrete,
    sample_intersection,
    sample_union,
)
from .subspace import (
    KSModel,
    Subspace,
    coherence,
    ks_coherence,
    orthogonal_complement,
    projector,
    random_gaussian_subspace,
    signal_coherence,
)
