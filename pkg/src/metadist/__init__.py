"""Meta distributions from integer moments via the binomial-mixture transform."""

from .errors import (
    ConvergenceError,
    DegenerateDistributionError,
    MetadistError,
    MomentFileError,
    PrecisionError,
)
from .transform import (
    CdfApproximation,
    MixtureWeights,
    MomentVector,
    PdfApproximation,
    TransformMatrix,
    apply,
    build_matrix,
    cdf_samples,
    eval_cdf,
    max_abs_entry,
    pdf_samples,
)
from .precision import (
    Degenerate,
    Polynomial,
    PrecisionBudget,
    Superpolynomial,
    check_complete_monotonicity,
    classify_decay,
    required_digits,
    rule_of_thumb_digits,
)
from .moments import (
    BetaParams,
    SirParams,
    beta_moments,
    load_moments,
    point_mass_moments,
    save_moments,
    sir_poisson_moments,
    uniform_moments,
)
from .hyp2f1 import gauss_2f1_sir

__version__ = "0.1.0"
