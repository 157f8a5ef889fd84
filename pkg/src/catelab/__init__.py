"""catelab: meta-learners and Monte Carlo experiments for treatment-effect estimation."""

__version__ = "0.1.0"

from .dgp import (
    Dataset,
    GroundTruth,
    SimulationSpec,
    builtin_spec,
    draw_dataset,
    draw_dataset_arms,
    draw_dataset_conditional,
    example1_pair,
    lipschitz_spec,
    sample_features,
    semiparam_spec,
    vine_correlation,
)
from .evaluation import (
    RateFit,
    ReplicationRecord,
    ci_simulation,
    coverage_rate,
    emse,
    rate_fit,
    run_replications,
    s_split_fraction,
)
from .inference import (
    IntervalEstimate,
    bootstrap_bias,
    ci_normal,
    ci_smoothed,
    monte_carlo_bias,
)
from .learners import (
    Forest,
    ForestParams,
    GivenPropensity,
    Knn,
    Mean,
    Ols,
    fit_propensity,
    honest_forest,
    knn,
    ols,
    minimax_k,
)
from .meta import (
    CateModel,
    ConstantWeight,
    LearnerConfig,
    OneWeight,
    PropensityWeight,
    ZeroWeight,
    fit_f,
    fit_s,
    fit_t,
    fit_u,
    fit_x,
    impute_effects,
    parse_learner_spec,
    predict_cate,
    transformed_outcome,
)
