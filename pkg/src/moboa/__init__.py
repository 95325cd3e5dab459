"""Multi-objective Bayesian optimization of model-to-role assignments.

A pool of candidate models is embedded in a normalized feature space; team
configurations are optimized in the continuous relaxation of that space with
per-objective Gaussian process surrogates and expected-hypervolume-improvement
acquisition, then projected back onto real pool members for evaluation.
"""

from .acquisition import (
    AcquisitionContext,
    CandidateProposal,
    ehvi,
    log_ehvi,
    mc_ehvi,
    optimize_acquisition,
)
from .analysis import (
    ImportanceReport,
    PhaseComparison,
    TierReport,
    assignment_frequency,
    front_table,
    hypervolume_trace,
    importance_report,
    phase_stats,
    tier_cost_evolution,
    write_reports,
)
from .configuration import (
    ContinuousConfiguration,
    RoleSet,
    TeamAssignment,
    flatten,
    project,
    random_configuration,
    unflatten,
)
from .errors import (
    ConfigError,
    DimensionError,
    DomainError,
    EvaluationError,
    HistoryError,
    MoboaError,
    NumericalError,
    SchemaError,
    TabularLookupError,
)
from .evaluators import EvaluationResult, Evaluator, EvaluatorSpec, evaluate, synthetic_objective
from .gp import (
    GPModel,
    KernelParams,
    PosteriorPrediction,
    build_model,
    feature_importance,
    fit,
    kernel_eval,
    log_marginal_likelihood,
    predict,
    predict_batch,
)
from .history import HistoryRecord, RunHistory, load_history
from .loop import RunConfig, initialize, resume, run, step
from .pareto import (
    ObjectiveVector,
    ParetoFront,
    ReferencePoint,
    dominates,
    hypervolume_2d,
    hypervolume_bruteforce,
    hypervolume_improvement,
    non_dominated_set,
)
from .pool import FeatureSchema, ModelDescriptor, ModelPool, denormalize, load_default_pool, load_pool, normalize
from .stats import cohens_d, student_t_cdf, welch_t_test

__version__ = "0.1.0"
