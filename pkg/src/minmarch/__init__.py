"""minmarch: uncertainty propagation for minimizers of parameterized optimization problems.

Given an optimization problem whose objective depends on uncertain
parameters, the toolkit approximates the minimizer at any sampled parameter
vector by integrating an ODE in pseudo-time whose right-hand side is the
post-optimality sensitivity operator -H^{-1} B applied to the parameter
displacement.  Only one optimization solve (at the nominal parameters) is
required; a Newton re-solve oracle is included for validation.
"""

from .derivatives import (
    DerivativeCheckReport,
    check_derivatives,
    fd_second_derivatives,
)
from .exceptions import (
    BvpSolveError,
    ConfigError,
    DegenerateBandwidthError,
    DegenerateStepError,
    IndefiniteHessianError,
    MinmarchError,
    NominalSolveError,
    StationarityError,
)
from .marching import MarchConfig, MarchStatus, Scheme, Trajectory, march, march_error_vs_oracle
from .newton import (
    BatchSolveReport,
    NewtonConfig,
    SolveResult,
    newton_solve,
    reference_distribution,
    solve_nominal,
)
from .problems import (
    AdvDiffInverseProblem,
    AdvectionDiffusionModel,
    DoubleWellProblem,
    LogisticWellProblem,
    ParameterBox,
    Problem,
    QuadraticProblem,
    make_advdiff_problem,
    synthesize_observations,
)
from .sensitivity import ParameterLine, SensitivityApply, ivp_rhs, post_optimality_apply
from .uq import (
    ConvergenceReport,
    DensityEstimate,
    MarchOutcome,
    SampleRecord,
    SampleStudy,
    SensitivityLogRow,
    Statistic,
    StudyErrorSummary,
    fit_loglog_slope,
    kde,
    propagate_study,
    sensitivity_log,
    silverman_bandwidth,
    summary_errors,
)

__version__ = "0.1.0"

__all__ = [
    "AdvDiffInverseProblem",
    "AdvectionDiffusionModel",
    "BatchSolveReport",
    "BvpSolveError",
    "ConfigError",
    "DegenerateBandwidthError",
    "DegenerateStepError",
    "DerivativeCheckReport",
    "DoubleWellProblem",
    "IndefiniteHessianError",
    "LogisticWellProblem",
    "MarchConfig",
    "MarchStatus",
    "MinmarchError",
    "NewtonConfig",
    "NominalSolveError",
    "ParameterBox",
    "ParameterLine",
    "Problem",
    "QuadraticProblem",
    "Scheme",
    "SensitivityApply",
    "SolveResult",
    "StationarityError",
    "Trajectory",
    "ConvergenceReport",
    "DensityEstimate",
    "MarchOutcome",
    "SampleRecord",
    "SampleStudy",
    "SensitivityLogRow",
    "Statistic",
    "StudyErrorSummary",
    "check_derivatives",
    "fd_second_derivatives",
    "fit_loglog_slope",
    "ivp_rhs",
    "kde",
    "make_advdiff_problem",
    "march",
    "march_error_vs_oracle",
    "newton_solve",
    "post_optimality_apply",
    "propagate_study",
    "reference_distribution",
    "sensitivity_log",
    "silverman_bandwidth",
    "solve_nominal",
    "summary_errors",
    "synthesize_observations",
]
