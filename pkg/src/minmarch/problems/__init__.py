"""Built-in problems and the parameterized-problem contract."""

from .advdiff import (
    AdvDiffInverseProblem,
    AdvectionDiffusionModel,
    make_advdiff_problem,
    synthesize_observations,
)
from .analytic import DoubleWellProblem, LogisticWellProblem, QuadraticProblem
from .base import ParameterBox, Problem, as_vector

__all__ = [
    "AdvDiffInverseProblem",
    "AdvectionDiffusionModel",
    "DoubleWellProblem",
    "LogisticWellProblem",
    "ParameterBox",
    "Problem",
    "QuadraticProblem",
    "as_vector",
    "make_advdiff_problem",
    "synthesize_observations",
]
