"""Seeded Monte Carlo decision support.

Define alternatives over a shared objective expression, simulate them with
common random numbers, and get back a recommendation with win
probabilities and per-parameter uncertainty contributions.
"""

from .model import (
    Alternative,
    DecisionProblem,
    Direction,
    Fixed,
    Normal,
    ParameterSpec,
    Triangular,
    Uniform,
    free_variables,
    load_problem,
    problem_from_doc,
    problem_to_doc,
    validate_problem,
)
from .optimizer import ComparisonReport, analyze, compare, recommend, report_to_doc, sensitivity
from .simengine import ScenarioMatrix, sample_parameter, simulate, summarize

__version__ = "0.1.0"

__all__ = [
    "Alternative",
    "ComparisonReport",
    "DecisionProblem",
    "Direction",
    "Fixed",
    "Normal",
    "ParameterSpec",
    "ScenarioMatrix",
    "Triangular",
    "Uniform",
    "analyze",
    "compare",
    "free_variables",
    "load_problem",
    "problem_from_doc",
    "problem_to_doc",
    "recommend",
    "sample_parameter",
    "sensitivity",
    "simulate",
    "summarize",
    "validate_problem",
]
