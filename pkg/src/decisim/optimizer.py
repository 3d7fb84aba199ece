"""Turn simulated scenarios into a recommendation.

Pairwise win probabilities are estimated over paired scenarios (common
random numbers), ties are counted as a separate mass rather than split, and
per-parameter uncertainty contributions use first-order variance
decomposition: re-simulate with one parameter random and the rest frozen at
their distribution means, then divide by the full variance.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping

import numpy as np

from .model import DecisionProblem, Direction, Fixed, dist_to_doc, problem_to_doc
from .simengine import (
    SampleStats,
    ScenarioMatrix,
    _alternative_column,
    simulate,
    stats_to_doc,
    summarize,
)

DEFAULT_MIN_CONFIDENCE = 0.8


class OptimizerError(Exception):
    pass


class UnpairedMatrixError(OptimizerError):
    def __init__(self):
        super().__init__("win probabilities need a paired scenario matrix")


class MatrixMismatchError(OptimizerError):
    def __init__(self, message: str):
        super().__init__(message)


@dataclass(frozen=True)
class Narrative:
    """Structured result summary; rendering prose is the interface's job."""

    recommendation: str
    runner_up: str | None
    expected_gap: float | None
    win_vs_runner_up: float | None
    direction: str


@dataclass(frozen=True)
class ComparisonReport:
    recommendation: str
    direction: Direction
    expected: Mapping[str, float]
    stddev: Mapping[str, float]
    win_matrix: Mapping[str, Mapping[str, float]]
    tie_mass: Mapping[str, Mapping[str, float]]
    best_probability: Mapping[str, float]
    narrative: Narrative
    seed: int
    sample_count: int
    sensitivity: Mapping[str, Mapping[str, float]] | None = None
    stats: Mapping[str, SampleStats] | None = None
    parameters: Mapping[str, Mapping[str, dict]] | None = None


@dataclass(frozen=True)
class Recommendation:
    alternative: str
    confidence: float
    caveats: tuple[str, ...]


def _rank_key(direction: Direction, mean: float, std: float, name: str):
    # Deterministic ordering: best expected value, then lower spread, then name.
    signed = mean if direction is Direction.MINIMIZE else -mean
    return (signed, std, name)


def compare(matrix: ScenarioMatrix, direction: Direction) -> ComparisonReport:
    """Pairwise wins, per-scenario best probabilities and the recommendation.

    win_matrix[a][b] is the fraction of scenarios where a is strictly
    better than b; exact ties go to tie_mass, so for every pair
    win + win(reversed) + tie accounts for all scenarios.  Scenarios tied
    for best credit the lexicographically first alternative, keeping
    best_probability an exact distribution.
    """
    if not matrix.paired:
        raise UnpairedMatrixError()
    names = matrix.names
    n = matrix.sample_count
    cols = {name: matrix.column(name) for name in names}
    means = {name: float(np.mean(cols[name])) for name in names}
    stds = {name: float(np.std(cols[name])) for name in names}

    win: dict[str, dict[str, float]] = {a: {} for a in names}
    tie: dict[str, dict[str, float]] = {a: {} for a in names}
    for a in names:
        for b in names:
            if a == b:
                continue
            if direction is Direction.MINIMIZE:
                wins = int(np.count_nonzero(cols[a] < cols[b]))
            else:
                wins = int(np.count_nonzero(cols[a] > cols[b]))
            ties = int(np.count_nonzero(cols[a] == cols[b]))
            win[a][b] = wins / n
            tie[a][b] = ties / n

    stacked = np.vstack([cols[name] for name in sorted(names)])
    if direction is Direction.MINIMIZE:
        best_rows = np.argmin(stacked, axis=0)  # first (lexicographic) index wins ties
    else:
        best_rows = np.argmax(stacked, axis=0)
    counts = np.bincount(best_rows, minlength=len(names))
    best_probability = {name: int(counts[i]) / n for i, name in enumerate(sorted(names))}

    ranked = sorted(names, key=lambda nm: _rank_key(direction, means[nm], stds[nm], nm))
    recommendation = ranked[0]
    runner_up = ranked[1] if len(ranked) > 1 else None
    narrative = Narrative(
        recommendation=recommendation,
        runner_up=runner_up,
        expected_gap=abs(means[recommendation] - means[runner_up]) if runner_up else None,
        win_vs_runner_up=win[recommendation][runner_up] if runner_up else None,
        direction=direction.value,
    )
    return ComparisonReport(
        recommendation=recommendation,
        direction=direction,
        expected=means,
        stddev=stds,
        win_matrix=win,
        tie_mass=tie,
        best_probability=best_probability,
        narrative=narrative,
        seed=matrix.seed,
        sample_count=n,
    )


def sensitivity(problem: DecisionProblem, base_matrix: ScenarioMatrix) -> dict[str, dict[str, float]]:
    """First-order variance contribution per (alternative, parameter).

    contribution(p) = Var(objective with only p random, the rest frozen at
    their distribution means) / Var(full objective).  The frozen runs reuse
    the substream scheme, so the numerator's draws for p match the base
    run's and the whole table is seed-deterministic.  Fixed parameters
    contribute exactly 0; if the full objective has zero variance every
    contribution is 0 by definition.
    """
    if base_matrix.seed != problem.seed:
        raise MatrixMismatchError("matrix seed differs from the problem's seed")
    if base_matrix.sample_count != problem.sample_count:
        raise MatrixMismatchError("matrix sample count differs from the problem's")
    if set(base_matrix.names) != {a.name for a in problem.alternatives}:
        raise MatrixMismatchError("matrix columns do not match the problem's alternatives")

    expr = problem.objective_expr()
    n = problem.sample_count
    table: dict[str, dict[str, float]] = {}
    for alt in problem.alternatives:
        full_var = float(np.var(base_matrix.column(alt.name)))
        row: dict[str, float] = {}
        for name, spec in alt.bindings.items():
            if isinstance(spec.distribution, Fixed) or full_var == 0.0:
                row[name] = 0.0
                continue
            frozen = {
                other: (spec2 if other == name
                        else replace(spec2, distribution=Fixed(spec2.distribution.mean())))
                for other, spec2 in alt.bindings.items()
            }
            frozen_alt = replace(alt, bindings=frozen)
            col = _alternative_column(problem, expr, frozen_alt, 0, n)
            row[name] = min(1.0, max(0.0, float(np.var(col)) / full_var))
        table[alt.name] = row
    return table


def recommend(report: ComparisonReport, min_confidence: float = DEFAULT_MIN_CONFIDENCE) -> Recommendation:
    """Recommendation with its confidence, flagged when below the threshold."""
    confidence = report.best_probability[report.recommendation]
    caveats = ("low_confidence",) if confidence < min_confidence else ()
    return Recommendation(report.recommendation, confidence, caveats)


def analyze(problem: DecisionProblem, matrix: ScenarioMatrix | None = None,
            workers: int = 1) -> ComparisonReport:
    """Simulate (unless given a matrix), compare, and attach sensitivity,
    summary statistics and parameter metadata."""
    if matrix is None:
        matrix = simulate(problem, workers=workers)
    report = compare(matrix, problem.direction)
    params = {
        alt.name: {
            name: {
                "unit": spec.unit,
                "dist": dist_to_doc(spec.distribution),
                "mean": spec.distribution.mean(),
                "support": list(spec.distribution.support()),
            }
            for name, spec in alt.bindings.items()
        }
        for alt in problem.alternatives
    }
    return replace(
        report,
        sensitivity=sensitivity(problem, matrix),
        stats=summarize(matrix),
        parameters=params,
    )


# ---------------------------------------------------------------------------
# report serialization (the payload served over HTTP and printed by the CLI)

def report_to_doc(report: ComparisonReport) -> dict:
    doc = {
        "recommendation": report.recommendation,
        "direction": report.direction.value,
        "seed": report.seed,
        "sample_count": report.sample_count,
        "expected": {k: float(v) for k, v in report.expected.items()},
        "stddev": {k: float(v) for k, v in report.stddev.items()},
        "win_matrix": {a: {b: float(p) for b, p in row.items()} for a, row in report.win_matrix.items()},
        "tie_mass": {a: {b: float(p) for b, p in row.items()} for a, row in report.tie_mass.items()},
        "best_probability": {k: float(v) for k, v in report.best_probability.items()},
        "narrative": {
            "recommendation": report.narrative.recommendation,
            "runner_up": report.narrative.runner_up,
            "expected_gap": report.narrative.expected_gap,
            "win_vs_runner_up": report.narrative.win_vs_runner_up,
            "direction": report.narrative.direction,
        },
    }
    if report.sensitivity is not None:
        doc["sensitivity"] = {a: {p: float(v) for p, v in row.items()}
                              for a, row in report.sensitivity.items()}
    if report.stats is not None:
        doc["stats"] = {a: stats_to_doc(s) for a, s in report.stats.items()}
    if report.parameters is not None:
        doc["parameters"] = report.parameters
    return doc


def analyze_to_doc(problem: DecisionProblem, workers: int = 1) -> dict:
    """Full report document for a problem, including its input snapshot."""
    report = analyze(problem, workers=workers)
    doc = report_to_doc(report)
    doc["problem"] = problem_to_doc(problem)
    return doc
