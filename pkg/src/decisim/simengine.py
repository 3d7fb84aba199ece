"""Seeded Monte Carlo simulation over a decision problem.

Every alternative is evaluated at ``months`` = the problem's comparison
horizon; contract-length structure (payments that stop at a term, leases
that renew) is expressed in the objective itself through min/max over the
``months``/``years`` builtins.  Each bound parameter draws from a substream
keyed by (seed, parameter name, scenario index), so alternatives that bind
the same parameter name see common random numbers and results are
bit-identical regardless of how scenarios are sharded across workers.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy.special import ndtr, ndtri

from . import exprlang
from .model import (
    DecisionProblem,
    Distribution,
    Fixed,
    Normal,
    Triangular,
    Uniform,
    Violation,
    validate_problem,
)
from .rng import RandomStream, stream_key, uniform_block

PERCENTILE_LEVELS = (5, 25, 50, 75, 95)


class SimulationError(Exception):
    pass


class InvalidProblemError(SimulationError):
    """Raised when simulate is handed a problem that fails validation."""

    def __init__(self, violations: list[Violation]):
        self.violations = violations
        codes = ", ".join(v.code for v in violations)
        super().__init__(f"problem fails validation: {codes}")


class EvaluationFailedError(SimulationError):
    """Objective evaluation failed for one alternative; no samples are kept.

    Dropping the offending scenarios instead would silently bias every
    statistic, so the whole run is aborted.
    """

    def __init__(self, alternative: str, cause: Exception):
        self.alternative = alternative
        self.cause = cause
        super().__init__(f"evaluating alternative {alternative!r}: {cause}")


# ---------------------------------------------------------------------------
# sampling

def transform_uniforms(dist: Distribution, u: np.ndarray) -> np.ndarray:
    """Map uniforms in [0, 1) through the distribution's inverse CDF.

    Inverse-CDF everywhere (no rejection loops): one uniform in, one value
    out, which keeps draws aligned with their scenario index.
    """
    if isinstance(dist, Fixed):
        return np.full_like(u, dist.value)
    if isinstance(dist, Uniform):
        return dist.lo + u * (dist.hi - dist.lo)
    if isinstance(dist, Triangular):
        span = dist.hi - dist.lo
        cut = (dist.mode - dist.lo) / span
        left = dist.lo + np.sqrt(u * span * (dist.mode - dist.lo))
        right = dist.hi - np.sqrt((1.0 - u) * span * (dist.hi - dist.mode))
        return np.where(u < cut, left, right)
    if isinstance(dist, Normal):
        a = (dist.lo - dist.mean_value) / dist.stddev
        b = (dist.hi - dist.mean_value) / dist.stddev
        fa, fb = ndtr(a), ndtr(b)
        x = dist.mean_value + dist.stddev * ndtri(fa + u * (fb - fa))
        return np.clip(x, dist.lo, dist.hi)
    raise TypeError(f"not a distribution: {dist!r}")


def sample_parameter(dist: Distribution, stream: RandomStream) -> float:
    """Draw one value.  Fixed returns its value without consuming a draw."""
    if isinstance(dist, Fixed):
        return dist.value
    u = np.array([stream.next_uniform()])
    return float(transform_uniforms(dist, u)[0])


# ---------------------------------------------------------------------------
# scenario matrix

@dataclass(frozen=True)
class ScenarioMatrix:
    """Per-alternative objective samples under one recorded seed.

    ``paired`` is true when scenario i shares common random numbers across
    alternatives wherever parameter names coincide (always true for
    matrices produced by simulate).
    """

    values: Mapping[str, np.ndarray]
    seed: int
    sample_count: int
    paired: bool

    def __post_init__(self):
        for name, col in self.values.items():
            if len(col) != self.sample_count:
                raise ValueError(f"column {name!r} has {len(col)} values, expected {self.sample_count}")
            if not np.all(np.isfinite(col)):
                raise ValueError(f"column {name!r} contains non-finite values")
            col.setflags(write=False)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(self.values.keys())

    def column(self, name: str) -> np.ndarray:
        return self.values[name]


def _alternative_column(problem: DecisionProblem, expr, alt, start: int, count: int) -> np.ndarray:
    env: dict[str, np.ndarray | float] = {}
    for name, spec in alt.bindings.items():
        dist = spec.distribution
        if isinstance(dist, Fixed):
            env[name] = dist.value
        else:
            u = uniform_block(stream_key(problem.seed, name), start, count)
            env[name] = transform_uniforms(dist, u)
    try:
        col = exprlang.eval_vector(expr, env, float(problem.comparison_horizon_months))
    except exprlang.ExprError as exc:
        raise EvaluationFailedError(alt.name, exc) from exc
    col = np.asarray(col, dtype=np.float64)
    if col.ndim == 0:
        col = np.full(count, float(col))
    return col


def simulate(problem: DecisionProblem, workers: int = 1) -> ScenarioMatrix:
    """Run the Monte Carlo simulation; output depends only on the problem.

    Scenario ranges are sharded across ``workers`` threads; the substream
    scheme makes the result identical for any worker count.
    """
    violations = validate_problem(problem)
    if violations:
        raise InvalidProblemError(violations)
    expr = problem.objective_expr()
    n = problem.sample_count

    columns = {alt.name: np.empty(n, dtype=np.float64) for alt in problem.alternatives}
    chunks = _chunk_ranges(n, workers)

    def fill(alt, start: int, count: int):
        columns[alt.name][start:start + count] = _alternative_column(problem, expr, alt, start, count)

    if workers <= 1 or len(chunks) <= 1:
        for alt in problem.alternatives:
            for start, count in chunks:
                fill(alt, start, count)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(fill, alt, start, count)
                for alt in problem.alternatives
                for start, count in chunks
            ]
            for fut in futures:
                fut.result()

    return ScenarioMatrix(values=columns, seed=problem.seed, sample_count=n, paired=True)


def _chunk_ranges(n: int, workers: int) -> list[tuple[int, int]]:
    parts = max(1, min(workers, n))
    size = -(-n // parts)
    return [(start, min(size, n - start)) for start in range(0, n, size)]


# ---------------------------------------------------------------------------
# summary statistics

@dataclass(frozen=True)
class HistogramBin:
    count: int
    lo: float
    hi: float


@dataclass(frozen=True)
class SampleStats:
    mean: float
    stddev: float
    minimum: float
    maximum: float
    percentiles: Mapping[str, float]  # keys p5, p25, p50, p75, p95
    histogram: tuple[HistogramBin, ...]


def _nearest_rank(sorted_col: np.ndarray, level: int) -> float:
    n = len(sorted_col)
    rank = max(1, math.ceil(level / 100.0 * n))
    return float(sorted_col[rank - 1])


def histogram_bin_count(n: int) -> int:
    return min(200, max(10, math.ceil(math.sqrt(n))))


def summarize_column(col: np.ndarray) -> SampleStats:
    sorted_col = np.sort(col)
    nbins = histogram_bin_count(len(col))
    counts, edges = np.histogram(col, bins=nbins)
    return SampleStats(
        mean=float(np.mean(col)),
        stddev=float(np.std(col)),
        minimum=float(sorted_col[0]),
        maximum=float(sorted_col[-1]),
        percentiles={f"p{lvl}": _nearest_rank(sorted_col, lvl) for lvl in PERCENTILE_LEVELS},
        histogram=tuple(
            HistogramBin(int(c), float(edges[i]), float(edges[i + 1]))
            for i, c in enumerate(counts)
        ),
    )


def summarize(matrix: ScenarioMatrix) -> dict[str, SampleStats]:
    """Exact empirical statistics per alternative (nearest-rank percentiles)."""
    return {name: summarize_column(matrix.column(name)) for name in matrix.names}


def stats_to_doc(stats: SampleStats) -> dict:
    return {
        "mean": stats.mean,
        "stddev": stats.stddev,
        "min": stats.minimum,
        "max": stats.maximum,
        "percentiles": dict(stats.percentiles),
        "histogram": [{"count": b.count, "lo": b.lo, "hi": b.hi} for b in stats.histogram],
    }


def matrix_to_csv(matrix: ScenarioMatrix) -> str:
    """One column per alternative, header row of alternative names."""
    names = matrix.names
    lines = [",".join(names)]
    cols = [matrix.column(name) for name in names]
    for i in range(matrix.sample_count):
        lines.append(",".join(repr(float(c[i])) for c in cols))
    return "\n".join(lines) + "\n"
