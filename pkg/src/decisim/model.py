"""Domain types for decision problems, with validation and JSON I/O.

A decision problem is a set of named alternatives sharing one objective
expression and one comparison horizon.  Each alternative binds every free
variable of the objective to a parameter with a unit and a distribution.
All types are immutable after construction and safe to share across
threads.

The on-disk problem document is JSON with top-level keys ``title``,
``direction``, ``comparison_horizon_months``, ``sample_count``, ``seed``,
``objective`` and ``alternatives``; see docs/problem-format.md.  Unknown
keys are rejected.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Mapping, Union

from . import exprlang

NAME_RE = re.compile(r"^[a-z][a-z0-9_]*$")

# Parameter names that would shadow evaluation builtins or functions.
RESERVED_NAMES = frozenset(exprlang.BUILTINS) | frozenset(exprlang.FUNCTIONS)

MAX_SEED = 2**64 - 1


class Direction(Enum):
    MINIMIZE = "minimize"
    MAXIMIZE = "maximize"


# ---------------------------------------------------------------------------
# distributions

@dataclass(frozen=True)
class Fixed:
    value: float

    def mean(self) -> float:
        return self.value

    def support(self) -> tuple[float, float]:
        return (self.value, self.value)


@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float

    def mean(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def support(self) -> tuple[float, float]:
        return (self.lo, self.hi)


@dataclass(frozen=True)
class Normal:
    """Normal(mean, stddev) truncated to [lo, hi]."""

    mean_value: float
    stddev: float
    lo: float
    hi: float

    def mean(self) -> float:
        # Mean of the truncated normal, not of the parent normal.
        from scipy.special import ndtr

        a = (self.lo - self.mean_value) / self.stddev
        b = (self.hi - self.mean_value) / self.stddev
        phi = lambda x: math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
        z = ndtr(b) - ndtr(a)
        return self.mean_value + self.stddev * (phi(a) - phi(b)) / z

    def support(self) -> tuple[float, float]:
        return (self.lo, self.hi)


@dataclass(frozen=True)
class Triangular:
    lo: float
    mode: float
    hi: float

    def mean(self) -> float:
        return (self.lo + self.mode + self.hi) / 3.0

    def support(self) -> tuple[float, float]:
        return (self.lo, self.hi)


Distribution = Union[Fixed, Uniform, Normal, Triangular]


def distribution_violations(dist: Distribution) -> list[tuple[str, str]]:
    """Return (code, message) pairs for an invalid distribution."""
    out: list[tuple[str, str]] = []
    fields = {
        Fixed: ("value",),
        Uniform: ("lo", "hi"),
        Normal: ("mean_value", "stddev", "lo", "hi"),
        Triangular: ("lo", "mode", "hi"),
    }[type(dist)]
    for name in fields:
        if not math.isfinite(getattr(dist, name)):
            out.append(("nonfinite_value", f"{name} is not finite"))
            return out
    if isinstance(dist, Uniform) and not dist.lo < dist.hi:
        out.append(("degenerate_interval", f"uniform requires lo < hi, got [{dist.lo}, {dist.hi}]"))
    elif isinstance(dist, Normal):
        if dist.stddev <= 0:
            out.append(("invalid_stddev", f"stddev must be > 0, got {dist.stddev}"))
        if not dist.lo < dist.hi:
            out.append(("degenerate_interval", f"truncation requires lo < hi, got [{dist.lo}, {dist.hi}]"))
    elif isinstance(dist, Triangular):
        if not dist.lo < dist.hi:
            out.append(("degenerate_interval", f"triangular requires lo < hi, got [{dist.lo}, {dist.hi}]"))
        elif not (dist.lo <= dist.mode <= dist.hi):
            out.append(("mode_out_of_range", f"mode {dist.mode} outside [{dist.lo}, {dist.hi}]"))
    return out


# ---------------------------------------------------------------------------
# provenance

@dataclass(frozen=True)
class UserSupplied:
    pass


@dataclass(frozen=True)
class WarehousePrior:
    record_id: str


Provenance = Union[UserSupplied, WarehousePrior]


# ---------------------------------------------------------------------------
# problem structure

@dataclass(frozen=True)
class ParameterSpec:
    name: str
    unit: str
    distribution: Distribution
    provenance: Provenance = UserSupplied()


@dataclass(frozen=True)
class Alternative:
    name: str
    term_months: int
    bindings: Mapping[str, ParameterSpec]


@dataclass(frozen=True)
class DecisionProblem:
    title: str
    alternatives: tuple[Alternative, ...]
    objective: str  # exprlang source; parsed on demand
    direction: Direction
    comparison_horizon_months: int
    sample_count: int
    seed: int

    def objective_expr(self) -> exprlang.Expr:
        return exprlang.parse(self.objective)


@dataclass(frozen=True)
class Violation:
    code: str
    path: str
    message: str


def validate_problem(problem: DecisionProblem) -> list[Violation]:
    """Check every structural invariant; an empty list means valid.

    Violations are data, not errors: the same input always yields the
    identical report, and a problem with an empty report is guaranteed to
    satisfy the simulation engine's preconditions.
    """
    out: list[Violation] = []

    if len(problem.alternatives) < 2:
        out.append(Violation("too_few_alternatives", "alternatives",
                             f"need at least 2 alternatives, got {len(problem.alternatives)}"))
    seen_names: set[str] = set()
    for alt in problem.alternatives:
        if alt.name in seen_names:
            out.append(Violation("duplicate_alternative_name", f"alternatives.{alt.name}",
                                 f"alternative name {alt.name!r} appears more than once"))
        seen_names.add(alt.name)

    expr = None
    try:
        expr = problem.objective_expr()
    except exprlang.ExprError as exc:
        out.append(Violation("objective_syntax", "objective", str(exc)))

    for alt in problem.alternatives:
        base = f"alternatives.{alt.name}"
        if alt.term_months < 1:
            out.append(Violation("bad_term", f"{base}.term_months",
                                 f"term_months must be >= 1, got {alt.term_months}"))
        for key, spec in alt.bindings.items():
            path = f"{base}.bindings.{key}"
            if key != spec.name:
                out.append(Violation("binding_name_mismatch", path,
                                     f"binding key {key!r} != parameter name {spec.name!r}"))
            if not NAME_RE.match(spec.name):
                out.append(Violation("bad_identifier", path,
                                     f"parameter name {spec.name!r} must match [a-z][a-z0-9_]*"))
            elif spec.name in RESERVED_NAMES:
                out.append(Violation("reserved_name", path,
                                     f"{spec.name!r} is a reserved builtin or function name"))
            for code, msg in distribution_violations(spec.distribution):
                out.append(Violation(code, path, msg))
        if expr is not None:
            missing = _free_for(expr, alt)
            for name in sorted(missing):
                out.append(Violation("unbound_variable", f"{base}.bindings.{name}",
                                     f"objective references {name!r} but {alt.name!r} does not bind it"))

    if problem.comparison_horizon_months < 1:
        out.append(Violation("bad_horizon", "comparison_horizon_months",
                             "comparison horizon must be >= 1 month"))
    elif problem.alternatives:
        longest = max(a.term_months for a in problem.alternatives)
        if problem.comparison_horizon_months < longest:
            out.append(Violation("horizon_too_short", "comparison_horizon_months",
                                 f"horizon {problem.comparison_horizon_months} is shorter than the "
                                 f"longest term {longest}; extend the horizon to cover every contract"))
    if problem.sample_count < 1:
        out.append(Violation("bad_sample_count", "sample_count",
                             f"sample_count must be >= 1, got {problem.sample_count}"))
    if not (0 <= problem.seed <= MAX_SEED):
        out.append(Violation("bad_seed", "seed", "seed must fit in an unsigned 64-bit integer"))
    return out


def _free_for(expr: exprlang.Expr, alt: Alternative) -> set[str]:
    return set(exprlang.identifiers(expr)) - set(alt.bindings.keys())


def free_variables(problem: DecisionProblem) -> dict[str, frozenset[str]]:
    """Per-alternative identifiers referenced by the objective but unbound.

    Builtins (months, years) are never reported.  Requires the objective to
    parse; use validate_problem first if that is not guaranteed.
    """
    expr = problem.objective_expr()
    return {alt.name: frozenset(_free_for(expr, alt)) for alt in problem.alternatives}


# ---------------------------------------------------------------------------
# JSON document I/O

class ProblemFormatError(Exception):
    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


_DIST_FIELDS = {
    "fixed": ("value",),
    "uniform": ("lo", "hi"),
    "normal": ("mean", "stddev", "lo", "hi"),
    "triangular": ("lo", "mode", "hi"),
}


def dist_to_doc(dist: Distribution) -> dict:
    if isinstance(dist, Fixed):
        return {"type": "fixed", "value": dist.value}
    if isinstance(dist, Uniform):
        return {"type": "uniform", "lo": dist.lo, "hi": dist.hi}
    if isinstance(dist, Normal):
        return {"type": "normal", "mean": dist.mean_value, "stddev": dist.stddev,
                "lo": dist.lo, "hi": dist.hi}
    if isinstance(dist, Triangular):
        return {"type": "triangular", "lo": dist.lo, "mode": dist.mode, "hi": dist.hi}
    raise TypeError(f"not a distribution: {dist!r}")


def dist_from_doc(doc: object, path: str = "dist") -> Distribution:
    if not isinstance(doc, dict):
        raise ProblemFormatError("distribution must be an object", path)
    kind = doc.get("type")
    if kind not in _DIST_FIELDS:
        raise ProblemFormatError(f"unknown distribution type {kind!r}", path)
    fields = _DIST_FIELDS[kind]
    extra = set(doc) - set(fields) - {"type"}
    if extra:
        raise ProblemFormatError(f"unknown keys {sorted(extra)}", path)
    vals = {}
    for name in fields:
        if name not in doc:
            raise ProblemFormatError(f"missing key {name!r}", path)
        v = doc[name]
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise ProblemFormatError(f"{name} must be a number", path)
        vals[name] = float(v)
    if kind == "fixed":
        return Fixed(vals["value"])
    if kind == "uniform":
        return Uniform(vals["lo"], vals["hi"])
    if kind == "normal":
        return Normal(vals["mean"], vals["stddev"], vals["lo"], vals["hi"])
    return Triangular(vals["lo"], vals["mode"], vals["hi"])


def _provenance_to_doc(p: Provenance) -> object:
    if isinstance(p, UserSupplied):
        return "user"
    return {"prior_record": p.record_id}


def _provenance_from_doc(doc: object, path: str) -> Provenance:
    if doc == "user":
        return UserSupplied()
    if isinstance(doc, dict) and set(doc) == {"prior_record"} and isinstance(doc["prior_record"], str):
        return WarehousePrior(doc["prior_record"])
    raise ProblemFormatError("provenance must be \"user\" or {\"prior_record\": id}", path)


def problem_to_doc(problem: DecisionProblem) -> dict:
    return {
        "title": problem.title,
        "direction": problem.direction.value,
        "comparison_horizon_months": problem.comparison_horizon_months,
        "sample_count": problem.sample_count,
        "seed": problem.seed,
        "objective": problem.objective,
        "alternatives": [
            {
                "name": alt.name,
                "term_months": alt.term_months,
                "bindings": {
                    name: {
                        "unit": spec.unit,
                        "dist": dist_to_doc(spec.distribution),
                        "provenance": _provenance_to_doc(spec.provenance),
                    }
                    for name, spec in alt.bindings.items()
                },
            }
            for alt in problem.alternatives
        ],
    }


_TOP_KEYS = {"title", "direction", "comparison_horizon_months", "sample_count",
             "seed", "objective", "alternatives"}
_ALT_KEYS = {"name", "term_months", "bindings"}
_BINDING_KEYS = {"unit", "dist", "provenance"}


def _require_int(doc: dict, key: str, path: str) -> int:
    v = doc.get(key)
    if not isinstance(v, int) or isinstance(v, bool):
        raise ProblemFormatError(f"{key} must be an integer", path)
    return v


def problem_from_doc(doc: object) -> DecisionProblem:
    """Build a DecisionProblem from a parsed JSON document (strict keys)."""
    if not isinstance(doc, dict):
        raise ProblemFormatError("problem document must be a JSON object")
    extra = set(doc) - _TOP_KEYS
    if extra:
        raise ProblemFormatError(f"unknown top-level keys {sorted(extra)}")
    missing = _TOP_KEYS - set(doc)
    if missing:
        raise ProblemFormatError(f"missing top-level keys {sorted(missing)}")
    if not isinstance(doc["title"], str):
        raise ProblemFormatError("title must be a string", "title")
    if doc["direction"] not in ("minimize", "maximize"):
        raise ProblemFormatError("direction must be \"minimize\" or \"maximize\"", "direction")
    if not isinstance(doc["objective"], str):
        raise ProblemFormatError("objective must be a string", "objective")
    if not isinstance(doc["alternatives"], list):
        raise ProblemFormatError("alternatives must be an array", "alternatives")

    alternatives = []
    for i, alt_doc in enumerate(doc["alternatives"]):
        path = f"alternatives[{i}]"
        if not isinstance(alt_doc, dict):
            raise ProblemFormatError("alternative must be an object", path)
        extra = set(alt_doc) - _ALT_KEYS
        if extra:
            raise ProblemFormatError(f"unknown keys {sorted(extra)}", path)
        if not isinstance(alt_doc.get("name"), str):
            raise ProblemFormatError("name must be a string", path)
        bindings_doc = alt_doc.get("bindings")
        if not isinstance(bindings_doc, dict):
            raise ProblemFormatError("bindings must be an object", path)
        bindings = {}
        for pname, b in bindings_doc.items():
            bpath = f"{path}.bindings.{pname}"
            if not isinstance(b, dict):
                raise ProblemFormatError("binding must be an object", bpath)
            extra = set(b) - _BINDING_KEYS
            if extra:
                raise ProblemFormatError(f"unknown keys {sorted(extra)}", bpath)
            if "dist" not in b:
                raise ProblemFormatError("missing key 'dist'", bpath)
            unit = b.get("unit", "")
            if not isinstance(unit, str):
                raise ProblemFormatError("unit must be a string", bpath)
            provenance = _provenance_from_doc(b["provenance"], bpath) if "provenance" in b \
                else UserSupplied()
            bindings[pname] = ParameterSpec(
                name=pname,
                unit=unit,
                distribution=dist_from_doc(b["dist"], bpath),
                provenance=provenance,
            )
        alternatives.append(Alternative(
            name=alt_doc["name"],
            term_months=_require_int(alt_doc, "term_months", path),
            bindings=bindings,
        ))

    return DecisionProblem(
        title=doc["title"],
        alternatives=tuple(alternatives),
        objective=doc["objective"],
        direction=Direction(doc["direction"]),
        comparison_horizon_months=_require_int(doc, "comparison_horizon_months", "comparison_horizon_months"),
        sample_count=_require_int(doc, "sample_count", "sample_count"),
        seed=_require_int(doc, "seed", "seed"),
    )


def load_problem(path: str | Path) -> DecisionProblem:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ProblemFormatError(f"invalid JSON: {exc}") from exc
    return problem_from_doc(doc)


def save_problem(problem: DecisionProblem, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(problem_to_doc(problem), fh, indent=2)
        fh.write("\n")
