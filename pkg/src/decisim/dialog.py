"""Slot-filling conversation state machine with pluggable backends.

The state machine owns correctness: an utterance can only fill slots the
schema declares, fills below the confidence threshold trigger a
confirmation question instead, and the phase flips to ReadyToSimulate
exactly when no required slot is pending.  Question generation and value
extraction live behind the AgentBackend interface; the rule-based scripted
backend is the reference implementation, and the chat-completion client is
optional configuration so nothing here needs a network to run.

Currency and number normalization ("$3,000" -> 3000, "15 cents" -> 0.15)
happens here, keeping the expression language culture-free.
"""

from __future__ import annotations

import json
import math
import os
import re
import time
import uuid
from dataclasses import dataclass, field, replace
from enum import Enum
from importlib.resources import files
from pathlib import Path
from typing import Protocol

import httpx

from .model import (
    Alternative,
    DecisionProblem,
    Direction,
    Distribution,
    Fixed,
    Normal,
    ParameterSpec,
    Triangular,
    Uniform,
    UserSupplied,
    WarehousePrior,
    validate_problem,
)

CONFIDENCE_THRESHOLD = 0.9
DEFAULT_SAMPLE_COUNT = 100_000
DEFAULT_SEED = 0

READY_MESSAGE = "I have everything I need. Run the simulation when you are ready."

SLOT_KINDS = ("money", "count", "rate", "months", "miles")


class DialogError(Exception):
    pass


class SessionClosedError(DialogError):
    def __init__(self, phase: "Phase"):
        super().__init__(f"session no longer accepts messages (phase={phase.value})")


class IncompleteSlotsError(DialogError):
    def __init__(self, missing: tuple[str, ...]):
        self.missing = missing
        super().__init__(f"required slots still unfilled: {', '.join(missing)}")


class PriorUnavailableError(DialogError):
    def __init__(self, parameter: str):
        self.parameter = parameter
        super().__init__(f"no value or stored prior available for parameter {parameter!r}")


class BackendUnreachableError(DialogError):
    pass


class TemplateError(DialogError):
    pass


# ---------------------------------------------------------------------------
# schema

@dataclass(frozen=True)
class SlotDef:
    name: str
    prompt: str
    kind: str
    required: bool
    maps_to: tuple[str, ...]


@dataclass(frozen=True)
class BindingSource:
    """Where one parameter of one alternative gets its value at build time."""

    slot: str | None = None
    convert: str | None = None  # months_to_years
    fixed: float | None = None
    horizon: str | None = None  # "months" or "years"
    unit: str = ""
    prior_tags: tuple[str, ...] = ()


@dataclass(frozen=True)
class AltSkeleton:
    name: str
    term_slot: str
    bindings: dict[str, BindingSource]


@dataclass(frozen=True)
class ExtractionRule:
    slot: str
    pattern: str
    transform: str | None = None  # years_to_months | cents_to_dollars
    confidence: float = 1.0

    def compiled(self) -> re.Pattern:
        return re.compile(self.pattern, re.IGNORECASE)


@dataclass(frozen=True)
class SlotSchema:
    template_id: str
    title: str
    direction: Direction
    objective: str
    slots: tuple[SlotDef, ...]
    alternatives: tuple[AltSkeleton, ...]
    horizon_rule: str
    scripted_rules: tuple[ExtractionRule, ...] = ()

    def slot(self, name: str) -> SlotDef:
        for s in self.slots:
            if s.name == name:
                return s
        raise KeyError(name)

    def required_slots(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.slots if s.required)


def _maps_to(slot_name: str, alternatives: list[AltSkeleton]) -> tuple[str, ...]:
    targets = []
    for alt in alternatives:
        if alt.term_slot == slot_name:
            targets.append(f"{alt.name}.term_months")
        for pname, src in alt.bindings.items():
            if src.slot == slot_name:
                targets.append(f"{alt.name}.bindings.{pname}")
    return tuple(targets)


def load_template(source: str | Path) -> SlotSchema:
    """Load a template by id (bundled) or by path to a template JSON file."""
    name = str(source)
    if name.endswith(".json") or "/" in name:
        text = Path(source).read_text(encoding="utf-8")
    else:
        resource = files("decisim").joinpath(f"templates/{name}.json")
        if not resource.is_file():
            raise TemplateError(f"unknown template {name!r}")
        text = resource.read_text(encoding="utf-8")
    doc = json.loads(text)

    alternatives = []
    for alt_doc in doc["alternatives"]:
        bindings = {}
        for pname, b in alt_doc["bindings"].items():
            bindings[pname] = BindingSource(
                slot=b.get("slot"),
                convert=b.get("convert"),
                fixed=float(b["fixed"]) if "fixed" in b else None,
                horizon=b.get("horizon"),
                unit=b.get("unit", ""),
                prior_tags=tuple(b.get("prior_tags", ())),
            )
        alternatives.append(AltSkeleton(
            name=alt_doc["name"],
            term_slot=alt_doc["term_slot"],
            bindings=bindings,
        ))

    slots = []
    for s in doc["slots"]:
        if s["kind"] not in SLOT_KINDS:
            raise TemplateError(f"slot {s['name']!r} has unknown kind {s['kind']!r}")
        slots.append(SlotDef(
            name=s["name"],
            prompt=s["prompt"],
            kind=s["kind"],
            required=bool(s.get("required", True)),
            maps_to=_maps_to(s["name"], alternatives),
        ))

    rules = tuple(
        ExtractionRule(
            slot=r["slot"],
            pattern=r["pattern"],
            transform=r.get("transform"),
            confidence=float(r.get("confidence", 1.0)),
        )
        for r in doc.get("scripted_rules", ())
    )

    schema = SlotSchema(
        template_id=doc["template_id"],
        title=doc.get("title", doc["template_id"]),
        direction=Direction(doc.get("direction", "minimize")),
        objective=doc["objective"],
        slots=tuple(slots),
        alternatives=tuple(alternatives),
        horizon_rule=doc.get("horizon_rule", "renew_to_cover_longest"),
        scripted_rules=rules,
    )
    _check_template(schema)
    return schema


def _check_template(schema: SlotSchema) -> None:
    from . import exprlang

    needed = set(exprlang.identifiers(exprlang.parse(schema.objective)))
    slot_names = {s.name for s in schema.slots}
    required = {s.name for s in schema.slots if s.required}
    for alt in schema.alternatives:
        missing = needed - set(alt.bindings)
        if missing:
            raise TemplateError(f"alternative {alt.name!r} leaves {sorted(missing)} unbound")
        if alt.term_slot not in slot_names:
            raise TemplateError(f"alternative {alt.name!r} term slot {alt.term_slot!r} is not a slot")
        for pname, src in alt.bindings.items():
            if src.slot is not None and src.slot not in slot_names:
                raise TemplateError(f"binding {pname!r} references unknown slot {src.slot!r}")
        if alt.term_slot not in required:
            raise TemplateError(f"term slot {alt.term_slot!r} must be required")


def builtin_template_ids() -> list[str]:
    out = []
    for entry in files("decisim").joinpath("templates").iterdir():
        if entry.name.endswith(".json"):
            out.append(entry.name[:-5])
    return sorted(out)


# ---------------------------------------------------------------------------
# dialog state

class Phase(Enum):
    COLLECTING = "collecting"
    READY_TO_SIMULATE = "ready_to_simulate"
    SIMULATED = "simulated"
    CLOSED = "closed"


@dataclass(frozen=True)
class FilledSlot:
    slot: str
    value: float
    raw_text: str
    confidence: float


@dataclass(frozen=True)
class Candidate:
    slot: str
    value: float
    raw_text: str
    confidence: float


@dataclass(frozen=True)
class DialogState:
    session_id: str
    schema: SlotSchema
    filled: dict[str, FilledSlot] = field(default_factory=dict)
    pending: tuple[str, ...] = ()
    transcript: tuple[tuple[str, str, float], ...] = ()
    phase: Phase = Phase.COLLECTING


def new_session(schema: SlotSchema, session_id: str | None = None) -> DialogState:
    return DialogState(
        session_id=session_id or uuid.uuid4().hex,
        schema=schema,
        filled={},
        pending=schema.required_slots(),
        transcript=(),
        phase=Phase.COLLECTING,
    )


class AgentBackend(Protocol):
    def next_question(self, state: DialogState) -> str: ...

    def extract(self, state: DialogState, utterance: str) -> list[Candidate]: ...


def advance(state: DialogState, utterance: str, backend: AgentBackend) -> tuple[DialogState, str]:
    """Process one user utterance; returns the new state and the agent reply.

    Extractions at or above the confidence threshold fill their slots;
    anything below it triggers a confirmation question and fills nothing.
    Prior transcript entries are never touched.  The phase becomes
    ReadyToSimulate exactly when the last required slot fills.
    """
    if state.phase in (Phase.SIMULATED, Phase.CLOSED):
        raise SessionClosedError(state.phase)
    now = time.time()
    transcript = state.transcript + (("user", utterance, now),)

    unreachable = False
    candidates: list[Candidate] = []
    try:
        candidates = backend.extract(state, utterance)
    except BackendUnreachableError:
        unreachable = True

    slot_names = {s.name for s in state.schema.slots}
    filled = dict(state.filled)
    uncertain: Candidate | None = None
    for cand in candidates:
        if cand.slot not in slot_names or cand.slot in filled:
            continue
        if cand.confidence >= CONFIDENCE_THRESHOLD:
            filled[cand.slot] = FilledSlot(cand.slot, cand.value, cand.raw_text, cand.confidence)
        elif uncertain is None:
            uncertain = cand

    pending = tuple(s for s in state.schema.required_slots() if s not in filled)
    phase = Phase.READY_TO_SIMULATE if not pending else Phase.COLLECTING
    next_state = replace(state, filled=filled, pending=pending, phase=phase, transcript=transcript)

    if unreachable:
        reply = ("Sorry, I could not reach the language model just now. "
                 + _fallback_question(next_state))
    elif uncertain is not None:
        reply = (f"Did you mean {_render_value(uncertain.value)} for "
                 f"{uncertain.slot.replace('_', ' ')}? Please restate it plainly.")
    else:
        reply = backend.next_question(next_state)

    next_state = replace(next_state, transcript=next_state.transcript + (("agent", reply, now),))
    return next_state, reply


def _fallback_question(state: DialogState) -> str:
    if state.pending:
        return state.schema.slot(state.pending[0]).prompt
    return READY_MESSAGE


def _render_value(value: float) -> str:
    return str(int(value)) if float(value).is_integer() else f"{value:g}"


# ---------------------------------------------------------------------------
# number normalization

_NUMBER_CLEAN_RE = re.compile(r"[$,\s]")


def normalize_number(text: str) -> float:
    """Parse a user-facing number: strips currency symbols and separators."""
    return float(_NUMBER_CLEAN_RE.sub("", text))


def apply_transform(value: float, transform: str | None) -> float:
    if transform is None:
        return value
    if transform == "years_to_months":
        return value * 12.0
    if transform == "cents_to_dollars":
        return value / 100.0
    raise TemplateError(f"unknown transform {transform!r}")


# ---------------------------------------------------------------------------
# backends

class ScriptedBackend:
    """Deterministic unit-anchored extraction from a list of regex rules.

    Each rule captures one number for one slot; the first match per slot
    wins.  This is the reference backend the test suite runs.
    """

    def __init__(self, rules: tuple[ExtractionRule, ...]):
        self.rules = rules
        self._compiled = [(r, r.compiled()) for r in rules]

    @classmethod
    def from_template(cls, schema: SlotSchema) -> "ScriptedBackend":
        return cls(schema.scripted_rules)

    def next_question(self, state: DialogState) -> str:
        return _fallback_question(state)

    def extract(self, state: DialogState, utterance: str) -> list[Candidate]:
        out: list[Candidate] = []
        seen: set[str] = set()
        for rule, pattern in self._compiled:
            if rule.slot in seen:
                continue
            m = pattern.search(utterance)
            if not m:
                continue
            try:
                value = apply_transform(normalize_number(m.group(1)), rule.transform)
            except ValueError:
                continue
            if not math.isfinite(value) or value < 0:
                continue
            out.append(Candidate(rule.slot, value, m.group(0), rule.confidence))
            seen.add(rule.slot)
        return out


def scripted_backend(rules: list[ExtractionRule] | tuple[ExtractionRule, ...]) -> ScriptedBackend:
    return ScriptedBackend(tuple(rules))


@dataclass(frozen=True)
class LlmConfig:
    endpoint_url: str  # full chat-completions URL
    model: str
    api_key_env: str = "DECISIM_LLM_API_KEY"
    timeout_seconds: float = 30.0


class LlmBackend:
    """Chat-completion client speaking the de-facto JSON wire format.

    The extraction prompt pins the reply to a JSON object mapping slot
    names to numbers; anything else degrades to "no extraction" so a
    misbehaving model can never corrupt the dialog state.
    """

    def __init__(self, config: LlmConfig, transport: httpx.BaseTransport | None = None):
        self.config = config
        self._client = httpx.Client(transport=transport, timeout=config.timeout_seconds)

    def _chat(self, system: str, user: str) -> str:
        headers = {}
        key = os.environ.get(self.config.api_key_env, "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        try:
            resp = self._client.post(
                self.config.endpoint_url,
                json={
                    "model": self.config.model,
                    "messages": [
                        {"role": "system", "content": system},
                        {"role": "user", "content": user},
                    ],
                    "temperature": 0,
                },
                headers=headers,
            )
            resp.raise_for_status()
            return resp.json()["choices"][0]["message"]["content"]
        except (httpx.HTTPError, KeyError, IndexError, ValueError) as exc:
            raise BackendUnreachableError(str(exc)) from exc

    def next_question(self, state: DialogState) -> str:
        if not state.pending:
            return READY_MESSAGE
        head = state.schema.slot(state.pending[0])
        pending_list = ", ".join(state.pending)
        try:
            text = self._chat(
                "You help collect inputs for a cost comparison. Ask one short, "
                f"friendly question for the item named '{head.name}' ({head.kind}). "
                f"Still missing: {pending_list}. Reply with the question only.",
                head.prompt,
            ).strip()
            return text or head.prompt
        except BackendUnreachableError:
            return head.prompt

    def extract(self, state: DialogState, utterance: str) -> list[Candidate]:
        slot_lines = "\n".join(
            f"- {s.name}: {s.kind}, {s.prompt}" for s in state.schema.slots
        )
        reply = self._chat(
            "Extract numeric values for the slots below from the user message. "
            "Reply with ONLY a JSON object mapping slot names to plain numbers "
            "(dollars as numbers, rates in dollars per unit, durations in the "
            "slot's unit). Omit slots the message does not mention.\n"
            f"Slots:\n{slot_lines}",
            utterance,
        )
        return self._parse_reply(reply, state)

    def _parse_reply(self, reply: str, state: DialogState) -> list[Candidate]:
        text = reply.strip()
        if text.startswith("```"):
            text = text.strip("`")
            if text.startswith("json"):
                text = text[4:]
        try:
            doc = json.loads(text)
        except json.JSONDecodeError:
            return []
        if not isinstance(doc, dict):
            return []
        slot_names = {s.name for s in state.schema.slots}
        out = []
        for name, value in doc.items():
            if name not in slot_names:
                continue  # the schema is the contract; never invent slots
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                continue
            out.append(Candidate(name, float(value), reply, 1.0))
        return out


def llm_backend(config: LlmConfig, transport: httpx.BaseTransport | None = None) -> LlmBackend:
    return LlmBackend(config, transport=transport)


# ---------------------------------------------------------------------------
# problem construction

def _horizon_months(schema: SlotSchema, terms: dict[str, int]) -> int:
    if schema.horizon_rule != "renew_to_cover_longest":
        raise TemplateError(f"unknown horizon rule {schema.horizon_rule!r}")
    longest = max(terms.values())
    return max(-(-longest // t) * t for t in terms.values())


def _recenter(dist: Distribution, point: float) -> Distribution:
    if isinstance(dist, Fixed):
        return Fixed(point + dist.value)
    if isinstance(dist, Uniform):
        return Uniform(point + dist.lo, point + dist.hi)
    if isinstance(dist, Normal):
        return Normal(point + dist.mean_value, dist.stddev, point + dist.lo, point + dist.hi)
    if isinstance(dist, Triangular):
        return Triangular(point + dist.lo, point + dist.mode, point + dist.hi)
    raise TypeError(f"not a distribution: {dist!r}")


def build_problem(state: DialogState, priors=None,
                  sample_count: int = DEFAULT_SAMPLE_COUNT,
                  seed: int = DEFAULT_SEED) -> DecisionProblem:
    """Turn a completed dialog into a validated decision problem.

    Requires every required slot to be filled; this is enforced, not
    assumed, so a simulation can never start from a half-collected session.
    ``priors`` is any object with query_priors(tags, parameter_name); point
    values whose binding carries prior tags are widened into the stored
    spread, recentered on the user's value, with warehouse provenance.
    """
    if state.pending:
        raise IncompleteSlotsError(state.pending)
    schema = state.schema

    terms = {}
    for alt in schema.alternatives:
        months = state.filled[alt.term_slot].value
        terms[alt.name] = max(1, round(months))
    horizon = _horizon_months(schema, terms)

    alternatives = []
    for alt in schema.alternatives:
        bindings = {}
        for pname, src in alt.bindings.items():
            provenance = UserSupplied()
            if src.fixed is not None:
                dist: Distribution = Fixed(src.fixed)
            elif src.horizon is not None:
                dist = Fixed(float(horizon) if src.horizon == "months" else horizon / 12.0)
            else:
                filled = state.filled.get(src.slot)
                if filled is None:
                    raise PriorUnavailableError(pname)
                point = filled.value
                if src.convert == "months_to_years":
                    point = point / 12.0
                dist = Fixed(point)
                if src.prior_tags and priors is not None:
                    records = priors.query_priors(set(src.prior_tags), pname)
                    if records:
                        dist = _recenter(records[0].distribution, point)
                        provenance = WarehousePrior(records[0].id)
            bindings[pname] = ParameterSpec(pname, src.unit, dist, provenance)
        alternatives.append(Alternative(alt.name, terms[alt.name], bindings))

    problem = DecisionProblem(
        title=schema.title,
        alternatives=tuple(alternatives),
        objective=schema.objective,
        direction=schema.direction,
        comparison_horizon_months=horizon,
        sample_count=sample_count,
        seed=seed,
    )
    violations = validate_problem(problem)
    if violations:
        # A checked template plus filled slots cannot produce this; treat as a bug.
        raise TemplateError(f"built problem fails validation: {violations}")
    return problem
