import itertools
import json

import httpx
import pytest

from decisim import exprlang
from decisim.dialog import (
    Candidate,
    CONFIDENCE_THRESHOLD,
    DialogState,
    ExtractionRule,
    IncompleteSlotsError,
    LlmBackend,
    LlmConfig,
    Phase,
    PriorUnavailableError,
    ScriptedBackend,
    SessionClosedError,
    advance,
    build_problem,
    builtin_template_ids,
    llm_backend,
    load_template,
    new_session,
    normalize_number,
    scripted_backend,
)
from decisim.model import Uniform, WarehousePrior, validate_problem
from decisim.warehouse import PriorRecord

CAR_UTTERANCES = [
    "I'm trying to decide if I should buy or lease a car. Can you help me figure out the best option?",
    "I drive about 15,000 miles a year. My budget for monthly payments is around $400. "
    "I prefer a new car with good fuel efficiency.",
    "If I buy, I plan to keep the car for about 5 years. I can make a down payment of $3,000, "
    "and I estimate annual maintenance costs at $500. For leasing, I'm considering a 3-year term "
    "with an allowance of 12,000 miles per year, and the overage charge is 15 cents per mile.",
]


@pytest.fixture
def schema():
    return load_template("two_option_cost_comparison")


@pytest.fixture
def backend(schema):
    return ScriptedBackend.from_template(schema)


def run_script(schema, backend, utterances):
    state = new_session(schema)
    replies = []
    for text in utterances:
        state, reply = advance(state, text, backend)
        replies.append(reply)
    return state, replies


class StubBackend:
    """Feeds a fixed list of candidates per utterance; questions are canned."""

    def __init__(self, script):
        self.script = list(script)

    def next_question(self, state):
        return state.schema.slot(state.pending[0]).prompt if state.pending else "done"

    def extract(self, state, utterance):
        return self.script.pop(0) if self.script else []


# ---------------------------------------------------------------------------
# template

def test_builtin_template_is_listed():
    assert "two_option_cost_comparison" in builtin_template_ids()


def test_required_slots_cover_objective(schema):
    # every free variable of the objective is reachable from required slots
    needed = set(exprlang.identifiers(exprlang.parse(schema.objective)))
    for alt in schema.alternatives:
        assert needed <= set(alt.bindings)
    filled_from_slots = {
        src.slot for alt in schema.alternatives
        for src in alt.bindings.values() if src.slot is not None
    }
    assert filled_from_slots <= set(schema.required_slots())


def test_slot_maps_to_targets(schema):
    ownership = schema.slot("ownership_months")
    assert "buy.term_months" in ownership.maps_to
    assert "buy.bindings.payment_months" in ownership.maps_to
    shared = schema.slot("annual_miles")
    assert {"buy.bindings.annual_miles", "lease.bindings.annual_miles"} <= set(shared.maps_to)


# ---------------------------------------------------------------------------
# extraction and state machine

def test_car_conversation_reaches_ready(schema, backend):
    state, replies = run_script(schema, backend, CAR_UTTERANCES)
    assert state.phase is Phase.READY_TO_SIMULATE
    assert state.pending == ()
    values = {k: f.value for k, f in state.filled.items()}
    assert values == {
        "annual_miles": 15_000,
        "monthly_budget": 400,
        "ownership_months": 60,
        "down_payment": 3000,
        "maintenance_annual": 500,
        "lease_term_months": 36,
        "allowance": 12_000,
        "overage_rate": 0.15,
    }


def test_truncated_conversation_stays_collecting(schema, backend):
    state, _ = run_script(schema, backend, CAR_UTTERANCES[:2])
    assert state.phase is Phase.COLLECTING
    assert "lease_term_months" in state.pending
    with pytest.raises(IncompleteSlotsError) as err:
        build_problem(state)
    assert "lease_term_months" in err.value.missing


def test_terse_answers_fill_slots(schema, backend):
    state = new_session(schema)
    state, _ = advance(state, "$3,000 down, keep it 5 years, $500 maintenance", backend)
    values = {k: f.value for k, f in state.filled.items()}
    assert values == {"down_payment": 3000, "ownership_months": 60, "maintenance_annual": 500}


def test_unextractable_utterance_only_grows_transcript(schema, backend):
    state = new_session(schema)
    before = state
    state, reply = advance(state, "hmm, not sure yet", backend)
    assert state.filled == before.filled
    assert state.pending == before.pending
    # reply re-asks the head of the queue
    assert reply == schema.slot(state.pending[0]).prompt
    assert len(state.transcript) == 2


def test_transcript_is_append_only(schema, backend):
    state = new_session(schema)
    seen = []
    for text in CAR_UTTERANCES:
        prev = state.transcript
        state, _ = advance(state, text, backend)
        assert state.transcript[:len(prev)] == prev
        seen.append(len(state.transcript))
    assert seen == [2, 4, 6]


def test_rule_match_simple_money(schema):
    rules = [ExtractionRule("monthly_budget", r"around \$\s*([\d,]+)")]
    backend = scripted_backend(rules)
    state = new_session(schema)
    cands = backend.extract(state, "around $400")
    assert cands == [Candidate("monthly_budget", 400.0, "around $400", 1.0)]
    state, _ = advance(state, "around $400", backend)
    assert state.filled["monthly_budget"].value == 400.0
    assert state.filled["monthly_budget"].confidence == 1.0


def test_low_confidence_triggers_confirmation(schema):
    rules = [ExtractionRule("monthly_budget", r"([\d,]+)", confidence=0.5)]
    state = new_session(schema)
    state, reply = advance(state, "maybe 400", scripted_backend(rules))
    assert "monthly_budget" not in state.filled
    assert "400" in reply and "?" in reply  # asks for confirmation instead of filling
    assert state.phase is Phase.COLLECTING


def test_threshold_boundary_fills(schema):
    rules = [ExtractionRule("monthly_budget", r"([\d,]+)", confidence=CONFIDENCE_THRESHOLD)]
    state, _ = run_script(schema, scripted_backend(rules), ["400"])
    assert state.filled["monthly_budget"].value == 400.0


def test_candidates_outside_schema_are_ignored(schema):
    stub = StubBackend([[Candidate("not_a_slot", 1.0, "x", 1.0)]])
    state, _ = run_script(schema, stub, ["whatever"])
    assert state.filled == {}


def test_closed_session_rejects_messages(schema, backend):
    state = new_session(schema)
    state = DialogState(**{**state.__dict__, "phase": Phase.CLOSED})
    with pytest.raises(SessionClosedError):
        advance(state, "hello", backend)


def test_normalize_number():
    assert normalize_number("$3,000") == 3000.0
    assert normalize_number("12,000") == 12_000.0
    assert normalize_number(" 400 ") == 400.0


# ---------------------------------------------------------------------------
# slot-completeness safety: exhaustive small-script model check

def test_no_path_reaches_ready_with_missing_slots(schema):
    required = schema.required_slots()
    for filled_subset in itertools.chain.from_iterable(
            itertools.combinations(required, k) for k in range(len(required) + 1)):
        script = [[Candidate(s, 1.0, s, 1.0)] for s in filled_subset] or [[]]
        state, _ = run_script(schema, StubBackend(script), ["m"] * len(script))
        complete = set(filled_subset) == set(required)
        assert (state.phase is Phase.READY_TO_SIMULATE) == complete
        if not complete:
            with pytest.raises(IncompleteSlotsError):
                build_problem(state)


# ---------------------------------------------------------------------------
# problem construction

def fill_all(schema):
    values = {
        "annual_miles": 15_000, "monthly_budget": 400, "ownership_months": 60,
        "down_payment": 3000, "maintenance_annual": 500, "lease_term_months": 36,
        "allowance": 12_000, "overage_rate": 0.15,
    }
    script = [[Candidate(k, v, str(v), 1.0) for k, v in values.items()]]
    state, _ = run_script(schema, StubBackend(script), ["all in one breath"])
    return state


def test_build_problem_point_values(schema):
    state = fill_all(schema)
    problem = build_problem(state)  # no prior store: everything stays a point
    assert validate_problem(problem) == []
    assert problem.comparison_horizon_months == 72
    terms = {a.name: a.term_months for a in problem.alternatives}
    assert terms == {"buy": 60, "lease": 36}

    # native-term evaluation matches the arithmetic oracle
    expr = problem.objective_expr()
    by_name = {a.name: a for a in problem.alternatives}
    buy_scope = exprlang.EvalScope(
        {k: s.distribution.value for k, s in by_name["buy"].bindings.items()}, months=60)
    lease_scope = exprlang.EvalScope(
        {k: s.distribution.value for k, s in by_name["lease"].bindings.items()}, months=36)
    assert exprlang.eval_expr(expr, buy_scope) == 29_500
    assert exprlang.eval_expr(expr, lease_scope) == 15_750


def test_build_problem_applies_priors(schema):
    class OnePriorStore:
        def query_priors(self, tags, parameter_name):
            if parameter_name == "maintenance_annual" and "maintenance" in tags:
                return [PriorRecord(
                    id="car.maintenance",
                    context_tags=frozenset({"vehicle", "maintenance"}),
                    parameter_name="maintenance_annual",
                    distribution=Uniform(-100, 100),
                    source="test",
                    created_at="2024-01-01T00:00:00+00:00",
                )]
            return []

    problem = build_problem(fill_all(schema), priors=OnePriorStore())
    buy = {a.name: a for a in problem.alternatives}["buy"]
    maintenance = buy.bindings["maintenance_annual"]
    assert maintenance.distribution == Uniform(400, 600)
    assert maintenance.provenance == WarehousePrior("car.maintenance")
    # nothing else had a prior: still user-supplied points
    assert buy.bindings["down_payment"].distribution.value == 3000


def test_build_problem_backend_independent(schema):
    backend = ScriptedBackend.from_template(schema)
    via_rules, _ = run_script(schema, backend, CAR_UTTERANCES)
    via_stub = fill_all(schema)
    assert build_problem(via_rules) == build_problem(via_stub)


def test_build_problem_requires_every_slot(schema):
    state = new_session(schema)
    with pytest.raises(IncompleteSlotsError):
        build_problem(state)


def test_optional_slot_without_prior_raises(tmp_path):
    doc = {
        "template_id": "mini",
        "title": "mini",
        "direction": "minimize",
        "objective": "x + y",
        "horizon_rule": "renew_to_cover_longest",
        "slots": [
            {"name": "months_slot", "kind": "months", "required": True, "prompt": "term?"},
            {"name": "x_slot", "kind": "money", "required": True, "prompt": "x?"},
            {"name": "y_slot", "kind": "money", "required": False, "prompt": "y?"},
        ],
        "alternatives": [
            {"name": "a", "term_slot": "months_slot",
             "bindings": {"x": {"slot": "x_slot"}, "y": {"slot": "y_slot", "prior_tags": ["t"]}}},
            {"name": "b", "term_slot": "months_slot",
             "bindings": {"x": {"fixed": 1}, "y": {"fixed": 2}}},
        ],
    }
    path = tmp_path / "mini.json"
    path.write_text(json.dumps(doc))
    schema = load_template(path)
    script = [[Candidate("months_slot", 12, "12", 1.0), Candidate("x_slot", 5, "5", 1.0)]]
    state, _ = run_script(schema, StubBackend(script), ["fill"])
    assert state.phase is Phase.READY_TO_SIMULATE  # y_slot is optional
    with pytest.raises(PriorUnavailableError) as err:
        build_problem(state)  # no store to supply the optional distribution
    assert err.value.parameter == "y"


# ---------------------------------------------------------------------------
# llm backend

def make_llm(handler):
    transport = httpx.MockTransport(handler)
    config = LlmConfig(endpoint_url="http://llm.test/v1/chat/completions", model="test-model")
    return llm_backend(config, transport=transport)


def chat_reply(content):
    def handler(request):
        return httpx.Response(200, json={"choices": [{"message": {"content": content}}]})
    return handler


def test_llm_wellformed_json_reply_fills(schema):
    backend = make_llm(chat_reply('{"annual_miles": 15000}'))
    state, _ = run_script(schema, backend, ["I drive quite a bit"])
    assert state.filled["annual_miles"].value == 15_000


def test_llm_prose_reply_degrades_to_no_fill(schema):
    backend = make_llm(chat_reply("Sure! The user seems to drive a lot."))
    state = new_session(schema)
    state, reply = advance(state, "I drive quite a bit", backend)
    assert state.filled == {}
    assert reply  # a question is still asked
    assert state.phase is Phase.COLLECTING


def test_llm_never_invents_slots(schema):
    backend = make_llm(chat_reply('{"annual_miles": 15000, "shoe_size": 44}'))
    cands = backend.extract(new_session(schema), "whatever")
    assert {c.slot for c in cands} == {"annual_miles"}


def test_llm_unreachable_yields_apology_not_crash(schema):
    def handler(request):
        raise httpx.ConnectError("no route to host")
    backend = make_llm(handler)
    state = new_session(schema)
    state, reply = advance(state, "hello", backend)
    assert "Sorry" in reply
    assert state.phase is Phase.COLLECTING
    assert len(state.transcript) == 2  # the session survived


def test_llm_code_fenced_json_accepted(schema):
    backend = make_llm(chat_reply('```json\n{"down_payment": 3000}\n```'))
    cands = backend.extract(new_session(schema), "three grand down")
    assert cands and cands[0].slot == "down_payment" and cands[0].value == 3000


def test_llm_next_question_falls_back_to_prompt(schema):
    def handler(request):
        raise httpx.ConnectError("down")
    backend = make_llm(handler)
    state = new_session(schema)
    assert backend.next_question(state) == schema.slot(state.pending[0]).prompt
