# A complete slot-filling conversation, replayed through the deterministic
# scripted backend, then built into a problem and simulated.
# Run as: python3 demos/05_dialog_session.py

import tempfile
from pathlib import Path

from decisim import analyze
from decisim.dialog import ScriptedBackend, advance, build_problem, load_template, new_session
from decisim.warehouse import Warehouse, load_starter_priors

schema = load_template("two_option_cost_comparison")
backend = ScriptedBackend.from_template(schema)
state = new_session(schema)

conversation = [
    "I'm trying to decide if I should buy or lease a car. Can you help me figure out the best option?",
    "I drive about 15,000 miles a year. My budget for monthly payments is around $400. "
    "I prefer a new car with good fuel efficiency.",
    "If I buy, I plan to keep the car for about 5 years. I can make a down payment of $3,000, "
    "and I estimate annual maintenance costs at $500. For leasing, I'm considering a 3-year term "
    "with an allowance of 12,000 miles per year, and the overage charge is 15 cents per mile.",
]

for text in conversation:
    print(f"user:  {text[:72]}{'...' if len(text) > 72 else ''}")
    state, reply = advance(state, text, backend)
    print(f"agent: {reply}")
    print(f"       [{state.phase.value}; missing: {', '.join(state.pending) or 'nothing'}]")

print("\ncollected values:")
for name, fill in state.filled.items():
    print(f"  {name:<20} {fill.value:>10,.2f}   from {fill.raw_text!r}")

# Point values widen into distributions using stored priors: "about $500
# maintenance" plus a stored "+/- 100" spread becomes Uniform(400, 600),
# with the record id kept as provenance.
with tempfile.TemporaryDirectory() as tmp:
    store = Warehouse(Path(tmp) / "priors.log")
    load_starter_priors(store)
    problem = build_problem(state, priors=store, seed=42)

    print(f"\nbuilt problem: horizon {problem.comparison_horizon_months} months")
    buy = problem.alternatives[0]
    print("buy-side maintenance:", buy.bindings["maintenance_annual"].distribution,
          buy.bindings["maintenance_annual"].provenance)

    report = analyze(problem)
    print(f"\nrecommendation: {report.recommendation}")
    print({k: f"{v:,.0f}" for k, v in report.expected.items()})
    store.close()
