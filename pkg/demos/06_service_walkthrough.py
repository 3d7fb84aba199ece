# The full HTTP session flow against an in-process server: create a
# session, chat until ready, simulate, ask a what-if, leave feedback.
# (The same calls work over the network via `decisim serve`.)
# Run as: python3 demos/06_service_walkthrough.py

import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from decisim.service import ServiceConfig, create_app
from decisim.warehouse import Warehouse, load_starter_priors

tmp = tempfile.TemporaryDirectory()
store = Warehouse(Path(tmp.name) / "store.log")
load_starter_priors(store)
client = TestClient(create_app(ServiceConfig(request_log=False), store=store))

created = client.post("/v1/sessions", json={"template_id": "two_option_cost_comparison"}).json()
sid = created["session_id"]
print("agent:", created["first_question"])

for text in [
    "I drive about 15,000 miles a year. My budget for monthly payments is around $400.",
    "If I buy, I plan to keep the car for about 5 years. I can make a down payment of $3,000, "
    "and I estimate annual maintenance costs at $500. For leasing, I'm considering a 3-year term "
    "with an allowance of 12,000 miles per year, and the overage charge is 15 cents per mile.",
]:
    reply = client.post(f"/v1/sessions/{sid}/messages", json={"text": text}).json()
    print("agent:", reply["agent_reply"], f"[{reply['phase']}]")

# Simulating early would have returned 409 with the missing slots; now the
# phase is ready_to_simulate and the call returns the full report.
report = client.post(f"/v1/sessions/{sid}/simulate",
                     json={"seed": 42, "sample_count": 50_000}).json()
print(f"\nrecommendation: {report['recommendation']}")
print("expected:", {k: f"{v:,.0f}" for k, v in report["expected"].items()})
print("win buy vs lease:", report["win_matrix"]["buy"]["lease"])

# What-if: drive 20,000 miles a year instead. The canonical problem is
# untouched; the overridden report comes back immediately.
whatif = client.post(f"/v1/sessions/{sid}/whatif",
                     json={"overrides": {"annual_miles": 20_000},
                           "seed": 42, "sample_count": 50_000}).json()
print("\nat 20,000 miles/year the lease expectation moves to",
      f"{whatif['expected']['lease']:,.0f}",
      f"(recommendation: {whatif['recommendation']})")

client.post(f"/v1/sessions/{sid}/feedback",
            json={"rating": 5, "text": "The process was smooth and informative."})
record = store.sessions()[0]
print("\nstored session", record.id, "feedback:", record.feedback)
store.close()
tmp.cleanup()
