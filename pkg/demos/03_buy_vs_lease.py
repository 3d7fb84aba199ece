# The flagship comparison: buy a car for five years or lease-and-renew
# over the same six-year window. Run as: python3 demos/03_buy_vs_lease.py

from pathlib import Path

from decisim import analyze, load_problem, recommend, simulate, summarize

problem = load_problem(Path(__file__).parent / "problems" / "car.json")

print(problem.title)
print(f"horizon {problem.comparison_horizon_months} months, "
      f"{problem.sample_count:,} scenarios, seed {problem.seed}")
for alt in problem.alternatives:
    varying = {n: s.distribution for n, s in alt.bindings.items()
               if type(s.distribution).__name__ != "Fixed"}
    print(f"  {alt.name}: term {alt.term_months} months, varying inputs {varying}")

# One call simulates, compares, and attributes uncertainty.
report = analyze(problem)

print(f"\nrecommendation: {report.recommendation}")
for name, mean in report.expected.items():
    print(f"  E[{name}] = {mean:,.2f}  (stddev {report.stddev[name]:,.2f})")
print(f"P({report.recommendation} beats "
      f"{report.narrative.runner_up}) = {report.win_matrix[report.recommendation][report.narrative.runner_up]:.3f}")

decision = recommend(report, min_confidence=0.8)
print(f"confidence {decision.confidence:.3f}, caveats: {decision.caveats or 'none'}")

print("\nwhere the uncertainty comes from:")
for alt, row in report.sensitivity.items():
    shares = ", ".join(f"{p} {v:.1%}" for p, v in sorted(row.items(), key=lambda kv: -kv[1]) if v > 0)
    print(f"  {alt}: {shares or 'all inputs fixed'}")

# The raw scenario distribution is available too.
stats = summarize(simulate(problem))
for name, s in stats.items():
    p = s.percentiles
    print(f"\n{name}: p5 {p['p5']:,.0f} | median {p['p50']:,.0f} | p95 {p['p95']:,.0f}")
