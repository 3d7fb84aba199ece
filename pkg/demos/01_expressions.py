# Walkthrough of the objective expression language: parsing, inspecting,
# evaluating. Run as: python3 demos/01_expressions.py

from decisim import exprlang

# A total-cost expression: an upfront payment, a recurring payment, yearly
# maintenance, and a mileage overage charge. `months` and `years` are
# builtins supplied at evaluation time.
TCO = ("down_payment + monthly_payment * months + maintenance_annual * years "
       "+ overage_rate * max(annual_miles - allowance, 0) * years")

tree = exprlang.parse(TCO)
print("parsed OK; identifiers in first-occurrence order:")
print("  ", exprlang.identifiers(tree))

# Pretty-printing round-trips: the reprinted source parses to the same tree.
printed = exprlang.to_source(tree)
assert exprlang.parse(printed) == tree
print("round-trip source:", printed[:60], "...")

# Evaluate the purchase side: $3,000 down, $400/month for 60 months,
# $500/year maintenance for 5 years, no overage.
buy = exprlang.eval_expr(tree, exprlang.EvalScope(
    {"down_payment": 3000, "monthly_payment": 400, "maintenance_annual": 500,
     "overage_rate": 0, "annual_miles": 15_000, "allowance": 12_000},
    months=60,
))
print(f"owning for 5 years costs {buy:,.2f}")          # 29,500.00

# The lease side at its own 36-month term: $400/month plus 15 cents per
# mile over a 12,000-mile allowance while driving 15,000.
lease = exprlang.eval_expr(tree, exprlang.EvalScope(
    {"down_payment": 0, "monthly_payment": 400, "maintenance_annual": 0,
     "overage_rate": 0.15, "annual_miles": 15_000, "allowance": 12_000},
    months=36,
))
print(f"leasing for 3 years costs {lease:,.2f}")        # 15,750.00

# Errors are precise and typed.
try:
    exprlang.parse("2 +")
except exprlang.ExprSyntaxError as exc:
    print("syntax error as expected:", exc)

try:
    exprlang.eval_expr(exprlang.parse("x / y"), exprlang.EvalScope({"x": 1, "y": 0}, months=1))
except exprlang.DivisionByZeroError as exc:
    print("runtime division error as expected:", exc)
