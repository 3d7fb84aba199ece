import pytest

from decisim.model import (
    Alternative,
    DecisionProblem,
    Direction,
    Fixed,
    ParameterSpec,
    Uniform,
)


def spec(name, dist, unit=""):
    return ParameterSpec(name=name, unit=unit, distribution=dist)


def make_problem(alternatives, objective, direction=Direction.MINIMIZE,
                 horizon=1, samples=10_000, seed=123, title="test problem"):
    return DecisionProblem(
        title=title,
        alternatives=tuple(alternatives),
        objective=objective,
        direction=direction,
        comparison_horizon_months=horizon,
        sample_count=samples,
        seed=seed,
    )


@pytest.fixture
def iid_uniform_pair():
    """Two alternatives with independent U(0,1) objectives (distinct names)."""
    def build(samples=100_000, seed=7):
        return make_problem(
            [
                Alternative("a", 1, {"x": spec("x", Uniform(0, 1)), "y": spec("y", Fixed(0))}),
                Alternative("b", 1, {"x": spec("x", Fixed(0)), "y": spec("y", Uniform(0, 1))}),
            ],
            "x + y",
            samples=samples,
            seed=seed,
        )
    return build


CAR_OBJECTIVE = (
    "down_payment + monthly_payment * min(months, payment_months) "
    "+ maintenance_annual * min(years, maintenance_years) "
    "+ overage_rate * max(annual_miles - allowance, 0) * min(years, overage_years)"
)


def car_bindings(monthly, maintenance, miles, *, down, payment_months, maintenance_years,
                 overage_rate, overage_years, allowance=12_000):
    return {
        "down_payment": spec("down_payment", Fixed(down), "USD"),
        "monthly_payment": spec("monthly_payment", monthly, "USD/month"),
        "payment_months": spec("payment_months", Fixed(payment_months), "months"),
        "maintenance_annual": spec("maintenance_annual", maintenance, "USD/year"),
        "maintenance_years": spec("maintenance_years", Fixed(maintenance_years), "years"),
        "overage_rate": spec("overage_rate", Fixed(overage_rate), "USD/mile"),
        "annual_miles": spec("annual_miles", miles, "miles/year"),
        "allowance": spec("allowance", Fixed(allowance), "miles/year"),
        "overage_years": spec("overage_years", Fixed(overage_years), "years"),
    }


@pytest.fixture
def car_fixed_problem():
    """Point-estimate buy vs lease; the lease runs its own 36-month term."""
    return make_problem(
        [
            Alternative("buy", 60, car_bindings(
                Fixed(400), Fixed(500), Fixed(15_000),
                down=3000, payment_months=60, maintenance_years=5,
                overage_rate=0, overage_years=0)),
            Alternative("lease", 36, car_bindings(
                Fixed(400), Fixed(0), Fixed(15_000),
                down=0, payment_months=36, maintenance_years=0,
                overage_rate=0.15, overage_years=3)),
        ],
        CAR_OBJECTIVE,
        horizon=72,
        samples=1000,
        seed=42,
    )


@pytest.fixture
def car_problem():
    """Buy vs lease with spread inputs, lease renewed across the horizon."""
    return make_problem(
        [
            Alternative("buy", 60, car_bindings(
                Uniform(350, 450), Uniform(400, 600), Uniform(10_000, 20_000),
                down=3000, payment_months=60, maintenance_years=5,
                overage_rate=0, overage_years=0)),
            Alternative("lease", 36, car_bindings(
                Uniform(350, 450), Fixed(0), Uniform(10_000, 20_000),
                down=0, payment_months=72, maintenance_years=0,
                overage_rate=0.15, overage_years=6)),
        ],
        CAR_OBJECTIVE,
        horizon=72,
        samples=100_000,
        seed=42,
    )
