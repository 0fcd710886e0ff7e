"""Period-level outage cost assembly on top of the hourly dispatcher."""

import numpy as np
import pytest

from storeplan.rng import stream
from storeplan.simulate import SimulationContext


def test_fleet_uses_period_schedules(case_config, case_context):
    caps = (1000.0, 0.0, 3000.0, 0.0)
    f1 = case_context.fleet_for(1, caps)
    f4 = case_context.fleet_for(4, caps)
    assert f1.capacity.tolist() == list(caps)
    assert np.array_equal(f1.charge, f1.capacity)
    for unit, tech in enumerate(case_config.storage):
        assert f1.dod[unit] == tech.dod_schedule[0]
        assert f4.efficiency[unit] == tech.efficiency_schedule[3]


def test_period_trace_spans_five_years(case_context):
    trace = case_context.period_trace(stream(0, "sim-test"))
    assert trace.horizon_years == 5


def test_zero_capacity_cost_is_positive_and_repeatable(case_context):
    trace = case_context.period_trace(stream(1, "sim-test"))
    cost = case_context.period_cost(1, (0.0, 0.0, 0.0, 0.0), trace)
    again = case_context.period_cost(1, (0.0, 0.0, 0.0, 0.0), trace)
    assert cost > 0
    assert cost == again


def test_storage_weakly_reduces_cost(case_context):
    """More capacity can only remove lost load, never add it."""
    trace = case_context.period_trace(stream(2, "sim-test"))
    bare = case_context.period_cost(1, (0.0, 0.0, 0.0, 0.0), trace)
    small = case_context.period_cost(1, (1000.0, 0.0, 0.0, 0.0), trace)
    big = case_context.period_cost(1, (3000.0, 3000.0, 3000.0, 0.0), trace)
    assert bare >= small >= big


def test_later_periods_cost_more_for_same_trace(case_context):
    """Demand growth makes the same outage trace lose more energy later."""
    trace = case_context.period_trace(stream(3, "sim-test"))
    caps = (0.0, 0.0, 0.0, 0.0)
    costs = [case_context.period_cost(k, caps, trace) for k in (1, 2, 3, 4)]
    assert costs == sorted(costs)


def test_trial_cost_matches_trace_pipeline(case_context):
    direct = case_context.trial_outage_cost(2, (1000.0, 0.0, 0.0, 0.0),
                                            stream(4, "sim-test"))
    trace = case_context.period_trace(stream(4, "sim-test"))
    assembled = case_context.period_cost(2, (1000.0, 0.0, 0.0, 0.0), trace)
    assert direct == assembled


def test_fresh_fleet_each_outage(case_context):
    """A long trace must not carry depletion from one outage into the next.

    With one small unit and two long outages, cost equals the sum of the two
    single-outage costs computed from a full fleet each time.
    """
    from storeplan.outages import Outage, OutageTrace
    trace = OutageTrace(outages=(Outage(1000, 12), Outage(5000, 12)),
                        horizon_years=5)
    caps = (300.0, 0.0, 0.0, 0.0)
    whole = case_context.period_cost(1, caps, trace)
    parts = [case_context.period_cost(
        1, caps, OutageTrace(outages=(o,), horizon_years=5))
        for o in trace.outages]
    assert whole == pytest.approx(sum(parts))
