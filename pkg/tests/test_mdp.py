"""MDP dynamics: action wiring, price chains, rewards, and state counting."""

import itertools

import numpy as np
import pytest

from storeplan.config import PlanningConfig, StorageTechnology
from storeplan.mdp import (MdpAction, MdpEnv, MdpState, NO_OP,
                           count_states_component_product,
                           count_states_reachable, decode_state, encode_state)
from storeplan.renewables import RenewableParams
from storeplan.rng import stream

RENEWABLES = RenewableParams(
    eta_solar=0.15, cell_area_m2=1.0, cells_per_panel=1, panels=1,
    eta_wind=0.4, air_density=1.225, rotor_area_m2=1.0, turbines=1,
    cut_in_ms=3.0, cut_out_ms=22.0)


def tech(uid, advance, horizon=4, price=None):
    price = price or tuple(400 - 50 * k for k in range(horizon))
    return StorageTechnology(
        id=uid, name=f"tech{uid}", price_schedule=tuple(price),
        advance_prob_schedule=tuple(advance),
        lifetime_schedule=(15,) * horizon,
        efficiency_schedule=(0.9,) * horizon,
        dod_schedule=(0.8,) * horizon)


def planning(horizon=4, levels=(300.0, 1000.0, 3000.0)):
    return PlanningConfig(
        horizon_periods=horizon, years_per_period=5, interest_rate=0.02,
        demand_growth_rate=0.01, caidi=5.122, saifi=1.155,
        expansion_levels_kwh=tuple(levels), renewables=RENEWABLES)


def make_env(units=2, horizon=4, advance=0.7, cost=None):
    storage = tuple(
        tech(u, (advance,) * (horizon - 1) + (0.0,), horizon)
        for u in range(units))
    return MdpEnv(planning(horizon), storage,
                  outage_cost=cost or (lambda k, caps: 0.0))


def test_action_enumeration_and_indexing():
    env = make_env(units=2)
    assert env.num_actions == 7
    assert env.actions[0] is NO_OP
    for i, act in enumerate(env.actions):
        assert env.action_index(act) == i
    assert env.actions[1] == MdpAction(0, 0)
    assert env.actions[6] == MdpAction(1, 2)


def test_initial_state_and_terminal():
    env = make_env()
    s0 = env.initial_state()
    assert s0 == MdpState(1, (1, 1), (0.0, 0.0))
    assert not env.is_terminal(s0)
    assert env.is_terminal(MdpState(5, (1, 1), (0.0, 0.0)))


def test_apply_action_accumulates_capacity():
    env = make_env()
    s = MdpState(2, (2, 1), (1000.0, 0.0))
    caps = env.apply_action(s, MdpAction(0, 2))
    assert caps == (4000.0, 0.0)
    assert env.apply_action(s, NO_OP) == (1000.0, 0.0)


def test_price_chain_advances_with_certainty():
    env = make_env(advance=1.0)
    rng = stream(0, "mdp-test")
    s = env.transition(env.initial_state(), NO_OP, rng)
    assert s.price_idx == (2, 2)
    assert s.period == 2


def test_price_chain_freezes_at_zero_probability():
    env = make_env(advance=0.0)
    rng = stream(0, "mdp-test")
    s = env.transition(env.initial_state(), NO_OP, rng)
    assert s.price_idx == (1, 1)


def test_price_index_caps_at_horizon():
    env = make_env(advance=1.0)
    rng = stream(0, "mdp-test")
    s = MdpState(3, (4, 4), (0.0, 0.0))
    nxt = env.transition(s, NO_OP, rng)
    assert nxt.price_idx == (4, 4)


def test_advance_frequency_matches_probability():
    env = make_env(advance=0.7)
    rng = stream(1, "mdp-test")
    hits = sum(env.transition(env.initial_state(), NO_OP, rng).price_idx[0] == 2
               for _ in range(4_000))
    assert hits / 4_000 == pytest.approx(0.7, abs=0.03)


def test_reward_charges_investment_at_current_chain_price():
    env = make_env(cost=lambda k, caps: 0.0)
    s = MdpState(2, (3, 1), (0.0, 0.0))
    act = MdpAction(0, 1)  # 1000 kWh at chain index 3 -> price 300
    from storeplan.finance import investment_cost
    expected = investment_cost(1000.0, 300.0, period=2, horizon_periods=4,
                               years_per_period=5, rate=0.02,
                               lifetime_years=15)
    assert env.reward(s, act) == pytest.approx(-expected)


def test_reward_queries_post_action_capacity():
    seen = []

    def spy(k, caps):
        seen.append((k, caps))
        return 123.0

    env = make_env(cost=spy)
    s = MdpState(1, (1, 1), (300.0, 0.0))
    env.reward(s, MdpAction(1, 0))
    assert seen == [(1, (300.0, 300.0))]


def test_outage_memo_avoids_repeat_queries():
    calls = []

    def counting(k, caps):
        calls.append((k, caps))
        return 1.0

    env = make_env(cost=counting)
    s = MdpState(1, (1, 1), (0.0, 0.0))
    env.reward(s, NO_OP)
    env.reward(s, NO_OP)
    # same period and capacities from a different price index: still cached
    env.reward(MdpState(1, (2, 2), (0.0, 0.0)), NO_OP)
    assert len(calls) == 1


def test_encode_decode_round_trip():
    s = MdpState(3, (2, 4), (1300.0, 0.0))
    assert decode_state(encode_state(s), 2) == s


def test_encode_uses_compact_capacity_format():
    s = MdpState(1, (1, 1), (300.0, 0.0))
    assert encode_state(s) == "1,1,1,300,0"


def test_decode_rejects_wrong_width():
    with pytest.raises(ValueError):
        decode_state("1,1,300", 2)


def test_component_product_count_matches_closed_form():
    states, pairs = count_states_component_product(4, 3, 4)
    expected = 1
    for k in range(2, 5):
        expected += k ** 4 * (1 + 3 * (k - 1)) ** 4
    assert states == expected
    assert pairs == expected * 13


def test_reachable_count_matches_joint_enumeration():
    """Factored counting must agree with a brute-force walk of the dynamics."""
    horizon, units = 3, 2
    storage = (tech(0, (0.7, 0.0, 0.0), horizon),
               tech(1, (1.0, 0.7, 0.0), horizon))
    plan = planning(horizon, levels=(300.0, 1000.0))
    env = MdpEnv(plan, storage, outage_cost=lambda k, caps: 0.0)

    frontier = {env.initial_state()}
    seen = set(frontier)
    while frontier:
        nxt = set()
        for s in frontier:
            if env.is_terminal(s):
                continue
            for act in env.actions:
                caps = env.apply_action(s, act)
                chains = []
                for u in range(units):
                    p = storage[u].advance_prob_schedule[s.period - 1]
                    opts = set()
                    if p < 1.0:
                        opts.add(s.price_idx[u])
                    if p > 0.0:
                        opts.add(min(s.price_idx[u] + 1, horizon))
                    chains.append(opts)
                for combo in itertools.product(*chains):
                    t = MdpState(s.period + 1, combo, caps)
                    if t not in seen and not env.is_terminal(t):
                        nxt.add(t)
        seen |= nxt
        frontier = nxt

    assert count_states_reachable(plan, storage) == len(seen)


def test_reachable_case_study_figures(case_config):
    assert count_states_reachable(case_config.planning,
                                  case_config.storage) == 123_036
    states, pairs = count_states_component_product(4, 3, 4)
    assert states == 2_758_578
    assert pairs == 35_861_514


def test_step_returns_reward_and_successor():
    env = make_env(cost=lambda k, caps: 10.0)
    rng = stream(2, "mdp-test")
    r, s = env.step(env.initial_state(), NO_OP, rng)
    assert r == -10.0
    assert s.period == 2
