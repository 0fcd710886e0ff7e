"""Scenario-conditioned policy extraction and Monte Carlo policy evaluation.

A price scenario fixes, for every unit and period boundary, whether the price
chain advances. Extraction walks the trained q-table along that deterministic
price path, choosing the best action among those actually visited during
training and flagging any state the run never reached. Evaluation replays a
policy's build-out against fresh outage traces; trials share random-number
streams across policies so comparisons difference away trace noise.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .config import StorageTechnology
from .finance import investment_cost
from .mdp import MdpAction, MdpEnv, MdpState, NO_OP, encode_state
from .qlearn import QTable
from .rng import stream
from .simulate import SimulationContext

__all__ = [
    "PriceScenario", "PolicyStep", "PolicyReport", "PolicyValue",
    "default_scenarios", "load_scenarios", "write_scenarios",
    "extract_policy", "never_invest_report", "write_policy_csv",
    "read_policy_csv", "evaluate_policy", "compare_policies",
    "write_comparison_csv",
]

SCENARIO_FORMAT = "storeplan-scenarios-v1"


@dataclass(frozen=True)
class PriceScenario:
    """Deterministic advance/stay pattern per unit across period boundaries."""

    id: str
    description: str
    advance: dict[str, tuple[bool, ...]]

    def resolve(self, storage: tuple[StorageTechnology, ...],
                horizon_periods: int) -> tuple[tuple[bool, ...], ...]:
        """Per-unit advance flags in storage order; validates coverage."""
        rows = []
        for tech in storage:
            if tech.name not in self.advance:
                raise ValueError(
                    f"scenario {self.id}: no advance pattern for {tech.name!r}")
            flags = self.advance[tech.name]
            if len(flags) != horizon_periods - 1:
                raise ValueError(
                    f"scenario {self.id}: {tech.name!r} needs "
                    f"{horizon_periods - 1} boundary flags, got {len(flags)}")
            rows.append(tuple(bool(b) for b in flags))
        return tuple(rows)

    def price_path(self, storage: tuple[StorageTechnology, ...],
                   horizon_periods: int) -> list[tuple[int, ...]]:
        """Price index per unit for each period 1..K."""
        flags = self.resolve(storage, horizon_periods)
        idx = [1] * len(storage)
        path = [tuple(idx)]
        for b in range(horizon_periods - 1):
            for u in range(len(storage)):
                if flags[u][b]:
                    idx[u] = min(idx[u] + 1, horizon_periods)
            path.append(tuple(idx))
        return path


def default_scenarios() -> dict[str, PriceScenario]:
    """The eight bundled price futures for the four-technology case study."""
    on = (True, True, True)

    def combo(sid, description, **overrides):
        advance = {"li_ion": on, "lead_acid": on, "vanadium": on,
                   "flywheel": on}
        advance.update(overrides)
        return PriceScenario(id=sid, description=description,
                             advance={k: tuple(v) for k, v in advance.items()})

    return {
        "1": combo("1", "all technologies decline every period"),
        "2": combo("2", "vanadium stalls except mid-horizon",
                   vanadium=(False, True, False)),
        "3": combo("3", "li-ion stalls except mid-horizon",
                   li_ion=(False, True, False)),
        "4": combo("4", "li-ion and vanadium stall except mid-horizon",
                   li_ion=(False, True, False), vanadium=(False, True, False)),
        "5": combo("5", "li-ion frozen, vanadium skips the middle boundary",
                   li_ion=(False, False, False), vanadium=(True, False, True)),
        "6": combo("6", "vanadium frozen, li-ion skips the middle boundary",
                   vanadium=(False, False, False), li_ion=(True, False, True)),
        "7": combo("7", "every technology starts declining one period late",
                   li_ion=(False, True, True), lead_acid=(False, True, True),
                   vanadium=(False, True, True), flywheel=(False, True, True)),
        "8": combo("8", "late decline, li-ion and vanadium later still",
                   li_ion=(False, False, True), lead_acid=(False, True, True),
                   vanadium=(False, False, True), flywheel=(False, True, True)),
    }


def load_scenarios(path) -> dict[str, PriceScenario]:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != SCENARIO_FORMAT:
        raise ValueError(f"{path}: not a scenario file")
    out = {}
    for sid, body in doc["scenarios"].items():
        advance = {name: tuple(bool(b) for b in flags)
                   for name, flags in body["advance"].items()}
        out[sid] = PriceScenario(id=sid,
                                 description=body.get("description", ""),
                                 advance=advance)
    return out


def write_scenarios(scenarios: dict[str, PriceScenario], path) -> None:
    doc = {
        "format": SCENARIO_FORMAT,
        "scenarios": {
            sid: {"description": sc.description,
                  "advance": {name: list(flags)
                              for name, flags in sc.advance.items()}}
            for sid, sc in scenarios.items()
        },
    }
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


@dataclass(frozen=True)
class PolicyStep:
    period: int
    action: MdpAction
    unit_name: str
    level_kwh: float
    unit_prices: tuple[float, ...]
    capacity_after: tuple[float, ...]
    q_value: float
    visit_count: int


@dataclass
class PolicyReport:
    scenario_id: str
    steps: list[PolicyStep]
    flags: list[str] = field(default_factory=list)

    @property
    def total_kwh(self) -> float:
        return sum(self.steps[-1].capacity_after) if self.steps else 0.0


def _visited_argmax(q_row, visits):
    """Best visited action index, or None if nothing was ever tried here."""
    best, best_q = None, -math.inf
    for i, (q, v) in enumerate(zip(q_row, visits)):
        if v > 0 and q > best_q:
            best, best_q = i, q
    return best


def extract_policy(qtable: QTable, env: MdpEnv,
                   scenario: PriceScenario) -> PolicyReport:
    """Greedy walk of the table along the scenario's deterministic prices.

    Only actions with nonzero visit counts compete; a state with no visited
    action at all (or absent from the table) falls back to no-op and is
    recorded in the report's flags.
    """
    horizon = env.planning.horizon_periods
    path = scenario.price_path(env.storage, horizon)
    steps: list[PolicyStep] = []
    flags: list[str] = []
    caps = (0.0,) * env.num_units
    for k in range(1, horizon + 1):
        state = MdpState(k, path[k - 1], caps)
        ai = None
        q_row = [0.0] * env.num_actions
        visits = [0] * env.num_actions
        if state in qtable:
            q_row = qtable.q_values(state)
            visits = qtable.visit_counts(state)
            ai = _visited_argmax(q_row, visits)
        if ai is None:
            flags.append(f"period {k}: state {encode_state(state)} has no "
                         f"visited action; defaulting to no-op")
            ai = 0
        action = env.actions[ai]
        caps = env.apply_action(state, action)
        prices = tuple(env.storage[u].price_schedule[state.price_idx[u] - 1]
                       for u in range(env.num_units))
        steps.append(PolicyStep(
            period=k, action=action,
            unit_name="" if action.is_noop else env.storage[action.unit].name,
            level_kwh=0.0 if action.is_noop else env.levels[action.level],
            unit_prices=prices, capacity_after=caps,
            q_value=q_row[ai], visit_count=visits[ai]))
    return PolicyReport(scenario_id=scenario.id, steps=steps, flags=flags)


def never_invest_report(env: MdpEnv, scenario: PriceScenario) -> PolicyReport:
    """Baseline: hold zero storage through the whole horizon."""
    horizon = env.planning.horizon_periods
    path = scenario.price_path(env.storage, horizon)
    caps = (0.0,) * env.num_units
    steps = [PolicyStep(period=k, action=NO_OP, unit_name="", level_kwh=0.0,
                        unit_prices=tuple(
                            env.storage[u].price_schedule[path[k - 1][u] - 1]
                            for u in range(env.num_units)),
                        capacity_after=caps, q_value=0.0, visit_count=0)
             for k in range(1, horizon + 1)]
    return PolicyReport(scenario_id=f"never-invest[{scenario.id}]",
                        steps=steps, flags=[])


def write_policy_csv(report: PolicyReport,
                     storage: tuple[StorageTechnology, ...], path) -> None:
    names = [t.name for t in storage]
    header = (["period", "action_unit", "action_level_kwh"]
              + [f"price_per_kwh_{n}" for n in names]
              + [f"cum_capacity_kwh_{n}" for n in names])
    lines = [",".join(header)]
    for s in report.steps:
        row = [str(s.period), s.unit_name or "none", f"{s.level_kwh:g}"]
        row += [f"{p:g}" for p in s.unit_prices]
        row += [f"{c:g}" for c in s.capacity_after]
        lines.append(",".join(row))
    text = "\n".join(lines) + "\n"
    for flag in report.flags:
        text += f"# {flag}\n"
    Path(path).write_text(text)


def read_policy_csv(path, storage: tuple[StorageTechnology, ...],
                    levels) -> PolicyReport:
    names = [t.name for t in storage]
    lines = [ln for ln in Path(path).read_text().splitlines()
             if ln and not ln.startswith("#")]
    expect = (["period", "action_unit", "action_level_kwh"]
              + [f"price_per_kwh_{n}" for n in names]
              + [f"cum_capacity_kwh_{n}" for n in names])
    if not lines or lines[0].split(",") != expect:
        raise ValueError(f"{path}: unexpected policy header")
    units = len(names)
    steps = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != 3 + 2 * units:
            raise ValueError(f"{path}: bad policy row {ln!r}")
        period = int(parts[0])
        unit_name = parts[1]
        level_kwh = float(parts[2])
        prices = tuple(float(x) for x in parts[3:3 + units])
        caps = tuple(float(x) for x in parts[3 + units:])
        if unit_name == "none":
            action = NO_OP
        else:
            if unit_name not in names:
                raise ValueError(f"{path}: unknown unit {unit_name!r}")
            lvls = [float(lv) for lv in levels]
            if level_kwh not in lvls:
                raise ValueError(f"{path}: {level_kwh} is not an expansion level")
            action = MdpAction(names.index(unit_name), lvls.index(level_kwh))
        steps.append(PolicyStep(period=period, action=action,
                                unit_name="" if action.is_noop else unit_name,
                                level_kwh=level_kwh, unit_prices=prices,
                                capacity_after=caps, q_value=0.0,
                                visit_count=0))
    return PolicyReport(scenario_id=Path(path).stem, steps=steps, flags=[])


@dataclass(frozen=True)
class PolicyValue:
    """Expected 20-year cost split into its deterministic and sampled parts."""

    mean_total_cost: float
    investment_cost: float
    mean_outage_cost: float
    stderr: float
    trials: int


def evaluate_policy(ctx: SimulationContext, report: PolicyReport,
                    trials: int, seed: int | None = None) -> PolicyValue:
    """Replay the build-out against `trials` fresh horizon-long outage draws.

    Stream keys depend only on (seed, trial), never on the policy, so two
    policies evaluated with the same seed face identical outage traces.
    """
    if trials < 1:
        raise ValueError("trials must be positive")
    cfg = ctx.config
    plan = cfg.planning
    if seed is None:
        seed = cfg.master_seed
    if len(report.steps) != plan.horizon_periods:
        raise ValueError("policy does not cover every period")
    invest = 0.0
    for s in report.steps:
        if s.action.is_noop:
            continue
        tech = cfg.storage[s.action.unit]
        invest += investment_cost(
            level_kwh=s.level_kwh, unit_price=s.unit_prices[s.action.unit],
            period=s.period, horizon_periods=plan.horizon_periods,
            years_per_period=plan.years_per_period, rate=plan.interest_rate,
            lifetime_years=tech.lifetime_schedule[s.period - 1])
    samples = []
    for t in range(trials):
        rng = stream(seed, "eval:trial", t)
        total = 0.0
        for s in report.steps:
            trace = ctx.period_trace(rng)
            total += ctx.period_cost(s.period, s.capacity_after, trace)
        samples.append(total)
    n = len(samples)
    mean_outage = sum(samples) / n
    if n > 1:
        var = sum((x - mean_outage) ** 2 for x in samples) / (n - 1)
        stderr = math.sqrt(var / n)
    else:
        stderr = math.inf
    return PolicyValue(mean_total_cost=invest + mean_outage,
                       investment_cost=invest, mean_outage_cost=mean_outage,
                       stderr=stderr, trials=trials)


def compare_policies(ctx: SimulationContext, reports: list[PolicyReport],
                     trials: int, seed: int | None = None
                     ) -> list[tuple[PolicyReport, PolicyValue]]:
    """Evaluate under common random numbers; cheapest expected cost first."""
    scored = [(r, evaluate_policy(ctx, r, trials, seed)) for r in reports]
    scored.sort(key=lambda pair: pair[1].mean_total_cost)
    return scored


def write_comparison_csv(scored, path) -> None:
    lines = ["policy,mean_total_cost,investment_cost,mean_outage_cost,"
             "stderr,trials"]
    for report, value in scored:
        lines.append(f"{report.scenario_id},{value.mean_total_cost!r},"
                     f"{value.investment_cost!r},{value.mean_outage_cost!r},"
                     f"{value.stderr!r},{value.trials}")
    Path(path).write_text("\n".join(lines) + "\n")
