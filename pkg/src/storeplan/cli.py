"""Command-line pipeline: dataset, surrogate, solver, policies, reports.

Every artifact lands in an --out directory together with a manifest.json entry
recording the producing command, parameters, and the configuration hash, so a
run directory is self-describing. Exit codes: 1 for usage problems, 2 for
validation failures (bad config, corrupt artifact), 3 for artifacts that do
not belong to the supplied configuration.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import os
import re
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .config import (ConfigError, IncompatibleArtifact, config_hash,
                     load_config)
from .mdp import MdpEnv, count_states_component_product, count_states_reachable
from .metamodel import (SyntheticDataset, dataset_row, generate_dataset,
                        load_forest, reachable_capacity_values, read_dataset,
                        save_forest, train_forest, write_dataset)
from .outages import generate_outages
from .policy import (default_scenarios, evaluate_policy, extract_policy,
                     load_scenarios, never_invest_report, read_policy_csv,
                     write_comparison_csv, write_policy_csv)
from .qlearn import DecaySchedule, load_qtable, save_qtable, train
from .rng import stream
from .simulate import SimulationContext

__all__ = ["main"]

EXIT_USAGE = 1
EXIT_VALIDATION = 2
EXIT_INCOMPATIBLE = 3


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; the contract here reserves 2 for
    # validation failures, so route usage problems to 1.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _utcnow() -> str:
    return _dt.datetime.now(_dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _record_artifact(out_dir: Path, name: str, filename: str,
                     digest: str | None, command: str, params: dict) -> None:
    manifest_path = out_dir / "manifest.json"
    manifest = {"package_version": __version__, "artifacts": {}}
    if manifest_path.exists():
        manifest = json.loads(manifest_path.read_text())
        manifest.setdefault("artifacts", {})
        manifest["package_version"] = __version__
    manifest["artifacts"][name] = {
        "path": filename,
        "config_hash": digest,
        "command": command,
        "params": params,
        "created": _utcnow(),
    }
    tmp = manifest_path.with_suffix(".json.tmp")
    tmp.write_text(json.dumps(manifest, indent=2) + "\n")
    os.replace(tmp, manifest_path)


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


_POOL_CTX = None


def _pool_init(config_path: str):
    global _POOL_CTX
    cfg = load_config(config_path)
    values = reachable_capacity_values(cfg.planning.expansion_levels_kwh,
                                       cfg.planning.horizon_periods - 1)
    _POOL_CTX = (SimulationContext(cfg), values)


def _pool_rows(job):
    rows, trials, seed = job
    ctx, values = _POOL_CTX
    return [(r, dataset_row(ctx, values, r, trials, seed)) for r in rows]


def cmd_gen_data(args) -> int:
    cfg = load_config(args.config)
    ctx = SimulationContext(cfg)
    observations = args.observations or cfg.metamodel.observations
    trials = args.trials or cfg.metamodel.trials
    seed = cfg.master_seed if args.seed is None else args.seed
    threads = args.threads or os.cpu_count() or 1
    out = _out_dir(args)
    if threads > 1 and observations > 1:
        values = reachable_capacity_values(cfg.planning.expansion_levels_kwh,
                                           cfg.planning.horizon_periods - 1)
        chunks = [list(range(i, observations, threads)) for i in range(threads)]
        results: dict[int, tuple] = {}
        with ProcessPoolExecutor(max_workers=threads, initializer=_pool_init,
                                 initargs=(args.config,)) as pool:
            for part in pool.map(_pool_rows,
                                 [(c, trials, seed) for c in chunks]):
                results.update(dict(part))
        periods = np.array([results[r][0] for r in range(observations)])
        caps = np.array([results[r][1] for r in range(observations)])
        costs = np.array([results[r][2] for r in range(observations)])
        dataset = SyntheticDataset(period=periods, capacity=caps, cost=costs,
                                   trials=trials, master_seed=seed,
                                   config_digest=config_hash(cfg))
    else:
        dataset = generate_dataset(ctx, observations, trials, seed)
    path = out / "dataset.csv"
    write_dataset(dataset, path)
    _record_artifact(out, "dataset", "dataset.csv", dataset.config_digest,
                     "gen-data", {"observations": observations,
                                  "trials": trials, "seed": seed})
    print(f"wrote {path} ({observations} rows x {trials} trials, "
          f"mean cost {dataset.cost.mean():.0f})")
    return 0


def cmd_train_meta(args) -> int:
    dataset = read_dataset(args.dataset)
    forest = train_forest(dataset, num_trees=args.trees,
                          train_fraction=args.train_frac, seed=args.seed)
    out = _out_dir(args)
    path = out / "forest.json"
    save_forest(forest, path)
    _record_artifact(out, "forest", "forest.json", forest.config_digest,
                     "train-meta", forest.params)
    r2 = "n/a" if forest.r2_test is None else f"{forest.r2_test:.4f}"
    print(f"wrote {path} ({len(forest.trees)} trees, holdout R^2 {r2})")
    return 0


def cmd_solve(args) -> int:
    cfg = load_config(args.config)
    digest = config_hash(cfg)
    forest = load_forest(args.forest, expected_config_hash=digest)
    env = MdpEnv(cfg.planning, cfg.storage,
                 outage_cost=forest.predict_outage_cost)
    episodes = args.episodes or cfg.rl.episodes
    gamma = cfg.rl.gamma if args.gamma is None else args.gamma
    seed = cfg.master_seed if args.seed is None else args.seed
    alpha = DecaySchedule(cfg.rl.alpha_start, cfg.rl.alpha_end, episodes)
    epsilon = DecaySchedule(cfg.rl.epsilon_start, cfg.rl.epsilon_end, episodes)
    qtable, curve = train(env, episodes, gamma, alpha, epsilon, seed)
    out = _out_dir(args)
    qpath = out / "qtable.jsonl"
    save_qtable(qtable, qpath, digest, env.num_units,
                metadata={"episodes": episodes, "gamma": gamma, "seed": seed})
    curve.save(out / "learning_curve.csv")
    _record_artifact(out, "qtable", "qtable.jsonl", digest, "solve",
                     {"episodes": episodes, "gamma": gamma, "seed": seed})
    _record_artifact(out, "learning_curve", "learning_curve.csv", digest,
                     "solve", {"episodes": episodes})
    bound_states, bound_pairs = count_states_component_product(
        env.num_units, len(env.levels), cfg.planning.horizon_periods)
    print(f"wrote {qpath} ({len(qtable)} states visited; "
          f"component bound {bound_states} states / {bound_pairs} pairs, "
          f"reachable {count_states_reachable(cfg.planning, cfg.storage)})")
    print(f"final batch mean reward {curve.mean_total_reward[-1]:.0f}")
    return 0


def cmd_policy(args) -> int:
    cfg = load_config(args.config)
    digest = config_hash(cfg)
    qtable, _ = load_qtable(args.qtable, expected_config_hash=digest)
    scenarios = (load_scenarios(args.scenarios) if args.scenarios
                 else default_scenarios())
    if args.scenario not in scenarios:
        raise ConfigError(f"unknown scenario {args.scenario!r}; "
                          f"have {sorted(scenarios)}")
    env = MdpEnv(cfg.planning, cfg.storage, outage_cost=lambda k, caps: 0.0)
    report = extract_policy(qtable, env, scenarios[args.scenario])
    out = _out_dir(args)
    path = out / f"policy_{args.scenario}.csv"
    write_policy_csv(report, cfg.storage, path)
    _record_artifact(out, f"policy_{args.scenario}", path.name, digest,
                     "policy", {"scenario": args.scenario})
    for step in report.steps:
        what = "no-op" if step.action.is_noop else (
            f"{step.unit_name} +{step.level_kwh:g} kWh")
        print(f"period {step.period}: {what} "
              f"(q {step.q_value:.0f}, visits {step.visit_count})")
    for flag in report.flags:
        print(f"warning: {flag}", file=sys.stderr)
    print(f"wrote {path}")
    return 0


def cmd_evaluate(args) -> int:
    cfg = load_config(args.config)
    ctx = SimulationContext(cfg)
    scenarios = (load_scenarios(args.scenarios) if args.scenarios
                 else default_scenarios())
    if args.policy == "never-invest":
        if args.scenario not in scenarios:
            raise ConfigError(f"unknown scenario {args.scenario!r}")
        env = MdpEnv(cfg.planning, cfg.storage,
                     outage_cost=lambda k, caps: 0.0)
        report = never_invest_report(env, scenarios[args.scenario])
    else:
        report = read_policy_csv(args.policy, cfg.storage,
                                 cfg.planning.expansion_levels_kwh)
    value = evaluate_policy(ctx, report, args.trials, args.seed)
    out = _out_dir(args)
    # one file per evaluated policy so repeated runs do not clobber each other
    slug = re.sub(r"[^A-Za-z0-9_.-]+", "_", report.scenario_id).strip("_")
    name = f"evaluation_{slug}.csv"
    path = out / name
    write_comparison_csv([(report, value)], path)
    _record_artifact(out, f"evaluation_{slug}", name, config_hash(cfg),
                     "evaluate", {"policy": str(args.policy),
                                  "trials": args.trials})
    print(f"{report.scenario_id}: total {value.mean_total_cost:.0f} "
          f"(investment {value.investment_cost:.0f}, outage "
          f"{value.mean_outage_cost:.0f} +/- {value.stderr:.0f}, "
          f"{value.trials} trials)")
    print(f"wrote {path}")
    return 0


def cmd_report(args) -> int:
    cfg = load_config(args.config)
    digest = config_hash(cfg)
    run = Path(args.run_dir)
    out = _out_dir(args)
    produced = []
    curve_src = run / "learning_curve.csv"
    if curve_src.exists():
        (out / "learning_curve.csv").write_text(curve_src.read_text())
        produced.append("learning_curve.csv")
    for pol in sorted(run.glob("policy_*.csv")):
        (out / pol.name).write_text(pol.read_text())
        produced.append(pol.name)
    forest_src = run / "forest.json"
    if forest_src.exists():
        forest = load_forest(forest_src, expected_config_hash=digest)
        values = reachable_capacity_values(
            cfg.planning.expansion_levels_kwh,
            cfg.planning.horizon_periods - 1)
        lines = ["unit,period,capacity_kwh,predicted_cost"]
        zeros = [0.0] * len(cfg.storage)
        for u, tech in enumerate(cfg.storage):
            for k in range(1, cfg.planning.horizon_periods + 1):
                for v in values:
                    caps = list(zeros)
                    caps[u] = v
                    pred = forest.predict_outage_cost(k, caps)
                    lines.append(f"{tech.name},{k},{v:g},{pred!r}")
        (out / "cost_surface.csv").write_text("\n".join(lines) + "\n")
        produced.append("cost_surface.csv")
    hist_years = args.histogram_years
    rng = stream(cfg.master_seed, "report:outages")
    trace = generate_outages(cfg.planning.saifi, cfg.planning.caidi,
                             hist_years, rng)
    counts: dict[int, int] = {}
    for o in trace.outages:
        counts[o.duration_hours] = counts.get(o.duration_hours, 0) + 1
    lines = ["duration_hours,count"]
    for d in sorted(counts):
        lines.append(f"{d},{counts[d]}")
    (out / "duration_histogram.csv").write_text("\n".join(lines) + "\n")
    produced.append("duration_histogram.csv")
    for name in produced:
        _record_artifact(out, name, name, digest, "report",
                         {"run_dir": str(run)})
    print(f"wrote {len(produced)} report artifacts to {out}")
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="storeplan",
                     description="Storage expansion planning pipeline")
    parser.add_argument("--version", action="version",
                        version=f"storeplan {__version__}")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    p = sub.add_parser("gen-data", help="simulate the surrogate's corpus")
    p.add_argument("--config", required=True)
    p.add_argument("--observations", type=int, default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train-meta", help="fit the outage-cost forest")
    p.add_argument("--dataset", required=True)
    p.add_argument("--trees", type=int, default=None)
    p.add_argument("--train-frac", type=float, default=0.8)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train_meta)

    p = sub.add_parser("solve", help="train the q-table against the forest")
    p.add_argument("--config", required=True)
    p.add_argument("--forest", required=True)
    p.add_argument("--episodes", type=int, default=None)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("policy", help="extract a scenario-conditioned plan")
    p.add_argument("--config", required=True)
    p.add_argument("--qtable", required=True)
    p.add_argument("--scenario", required=True)
    p.add_argument("--scenarios", default=None,
                   help="scenario preset file (defaults to bundled presets)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_policy)

    p = sub.add_parser("evaluate", help="Monte Carlo cost of a plan")
    p.add_argument("--config", required=True)
    p.add_argument("--policy", required=True,
                   help="policy CSV path, or 'never-invest'")
    p.add_argument("--scenario", default="1",
                   help="price scenario for the never-invest baseline")
    p.add_argument("--scenarios", default=None)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="bundle run artifacts for inspection")
    p.add_argument("--config", required=True)
    p.add_argument("--run-dir", required=True)
    p.add_argument("--histogram-years", type=int, default=200)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except IncompatibleArtifact as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INCOMPATIBLE
    except (ConfigError, ValueError, OSError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
