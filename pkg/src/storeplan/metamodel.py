"""Outage-cost surrogate: synthetic dataset plus a regression random forest.

The forest replaces per-decision Monte Carlo during planning. Features are the
decision period and the installed capacity of each storage unit; the target is
the mean simulated lost-load cost over that period. Trees are grown greedily on
the sum-of-squared-error criterion with bootstrap resampling and random feature
subsets, so everything here is plain CART machinery specialized to regression.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import IncompatibleArtifact, config_hash
from .rng import stream
from .simulate import SimulationContext

__all__ = [
    "SyntheticDataset", "reachable_capacity_values", "generate_dataset",
    "dataset_row", "write_dataset", "read_dataset",
    "RegressionTree", "RegressionForest", "train_forest",
    "save_forest", "load_forest", "r_squared",
]

DATASET_FORMAT = "storeplan-dataset-v1"
FOREST_FORMAT = "storeplan-forest-v1"


def reachable_capacity_values(levels, max_picks: int) -> tuple[float, ...]:
    """Sorted sums of at most `max_picks` expansion levels, repetition allowed.

    These are exactly the per-unit capacities a planner can have accumulated
    before its final decision, so the dataset samples capacities from this set
    rather than a continuous range.
    """
    if max_picks < 0:
        raise ValueError("max_picks must be >= 0")
    sums = {0.0}
    for _ in range(max_picks):
        sums |= {s + float(lv) for s in sums for lv in levels}
    return tuple(sorted(sums))


@dataclass
class SyntheticDataset:
    """Rows of (period, per-unit capacity) with Monte Carlo cost targets."""

    period: np.ndarray
    capacity: np.ndarray
    cost: np.ndarray
    trials: int
    master_seed: int
    config_digest: str | None = None

    def __post_init__(self):
        if self.capacity.ndim != 2 or len(self.period) != len(self.capacity):
            raise ValueError("period and capacity row counts differ")
        if len(self.cost) != len(self.period):
            raise ValueError("cost row count differs")

    def __len__(self) -> int:
        return len(self.period)

    @property
    def num_units(self) -> int:
        return self.capacity.shape[1]

    def features(self) -> np.ndarray:
        return np.column_stack([self.period.astype(float), self.capacity])


def dataset_row(ctx: SimulationContext, values, row: int, trials: int,
                master_seed: int) -> tuple[int, np.ndarray, float]:
    """One dataset row, reproducible from (master_seed, row) alone."""
    plan = ctx.config.planning
    units = len(ctx.config.storage)
    row_rng = stream(master_seed, "dataset:row", row)
    k = int(row_rng.integers(1, plan.horizon_periods + 1))
    caps = row_rng.choice(np.asarray(values, dtype=float), size=units)
    total = 0.0
    for t in range(trials):
        trial_rng = stream(master_seed, "dataset:trial", row, t)
        total += ctx.trial_outage_cost(k, caps, trial_rng)
    return k, caps, total / trials


def generate_dataset(ctx: SimulationContext, observations: int | None = None,
                     trials: int | None = None,
                     master_seed: int | None = None) -> SyntheticDataset:
    """Sample the training corpus for the cost surrogate.

    Periods are uniform over the horizon; capacities are drawn independently
    per unit from the reachable set. Each row's target averages `trials`
    independent period simulations.
    """
    cfg = ctx.config
    if observations is None:
        observations = cfg.metamodel.observations
    if trials is None:
        trials = cfg.metamodel.trials
    if master_seed is None:
        master_seed = cfg.master_seed
    if observations < 1 or trials < 1:
        raise ValueError("observations and trials must be positive")
    values = reachable_capacity_values(cfg.planning.expansion_levels_kwh,
                                       cfg.planning.horizon_periods - 1)
    periods = np.empty(observations, dtype=int)
    caps = np.empty((observations, cfg.num_units))
    costs = np.empty(observations)
    for r in range(observations):
        periods[r], caps[r], costs[r] = dataset_row(ctx, values, r, trials,
                                                    master_seed)
    return SyntheticDataset(period=periods, capacity=caps, cost=costs,
                            trials=trials, master_seed=master_seed,
                            config_digest=config_hash(cfg))


def _meta_path(path: Path) -> Path:
    return path.with_name(path.stem + ".meta.json")


def write_dataset(dataset: SyntheticDataset, path) -> None:
    """CSV of rows plus a JSON sidecar carrying provenance for later checks."""
    path = Path(path)
    units = dataset.num_units
    header = "k," + ",".join(f"cap_{i + 1}" for i in range(units)) + ",cost"
    lines = [header]
    for r in range(len(dataset)):
        caps = ",".join(repr(float(c)) for c in dataset.capacity[r])
        lines.append(f"{int(dataset.period[r])},{caps},{float(dataset.cost[r])!r}")
    path.write_text("\n".join(lines) + "\n")
    meta = {
        "format": DATASET_FORMAT,
        "observations": len(dataset),
        "trials": dataset.trials,
        "master_seed": dataset.master_seed,
        "config_hash": dataset.config_digest,
        "num_units": units,
    }
    _meta_path(path).write_text(json.dumps(meta, indent=2) + "\n")


def read_dataset(path) -> SyntheticDataset:
    path = Path(path)
    lines = path.read_text().splitlines()
    if not lines:
        raise ValueError(f"{path}: empty dataset")
    cols = lines[0].split(",")
    if cols[0] != "k" or cols[-1] != "cost" or len(cols) < 3:
        raise ValueError(f"{path}: expected header 'k,cap_1,...,cost'")
    units = len(cols) - 2
    expect = ["k"] + [f"cap_{i + 1}" for i in range(units)] + ["cost"]
    if cols != expect:
        raise ValueError(f"{path}: malformed header {lines[0]!r}")
    periods, caps, costs = [], [], []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != units + 2:
            raise ValueError(f"{path}: bad row {ln!r}")
        periods.append(int(parts[0]))
        caps.append([float(x) for x in parts[1:-1]])
        costs.append(float(parts[-1]))
    trials, seed, digest = 0, 0, None
    meta_path = _meta_path(path)
    if meta_path.exists():
        meta = json.loads(meta_path.read_text())
        if meta.get("format") != DATASET_FORMAT:
            raise ValueError(f"{meta_path}: not a dataset sidecar")
        trials = meta["trials"]
        seed = meta["master_seed"]
        digest = meta.get("config_hash")
    return SyntheticDataset(period=np.array(periods, dtype=int),
                            capacity=np.array(caps), cost=np.array(costs),
                            trials=trials, master_seed=seed,
                            config_digest=digest)


@dataclass
class RegressionTree:
    """Flat node arrays; `feature[i] < 0` marks node i as a leaf.

    Internal nodes route x[feature] <= threshold to `left`, else `right`.
    `value` holds the node's training-target mean (the prediction at leaves).
    """

    feature: list[int] = field(default_factory=list)
    threshold: list[float] = field(default_factory=list)
    left: list[int] = field(default_factory=list)
    right: list[int] = field(default_factory=list)
    value: list[float] = field(default_factory=list)

    def add_node(self) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(0.0)
        return len(self.feature) - 1

    def predict_one(self, x) -> float:
        i = 0
        while self.feature[i] >= 0:
            i = self.left[i] if x[self.feature[i]] <= self.threshold[i] else self.right[i]
        return self.value[i]

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.array([self.predict_one(row) for row in X])


def _best_split(X, y, idx, feats, min_leaf):
    # Returns (sse, feature, threshold, order, left_size) or None.
    n = len(idx)
    best = None
    for f in feats:
        xs_all = X[idx, f]
        order = np.argsort(xs_all, kind="stable")
        xs = xs_all[order]
        if xs[0] == xs[-1]:
            continue
        ys = y[idx][order]
        c1 = np.cumsum(ys)
        c2 = np.cumsum(ys * ys)
        j = np.arange(min_leaf, n - min_leaf + 1)
        if len(j) == 0:
            continue
        valid = xs[j - 1] < xs[j]
        if not valid.any():
            continue
        sl, sl2 = c1[j - 1], c2[j - 1]
        sse = (sl2 - sl * sl / j) + ((c2[-1] - sl2) - (c1[-1] - sl) ** 2 / (n - j))
        sse = np.where(valid, sse, np.inf)
        pos = int(np.argmin(sse))
        if best is None or sse[pos] < best[0]:
            cut = j[pos]
            thr = 0.5 * (xs[cut - 1] + xs[cut])
            best = (float(sse[pos]), int(f), float(thr), order, int(cut))
    return best


def _grow_tree(X, y, sample, rng, min_leaf, max_depth, mtry) -> RegressionTree:
    tree = RegressionTree()
    root = tree.add_node()
    stack = [(root, sample, 0)]
    d = X.shape[1]
    while stack:
        nid, idx, depth = stack.pop()
        ys = y[idx]
        tree.value[nid] = float(ys.mean())
        if (len(idx) < 2 * min_leaf or ys.min() == ys.max()
                or (max_depth is not None and depth >= max_depth)):
            continue
        feats = rng.choice(d, size=mtry, replace=False)
        split = _best_split(X, y, idx, feats, min_leaf)
        if split is None:
            continue
        _, f, thr, order, cut = split
        tree.feature[nid] = f
        tree.threshold[nid] = thr
        ordered = idx[order]
        lid, rid = tree.add_node(), tree.add_node()
        tree.left[nid], tree.right[nid] = lid, rid
        stack.append((lid, ordered[:cut], depth + 1))
        stack.append((rid, ordered[cut:], depth + 1))
    return tree


@dataclass
class RegressionForest:
    """Bagged regression trees over (period, capacity...) feature rows."""

    trees: list[RegressionTree]
    num_features: int
    params: dict
    train_indices: list[int]
    test_indices: list[int]
    r2_test: float | None
    config_digest: str | None = None

    def predict_one(self, x) -> float:
        return sum(t.predict_one(x) for t in self.trees) / len(self.trees)

    def predict(self, X: np.ndarray) -> np.ndarray:
        total = np.zeros(len(X))
        for t in self.trees:
            total += t.predict(X)
        return total / len(self.trees)

    def predict_outage_cost(self, period: int, capacities) -> float:
        x = [float(period)] + [float(c) for c in capacities]
        if len(x) != self.num_features:
            raise ValueError("capacity vector length does not match forest")
        return self.predict_one(x)


def r_squared(y_true, y_pred) -> float:
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    ss_res = float(((y_true - y_pred) ** 2).sum())
    ss_tot = float(((y_true - y_true.mean()) ** 2).sum())
    if ss_tot == 0.0:
        return math.nan
    return 1.0 - ss_res / ss_tot


def train_forest(dataset: SyntheticDataset, num_trees: int | None = None,
                 train_fraction: float = 0.8, min_leaf: int = 2,
                 max_depth: int | None = None,
                 features_per_split: int | None = None, bootstrap: bool = True,
                 seed: int | None = None) -> RegressionForest:
    """Fit the forest on a shuffled train split and score R^2 on the rest."""
    if num_trees is None:
        num_trees = 10
    if num_trees < 1:
        raise ValueError("num_trees must be positive")
    if not 0.0 < train_fraction <= 1.0:
        raise ValueError("train_fraction must be in (0, 1]")
    if min_leaf < 1:
        raise ValueError("min_leaf must be >= 1")
    if seed is None:
        seed = dataset.master_seed
    X = dataset.features()
    y = dataset.cost
    d = X.shape[1]
    mtry = features_per_split if features_per_split is not None else math.ceil(d / 3)
    if not 1 <= mtry <= d:
        raise ValueError("features_per_split out of range")
    perm = stream(seed, "metamodel:split").permutation(len(dataset))
    n_train = int(round(train_fraction * len(dataset)))
    if n_train < 1:
        raise ValueError("train split is empty")
    train_idx, test_idx = perm[:n_train], perm[n_train:]
    trees = []
    for t in range(num_trees):
        tree_rng = stream(seed, "metamodel:tree", t)
        if bootstrap:
            sample = train_idx[tree_rng.integers(0, n_train, size=n_train)]
        else:
            sample = train_idx.copy()
        trees.append(_grow_tree(X, y, sample, tree_rng, min_leaf, max_depth, mtry))
    forest = RegressionForest(
        trees=trees, num_features=d,
        params={"num_trees": num_trees, "train_fraction": train_fraction,
                "min_leaf": min_leaf, "max_depth": max_depth,
                "features_per_split": mtry, "bootstrap": bootstrap,
                "seed": seed},
        train_indices=[int(i) for i in train_idx],
        test_indices=[int(i) for i in test_idx],
        r2_test=None, config_digest=dataset.config_digest)
    if len(test_idx):
        forest.r2_test = r_squared(y[test_idx], forest.predict(X[test_idx]))
    return forest


def save_forest(forest: RegressionForest, path) -> None:
    doc = {
        "format": FOREST_FORMAT,
        "num_features": forest.num_features,
        "params": forest.params,
        "train_indices": forest.train_indices,
        "test_indices": forest.test_indices,
        "r2_test": forest.r2_test,
        "config_hash": forest.config_digest,
        "trees": [{"feature": t.feature, "threshold": t.threshold,
                   "left": t.left, "right": t.right, "value": t.value}
                  for t in forest.trees],
    }
    Path(path).write_text(json.dumps(doc) + "\n")


def load_forest(path, expected_config_hash: str | None = None) -> RegressionForest:
    doc = json.loads(Path(path).read_text())
    if doc.get("format") != FOREST_FORMAT:
        raise ValueError(f"{path}: not a forest file")
    if expected_config_hash is not None and doc.get("config_hash") != expected_config_hash:
        raise IncompatibleArtifact(
            f"{path}: forest was trained under a different configuration")
    trees = [RegressionTree(feature=t["feature"], threshold=t["threshold"],
                            left=t["left"], right=t["right"], value=t["value"])
             for t in doc["trees"]]
    return RegressionForest(trees=trees, num_features=doc["num_features"],
                            params=doc["params"],
                            train_indices=doc["train_indices"],
                            test_indices=doc["test_indices"],
                            r2_test=doc["r2_test"],
                            config_digest=doc.get("config_hash"))
