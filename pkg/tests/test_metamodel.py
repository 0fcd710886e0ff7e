"""Dataset sampling, tree growing, and forest serialization.

The training corpus here is tiny and synthetic: either a deterministic grid
with a known target function or a handful of simulated rows from the smoke
configuration. The forest's statistical quality on the real problem is covered
by the acceptance suite; these tests pin down the mechanics.
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from storeplan.config import IncompatibleArtifact
from storeplan.metamodel import (SyntheticDataset, dataset_row,
                                 generate_dataset, load_forest, r_squared,
                                 reachable_capacity_values, read_dataset,
                                 save_forest, train_forest, write_dataset)
from storeplan.simulate import SimulationContext


def grid_dataset(fn, n=200, seed=0, units=2):
    """Deterministic dataset over a lattice, cost = fn(period, caps)."""
    rng = np.random.default_rng(seed)
    period = rng.integers(1, 5, size=n)
    caps = rng.choice([0.0, 300.0, 1000.0, 3000.0], size=(n, units))
    cost = np.array([fn(int(k), c) for k, c in zip(period, caps)])
    return SyntheticDataset(period=period, capacity=caps, cost=cost,
                            trials=1, master_seed=seed, config_digest="d" * 8)


def test_reachable_values_for_case_levels():
    values = reachable_capacity_values((300.0, 1000.0, 3000.0), 3)
    assert len(values) == 19
    assert values[0] == 0.0
    assert values[-1] == 9000.0
    assert 4300.0 in values  # 300 + 1000 + 3000
    assert 2300.0 in values  # 300 + 1000 + 1000
    assert all(a < b for a, b in zip(values, values[1:]))


def test_reachable_values_single_pick():
    assert reachable_capacity_values((300.0, 1000.0, 3000.0), 1) == (
        0.0, 300.0, 1000.0, 3000.0)


def test_dataset_row_reproducible(smoke_config):
    ctx = SimulationContext(smoke_config)
    values = reachable_capacity_values((300.0, 1000.0, 3000.0), 3)
    a = dataset_row(ctx, values, row=5, trials=2, master_seed=99)
    b = dataset_row(ctx, values, row=5, trials=2, master_seed=99)
    assert a[0] == b[0]
    assert np.array_equal(a[1], b[1])
    assert a[2] == b[2]


def test_dataset_rows_decorrelate_by_index(smoke_config):
    ctx = SimulationContext(smoke_config)
    values = reachable_capacity_values((300.0, 1000.0, 3000.0), 3)
    a = dataset_row(ctx, values, row=5, trials=2, master_seed=99)
    b = dataset_row(ctx, values, row=6, trials=2, master_seed=99)
    assert a[0] != b[0] or not np.array_equal(a[1], b[1]) or a[2] != b[2]


def test_generate_dataset_shapes(smoke_config):
    ctx = SimulationContext(smoke_config)
    ds = generate_dataset(ctx, observations=6, trials=1)
    assert len(ds) == 6
    assert ds.capacity.shape == (6, 4)
    assert ds.period.min() >= 1 and ds.period.max() <= 4
    assert ds.features().shape == (6, 5)


def test_dataset_round_trips_bit_exact(tmp_path, smoke_config):
    ctx = SimulationContext(smoke_config)
    ds = generate_dataset(ctx, observations=5, trials=1)
    path = tmp_path / "dataset.csv"
    write_dataset(ds, path)
    again = read_dataset(path)
    assert np.array_equal(again.period, ds.period)
    assert np.array_equal(again.capacity, ds.capacity)
    assert np.array_equal(again.cost, ds.cost)
    assert again.trials == ds.trials
    assert again.master_seed == ds.master_seed
    assert again.config_digest == ds.config_digest


def test_single_tree_memorizes_training_data():
    # no bootstrap, min_leaf 1, all features: the tree is a lookup table
    ds = grid_dataset(lambda k, c: 1000.0 * k + c.sum(), n=150)
    forest = train_forest(ds, num_trees=1, train_fraction=1.0, min_leaf=1,
                          features_per_split=3, bootstrap=False)
    pred = forest.predict(ds.features())
    # duplicated feature rows share one leaf, but targets agree there
    assert np.allclose(pred, ds.cost)


def test_forest_predictions_stay_inside_target_range():
    ds = grid_dataset(lambda k, c: 100.0 * k + 0.1 * c.sum(), n=300, seed=3)
    forest = train_forest(ds, num_trees=5)
    pred = forest.predict(ds.features())
    assert pred.min() >= ds.cost.min() - 1e-9
    assert pred.max() <= ds.cost.max() + 1e-9


def test_forest_learns_smooth_function_well():
    ds = grid_dataset(lambda k, c: 50.0 * k + c.sum() ** 0.5, n=400, seed=4)
    forest = train_forest(ds, num_trees=20, features_per_split=3)
    assert forest.r2_test > 0.97


def test_train_forest_rejects_bad_arguments():
    ds = grid_dataset(lambda k, c: float(k), n=20)
    with pytest.raises(ValueError):
        train_forest(ds, num_trees=0)
    with pytest.raises(ValueError):
        train_forest(ds, train_fraction=1.5)
    with pytest.raises(ValueError):
        train_forest(ds, features_per_split=9)
    with pytest.raises(ValueError):
        train_forest(ds, min_leaf=0)


def test_default_feature_subset_is_a_third():
    ds = grid_dataset(lambda k, c: float(k), n=30)
    forest = train_forest(ds, num_trees=1)
    # 3 features for a 2-unit dataset: ceil(3/3) = 1
    assert forest.params["features_per_split"] == 1


def test_train_test_split_is_disjoint():
    ds = grid_dataset(lambda k, c: float(k), n=50)
    forest = train_forest(ds, num_trees=1, train_fraction=0.8)
    assert not set(forest.train_indices) & set(forest.test_indices)
    assert len(forest.train_indices) == 40
    assert len(forest.test_indices) == 10


def test_forest_round_trips_bit_exact(tmp_path):
    ds = grid_dataset(lambda k, c: 10.0 * k + 0.3 * c[0] - 0.1 * c[1], n=120)
    forest = train_forest(ds, num_trees=4)
    path = tmp_path / "forest.json"
    save_forest(forest, path)
    again = load_forest(path)
    X = ds.features()
    assert np.array_equal(again.predict(X), forest.predict(X))
    assert again.r2_test == forest.r2_test
    assert again.params == forest.params


def test_load_forest_checks_config_digest(tmp_path):
    ds = grid_dataset(lambda k, c: float(k), n=40)
    forest = train_forest(ds, num_trees=1)
    path = tmp_path / "forest.json"
    save_forest(forest, path)
    load_forest(path, expected_config_hash="d" * 8)
    with pytest.raises(IncompatibleArtifact):
        load_forest(path, expected_config_hash="mismatch")


def test_predict_outage_cost_validates_width():
    ds = grid_dataset(lambda k, c: float(k), n=40)
    forest = train_forest(ds, num_trees=1)
    assert forest.predict_outage_cost(2, [300.0, 0.0]) == pytest.approx(
        forest.predict_one([2.0, 300.0, 0.0]))
    with pytest.raises(ValueError):
        forest.predict_outage_cost(2, [300.0])


def test_r_squared_perfect_and_mean_baseline():
    y = np.array([1.0, 2.0, 3.0, 4.0])
    assert r_squared(y, y) == 1.0
    assert r_squared(y, np.full(4, y.mean())) == 0.0


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 1_000))
def test_leaf_values_are_training_target_means(seed):
    """Every prediction of a lone tree is an average of training targets."""
    ds = grid_dataset(lambda k, c: float(k) * 7.0, n=60, seed=seed)
    forest = train_forest(ds, num_trees=1, bootstrap=False, train_fraction=1.0)
    pred = forest.predict(ds.features())
    lo, hi = ds.cost.min(), ds.cost.max()
    assert np.all(pred >= lo - 1e-9) and np.all(pred <= hi + 1e-9)
