import numpy as np

from storeplan.rng import spawn_key, stream


def test_same_key_same_draws():
    a = stream(42, "demo", 1, 2).random(8)
    b = stream(42, "demo", 1, 2).random(8)
    assert np.array_equal(a, b)


def test_different_tags_decorrelate():
    a = stream(42, "demo").random(8)
    b = stream(42, "other").random(8)
    assert not np.array_equal(a, b)


def test_different_indices_decorrelate():
    a = stream(42, "demo", 0).random(8)
    b = stream(42, "demo", 1).random(8)
    assert not np.array_equal(a, b)


def test_spawn_key_is_stable():
    # crc32("train") pins the tag hash; a silent change here would scramble
    # every stored artifact's reproducibility
    assert spawn_key("train") == (1550247075,)
    assert spawn_key("train", 5, 7) == (1550247075, 5, 7)
