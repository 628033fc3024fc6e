import numpy as np

from graphnotice.rng import DeterministicRng


def test_same_seed_same_stream():
    a = DeterministicRng(42).random(10)
    b = DeterministicRng(42).random(10)
    assert np.array_equal(a, b)


def test_different_seeds_differ():
    a = DeterministicRng(1).random(10)
    b = DeterministicRng(2).random(10)
    assert not np.array_equal(a, b)


def test_substreams_reproducible_and_independent():
    root = DeterministicRng(7)
    s1 = root.substream(0).random(10)
    s2 = root.substream(1).random(10)
    again = DeterministicRng(7).substream(0).random(10)
    assert np.array_equal(s1, again)
    assert not np.array_equal(s1, s2)


def test_nested_substream_paths_distinct():
    root = DeterministicRng(7)
    a = root.substream(0).substream(1).random(5)
    b = root.substream(1).substream(0).random(5)
    assert not np.array_equal(a, b)


def test_draws_do_not_disturb_substreams():
    root = DeterministicRng(9)
    root.random(100)
    after = root.substream(3).random(5)
    fresh = DeterministicRng(9).substream(3).random(5)
    assert np.array_equal(after, fresh)
