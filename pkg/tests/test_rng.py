import numpy as np

from zigzag_lab.rng import as_generator, map_replicates, stream, thread_count


def test_streams_are_reproducible_and_distinct():
    a = stream(5, 1).random(4)
    np.testing.assert_array_equal(a, stream(5, 1).random(4))
    assert not np.array_equal(a, stream(5, 2).random(4))
    assert not np.array_equal(stream(5, 1, 0).random(4), stream(5, 1, 1).random(4))


def test_as_generator_passthrough():
    g = stream(1)
    assert as_generator(g) is g
    np.testing.assert_array_equal(as_generator(3).random(2), stream(3, 0).random(2))


def test_map_replicates_order_independent_of_threads():
    def fn(i):
        return stream(9, i).standard_normal(3).sum()

    one = map_replicates(fn, 50, 1)
    assert one == map_replicates(fn, 50, 4)


def test_thread_count_env(monkeypatch):
    monkeypatch.setenv("ZIGZAG_THREADS", "3")
    assert thread_count(1) == 3
    monkeypatch.delenv("ZIGZAG_THREADS")
    assert thread_count(2) == 2
