import time

import pytest

from pacal.utils.sweep import sweep


def slow_square(x):
    # Later items finish first.
    time.sleep(0.001 * (5 - x))
    return x * x


@pytest.mark.parametrize("threads", [1, 2, 8])
def test_results_keep_input_order(threads):
    assert sweep(slow_square, list(range(5)), threads) == [0, 1, 4, 9, 16]


def test_empty_input():
    assert sweep(slow_square, [], 4) == []


def test_thread_count_must_be_positive():
    with pytest.raises(ValueError):
        sweep(slow_square, [1], 0)
