import numpy as np
import pytest

from mflattice.rng import generator, stream_key


def test_same_key_same_stream():
    a = generator(7, "noise", 3, 1).standard_normal(16)
    b = generator(7, "noise", 3, 1).standard_normal(16)
    assert np.array_equal(a, b)


@pytest.mark.parametrize("other", [(8, "noise", 3, 1), (7, "initial", 3, 1), (7, "noise", 4, 1),
                                   (7, "noise", 3, 2)])
def test_any_key_change_gives_a_new_stream(other):
    a = generator(7, "noise", 3, 1).standard_normal(16)
    b = generator(*other).standard_normal(16)
    assert not np.allclose(a, b)


def test_key_is_two_words():
    key = stream_key(0, "x")
    assert key.dtype == np.uint64 and key.shape == (2,)


def test_too_many_counter_words():
    with pytest.raises(ValueError):
        generator(0, "x", 1, 2, 3)
