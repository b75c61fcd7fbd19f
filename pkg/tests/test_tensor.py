import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from app import tensor
from app.errors import ArgumentError, BoundsError, ShapeError
from app.tensor import Rng, crop2d, elementwise, reduce, rng_randint, rng_uniform

shapes = st.lists(st.integers(1, 5), min_size=1, max_size=4)


@given(shapes)
def test_zeros_has_requested_shape(shape):
    a = tensor.zeros(shape)
    assert a.shape == tuple(shape)
    assert a.dtype == np.float64
    assert reduce("sum", a) == 0.0


@pytest.mark.parametrize("shape", [[], [0], [2, 0, 3], [1, 1, 1, 1, 1]])
def test_invalid_shapes_rejected(shape):
    with pytest.raises(ShapeError):
        tensor.zeros(shape)


@given(shapes, st.integers(0, 2**32 - 1))
def test_add_then_sub_restores_operand(shape, seed):
    rng = Rng(seed)
    a = rng.uniform(shape, -1.0, 1.0)
    b = rng.uniform(shape, -1.0, 1.0)
    np.testing.assert_allclose(elementwise("sub", elementwise("add", a, b), b), a, atol=1e-12)


def test_elementwise_shape_mismatch():
    with pytest.raises(ShapeError):
        elementwise("add", tensor.zeros([2, 3]), tensor.zeros([3, 2]))


def test_scale_and_mean():
    a = tensor.as_tensor([[1.0, 2.0], [3.0, 4.0]])
    assert reduce("mean", elementwise("scale", a, 2.0)) == 5.0
    assert reduce("max", a) == 4.0


def test_precision_switch():
    tensor.set_precision("f32")
    assert tensor.zeros([2]).dtype == np.float32
    assert tensor.get_precision() == "f32"
    tensor.set_precision("f64")
    with pytest.raises(ArgumentError):
        tensor.set_precision("f16")


def test_crop2d_window_and_bounds():
    a = np.arange(2 * 5 * 5, dtype=np.float64).reshape(2, 5, 5)
    window = crop2d(a, 1, 2, 3, 2)
    assert window.shape == (2, 3, 2)
    assert window[1, 0, 0] == a[1, 1, 2]
    with pytest.raises(BoundsError):
        crop2d(a, 3, 0, 3, 3)
    with pytest.raises(BoundsError):
        crop2d(a, -1, 0, 2, 2)


def test_rng_is_reproducible():
    first = Rng(42)
    second = Rng(42)
    np.testing.assert_array_equal(first.uniform([100], 0.0, 1.0), second.uniform([100], 0.0, 1.0))
    assert [first.randint(10) for _ in range(20)] == [second.randint(10) for _ in range(20)]


@given(st.integers(0, 2**32 - 1))
def test_uniform_stays_in_half_open_range(seed):
    values = Rng(seed).uniform([1000], -0.5, 0.5)
    assert values.min() >= -0.5
    assert values.max() < 0.5


def test_randint_range_and_errors():
    rng = Rng(3)
    draws = {rng.randint(4) for _ in range(200)}
    assert draws == {0, 1, 2, 3}
    with pytest.raises(ArgumentError):
        rng.randint(0)
    with pytest.raises(ArgumentError):
        rng.uniform([2], 1.0, 1.0)


def test_free_function_draws_match_methods():
    assert rng_randint(Rng(8), 100) == Rng(8).randint(100)
    np.testing.assert_array_equal(rng_uniform(Rng(8), [3], 0.0, 2.0), Rng(8).uniform([3], 0.0, 2.0))


@given(st.integers(0, 3), st.integers(0, 3), st.integers(0, 2), st.integers(0, 2))
def test_crop_of_crop_is_one_crop(top1, left1, top2, left2):
    a = np.arange(2 * 9 * 9, dtype=np.float64).reshape(2, 9, 9)
    outer = crop2d(a, top1, left1, 6, 6)
    inner = crop2d(outer, top2, left2, 4, 4)
    np.testing.assert_array_equal(inner, crop2d(a, top1 + top2, left1 + left2, 4, 4))


@given(st.integers(0, 2**32 - 2))
def test_neighbouring_seeds_diverge_early(seed):
    first = Rng(seed).uniform([16], 0.0, 1.0)
    second = Rng(seed + 1).uniform([16], 0.0, 1.0)
    assert np.any(first != second)


def test_uniform_mean_is_centered():
    values = Rng(123).uniform([100_000], 0.0, 1.0)
    assert abs(float(values.mean()) - 0.5) < 0.01
