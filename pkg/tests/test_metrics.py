import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from app.errors import ArgumentError, UndefinedCorrelationError
from app.tools.metrics import mae, pearson, rmse


def definitional_pearson(x, y) -> float:
    mx = sum(x) / len(x)
    my = sum(y) / len(y)
    cov = sum((a - mx) * (b - my) for a, b in zip(x, y))
    vx = sum((a - mx) ** 2 for a in x)
    vy = sum((b - my) ** 2 for b in y)
    return cov / (vx ** 0.5 * vy ** 0.5)


def test_hand_case():
    assert pearson([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(0.8, abs=1e-12)


def test_matches_two_pass_definition():
    rng = np.random.default_rng(0)
    for _ in range(100):
        n = int(rng.integers(2, 1001))
        x, y = rng.standard_normal(n), rng.standard_normal(n)
        assert pearson(x, y) == pytest.approx(definitional_pearson(x.tolist(), y.tolist()), abs=1e-12)


def test_perfect_linear_cases():
    x = np.arange(10.0)
    assert pearson(x, 3 * x + 2) == 1.0
    assert pearson(x, -0.5 * x + 7) == -1.0


@given(
    st.lists(st.floats(-100, 100), min_size=3, max_size=30, unique=True),
    st.floats(0.1, 10),
    st.floats(-5, 5),
)
def test_affine_invariance(values, scale, shift):
    x = np.array(values)
    y = np.sin(x) + x
    if np.std(y) < 1e-6:
        return
    assert pearson(x, y) == pytest.approx(pearson(scale * x + shift, y), abs=1e-9)
    assert pearson(x, y) == pytest.approx(pearson(y, x), abs=1e-12)


def test_zero_variance_raises():
    with pytest.raises(UndefinedCorrelationError):
        pearson([1.0, 2.0, 3.0], [2.0, 2.0, 2.0])


def test_length_checks():
    with pytest.raises(ArgumentError):
        pearson([1.0], [1.0])
    with pytest.raises(ArgumentError):
        pearson([1.0, 2.0], [1.0, 2.0, 3.0])


def test_mae_and_rmse():
    assert mae([1, 2, 3], [2, 2, 5]) == pytest.approx(1.0)
    assert rmse([1, 2, 3], [2, 2, 5]) == pytest.approx(np.sqrt(5 / 3))
