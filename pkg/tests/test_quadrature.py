import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arrayscatter.errors import QuadratureFailure
from arrayscatter.quadrature import gauss_kronrod


def test_polynomial_exact():
    res = gauss_kronrod(lambda x: x ** 10 - 3 * x ** 3, [0.0, 2.0])
    assert res.value == pytest.approx(2 ** 11 / 11 - 3 * 2 ** 4 / 4, rel=1e-14)


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3), st.floats(0.01, 2))
def test_lorentzian_integral(x0, w):
    f = lambda x: w / ((x - x0) ** 2 + w * w) / np.pi  # noqa: E731
    res = gauss_kronrod(f, [-50.0, x0, 50.0], rtol=1e-10)
    exact = (np.arctan((50 - x0) / w) + np.arctan((50 + x0) / w)) / np.pi
    assert res.value == pytest.approx(exact, rel=1e-9)


def test_complex_integrand():
    res = gauss_kronrod(lambda x: np.exp(1j * x), [0.0, np.pi])
    assert abs(res.value - 2j) < 1e-13


def test_budget_exhaustion():
    with pytest.raises(QuadratureFailure):
        gauss_kronrod(lambda x: np.sign(np.sin(1 / x)), [1e-6, 1.0], rtol=1e-14, max_cells=20)
