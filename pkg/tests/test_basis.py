import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from math import comb

from dmlpg.basis import PolyBasis, eval_basis, eval_gradient, eval_laplacian, multi_indices


@pytest.mark.parametrize("m", range(7))
def test_dimension(m):
    assert len(multi_indices(m)) == comb(m + 2, 2) == PolyBasis(m, [0, 0], 1.0).Q


def test_ordering():
    assert multi_indices(2).tolist() == [[0, 0], [1, 0], [0, 1], [2, 0], [1, 1], [0, 2]]


def test_values_examples():
    b = PolyBasis(2, [0.3, 0.4], 0.1)
    np.testing.assert_array_equal(eval_basis(b, [0.3, 0.4]), [1, 0, 0, 0, 0, 0])
    np.testing.assert_array_equal(eval_basis(PolyBasis(1, [0, 0], 1.0), [2.0, 3.0]), [1, 2, 3])
    v = eval_basis(PolyBasis(2, [0.5, 0.5], 0.1), [0.6, 0.5])
    np.testing.assert_allclose(v, [1, 1, 0, 1, 0, 0], atol=1e-14)


def test_derivative_examples():
    b = PolyBasis(2, [0.2, 0.7], 0.1)
    x = np.array([0.25, 0.61])
    np.testing.assert_array_equal(eval_gradient(b, x)[0], [0.0, 0.0])
    assert eval_laplacian(b, x)[0] == 0.0
    assert eval_laplacian(b, x)[3] == pytest.approx(2 / 0.1**2)


def test_batch_shapes():
    b = PolyBasis(3, [0, 0], 0.5)
    x = np.random.default_rng(0).random((7, 2))
    assert b.eval(x).shape == (7, 10)
    assert b.gradient(x).shape == (7, 10, 2)
    assert b.laplacian(x).shape == (7, 10)


def test_rejects_bad_scale():
    with pytest.raises(ValueError):
        PolyBasis(2, [0, 0], 0.0)


def _fd_gradient(b, x, eps):
    e = np.eye(2) * eps
    return np.stack([(b.eval(x + e[i]) - b.eval(x - e[i])) / (2 * eps) for i in range(2)], axis=-1)


def _fd_laplacian(b, x, eps):
    # fourth-order stencil, exact for degree <= 5
    e = np.eye(2) * eps
    f = b.eval
    return sum(
        (-f(x + 2 * e[i]) + 16 * f(x + e[i]) - 30 * f(x) + 16 * f(x - e[i]) - f(x - 2 * e[i]))
        / (12 * eps**2)
        for i in range(2)
    )


@settings(max_examples=100, deadline=None)
@given(
    m=st.integers(0, 4),
    z=st.tuples(st.floats(0, 1), st.floats(0, 1)),
    off=st.tuples(st.floats(-2, 2), st.floats(-2, 2)),
    h=st.floats(0.05, 1.0),
)
def test_derivatives_match_finite_differences(m, z, off, h):
    b = PolyBasis(m, z, h)
    x = np.array(z) + h * np.array(off)
    g = b.gradient(x)
    fd = _fd_gradient(b, x, 1e-5 * h)
    scale = max(1.0, np.abs(g).max())
    assert np.abs(g - fd).max() / scale < 1e-6
    lap = b.laplacian(x)
    fd2 = _fd_laplacian(b, x, 1e-2 * h)
    scale = max(1.0, np.abs(lap).max())
    assert np.abs(lap - fd2).max() / scale < 1e-6
