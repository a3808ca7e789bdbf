import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sparse_net.data import Dataset
from sparse_net.net import NetworkArch, NetworkParams, empirical_risk, forward, gradient

from conftest import random_params, zero_params


def fd_gradient(arch, params, data, h=1e-5):
    theta = params.to_vector()
    out = np.empty_like(theta)
    for i in range(theta.size):
        e = np.zeros_like(theta)
        e[i] = h
        out[i] = (empirical_risk(arch, params.from_vector(theta + e), data)
                  - empirical_risk(arch, params.from_vector(theta - e), data)) / (2 * h)
    return out


def test_arch_validation():
    with pytest.raises(ValueError):
        NetworkArch((3, 1))
    with pytest.raises(ValueError):
        NetworkArch((3, 0, 1))
    with pytest.raises(ValueError):
        NetworkArch((3, 2, 1), "relu")
    arch = NetworkArch([5, 4, 3, 1])
    assert arch.layer_widths == (5, 4, 3, 1) and arch.n_layers == 3


def test_constant_network():
    arch = NetworkArch((3, 4, 1))
    params = zero_params(arch)
    params.output_bias[:] = 0.5
    for x in ([0.0, 0.0, 0.0], [1.0, -3.0, 7.5]):
        assert forward(arch, params, x).tolist() == [0.5]


def test_single_unit_tanh():
    arch = NetworkArch((1, 1, 1), "tanh")
    params = NetworkParams(np.array([[1.0]]), np.array([0.0]), [], np.array([[1.0]]), np.array([0.0]))
    out = forward(arch, params, [1.0])
    assert out[0] == pytest.approx(math.tanh(1.0), abs=1e-15)
    assert out[0] == pytest.approx(0.7615941559557649, abs=1e-15)


def test_batch_matches_single(rng):
    arch = NetworkArch((3, 4, 2, 2))
    params = random_params(arch, rng)
    X = rng.normal(size=(5, 3))
    batch = forward(arch, params, X)
    for i in range(5):
        np.testing.assert_allclose(batch[i], forward(arch, params, X[i]), rtol=1e-14, atol=1e-15)


def test_shape_mismatch_names_layer(rng):
    arch = NetworkArch((3, 4, 2, 1))
    params = random_params(arch, rng)
    params.hidden[0] = (np.zeros((2, 5)), np.zeros(2))
    with pytest.raises(ValueError, match="layer 2"):
        forward(arch, params, np.zeros(3))
    with pytest.raises(ValueError, match="input layer"):
        forward(arch, random_params(arch, rng), np.zeros(4))


def test_empirical_risk_examples():
    arch = NetworkArch((2, 3, 1))
    params = zero_params(arch)
    assert empirical_risk(arch, params, Dataset(np.ones((3, 2)), np.zeros(3))) == 0.0
    assert empirical_risk(arch, params, Dataset(np.ones((2, 2)), np.array([1.0, -1.0]))) == 1.0


def test_empirical_risk_is_mean_of_squares(rng):
    arch = NetworkArch((3, 5, 4, 1))
    params = random_params(arch, rng)
    data = Dataset(rng.normal(size=(9, 3)), rng.normal(size=9))
    one_by_one = [(forward(arch, params, x)[0] - y) ** 2 for x, y in zip(data.X, data.Y)]
    assert empirical_risk(arch, params, data) == pytest.approx(np.mean(one_by_one), rel=1e-14)
    assert empirical_risk(arch, params, data) >= 0


def test_empty_dataset_rejected():
    arch = NetworkArch((2, 2, 1))
    empty = SimpleNamespace(X=np.zeros((0, 2)), Y=np.zeros(0))
    with pytest.raises(ValueError, match="empty"):
        empirical_risk(arch, zero_params(arch), empty)
    with pytest.raises(ValueError, match="empty"):
        gradient(arch, zero_params(arch), empty)


def test_gradient_zero_at_perfect_fit(rng):
    arch = NetworkArch((3, 4, 3, 1))
    params = random_params(arch, rng)
    X = rng.normal(size=(10, 3))
    data = Dataset(X, forward(arch, params, X)[:, 0])
    g = gradient(arch, params, data).to_vector()
    assert np.all(g == 0.0)


def test_output_bias_gradient_is_minus_twice_mean_residual(rng):
    arch = NetworkArch((3, 1, 1), "identity")
    params = random_params(arch, rng)
    data = Dataset(rng.normal(size=(25, 3)), rng.normal(size=25))
    resid = data.Y - forward(arch, params, data.X)[:, 0]
    g = gradient(arch, params, data)
    assert g.output_bias[0] == pytest.approx(-2 * resid.mean(), rel=1e-12)
    # linear model f = Q (P x + p) + q: dR/dP = -2 Q mean(resid * x)
    expected_P = -2 * params.output_weights[0, 0] * (resid[:, None] * data.X).mean(axis=0)
    np.testing.assert_allclose(g.first_layer_weights[0], expected_P, rtol=1e-12)


@pytest.mark.parametrize("activation", ["tanh", "identity"])
def test_gradient_matches_finite_differences(activation):
    rng = np.random.default_rng(7)
    for _ in range(10):
        depth = rng.integers(1, 4)
        widths = tuple(int(w) for w in rng.integers(1, 6, size=depth + 2))
        arch = NetworkArch(widths, activation)
        params = random_params(arch, rng)
        n = int(rng.integers(1, 21))
        Y = rng.normal(size=(n, widths[-1]))
        data = Dataset(rng.uniform(-1, 1, (n, widths[0])), Y[:, 0] if widths[-1] == 1 else Y)
        g = gradient(arch, params, data).to_vector()
        g_fd = fd_gradient(arch, params, data)
        assert np.all(np.abs(g - g_fd) <= 1e-5 * (1 + np.abs(g_fd)))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), k=st.integers(0, 4), s=st.floats(-1e3, 1e3))
def test_zero_column_makes_input_insignificant(seed, k, s):
    rng = np.random.default_rng(seed)
    arch = NetworkArch((5, 4, 3, 1))
    params = random_params(arch, rng)
    params.first_layer_weights[:, k] = 0.0
    x = rng.uniform(-1, 1, 5)
    x2 = x.copy()
    x2[k] = s
    assert forward(arch, params, x).tobytes() == forward(arch, params, x2).tobytes()


def test_hidden_permutation_symmetry(rng):
    arch = NetworkArch((4, 5, 3, 1))
    params = random_params(arch, rng)
    X = rng.normal(size=(20, 4))
    base = forward(arch, params, X)
    perm1, perm2 = rng.permutation(5), rng.permutation(3)
    P, p = params.first_layer_weights[perm1], params.first_layer_bias[perm1]
    W, b = params.hidden[0]
    W = W[perm2][:, perm1]
    b = b[perm2]
    Q = params.output_weights[:, perm2]
    permuted = NetworkParams(P, p, [(W, b)], Q, params.output_bias.copy())
    np.testing.assert_allclose(forward(arch, permuted, X), base, atol=1e-12, rtol=0)


def test_forward_is_pure(rng):
    arch = NetworkArch((3, 4, 1))
    params = random_params(arch, rng)
    before = params.to_vector().copy()
    x = rng.normal(size=(6, 3))
    x_before = x.copy()
    a, b = forward(arch, params, x), forward(arch, params, x)
    np.testing.assert_array_equal(a, b)
    np.testing.assert_array_equal(params.to_vector(), before)
    np.testing.assert_array_equal(x, x_before)


def test_vector_round_trip(rng):
    arch = NetworkArch((3, 4, 2, 1))
    params = random_params(arch, rng)
    again = params.from_vector(params.to_vector())
    np.testing.assert_array_equal(again.to_vector(), params.to_vector())
    with pytest.raises(ValueError):
        params.from_vector(np.zeros(3))
