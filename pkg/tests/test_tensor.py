"""Tests for the autograd tensor and its primitives."""

import numpy as np
import pytest

from caimbench.autograd import (
    Tensor,
    conv2d,
    dense,
    global_average_pool,
    instance_stats,
    l2_normalize,
    no_grad,
    record_relu_signs,
    relu,
    softmax_cross_entropy,
)
from caimbench.autograd.gradcheck import max_relative_error, numeric_gradient
from caimbench.errors import GradientError, ShapeError

TOLERANCE = 1e-4
SEEDS = range(20)


def _leaf(rng, *shape, scale=1.0):
    return Tensor(rng.normal(0.0, scale, size=shape), requires_grad=True)


def _project(out: Tensor, weights: np.ndarray) -> Tensor:
    """Scalar loss sum(out * weights) so every output entry gets a distinct gradient."""
    return (out * Tensor(weights)).sum()


@pytest.mark.parametrize("seed", SEEDS)
def test_elementwise_gradients(seed):
    """Broadcast arithmetic, powers and square roots match finite differences."""
    rng = np.random.default_rng(seed)
    a = _leaf(rng, 3, 4)
    b = _leaf(rng, 1, 4)
    c = Tensor(rng.uniform(1.0, 2.0, size=(3, 1)), requires_grad=True)
    w = rng.normal(size=(3, 4))

    def loss():
        mixed = (a + b) * c - a / c + (-b) ** 2 + (a * a + 1.0).sqrt()
        return _project(mixed, w)

    assert max_relative_error(loss, [a, b, c]) <= TOLERANCE


@pytest.mark.parametrize("seed", SEEDS)
def test_reduction_and_view_gradients(seed):
    rng = np.random.default_rng(seed)
    x = _leaf(rng, 2, 3, 4)
    w = rng.normal(size=(3, 2))

    def loss():
        pooled = x.mean(axis=2) * 2.0 + x.sum(axis=(2,))
        return _project(pooled.reshape(3, 2), w) + x[1, :, 2].sum()

    assert max_relative_error(loss, [x]) <= TOLERANCE


@pytest.mark.parametrize("seed", SEEDS)
@pytest.mark.parametrize("stride,padding", [(1, 1), (2, 1), (1, 0)])
def test_conv2d_gradients(seed, stride, padding):
    rng = np.random.default_rng(seed)
    x = _leaf(rng, 2, 3, 5, 5)
    w = _leaf(rng, 4, 3, 3, 3, scale=0.3)
    b = _leaf(rng, 4)
    out_shape = conv2d(x, w, b, stride, padding).shape
    weights = rng.normal(size=out_shape)

    def loss():
        return _project(conv2d(x, w, b, stride, padding), weights)

    assert max_relative_error(loss, [x, w, b]) <= TOLERANCE


def test_conv2d_matches_direct_sum(rng):
    """Cross-correlation against an explicit loop."""
    x = rng.normal(size=(1, 2, 4, 4))
    w = rng.normal(size=(3, 2, 3, 3))
    b = rng.normal(size=3)
    out = conv2d(Tensor(x), Tensor(w), Tensor(b), stride=2, padding=1).data

    padded = np.pad(x, ((0, 0), (0, 0), (1, 1), (1, 1)))
    expected = np.zeros((1, 3, 2, 2))
    for o in range(3):
        for i in range(2):
            for j in range(2):
                patch = padded[0, :, 2 * i : 2 * i + 3, 2 * j : 2 * j + 3]
                expected[0, o, i, j] = np.sum(patch * w[o]) + b[o]
    np.testing.assert_allclose(out, expected, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("seed", SEEDS)
def test_relu_pool_dense_gradients(seed):
    rng = np.random.default_rng(seed)
    x = _leaf(rng, 3, 2, 4, 4)
    w = _leaf(rng, 5, 2)
    b = _leaf(rng, 5)
    weights = rng.normal(size=(3, 5))

    def loss():
        return _project(dense(global_average_pool(relu(x)), w, b), weights)

    assert max_relative_error(loss, [x, w, b]) <= TOLERANCE


@pytest.mark.parametrize("seed", SEEDS)
def test_instance_stats_gradients(seed):
    rng = np.random.default_rng(seed)
    x = _leaf(rng, 2, 3, 4, 4)
    wm = rng.normal(size=(2, 3, 1, 1))
    ws = rng.normal(size=(2, 3, 1, 1))

    def loss():
        stats = instance_stats(x)
        return _project(stats.mean, wm) + _project(stats.std, ws)

    assert max_relative_error(loss, [x]) <= TOLERANCE


@pytest.mark.parametrize("seed", SEEDS)
def test_l2_normalize_and_cross_entropy_gradients(seed):
    rng = np.random.default_rng(seed)
    x = _leaf(rng, 4, 6)
    labels = rng.integers(0, 6, size=4)
    weights = rng.normal(size=(4, 6))

    assert max_relative_error(lambda: _project(l2_normalize(x), weights), [x]) <= TOLERANCE
    assert max_relative_error(lambda: softmax_cross_entropy(x, labels), [x]) <= TOLERANCE


def test_instance_stats_ignore_spatial_order(rng):
    """Shuffling the pixels of each channel independently leaves mean and std unchanged."""
    x = rng.normal(1.0, 2.0, size=(2, 3, 5, 4))
    flat = x.reshape(2, 3, 20)
    shuffled = np.stack([np.stack([rng.permutation(channel) for channel in sample]) for sample in flat])
    original = instance_stats(Tensor(x))
    permuted = instance_stats(Tensor(shuffled.reshape(x.shape)))
    np.testing.assert_allclose(permuted.mean.data, original.mean.data, rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(permuted.std.data, original.std.data, rtol=1e-12, atol=1e-12)


def test_l2_normalize_rows_have_unit_norm(rng):
    out = l2_normalize(Tensor(rng.normal(size=(5, 7)))).data
    np.testing.assert_allclose(np.linalg.norm(out, axis=1), 1.0, rtol=1e-12)


def test_sqrt_gradient_at_zero_is_zero():
    x = Tensor(np.zeros(3), requires_grad=True)
    x.sqrt().sum().backward()
    np.testing.assert_array_equal(x.grad, np.zeros(3))


def test_second_backward_raises():
    x = Tensor([1.0, 2.0], requires_grad=True)
    loss = (x * x).sum()
    loss.backward()
    x.zero_grad()
    with pytest.raises(GradientError, match="consumed"):
        loss.backward()


def test_stale_leaf_gradient_raises():
    x = Tensor([1.0, 2.0], requires_grad=True)
    (x * 3.0).sum().backward()
    with pytest.raises(GradientError, match="zero_grad"):
        (x * 3.0).sum().backward()


def test_backward_needs_scalar():
    x = Tensor([1.0, 2.0], requires_grad=True)
    with pytest.raises(ShapeError):
        (x * 2.0).backward()


def test_no_grad_records_nothing():
    x = Tensor([1.0, 2.0], requires_grad=True)
    with no_grad():
        y = (x * 2.0).sum()
    assert not y.requires_grad
    with pytest.raises(GradientError):
        y.backward()


def test_gradients_accumulate_over_shared_parents():
    x = Tensor([3.0], requires_grad=True)
    (x * x + x).sum().backward()
    np.testing.assert_allclose(x.grad, [7.0])


def test_conv2d_rejects_channel_mismatch(rng):
    x = Tensor(rng.normal(size=(1, 2, 4, 4)))
    w = Tensor(rng.normal(size=(3, 4, 3, 3)))
    with pytest.raises(ShapeError, match="channels"):
        conv2d(x, w, Tensor(np.zeros(3)))


def test_dense_rejects_inner_mismatch(rng):
    with pytest.raises(ShapeError):
        dense(Tensor(rng.normal(size=(2, 3))), Tensor(rng.normal(size=(4, 5))), Tensor(np.zeros(4)))


def test_record_relu_signs_collects_every_relu_input():
    x = Tensor([-1.0, 2.0, 0.0])
    with record_relu_signs() as log:
        relu(relu(x) - 1.0)
    assert len(log) == 2
    np.testing.assert_array_equal(log[0], [False, True, False])
    np.testing.assert_array_equal(log[1], [False, True, False])
    relu(x)
    assert len(log) == 2


@pytest.mark.parametrize("offset", [4e-6, 1e-9, -3e-6, -1e-9])
def test_numeric_gradient_steps_around_relu_kinks(offset):
    """An entry closer to a kink than the step still gets the slope of its own piece."""
    x = Tensor([0.3 + offset, 1.5], requires_grad=True)

    def loss():
        return (relu(x - 0.3) * 3.0).sum()

    numeric = numeric_gradient(loss, x)
    expected = 3.0 if offset > 0 else 0.0
    np.testing.assert_allclose(numeric, [expected, 3.0], atol=1e-6)
    assert max_relative_error(loss, [x]) <= TOLERANCE


def test_central_difference_across_a_kink_is_biased():
    """Without the sign check a straddled kink averages both slopes."""
    x = Tensor([0.3 + 4e-6], requires_grad=True)

    def straddled(h):
        upper = (relu(Tensor([x.data[0] + h]) - 0.3) * 3.0).sum().item()
        lower = (relu(Tensor([x.data[0] - h]) - 0.3) * 3.0).sum().item()
        return (upper - lower) / (2.0 * h)

    assert abs(straddled(1e-5) - 3.0) > 0.5
    assert straddled(1e-6) == pytest.approx(3.0, abs=1e-6)
