"""Tests for the CAIM block."""

import numpy as np
import pytest

from caimbench.autograd import Tensor
from caimbench.autograd.gradcheck import max_relative_error
from caimbench.errors import ShapeError
from caimbench.modulation import (
    CaimBlock,
    Gate,
    aim,
    block_cost,
    caim_forward,
    count_block_cost,
    modulation_params,
    normalize,
    style_features,
    unconditional_forward,
)

@pytest.fixture
def block():
    return CaimBlock.initialize(4, np.random.default_rng(0))


def test_source_gate_returns_input_unchanged(block, rng):
    """Test that gate 0 hands back the input tensor itself."""
    f = Tensor(rng.normal(size=(3, 4, 6, 6)))
    out = caim_forward(block, f, Gate.SOURCE)
    assert out is f
    assert block(f, 0) is f


def test_zero_block_is_identity_for_target(rng):
    f = Tensor(rng.normal(size=(2, 3, 5, 5)))
    out = caim_forward(CaimBlock.zeros(3), f, Gate.TARGET)
    np.testing.assert_array_equal(out.data, f.data)


def test_target_gate_adds_aim_residual(block, rng):
    f = Tensor(rng.normal(size=(2, 4, 6, 6)))
    np.testing.assert_allclose(caim_forward(block, f, 1).data, aim(block, f).data + f.data, rtol=1e-12)


def test_aim_matches_manual_modulation(block, rng):
    f = Tensor(rng.normal(size=(2, 4, 6, 6)))
    params = modulation_params(block, style_features(block, f))
    sigma = params.sigma_f.data[:, :, None, None]
    mu = params.mu_f.data[:, :, None, None]
    np.testing.assert_allclose(aim(block, f).data, sigma * normalize(f).data + mu, rtol=1e-12)
    np.testing.assert_allclose(unconditional_forward(f, "aim", block).data, aim(block, f).data)


def test_style_code_shape(block, rng):
    f = Tensor(rng.normal(size=(5, 4, 6, 6)))
    xi = style_features(block, f)
    assert xi.shape == (5, 4)
    params = modulation_params(block, xi)
    assert params.sigma_f.shape == (5, 4)
    assert params.mu_f.shape == (5, 4)


def test_delta_kernels_reduce_style_code_to_spatial_mean(rng):
    """Center-only 3×3 kernels pass a positive map through both convolutions unchanged."""
    block = CaimBlock.zeros(4)
    for weight in (block.conv1_weight, block.conv2_weight):
        for c in range(4):
            weight.data[c, c, 1, 1] = 1.0
    f = rng.uniform(0.1, 3.0, size=(3, 4, 6, 5))
    xi = style_features(block, Tensor(f))
    np.testing.assert_allclose(xi.data, f.mean(axis=(2, 3)), rtol=1e-12)


@pytest.mark.parametrize("seed", range(20))
def test_block_gradients(seed):
    """Test the analytic gradient of every input and parameter entry against finite differences."""
    rng = np.random.default_rng(seed)
    block = CaimBlock.initialize(4, rng)
    f = Tensor(rng.normal(size=(2, 4, 6, 6)), requires_grad=True)
    weights = Tensor(rng.normal(size=(2, 4, 6, 6)))

    def loss():
        return (caim_forward(block, f, Gate.TARGET) * weights).sum()

    tensors = [f, *block.parameters().values()]
    assert max_relative_error(loss, tensors) <= 1e-4


def test_source_gate_leaves_parameters_without_gradient(block, rng):
    f = Tensor(rng.normal(size=(2, 4, 6, 6)), requires_grad=True)
    caim_forward(block, f, Gate.SOURCE).sum().backward()
    assert all(p.grad is None for p in block.parameters().values())
    np.testing.assert_array_equal(f.grad, np.ones(f.shape))


def test_target_gate_reaches_every_parameter(block, rng):
    f = Tensor(rng.normal(size=(2, 4, 6, 6)))
    weights = Tensor(rng.normal(size=(2, 4, 6, 6)))
    (caim_forward(block, f, Gate.TARGET) * weights).sum().backward()
    for name, p in block.parameters().items():
        assert p.grad is not None, name
        assert p.grad.shape == p.shape


@pytest.mark.parametrize("channels", [1, 4, 16, 64])
def test_block_cost_closed_form(channels):
    c = channels
    h, w = 8, 6
    cost = block_cost(c, h, w)
    assert cost.params == 20 * c * c + 4 * c
    assert cost.params == CaimBlock.initialize(c, np.random.default_rng(1)).parameter_count()
    assert cost.conv_flops == 2 * 2 * 9 * c * c * h * w
    assert cost.flops == 2 * (2 * 9 * c * c * h * w + 2 * c * c + 2 * c * h * w)
    assert count_block_cost(CaimBlock.zeros(c), h, w) == cost


def test_convolutions_dominate_block_cost():
    cost = block_cost(64, 16, 16)
    assert cost.conv_flops / cost.flops > 0.9


def test_invalid_gate_and_shapes(block, rng):
    f = Tensor(rng.normal(size=(1, 4, 4, 4)))
    with pytest.raises(ValueError, match="gate"):
        caim_forward(block, f, 2)
    with pytest.raises(ShapeError):
        caim_forward(block, Tensor(rng.normal(size=(1, 3, 4, 4))), 1)
    with pytest.raises(ShapeError):
        modulation_params(block, Tensor(rng.normal(size=(2, 5))))
    with pytest.raises(ValueError):
        block_cost(4, 0, 4)
    with pytest.raises(ValueError):
        CaimBlock(4, conv1_weight=Tensor(np.zeros((4, 4, 3, 3))))


def test_gate_for_modality():
    assert Gate.for_modality("target") == Gate.TARGET == 1
    assert Gate.for_modality("source") == Gate.SOURCE == 0
    with pytest.raises(ValueError):
        Gate.for_modality("visible")  # type: ignore[arg-type]
