import numpy as np
import pytest

from dme_driver.exceptions import ContractError, EmptyContextError, ShapeError
from dme_driver.nn import ops
from dme_driver.nn.attention import AttentionParams, multi_head_attention
from dme_driver.nn.gradcheck import grad_check
from dme_driver.nn.tape import Matrix


@pytest.fixture
def params():
    return AttentionParams.init(np.random.default_rng(0), dim=8, num_heads=2)


def random_rows(rng, n, d=8):
    return Matrix(rng.normal(size=(n, d)))


def test_single_key_takes_all_the_weight(params):
    rng = np.random.default_rng(1)
    q, k = random_rows(rng, 3), random_rows(rng, 1)
    out = multi_head_attention(q, k, k, params)
    heads = np.concatenate([k.value @ v.value for v in params.value], axis=1)
    expected = heads @ params.output.value
    assert np.allclose(out.value, np.repeat(expected, 3, axis=0), atol=1e-12)


def test_zero_output_projection_gives_zero(params):
    params.output = Matrix.zeros(8, 8)
    rng = np.random.default_rng(2)
    out = multi_head_attention(random_rows(rng, 3), random_rows(rng, 4), random_rows(rng, 4), params)
    assert not out.value.any()


def test_permuting_keys_and_values_together(params):
    rng = np.random.default_rng(3)
    q, k, v = random_rows(rng, 5), random_rows(rng, 6), random_rows(rng, 6)
    base = multi_head_attention(q, k, v, params).value
    for _ in range(20):
        perm = rng.permutation(6)
        shuffled = multi_head_attention(q, Matrix(k.value[perm]), Matrix(v.value[perm]), params).value
        assert np.abs(shuffled - base).max() <= 1e-12


def test_empty_context_is_rejected(params):
    with pytest.raises(EmptyContextError):
        multi_head_attention(Matrix.zeros(2, 8), Matrix(np.zeros((0, 8))), Matrix(np.zeros((0, 8))), params)


def test_dimension_mismatch(params):
    with pytest.raises(ShapeError):
        multi_head_attention(Matrix.zeros(2, 6), Matrix.zeros(1, 8), Matrix.zeros(1, 8), params)


def test_heads_must_divide_dim():
    with pytest.raises(ContractError):
        AttentionParams.init(np.random.default_rng(0), dim=8, num_heads=3)


def test_attention_gradients_match_finite_differences(params):
    rng = np.random.default_rng(4)
    q = Matrix(rng.normal(size=(3, 8)), requires_grad=True)
    k = Matrix(rng.normal(size=(4, 8)), requires_grad=True)
    v = Matrix(rng.normal(size=(4, 8)), requires_grad=True)
    weights = list(params.parameters().values())

    def loss(*_):
        return ops.mean_all(ops.tanh(multi_head_attention(q, k, v, params)))

    assert grad_check(loss, [q, k, v, *weights]) < 1e-4
