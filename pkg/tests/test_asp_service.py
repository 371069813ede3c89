import numpy as np
import pytest

from helpers import sparse_reals
from services.asp_service import AspConfig, asp_apply
from services.quant_service import quantize
from utils.exceptions import DomainError, StateError
from utils.models import QuantParams, Tensor


def _vector(values):
    return Tensor((1, len(values), 1, 1), values)


def test_example():
    out = asp_apply(_vector([0.1, 0.3, 0.2, 0.05]), AspConfig(0.2))
    assert out.elems.tolist() == [0.0, 0.3, 0.2, 0.0]


def test_disabled_is_identity():
    x = _vector([0.1, 0.0, 3.0])
    assert asp_apply(x, AspConfig(0.0)).equals(x)
    assert not AspConfig().enabled


def test_compares_magnitudes():
    out = asp_apply(_vector([-0.1, -0.5, 0.5]), AspConfig(0.25))
    assert out.elems.tolist() == [0.0, -0.5, 0.5]


def test_is_idempotent_and_keeps_survivors_exact():
    x = sparse_reals((1, 16, 8, 8), 0.3, seed=5)
    cfg = AspConfig(0.4)
    once = asp_apply(x, cfg)
    assert asp_apply(once, cfg).equals(once)

    survivors = once.data != 0
    assert np.array_equal(once.data[survivors], x.data[survivors])


def test_properties_over_random_tensors():
    rng = np.random.default_rng(11)
    for seed in range(1000):
        x = sparse_reals((1, 8, 4, 4), float(rng.random()), seed=seed, signed=bool(seed % 2))
        t1, t2 = sorted(rng.random(2))
        low, high = asp_apply(x, AspConfig(t1)), asp_apply(x, AspConfig(t2))

        assert high.nnz <= low.nnz
        assert asp_apply(low, AspConfig(t1)).equals(low)
        kept = np.abs(x.data) >= t1
        assert np.array_equal(low.data[kept], x.data[kept])


def test_invalid_threshold():
    with pytest.raises(DomainError):
        AspConfig(-0.1)


def test_quantized_input_is_rejected():
    codes = quantize(_vector([1.0]), QuantParams(8))
    with pytest.raises(StateError):
        asp_apply(codes, AspConfig(0.5))
