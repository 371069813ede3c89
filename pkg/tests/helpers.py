import os

import numpy as np

from utils.models import QuantParams, Signedness, Tensor

GOLDEN_FOLDER = os.path.join(os.path.dirname(os.path.abspath(__file__)), 'golden')


def golden_bytes(name):
    """Hex dump with '#' comments and free whitespace"""
    with open(os.path.join(GOLDEN_FOLDER, name), 'r', encoding='utf-8') as f:
        text = ''.join(line.split('#', 1)[0] for line in f)
    return bytes.fromhex(''.join(text.split()))


def sparse_codes(dims, nnz, bitwidth=8, seed=0, signed=False):
    """Quantized tensor with exactly nnz nonzero codes at random positions"""
    rng = np.random.default_rng(seed)
    count = int(np.prod(dims))
    q = QuantParams(bitwidth, Signedness.SIGNED_SYMMETRIC if signed else Signedness.UNSIGNED, 1.0)
    codes = np.zeros(count, dtype=np.int64)
    positions = rng.permutation(count)[:nnz]
    if signed:
        magnitudes = rng.integers(1, q.qmax + 1, size=nnz)
        codes[positions] = magnitudes * rng.choice([-1, 1], size=nnz)
    else:
        codes[positions] = rng.integers(1, q.qmax + 1, size=nnz)
    return Tensor(dims, codes, quant=q)


def sparse_reals(dims, sparsity, seed=0, signed=False):
    rng = np.random.default_rng(seed)
    values = rng.random(int(np.prod(dims))) + 0.01
    if signed:
        values *= rng.choice([-1.0, 1.0], size=values.size)
    values[rng.random(values.size) < sparsity] = 0.0
    return Tensor(dims, values)
