"""Orthonormal DCT-II basis and the 1-D / 2-D transforms built on it.

All transforms run in float64 and accept batches: the transformed axis
(or trailing pair of axes for 2-D) must have length n.
"""
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import fft

from utils.constants import SUPPORTED_PATCH_LENGTHS
from utils.exceptions import DomainError, ShapeError


@dataclass(frozen=True, eq=False)
class DctMatrix:
    n: int
    a: np.ndarray = field(repr=False)


@lru_cache(maxsize=None)
def dct_matrix(n):
    """a[i][j] = c(i) * cos((j + 0.5) * pi * i / n)"""
    if n not in SUPPORTED_PATCH_LENGTHS:
        raise DomainError(f"patch length {n} not supported, use one of {SUPPORTED_PATCH_LENGTHS}")

    i = np.arange(n, dtype=np.float64)[:, None]
    j = np.arange(n, dtype=np.float64)[None, :]
    c = np.full((n, 1), np.sqrt(2.0 / n))
    c[0, 0] = np.sqrt(1.0 / n)
    a = c * np.cos((j + 0.5) * np.pi * i / n)
    a.setflags(write=False)
    return DctMatrix(n, a)


def _check_vector(x, m):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 0 or x.shape[-1] != m.n:
        raise ShapeError(f"expected trailing length {m.n}, got shape {x.shape}")
    return x


def _check_square(x, m):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim < 2 or x.shape[-2:] != (m.n, m.n):
        raise ShapeError(f"expected trailing shape ({m.n}, {m.n}), got {x.shape}")
    return x


def dct1d_forward(x, m):
    """y = A x for every length-n vector along the last axis"""
    return _check_vector(x, m) @ m.a.T


def dct1d_inverse(y, m):
    """x = A^T y for every length-n vector along the last axis"""
    return _check_vector(y, m) @ m.a


def dct1d_forward_fast(x, m):
    """Factored DCT-II; matches dct1d_forward to 1e-9"""
    return fft.dct(_check_vector(x, m), type=2, norm='ortho', axis=-1)


def dct1d_inverse_fast(y, m):
    return fft.idct(_check_vector(y, m), type=2, norm='ortho', axis=-1)


def dct2d_forward(x, m):
    """Y = A X A^T: column transforms followed by row transforms"""
    x = _check_square(x, m)
    return m.a @ x @ m.a.T


def dct2d_inverse(y, m):
    y = _check_square(y, m)
    return m.a.T @ y @ m.a
