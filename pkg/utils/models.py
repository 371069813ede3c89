from dataclasses import dataclass, field
from enum import IntEnum
from typing import Optional, Tuple

import numpy as np

from utils.constants import MAX_CODE_BITS, MIN_CODE_BITS
from utils.exceptions import DomainError, ShapeError


class Signedness(IntEnum):
    UNSIGNED = 0
    SIGNED_SYMMETRIC = 1


@dataclass(frozen=True)
class QuantParams:
    """Per-tensor fixed-point parameters; scale is held at float32 precision"""
    bitwidth: int
    signedness: Signedness = Signedness.UNSIGNED
    scale: float = 1.0
    zero_point: int = 0

    def __post_init__(self):
        if not MIN_CODE_BITS <= int(self.bitwidth) <= MAX_CODE_BITS:
            raise DomainError(f"bitwidth must be within {MIN_CODE_BITS}-{MAX_CODE_BITS}, got {self.bitwidth}")
        signedness = Signedness(int(self.signedness))
        if signedness is Signedness.SIGNED_SYMMETRIC and self.bitwidth < 2:
            raise DomainError("signed-symmetric codes need at least 2 bits")
        scale = float(np.float32(self.scale))
        if not np.isfinite(scale) or scale <= 0:
            raise DomainError(f"scale must be positive and finite, got {self.scale}")
        if self.zero_point != 0:
            raise DomainError("zero_point must be 0 so zeros stay zero codes")
        object.__setattr__(self, 'bitwidth', int(self.bitwidth))
        object.__setattr__(self, 'signedness', signedness)
        object.__setattr__(self, 'scale', scale)

    @property
    def signed(self):
        return self.signedness is Signedness.SIGNED_SYMMETRIC

    @property
    def qmin(self):
        if self.signed:
            return -(2 ** (self.bitwidth - 1) - 1)
        return 0

    @property
    def qmax(self):
        if self.signed:
            return 2 ** (self.bitwidth - 1) - 1
        return 2 ** self.bitwidth - 1


@dataclass(frozen=True)
class Tensor:
    """Immutable (n, c, h, w) activation or weight array.

    Real tensors hold float64 data; quantized tensors hold int64 codes and
    carry their QuantParams.
    """
    dims: Tuple[int, int, int, int]
    data: np.ndarray = field(repr=False)
    quant: Optional[QuantParams] = None

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if len(dims) != 4 or any(d < 1 for d in dims):
            raise ShapeError(f"dims must be four positive integers, got {self.dims}")

        data = np.asarray(self.data)
        if data.size != int(np.prod(dims)):
            raise ShapeError(f"{data.size} elements do not fill dims {dims}")

        if self.quant is not None:
            if data.dtype.kind == 'f':
                if not np.all(np.isfinite(data)) or not np.all(data == np.round(data)):
                    raise DomainError("quantized tensors must hold integer codes")
            data = data.astype(np.int64)
            if data.size and (data.min() < self.quant.qmin or data.max() > self.quant.qmax):
                raise DomainError(
                    f"codes outside [{self.quant.qmin}, {self.quant.qmax}] for {self.quant.bitwidth}-bit params"
                )
        else:
            data = data.astype(np.float64)

        data = data.reshape(dims).copy()
        data.setflags(write=False)
        object.__setattr__(self, 'dims', dims)
        object.__setattr__(self, 'data', data)

    @property
    def size(self):
        return self.data.size

    @property
    def elems(self):
        return self.data.ravel()

    @property
    def is_quantized(self):
        return self.quant is not None

    @property
    def nnz(self):
        return int(np.count_nonzero(self.data))

    @property
    def sparsity(self):
        return 1.0 - self.nnz / self.size

    def equals(self, other):
        """Element-exact and metadata-exact comparison"""
        return (
            isinstance(other, Tensor)
            and self.dims == other.dims
            and self.quant == other.quant
            and self.data.dtype == other.data.dtype
            and np.array_equal(self.data, other.data)
        )
