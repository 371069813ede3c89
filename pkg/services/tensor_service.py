import re
import struct
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np

from services.dct_service import dct1d_inverse, dct_matrix
from utils.constants import (
    DTYPE_CODES,
    DTYPE_FLOAT32,
    DTYPE_SIGNED_CODES,
    FLOAT_BITS,
    MAX_CODE_BITS,
    MIN_CODE_BITS,
    TENSOR_HEADER_FORMAT,
    TENSOR_HEADER_SIZE,
    TENSOR_MAGIC,
)
from utils.exceptions import CodecError, DomainError, FormatError, TruncationError, UnsupportedError
from utils.helpers import ceil_div, log_status
from utils.models import QuantParams, Signedness, Tensor

GENERATOR_PATCH = 8


def _code_dtype(bitwidth, signed):
    if ceil_div(bitwidth, 8) == 1:
        return np.dtype('i1') if signed else np.dtype('u1')
    return np.dtype('<i2') if signed else np.dtype('<u2')


def encode_tensor(t):
    """Serialize a tensor into FMC1 bytes"""
    n, c, h, w = t.dims
    if t.is_quantized:
        q = t.quant
        dtype = DTYPE_SIGNED_CODES if q.signed else DTYPE_CODES
        header = struct.pack(
            TENSOR_HEADER_FORMAT, TENSOR_MAGIC, dtype, q.bitwidth, b'\x00\x00',
            n, c, h, w, q.scale, q.zero_point,
        )
        payload = t.elems.astype(_code_dtype(q.bitwidth, q.signed)).tobytes()
    else:
        header = struct.pack(
            TENSOR_HEADER_FORMAT, TENSOR_MAGIC, DTYPE_FLOAT32, FLOAT_BITS, b'\x00\x00',
            n, c, h, w, 1.0, 0,
        )
        payload = t.elems.astype('<f4').tobytes()
    return header + payload


def decode_tensor(blob):
    """Parse FMC1 bytes into a Tensor"""
    if len(blob) < TENSOR_HEADER_SIZE:
        raise TruncationError(f"header needs {TENSOR_HEADER_SIZE} bytes, found {len(blob)}", offset=len(blob))

    magic, dtype, bitwidth, reserved, n, c, h, w, scale, zero_point = struct.unpack_from(
        TENSOR_HEADER_FORMAT, blob, 0
    )
    if magic != TENSOR_MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {TENSOR_MAGIC!r}", offset=0)
    if reserved != b'\x00\x00':
        raise FormatError("reserved header bytes must be zero", offset=6)
    if min(n, c, h, w) < 1:
        raise FormatError(f"dims must be positive, got {(n, c, h, w)}", offset=8)

    count = n * c * h * w
    payload = blob[TENSOR_HEADER_SIZE:]

    if dtype == DTYPE_FLOAT32:
        if bitwidth != FLOAT_BITS:
            raise UnsupportedError(f"float32 payload must declare bitwidth 32, got {bitwidth}")
        if scale != 1.0 or zero_point != 0:
            raise FormatError("float32 payload must carry scale 1.0 and zero_point 0", offset=24)
        expected = count * 4
        if len(payload) != expected:
            raise TruncationError(
                f"payload holds {len(payload)} bytes, dims need {expected}",
                offset=TENSOR_HEADER_SIZE + min(len(payload), expected),
            )
        values = np.frombuffer(payload, dtype='<f4').astype(np.float64)
        return Tensor((n, c, h, w), values)

    if dtype not in (DTYPE_CODES, DTYPE_SIGNED_CODES):
        raise FormatError(f"unknown dtype {dtype}", offset=4)
    if not MIN_CODE_BITS <= bitwidth <= MAX_CODE_BITS:
        raise UnsupportedError(f"code bitwidth {bitwidth} outside {MIN_CODE_BITS}-{MAX_CODE_BITS}")

    signed = dtype == DTYPE_SIGNED_CODES
    code_dtype = _code_dtype(bitwidth, signed)
    expected = count * code_dtype.itemsize
    if len(payload) != expected:
        raise TruncationError(
            f"payload holds {len(payload)} bytes, dims need {expected}",
            offset=TENSOR_HEADER_SIZE + min(len(payload), expected),
        )

    try:
        q = QuantParams(bitwidth, Signedness.SIGNED_SYMMETRIC if signed else Signedness.UNSIGNED,
                        scale, zero_point)
        codes = np.frombuffer(payload, dtype=code_dtype).astype(np.int64)
        return Tensor((n, c, h, w), codes, quant=q)
    except DomainError as e:
        raise FormatError(f"invalid quantized payload: {str(e)}", offset=TENSOR_HEADER_SIZE)


def read_tensor(path):
    with open(path, 'rb') as f:
        blob = f.read()
    try:
        return decode_tensor(blob)
    except CodecError as e:
        e.args = (f"{path}: {e.args[0]}",) + e.args[1:]
        raise


def write_tensor(t, path):
    blob = encode_tensor(t)
    with open(path, 'wb') as f:
        f.write(blob)
    return len(blob)


@dataclass(frozen=True)
class Spectrum:
    kind: str = 'flat'
    k: int = GENERATOR_PATCH

    @classmethod
    def parse(cls, text):
        """Accepts 'flat', 'lowpass(k)' or 'lowpass:k'"""
        text = text.strip().lower()
        if text == 'flat':
            return cls()
        match = re.fullmatch(r'lowpass[(:](\d+)\)?', text)
        if not match:
            raise DomainError(f"unknown spectrum '{text}', expected flat or lowpass(k)")
        return cls('lowpass', int(match.group(1)))

    def __post_init__(self):
        if self.kind not in ('flat', 'lowpass'):
            raise DomainError(f"unknown spectrum kind '{self.kind}'")
        if self.kind == 'lowpass' and not 1 <= self.k <= GENERATOR_PATCH:
            raise DomainError(f"lowpass(k) requires 1 <= k <= {GENERATOR_PATCH}, got {self.k}")

    def __str__(self):
        return 'flat' if self.kind == 'flat' else f'lowpass({self.k})'


@dataclass(frozen=True)
class SyntheticProfile:
    stage_shapes: List[Tuple[int, int, int]]
    stage_sparsity: List[float]
    spectrum: Spectrum = Spectrum()
    seed: int = 0

    def __post_init__(self):
        if len(self.stage_shapes) != len(self.stage_sparsity):
            raise DomainError("one sparsity target is needed per stage shape")
        if not self.stage_shapes:
            raise DomainError("profile needs at least one stage")
        for shape in self.stage_shapes:
            if len(shape) != 3 or min(shape) < 1:
                raise DomainError(f"stage shape must be three positive ints (c,h,w), got {shape}")
            if self.spectrum.kind == 'lowpass' and shape[0] % GENERATOR_PATCH:
                raise DomainError(f"lowpass spectra need channels divisible by {GENERATOR_PATCH}, got {shape[0]}")
        for target in self.stage_sparsity:
            if not 0.0 <= target < 1.0:
                raise DomainError(f"stage sparsity must be within [0, 1), got {target}")
        if not 0 <= self.seed < 2 ** 64:
            raise DomainError("seed must be an unsigned 64-bit integer")


def _flat_stage(rng, shape, sparsity):
    count = int(np.prod(shape))
    values = 1.0 - rng.random(count)
    zeros = int(np.floor(sparsity * count + 0.5))
    values[rng.permutation(count)[:zeros]] = 0.0
    return values.reshape(shape)


def _lowpass_stage(rng, shape, sparsity, k):
    c, h, w = shape
    groups = c // GENERATOR_PATCH
    patches = groups * h * w

    coefficients = np.zeros((patches, GENERATOR_PATCH))
    ac = rng.random((patches, k - 1))
    margin = 1.0 - rng.random(patches)
    # basis rows beyond DC peak at sqrt(2/8) = 0.5, DC row is sqrt(1/8)
    coefficients[:, 0] = (0.5 * ac.sum(axis=1) + margin * np.sqrt(1.0 / GENERATOR_PATCH)) / np.sqrt(1.0 / GENERATOR_PATCH)
    coefficients[:, 1:k] = ac

    values = dct1d_inverse(coefficients, dct_matrix(GENERATOR_PATCH))
    zeros = int(np.floor(sparsity * patches + 0.5))
    values[rng.permutation(patches)[:zeros]] = 0.0
    values = np.maximum(values, 0.0)

    return values.reshape(groups, h, w, GENERATOR_PATCH).transpose(0, 3, 1, 2).reshape(c, h, w)


def generate_synthetic(p):
    """Deterministic post-ReLU feature maps, one (stage_index, Tensor) per stage"""
    rng = np.random.default_rng(p.seed)
    stages = []
    for index, (shape, sparsity) in enumerate(zip(p.stage_shapes, p.stage_sparsity)):
        if p.spectrum.kind == 'lowpass':
            values = _lowpass_stage(rng, shape, sparsity, p.spectrum.k)
        else:
            values = _flat_stage(rng, shape, sparsity)
        tensor = Tensor((1,) + tuple(shape), values[None])
        log_status(f"Generated stage {index}: dims {tensor.dims}, sparsity {tensor.sparsity:.3f}", '📦')
        stages.append((index, tensor))
    return stages
