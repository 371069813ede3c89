import struct
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from services.zvc_service import ZvcStream
from utils.constants import (
    ACTIVATION_HEADER_FORMAT,
    ACTIVATION_HEADER_SIZE,
    ACTIVATION_MAGIC,
    FLOAT_BITS,
    MAX_STAGE,
    METHOD_ASP_ZVC,
    METHOD_DCT_2D,
    METHOD_DCT_CM,
    METHOD_NAMES,
    METHOD_ZVC,
    SPATIAL_PATCH,
    SUPPORTED_PATCH_LENGTHS,
)
from utils.exceptions import CodecError, DomainError, FormatError, TruncationError
from utils.helpers import round_up
from utils.models import QuantParams, Signedness


@dataclass(frozen=True)
class CompressedActivation:
    """DCM1 container: a 30-byte header followed by one ZVC stream.

    quant is None only for float32 ZVC payloads, which the header records as
    bitwidth 32, unsigned, scale 1.0.
    """
    method: int
    stage: int
    patch_len: int
    keep: int
    quant: Optional[QuantParams]
    dims: Tuple[int, int, int, int]
    payload: ZvcStream

    @property
    def method_name(self):
        return METHOD_NAMES[self.method]

    @property
    def payload_dims(self):
        """Dims the payload was coded at, including channel or spatial padding"""
        n, c, h, w = self.dims
        if self.method == METHOD_DCT_CM:
            return (n, round_up(c, self.patch_len), h, w)
        if self.method == METHOD_DCT_2D:
            return (n, c, round_up(h, SPATIAL_PATCH), round_up(w, SPATIAL_PATCH))
        return tuple(self.dims)

    @property
    def elements(self):
        return int(np.prod(self.dims))

    def __len__(self):
        return ACTIVATION_HEADER_SIZE + len(self.payload)

    def to_bytes(self):
        n, c, h, w = self.dims
        if self.quant is None:
            bitwidth, signedness, scale = FLOAT_BITS, int(Signedness.UNSIGNED), 1.0
        else:
            bitwidth, signedness, scale = self.quant.bitwidth, int(self.quant.signedness), self.quant.scale
        header = struct.pack(
            ACTIVATION_HEADER_FORMAT, ACTIVATION_MAGIC, self.method, self.stage, self.patch_len, self.keep,
            bitwidth, signedness, scale, n, c, h, w,
        )
        return header + self.payload.to_bytes()

    @classmethod
    def from_bytes(cls, blob):
        blob = bytes(blob)
        if len(blob) < ACTIVATION_HEADER_SIZE:
            raise TruncationError(f"container header needs {ACTIVATION_HEADER_SIZE} bytes, found {len(blob)}",
                                  offset=len(blob))

        magic, method, stage, patch_len, keep, bitwidth, signedness, scale, n, c, h, w = struct.unpack_from(
            ACTIVATION_HEADER_FORMAT, blob, 0
        )
        if magic != ACTIVATION_MAGIC:
            raise FormatError(f"bad magic {magic!r}, expected {ACTIVATION_MAGIC!r}", offset=0)
        if method not in METHOD_NAMES:
            raise FormatError(f"unknown method tag {method}", offset=4)
        if keep > patch_len:
            raise FormatError(f"keep {keep} exceeds patch length {patch_len}", offset=7)
        if method == METHOD_DCT_CM and (patch_len not in SUPPORTED_PATCH_LENGTHS or keep < 1):
            raise FormatError(f"invalid DCT-CM mask {keep}/{patch_len}", offset=6)
        if method == METHOD_DCT_2D and patch_len != SPATIAL_PATCH:
            raise FormatError(f"2-D DCT containers use {SPATIAL_PATCH}x{SPATIAL_PATCH} patches", offset=6)
        if signedness not in (Signedness.UNSIGNED, Signedness.SIGNED_SYMMETRIC):
            raise FormatError(f"unknown signedness {signedness}", offset=9)
        if min(n, c, h, w) < 1:
            raise FormatError(f"dims must be positive, got {(n, c, h, w)}", offset=14)

        if bitwidth == FLOAT_BITS:
            if method not in (METHOD_ZVC, METHOD_ASP_ZVC):
                raise FormatError(f"float32 payloads are only valid for ZVC containers, not method {method}", offset=8)
            if signedness != Signedness.UNSIGNED or scale != 1.0:
                raise FormatError("float32 payloads must carry signedness 0 and scale 1.0", offset=9)
            quant = None
        else:
            try:
                quant = QuantParams(bitwidth, Signedness(signedness), scale)
            except DomainError as e:
                raise FormatError(f"invalid quantization parameters: {str(e)}", offset=8)

        payload = ZvcStream.from_bytes(blob[ACTIVATION_HEADER_SIZE:], base_offset=ACTIVATION_HEADER_SIZE)
        if payload.is_float != (quant is None):
            raise FormatError("header bitwidth disagrees with the payload value format", offset=8)
        activation = cls(method, stage, patch_len, keep, quant, (n, c, h, w), payload)
        expected = int(np.prod(activation.payload_dims))
        if payload.count != expected:
            raise FormatError(f"payload holds {payload.count} elements, header implies {expected}",
                              offset=ACTIVATION_HEADER_SIZE + 6)
        return activation


def check_stage(stage):
    if not 0 <= stage <= MAX_STAGE:
        raise DomainError(f"stage must be within 0-{MAX_STAGE}, got {stage}")
    return stage


def read_activation(path):
    with open(path, 'rb') as f:
        blob = f.read()
    try:
        return CompressedActivation.from_bytes(blob)
    except CodecError as e:
        e.args = (f"{path}: {e.args[0]}",) + e.args[1:]
        raise


def write_activation(a, path):
    blob = a.to_bytes()
    with open(path, 'wb') as f:
        f.write(blob)
    return len(blob)
