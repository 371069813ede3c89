"""Zero-Value Compression: an LSB-first nonzero bitmap followed by the
nonzero codes packed back to back at the stream's value width."""
import struct
from dataclasses import dataclass

import numpy as np

from utils.constants import (
    FLOAT_BITS,
    MAX_CODE_BITS,
    MIN_CODE_BITS,
    ZVC_FLAG_FLOAT32,
    ZVC_FLAG_SIGNED,
    ZVC_HEADER_FORMAT,
    ZVC_HEADER_SIZE,
    ZVC_MAGIC,
)
from utils.exceptions import DomainError, FormatError, ShapeError, TruncationError, UnsupportedError
from utils.helpers import ceil_div
from utils.models import Tensor


def stream_length(count, nnz, bitwidth):
    return ZVC_HEADER_SIZE + ceil_div(count, 8) + ceil_div(nnz * bitwidth, 8)


@dataclass(frozen=True)
class ZvcStream:
    value_bitwidth: int
    flags: int
    count: int
    bitmap: bytes
    values: bytes

    @property
    def signed(self):
        return bool(self.flags & ZVC_FLAG_SIGNED)

    @property
    def is_float(self):
        return bool(self.flags & ZVC_FLAG_FLOAT32)

    @property
    def nnz(self):
        return int(np.unpackbits(np.frombuffer(self.bitmap, dtype=np.uint8)).sum())

    def __len__(self):
        return ZVC_HEADER_SIZE + len(self.bitmap) + len(self.values)

    def to_bytes(self):
        header = struct.pack(ZVC_HEADER_FORMAT, ZVC_MAGIC, self.value_bitwidth, self.flags, self.count)
        return header + self.bitmap + self.values

    @classmethod
    def from_bytes(cls, blob, base_offset=0):
        """Parse and validate one stream that spans all of blob"""
        blob = bytes(blob)
        if len(blob) < ZVC_HEADER_SIZE:
            raise TruncationError("ZVC header truncated", offset=base_offset + len(blob))

        magic, bitwidth, flags, count = struct.unpack_from(ZVC_HEADER_FORMAT, blob, 0)
        if magic != ZVC_MAGIC:
            raise FormatError(f"bad ZVC magic {magic!r}", offset=base_offset)
        if flags & ~(ZVC_FLAG_SIGNED | ZVC_FLAG_FLOAT32):
            raise FormatError(f"unknown ZVC flags 0x{flags:02x}", offset=base_offset + 5)
        if flags & ZVC_FLAG_FLOAT32:
            if bitwidth != FLOAT_BITS or flags & ZVC_FLAG_SIGNED:
                raise FormatError("float32 streams must declare 32-bit unsigned-flag values", offset=base_offset + 4)
        elif not MIN_CODE_BITS <= bitwidth <= MAX_CODE_BITS:
            raise UnsupportedError(f"value bitwidth {bitwidth} outside {MIN_CODE_BITS}-{MAX_CODE_BITS}")

        bitmap_end = ZVC_HEADER_SIZE + ceil_div(count, 8)
        if len(blob) < bitmap_end:
            raise TruncationError("bitmap truncated", offset=base_offset + len(blob))
        bitmap = blob[ZVC_HEADER_SIZE:bitmap_end]
        flags_bits = np.unpackbits(np.frombuffer(bitmap, dtype=np.uint8), bitorder='little')
        if flags_bits[count:].any():
            raise FormatError("bitmap padding bits must be zero", offset=base_offset + bitmap_end - 1)

        nnz = int(flags_bits.sum())
        values_end = bitmap_end + ceil_div(nnz * bitwidth, 8)
        if len(blob) < values_end:
            raise TruncationError(
                f"values section holds {len(blob) - bitmap_end} bytes, bitmap popcount {nnz} needs "
                f"{values_end - bitmap_end}",
                offset=base_offset + len(blob),
            )
        if len(blob) > values_end:
            raise FormatError(f"{len(blob) - values_end} trailing bytes after values", offset=base_offset + values_end)

        return cls(bitwidth, flags, count, bitmap, blob[bitmap_end:values_end])


def _pack_values(values, bitwidth):
    shifts = np.arange(bitwidth, dtype=np.uint64)
    bits = ((values.astype(np.uint64)[:, None] >> shifts) & np.uint64(1)).astype(np.uint8)
    return np.packbits(bits.ravel(), bitorder='little').tobytes()


def _unpack_values(blob, nnz, bitwidth, base_offset):
    bits = np.unpackbits(np.frombuffer(blob, dtype=np.uint8), bitorder='little')
    if bits[nnz * bitwidth:].any():
        raise FormatError("value padding bits must be zero", offset=base_offset)
    bits = bits[:nnz * bitwidth].reshape(nnz, bitwidth).astype(np.uint64)
    return (bits << np.arange(bitwidth, dtype=np.uint64)).sum(axis=1, dtype=np.uint64)


def zvc_encode(codes):
    """Encode a quantized tensor (or raw float32 reals) into a ZvcStream"""
    if codes.is_quantized:
        q = codes.quant
        if q.bitwidth > MAX_CODE_BITS:
            raise UnsupportedError(f"bitwidth {q.bitwidth} exceeds {MAX_CODE_BITS}")
        if q.zero_point != 0:
            raise DomainError("ZVC needs zero_point 0")
        flat = codes.elems
        nonzero = flat != 0
        bitwidth = q.bitwidth
        flags = ZVC_FLAG_SIGNED if q.signed else 0
        values = flat[nonzero] & ((1 << bitwidth) - 1)
    else:
        flat = codes.elems.astype('<f4')
        nonzero = flat != 0
        bitwidth = FLOAT_BITS
        flags = ZVC_FLAG_FLOAT32
        values = flat[nonzero].view('<u4')

    bitmap = np.packbits(nonzero, bitorder='little').tobytes()
    return ZvcStream(bitwidth, flags, flat.size, bitmap, _pack_values(values, bitwidth))


def zvc_decode(s, dims, quant=None, base_offset=0):
    """Inverse of zvc_encode; s may be a ZvcStream or its bytes"""
    if not isinstance(s, ZvcStream):
        s = ZvcStream.from_bytes(s, base_offset)

    dims = tuple(int(d) for d in dims)
    if s.count != int(np.prod(dims)):
        raise FormatError(f"stream holds {s.count} elements, dims {dims} need {int(np.prod(dims))}",
                          offset=base_offset + 6)

    flags_bits = np.unpackbits(np.frombuffer(s.bitmap, dtype=np.uint8), bitorder='little')[:s.count]
    nonzero = flags_bits.astype(bool)
    nnz = int(nonzero.sum())
    expected = ceil_div(nnz * s.value_bitwidth, 8)
    values_offset = base_offset + ZVC_HEADER_SIZE + len(s.bitmap)
    if len(s.values) != expected:
        raise TruncationError(f"values section holds {len(s.values)} bytes, expected {expected}",
                              offset=values_offset + min(len(s.values), expected))
    raw = _unpack_values(s.values, nnz, s.value_bitwidth, values_offset)

    if s.is_float:
        if quant is not None:
            raise FormatError("float32 stream decoded with quantization parameters", offset=base_offset + 5)
        out = np.zeros(s.count, dtype=np.float64)
        out[nonzero] = raw.astype('<u4').view('<f4').astype(np.float64)
        return Tensor(dims, out)

    if quant is None:
        raise FormatError("integer stream needs quantization parameters to decode", offset=base_offset + 4)
    if quant.bitwidth != s.value_bitwidth or quant.signed != s.signed:
        raise FormatError(
            f"stream is {s.value_bitwidth}-bit {'signed' if s.signed else 'unsigned'}, "
            f"parameters say {quant.bitwidth}-bit {'signed' if quant.signed else 'unsigned'}",
            offset=base_offset + 4,
        )

    decoded = raw.astype(np.int64)
    if s.signed:
        decoded = np.where(decoded >= 1 << (s.value_bitwidth - 1), decoded - (1 << s.value_bitwidth), decoded)
    if np.any(decoded == 0):
        raise FormatError("packed values must not contain the zero code", offset=values_offset)

    out = np.zeros(s.count, dtype=np.int64)
    out[nonzero] = decoded
    try:
        return Tensor(dims, out, quant=quant)
    except DomainError as e:
        raise FormatError(f"decoded codes invalid: {str(e)}", offset=values_offset)


def compression_ratio(raw_elems, raw_bitwidth, s):
    """Raw payload bits over total stream bits, header included"""
    if raw_elems != s.count:
        raise ShapeError(f"raw element count {raw_elems} does not match stream count {s.count}")
    return (raw_elems * raw_bitwidth) / (8 * len(s))
