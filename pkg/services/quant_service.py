import numpy as np

from utils.exceptions import DomainError, StateError
from utils.helpers import round_half_away_from_zero
from utils.models import QuantParams, Signedness, Tensor


def quantize(x, q):
    """Map reals to integer codes: clamp(round_half_away(x / scale))"""
    if x.is_quantized:
        raise StateError("tensor is already quantized")
    if not q.signed and np.any(x.data < 0):
        raise DomainError("negative values cannot be quantized to unsigned codes")

    codes = round_half_away_from_zero(x.data / q.scale)
    codes = np.clip(codes, q.qmin, q.qmax).astype(np.int64)
    return Tensor(x.dims, codes, quant=q)


def dequantize(c):
    if not c.is_quantized:
        raise StateError("tensor carries no quantization parameters")
    return Tensor(c.dims, c.data.astype(np.float64) * c.quant.scale)


def calibrate_scale(x, bitwidth, signedness=Signedness.UNSIGNED):
    """Per-tensor max calibration; an all-zero tensor gets scale 1"""
    signedness = Signedness(int(signedness))
    data = np.asarray(x.data, dtype=np.float64)
    if data.size == 0:
        raise DomainError("cannot calibrate an empty tensor")

    if signedness is Signedness.SIGNED_SYMMETRIC:
        peak = float(np.max(np.abs(data)))
        levels = 2 ** (bitwidth - 1) - 1
    else:
        peak = float(np.max(data))
        levels = 2 ** bitwidth - 1

    if peak <= 0 or levels <= 0:
        scale = 1.0
    else:
        scale = peak / levels
    return QuantParams(bitwidth, signedness, scale)


def to_real(t):
    """Dequantize when needed so callers can compare in real units"""
    return dequantize(t) if t.is_quantized else t
