import numpy as np

from services.asp_service import asp_apply
from services.container_service import CompressedActivation, check_stage
from services.quant_service import calibrate_scale, quantize, to_real
from services.zvc_service import zvc_decode, zvc_encode
from utils.constants import FLOAT_BITS, MAX_CODE_BITS, METHOD_ASP_ZVC, METHOD_ZVC, MIN_CODE_BITS
from utils.exceptions import DomainError, UsageError
from utils.models import Signedness


def lowbit_encode(x, bits, stage=0, asp=None):
    """Plain quantization + ZVC, with optional ASP first.

    Code tensors already at `bits` are coded as-is (lossless); other code
    tensors are dequantized and recalibrated at `bits`. bits=32 stores the
    float32 values themselves.
    """
    check_stage(stage)
    if bits != FLOAT_BITS and not MIN_CODE_BITS <= bits <= MAX_CODE_BITS:
        raise DomainError(f"bits must be within {MIN_CODE_BITS}-{MAX_CODE_BITS} or {FLOAT_BITS}, got {bits}")
    use_asp = asp is not None and asp.enabled
    method = METHOD_ASP_ZVC if use_asp else METHOD_ZVC

    if bits == FLOAT_BITS:
        x = to_real(x)
        if use_asp:
            x = asp_apply(x, asp)
        return CompressedActivation(method, stage, 0, 0, None, x.dims, zvc_encode(x))

    if x.is_quantized and not use_asp and x.quant.bitwidth == bits:
        codes = x
    else:
        x = to_real(x)
        if use_asp:
            x = asp_apply(x, asp)
        signedness = Signedness.SIGNED_SYMMETRIC if np.any(x.data < 0) else Signedness.UNSIGNED
        codes = quantize(x, calibrate_scale(x, bits, signedness))

    return CompressedActivation(method, stage, 0, 0, codes.quant, codes.dims, zvc_encode(codes))


def lowbit_decode(a):
    """Integer code tensor, or reals for float32 payloads"""
    if a.method not in (METHOD_ZVC, METHOD_ASP_ZVC):
        raise UsageError(f"container holds '{a.method_name}', not a plain ZVC payload")
    return zvc_decode(a.payload, a.payload_dims, a.quant)
