import numpy as np

from services.asp_service import asp_apply
from services.container_service import CompressedActivation, check_stage
from services.dct_service import dct2d_forward, dct2d_inverse, dct_matrix
from services.quant_service import calibrate_scale, dequantize, quantize, to_real
from services.zvc_service import zvc_decode, zvc_encode
from utils.constants import MAX_CODE_BITS, METHOD_DCT_2D, SPATIAL_PATCH
from utils.exceptions import DomainError, ShapeError, UsageError
from utils.helpers import round_up
from utils.models import Signedness, Tensor


def default_qmatrix():
    return np.ones((SPATIAL_PATCH, SPATIAL_PATCH))


def check_qmatrix(qmatrix):
    if qmatrix is None:
        return default_qmatrix()
    qmatrix = np.asarray(qmatrix, dtype=np.float64)
    if qmatrix.shape != (SPATIAL_PATCH, SPATIAL_PATCH):
        raise ShapeError(f"quantization matrix must be {SPATIAL_PATCH}x{SPATIAL_PATCH}, got {qmatrix.shape}")
    if not np.all(np.isfinite(qmatrix)) or np.any(qmatrix <= 0):
        raise DomainError("quantization matrix entries must be positive reals")
    return qmatrix


def load_qmatrix(path):
    """64 whitespace-separated positive reals, row-major"""
    with open(path, 'r', encoding='utf-8') as f:
        tokens = f.read().split()
    try:
        values = [float(token) for token in tokens]
    except ValueError as e:
        raise DomainError(f"{path}: quantization matrix must hold numbers: {str(e)}")
    if len(values) != SPATIAL_PATCH * SPATIAL_PATCH:
        raise ShapeError(f"{path}: expected {SPATIAL_PATCH * SPATIAL_PATCH} values, found {len(values)}")
    return check_qmatrix(np.array(values).reshape(SPATIAL_PATCH, SPATIAL_PATCH))


def dct2d_encode(x, bits, qmatrix=None, stage=0, asp=None):
    """Per channel, per 8x8 spatial patch: 2-D DCT, divide by qmatrix,
    signed quantization, ZVC. Patches are stored channel-major, each
    patch contiguous."""
    if not 2 <= bits <= MAX_CODE_BITS:
        raise DomainError(f"coefficient bits must be within 2-{MAX_CODE_BITS} (signed codes), got {bits}")
    check_stage(stage)
    qmatrix = check_qmatrix(qmatrix)

    x = to_real(x)
    if asp is not None:
        x = asp_apply(x, asp)

    batch, c, h, w = x.dims
    hp, wp = round_up(h, SPATIAL_PATCH), round_up(w, SPATIAL_PATCH)
    data = np.pad(x.data, ((0, 0), (0, 0), (0, hp - h), (0, wp - w)))

    blocks = data.reshape(batch, c, hp // SPATIAL_PATCH, SPATIAL_PATCH, wp // SPATIAL_PATCH, SPATIAL_PATCH)
    blocks = blocks.transpose(0, 1, 2, 4, 3, 5)
    coefficients = dct2d_forward(blocks, dct_matrix(SPATIAL_PATCH)) / qmatrix
    freq = Tensor((batch, c, hp, wp), coefficients.reshape(batch, c, hp, wp))

    q = calibrate_scale(freq, bits, Signedness.SIGNED_SYMMETRIC)
    stream = zvc_encode(quantize(freq, q))
    return CompressedActivation(METHOD_DCT_2D, stage, SPATIAL_PATCH, SPATIAL_PATCH, q, x.dims, stream)


def dct2d_decode(a, qmatrix=None):
    """qmatrix is not carried by the container; pass the one used to encode"""
    if a.method != METHOD_DCT_2D:
        raise UsageError(f"container holds '{a.method_name}', not dct-2d")
    qmatrix = check_qmatrix(qmatrix)

    batch, c, hp, wp = a.payload_dims
    freq = dequantize(zvc_decode(a.payload, a.payload_dims, a.quant)).data
    blocks = freq.reshape(batch, c, hp // SPATIAL_PATCH, wp // SPATIAL_PATCH, SPATIAL_PATCH, SPATIAL_PATCH)
    spatial = dct2d_inverse(blocks * qmatrix, dct_matrix(SPATIAL_PATCH))
    spatial = spatial.transpose(0, 1, 2, 4, 3, 5).reshape(batch, c, hp, wp)

    _, _, h, w = a.dims
    return Tensor(a.dims, spatial[:, :, :h, :w])
