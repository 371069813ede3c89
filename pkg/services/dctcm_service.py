"""Channel-dimension DCT with stage-dependent low-frequency masks.

Each pixel's channel vector is cut into patches of patch_len channels, every
patch goes through the 1-D DCT, coefficients at index >= keep are dropped,
and the survivors are quantized signed-symmetric and ZVC-coded. Decoding
either inverts the transform or folds the inverse into the next 1x1
convolution's weights.
"""
import re
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from services.asp_service import asp_apply
from services.container_service import CompressedActivation, check_stage
from services.dct_service import (
    dct1d_forward,
    dct1d_forward_fast,
    dct1d_inverse,
    dct1d_inverse_fast,
    dct_matrix,
)
from services.quant_service import calibrate_scale, dequantize, quantize, to_real
from services.zvc_service import zvc_decode, zvc_encode
from utils.constants import (
    DEFAULT_PATCH_LENGTH,
    MASK_PRESETS,
    MAX_CODE_BITS,
    METHOD_DCT_CM,
    SUPPORTED_PATCH_LENGTHS,
)
from utils.exceptions import DomainError, ShapeError, UnsupportedError, UsageError
from utils.helpers import round_up
from utils.models import Signedness, Tensor


@dataclass(frozen=True)
class MaskSchedule:
    patch_len: int
    keep: Tuple[int, ...]

    def __post_init__(self):
        if self.patch_len not in SUPPORTED_PATCH_LENGTHS:
            raise DomainError(f"mask length {self.patch_len} not in {SUPPORTED_PATCH_LENGTHS}")
        keep = tuple(int(k) for k in self.keep)
        if not keep:
            raise DomainError("mask schedule needs at least one stage")
        for k in keep:
            if not 0 < k <= self.patch_len:
                raise DomainError(f"keep count {k} outside (0, {self.patch_len}]")
        object.__setattr__(self, 'keep', keep)

    @classmethod
    def preset(cls, name):
        if name.lower() not in MASK_PRESETS:
            raise DomainError(f"unknown mask preset '{name}', expected one of {sorted(MASK_PRESETS)}")
        patch_len, keep = MASK_PRESETS[name.lower()]
        return cls(patch_len, keep)

    @classmethod
    def parse(cls, text):
        """Parse 'm1', 'm2', '4,6,4,2,1/8' or bit-vector entries like '11000000/8'"""
        text = text.strip()
        if text.lower() in MASK_PRESETS:
            return cls.preset(text)

        entries, _, length = text.partition('/')
        try:
            patch_len = int(length) if length else DEFAULT_PATCH_LENGTH
        except ValueError:
            raise DomainError(f"bad mask length in '{text}'")

        keep = []
        for entry in entries.split(','):
            entry = entry.strip()
            if len(entry) == patch_len and set(entry) <= {'0', '1'}:
                keep.append(_bitvector_keep(entry))
            elif entry.isdigit():
                keep.append(int(entry))
            else:
                raise DomainError(f"bad mask entry '{entry}' in '{text}'")
        return cls(patch_len, tuple(keep))

    def keep_for(self, stage):
        """Stages past the end of the schedule reuse its last entry"""
        check_stage(stage)
        return self.keep[min(stage, len(self.keep) - 1)]

    def __str__(self):
        return f"{','.join(str(k) for k in self.keep)}/{self.patch_len}"


def _bitvector_keep(bits):
    match = re.fullmatch(r'(1+)(0*)', bits)
    if not match:
        raise UnsupportedError(f"mask '{bits}' is not a contiguous low-frequency prefix")
    return len(match.group(1))


@dataclass(frozen=True)
class WeightBlock:
    """C_out x n slice of a 1x1 convolution over one channel patch"""
    w: np.ndarray = field(repr=False)

    def __post_init__(self):
        w = np.array(self.w, dtype=np.float64)
        if w.ndim != 2:
            raise ShapeError(f"weight block must be 2-D, got shape {w.shape}")
        w.setflags(write=False)
        object.__setattr__(self, 'w', w)

    @property
    def n(self):
        return self.w.shape[1]

    @property
    def c_out(self):
        return self.w.shape[0]


def _transforms(fast):
    if fast:
        return dct1d_forward_fast, dct1d_inverse_fast
    return dct1d_forward, dct1d_inverse


def _check_bits(bits):
    if not 2 <= bits <= MAX_CODE_BITS:
        raise DomainError(f"coefficient bits must be within 2-{MAX_CODE_BITS} (signed codes), got {bits}")


def dctcm_encode(x, stage, mask, bits, asp=None, fast=False):
    _check_bits(bits)
    k = mask.keep_for(stage)
    n = mask.patch_len
    forward, _ = _transforms(fast)

    x = to_real(x)
    if asp is not None:
        x = asp_apply(x, asp)

    batch, c, h, w = x.dims
    padded = round_up(c, n)
    data = np.pad(x.data, ((0, 0), (0, padded - c), (0, 0), (0, 0)))

    patches = data.reshape(batch, padded // n, n, h, w).transpose(0, 1, 3, 4, 2)
    coefficients = forward(patches, dct_matrix(n))
    coefficients[..., k:] = 0.0
    freq = Tensor((batch, padded, h, w), coefficients.transpose(0, 1, 4, 2, 3).reshape(batch, padded, h, w))

    q = calibrate_scale(freq, bits, Signedness.SIGNED_SYMMETRIC)
    stream = zvc_encode(quantize(freq, q))
    return CompressedActivation(METHOD_DCT_CM, stage, n, k, q, x.dims, stream)


def frequency_patches(a):
    """Dequantized coefficients shaped (batch, groups, h, w, patch_len)"""
    if a.method != METHOD_DCT_CM:
        raise UsageError(f"container holds '{a.method_name}', not dct-cm")
    batch, padded, h, w = a.payload_dims
    freq = dequantize(zvc_decode(a.payload, a.payload_dims, a.quant))
    return freq.data.reshape(batch, padded // a.patch_len, a.patch_len, h, w).transpose(0, 1, 3, 4, 2)


def dctcm_decode(a, fast=False):
    """Explicit inverse-DCT decode path; strips channel padding"""
    _, inverse = _transforms(fast)
    patches = inverse(frequency_patches(a), dct_matrix(a.patch_len))
    batch, padded, h, w = a.payload_dims
    spatial = patches.transpose(0, 1, 4, 2, 3).reshape(batch, padded, h, w)
    return Tensor(a.dims, spatial[:, :a.dims[1]])


def fuse_weights(w, m):
    """W* = W A^T, so W* y == W x for y = A x"""
    if w.n != m.n:
        raise ShapeError(f"weight block width {w.n} does not match DCT length {m.n}")
    return WeightBlock(w.w @ m.a.T)


def unfuse_weights(wstar, m):
    if wstar.n != m.n:
        raise ShapeError(f"weight block width {wstar.n} does not match DCT length {m.n}")
    return WeightBlock(wstar.w @ m.a)


def apply_fused(wstar, y_freq):
    y_freq = np.asarray(y_freq, dtype=np.float64)
    if y_freq.shape != (wstar.n,):
        raise ShapeError(f"expected a length-{wstar.n} frequency vector, got shape {y_freq.shape}")
    return wstar.w @ y_freq


def _check_conv_weights(weights, c):
    weights = np.asarray(weights, dtype=np.float64)
    if weights.ndim != 2 or weights.shape[1] != c:
        raise ShapeError(f"1x1 weights must be (C_out, {c}), got shape {weights.shape}")
    return weights


def conv1x1_fused(a, weights, zero_skip=True):
    """1x1 convolution straight on decoded frequency codes, no inverse DCT.

    Masked coefficients are exact zeros, so with zero_skip only the first
    keep columns of every fused block take part.
    """
    n = a.patch_len
    batch, padded, h, w = a.payload_dims
    weights = _check_conv_weights(weights, a.dims[1])
    weights = np.pad(weights, ((0, 0), (0, padded - a.dims[1])))

    m = dct_matrix(n)
    groups = padded // n
    fused = np.stack([fuse_weights(WeightBlock(weights[:, g * n:(g + 1) * n]), m).w for g in range(groups)])

    y = frequency_patches(a)
    width = a.keep if zero_skip else n
    out = np.einsum('gok,nghwk->nohw', fused[:, :, :width], y[..., :width])
    return Tensor((batch, weights.shape[0], h, w), out)


def conv1x1_reference(x, weights):
    """Plain 1x1 convolution in the spatial domain"""
    x = to_real(x)
    weights = _check_conv_weights(weights, x.dims[1])
    out = np.einsum('oc,nchw->nohw', weights, x.data)
    return Tensor((x.dims[0], weights.shape[0], x.dims[2], x.dims[3]), out)


def count_transform_macs(dims, mask, stage, zero_skip):
    """MACs for the per-patch inverse transform of one (c, h, w) activation"""
    c, h, w = dims
    n = mask.patch_len
    if c % n:
        raise ShapeError(f"channel count {c} must be padded to a multiple of {n}")
    patches = (c // n) * h * w
    k = mask.keep_for(stage)
    per_patch = k * n if zero_skip else n * n
    return patches * per_patch


def count_conv_macs(c_in, c_out, h, w, kernel=1):
    """Stride-1, same-padded convolution"""
    return c_in * c_out * kernel * kernel * h * w


def bottleneck_overhead(mask, stage, in_channels=1024, mid_channels=256, out_channels=1024, h=8, w=8,
                        zero_skip=True):
    """Transform MACs against convolution MACs for one bottleneck block.

    Every convolution input is assumed to arrive DCT-CM coded.
    """
    convs = [
        (in_channels, mid_channels, 1),
        (mid_channels, mid_channels, 3),
        (mid_channels, out_channels, 1),
    ]
    conv_macs = sum(count_conv_macs(c_in, c_out, h, w, kernel) for c_in, c_out, kernel in convs)
    transform_macs = sum(
        count_transform_macs((round_up(c_in, mask.patch_len), h, w), mask, stage, zero_skip)
        for c_in, _, _ in convs
    )
    return {
        'conv_macs': conv_macs,
        'transform_macs': transform_macs,
        'ratio': transform_macs / conv_macs,
    }


def fuse_weight_tensor(t, seed=0):
    """Fuse a (C_out, n, 1, 1) weight tensor; returns (W*, probe residual).

    The residual compares the fused path with W applied after an explicit
    inverse DCT on a random frequency probe.
    """
    t = to_real(t)
    c_out, n, h, w = t.dims
    if h != 1 or w != 1:
        raise DomainError(f"weight block must be (C_out, n, 1, 1), got {t.dims}")
    m = dct_matrix(n)
    block = WeightBlock(t.data.reshape(c_out, n))
    fused = fuse_weights(block, m)

    probe = np.random.default_rng(seed).standard_normal(n)
    residual = float(np.max(np.abs(apply_fused(fused, probe) - block.w @ dct1d_inverse(probe, m))))
    return fused, residual
