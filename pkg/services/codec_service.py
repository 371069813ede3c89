from dataclasses import dataclass
from typing import Optional

import numpy as np

from services.asp_service import AspConfig
from services.dct2d_service import dct2d_decode, dct2d_encode
from services.dctcm_service import MaskSchedule, dctcm_decode, dctcm_encode
from services.lowbit_service import lowbit_decode, lowbit_encode
from services.quant_service import to_real
from services.strategy_service import StageStrategy, StrategyService
from utils.config import Settings
from utils.constants import (
    FLOAT_BITS,
    MAX_CODE_BITS,
    METHOD_ASP_ZVC,
    METHOD_DCT_2D,
    METHOD_DCT_CM,
    METHOD_ZVC,
    MIN_CODE_BITS,
)
from utils.exceptions import CodecError, ConfigError, UsageError

METHOD_KINDS = ('zvc', 'asp', 'dct-cm', 'dct-2d', 'split')
FLOAT_KINDS = ('zvc', 'asp')
SIGNED_KINDS = ('dct-cm', 'dct-2d')


@dataclass(frozen=True)
class MethodConfig:
    """One compression configuration, e.g. 'dct-cm:m1:8' or 'asp:0.25'"""
    kind: str
    bits: int = 8
    threshold: float = 0.0
    mask: Optional[MaskSchedule] = None
    split_stage: int = 1
    dct_bits: int = 8
    label: str = ''

    def __post_init__(self):
        if self.kind not in METHOD_KINDS:
            raise UsageError(f"unknown method '{self.kind}', expected one of {', '.join(METHOD_KINDS)}")
        if self.kind == 'dct-cm' and self.mask is None:
            raise UsageError("dct-cm needs a mask schedule")
        if self.threshold < 0:
            raise UsageError("ASP threshold must be nonnegative")
        _check_bits(self.kind, self.bits)
        if self.kind == 'split':
            _check_bits('dct-2d', self.dct_bits)
        if not self.label:
            object.__setattr__(self, 'label', self.describe())

    @property
    def asp(self):
        return AspConfig(self.threshold) if self.threshold > 0 else None

    def describe(self):
        if self.kind == 'zvc':
            return f"zvc:{_bits_token(self.bits)}"
        if self.kind == 'asp':
            return f"asp:{self.threshold:g}:{_bits_token(self.bits)}"
        if self.kind == 'dct-cm':
            suffix = f":{self.threshold:g}" if self.threshold else ''
            return f"dct-cm:{self.mask}:{self.bits}{suffix}"
        if self.kind == 'dct-2d':
            return f"dct-2d:{self.bits}"
        suffix = f":{self.threshold:g}" if self.threshold else ''
        return f"split:{self.split_stage}:{self.dct_bits}:{self.bits}{suffix}"

    @classmethod
    def parse(cls, text, default_bits=8):
        parts = [part.strip() for part in text.strip().split(':')]
        kind, args = parts[0].lower(), parts[1:]
        try:
            if kind == 'zvc' and len(args) <= 1:
                return cls('zvc', _parse_bits(args[0]) if args else default_bits, label=text.strip())
            if kind == 'asp' and 1 <= len(args) <= 2:
                bits = _parse_bits(args[1]) if len(args) > 1 else default_bits
                return cls('asp', bits, float(args[0]), label=text.strip())
            if kind == 'dct-cm' and 1 <= len(args) <= 3:
                bits = int(args[1]) if len(args) > 1 else default_bits
                threshold = float(args[2]) if len(args) > 2 else 0.0
                return cls('dct-cm', bits, threshold, MaskSchedule.parse(args[0]), label=text.strip())
            if kind == 'dct-2d' and len(args) <= 1:
                return cls('dct-2d', int(args[0]) if args else default_bits, label=text.strip())
            if kind == 'split' and 3 <= len(args) <= 4:
                threshold = float(args[3]) if len(args) > 3 else 0.0
                return cls('split', int(args[2]), threshold, split_stage=int(args[0]),
                           dct_bits=int(args[1]), label=text.strip())
        except ValueError as e:
            raise UsageError(f"bad method config '{text}': {str(e)}")
        except CodecError as e:
            raise UsageError(f"bad method config '{text}': {str(e)}")
        raise UsageError(
            f"bad method config '{text}', expected zvc[:bits|f32], asp:<t>[:bits|f32], dct-cm:<mask>[:bits[:t]], "
            f"dct-2d[:bits] or split:<stages>:<dct_bits>:<low_bits>[:t]"
        )


def _parse_bits(token):
    """'f32' selects the float32 ZVC payload"""
    return FLOAT_BITS if token.lower() == 'f32' else int(token)


def _bits_token(bits):
    return 'f32' if bits == FLOAT_BITS else str(bits)


def _check_bits(kind, bits):
    if kind in FLOAT_KINDS and bits == FLOAT_BITS:
        return
    low = 2 if kind in SIGNED_KINDS else MIN_CODE_BITS
    if not low <= bits <= MAX_CODE_BITS:
        raise UsageError(f"{kind} needs bits within {low}-{MAX_CODE_BITS}, got {bits}")


class CodecService:
    """Front door for compress / decompress, configured from Settings"""

    def __init__(self, settings=None, qmatrix=None):
        self.settings = settings or Settings()
        self.qmatrix = qmatrix

    def compress(self, x, config, stage=0):
        if config.kind in ('zvc', 'asp'):
            if config.kind == 'asp' and config.asp is None:
                raise UsageError("asp needs a positive --asp-threshold")
            return lowbit_encode(x, config.bits, stage, config.asp)
        if config.kind == 'dct-cm':
            return dctcm_encode(x, stage, config.mask, config.bits, config.asp, self.settings.fast_dct)
        if config.kind == 'dct-2d':
            return dct2d_encode(x, config.bits, self.qmatrix, stage, config.asp)

        strategy = StageStrategy.split(config.split_stage, config.dct_bits, config.bits, config.threshold)
        service = StrategyService(strategy, qmatrix=self.qmatrix, fast_dct=self.settings.fast_dct)
        return service.compress_stage(stage, x)

    def decompress(self, a, dequantize_codes=False):
        """Reconstruct a tensor using the method recorded in the header"""
        if a.method in (METHOD_ZVC, METHOD_ASP_ZVC):
            codes = lowbit_decode(a)
            return to_real(codes) if dequantize_codes else codes
        if a.method == METHOD_DCT_CM:
            return dctcm_decode(a, self.settings.fast_dct)
        if a.method == METHOD_DCT_2D:
            return dct2d_decode(a, self.qmatrix)
        raise ConfigError(f"no decoder for method tag {a.method}")


def reconstruction_error(reference, reconstruction):
    """(max_abs_err, rel_l2_err) in real units"""
    ref = to_real(reference).data
    out = to_real(reconstruction).data
    if ref.shape != out.shape:
        raise UsageError(f"reference dims {ref.shape} do not match reconstruction dims {out.shape}")
    diff = out - ref
    norm = float(np.linalg.norm(ref))
    max_abs = float(np.max(np.abs(diff))) if diff.size else 0.0
    rel_l2 = float(np.linalg.norm(diff)) / norm if norm > 0 else float(np.linalg.norm(diff))
    return max_abs, rel_l2
