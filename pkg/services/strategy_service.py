"""Per-stage compression strategies: 2-D DCT on early stages, low-bit
quantization on later ones, or DCT-CM where a mask schedule is given."""
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Optional

from services.asp_service import AspConfig
from services.dct2d_service import dct2d_encode
from services.dctcm_service import dctcm_encode
from services.lowbit_service import lowbit_encode
from utils.constants import MAX_CODE_BITS, MIN_CODE_BITS
from utils.exceptions import ConfigError
from utils.helpers import log_status

STAGE_METHODS = ('dct2d', 'lowbit', 'passthrough', 'dctcm')

_LINE = re.compile(
    r'^(?P<stage>\d+|c\d+|rest)\s*[=:]\s*(?P<method>[a-z0-9]+)\s*\(\s*(?P<bits>\d+)\s*'
    r'(?:,\s*asp\s*=\s*(?P<asp>[0-9.eE+-]+)\s*)?\)$'
)


@dataclass(frozen=True)
class StageMethod:
    kind: str
    bits: int
    asp_threshold: float = 0.0

    def __post_init__(self):
        if self.kind not in STAGE_METHODS:
            raise ConfigError(f"unknown stage method '{self.kind}', expected one of {STAGE_METHODS}")
        if not MIN_CODE_BITS <= self.bits <= MAX_CODE_BITS:
            raise ConfigError(f"stage bits must be within {MIN_CODE_BITS}-{MAX_CODE_BITS}, got {self.bits}")
        if self.asp_threshold < 0:
            raise ConfigError("ASP threshold must be nonnegative")

    @property
    def asp(self):
        return AspConfig(self.asp_threshold) if self.asp_threshold > 0 else None

    def __str__(self):
        suffix = f", asp={self.asp_threshold:g}" if self.asp_threshold else ''
        return f"{self.kind}({self.bits}{suffix})"


@dataclass(frozen=True)
class StageStrategy:
    methods: Dict[int, StageMethod] = field(default_factory=dict)
    rest: Optional[StageMethod] = None

    def method_for(self, stage):
        if stage in self.methods:
            return self.methods[stage]
        if self.rest is not None:
            return self.rest
        raise ConfigError(f"strategy does not cover stage {stage}")

    def split_stage(self, stages):
        """First of the given stage indices that uses lowbit, or None"""
        for stage in sorted(stages):
            if self.method_for(stage).kind == 'lowbit':
                return stage
        return None

    @classmethod
    def split(cls, split_stage, dct_bits, low_bits, asp_threshold=0.0):
        """Stages before split_stage get dct2d, the rest lowbit (+ASP)"""
        methods = {stage: StageMethod('dct2d', dct_bits) for stage in range(split_stage)}
        return cls(methods, StageMethod('lowbit', low_bits, asp_threshold))

    @classmethod
    def parse(cls, text):
        """Lines '<stage> = <method>(<bits>[, asp=<t>])'; stage is an index, c<k> (c1 = 0) or rest"""
        methods = {}
        rest = None
        for number, raw in enumerate(text.splitlines(), start=1):
            line = raw.split('#', 1)[0].strip().lower()
            if not line:
                continue
            match = _LINE.match(line)
            if not match:
                raise ConfigError(f"strategy line {number}: cannot parse '{raw.strip()}'")
            try:
                threshold = float(match.group('asp') or 0.0)
            except ValueError:
                raise ConfigError(f"strategy line {number}: bad ASP threshold '{match.group('asp')}'")
            method = StageMethod(match.group('method'), int(match.group('bits')), threshold)
            stage = match.group('stage')
            if stage == 'rest':
                rest = method
            elif stage.startswith('c'):
                if int(stage[1:]) < 1:
                    raise ConfigError(f"strategy line {number}: stage names start at c1")
                methods[int(stage[1:]) - 1] = method
            else:
                methods[int(stage)] = method
        if not methods and rest is None:
            raise ConfigError("strategy assigns no methods")
        return cls(methods, rest)

    @classmethod
    def load(cls, path):
        with open(path, 'r', encoding='utf-8') as f:
            return cls.parse(f.read())


class StrategyService:
    def __init__(self, strategy, mask=None, qmatrix=None, workers=1, fast_dct=False):
        self.strategy = strategy
        self.mask = mask
        self.qmatrix = qmatrix
        self.workers = workers
        self.fast_dct = fast_dct

    def compress_stage(self, stage, tensor):
        method = self.strategy.method_for(stage)
        if method.kind == 'dct2d':
            return dct2d_encode(tensor, method.bits, self.qmatrix, stage, method.asp)
        if method.kind == 'dctcm':
            if self.mask is None:
                raise ConfigError(f"stage {stage} uses dctcm but no mask schedule was supplied")
            return dctcm_encode(tensor, stage, self.mask, method.bits, method.asp, self.fast_dct)
        return lowbit_encode(tensor, method.bits, stage, method.asp)

    def compress(self, stages):
        """Output order matches input order regardless of worker count"""
        stages = list(stages)
        for stage, _ in stages:
            self.strategy.method_for(stage)

        log_status(f"Compressing {len(stages)} stage tensor(s) with {self.workers} worker(s)", '🚀')
        if self.workers > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                return list(pool.map(lambda item: self.compress_stage(*item), stages))
        return [self.compress_stage(stage, tensor) for stage, tensor in stages]


def strategy_compress(stages, s, mask=None):
    return StrategyService(s, mask).compress(stages)
