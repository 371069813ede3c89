from dataclasses import dataclass

import numpy as np

from utils.exceptions import DomainError, StateError
from utils.models import Tensor


@dataclass(frozen=True)
class AspConfig:
    threshold: float = 0.0

    def __post_init__(self):
        if not np.isfinite(self.threshold) or self.threshold < 0:
            raise DomainError(f"ASP threshold must be a nonnegative real, got {self.threshold}")

    @property
    def enabled(self):
        return self.threshold > 0


def asp_apply(x, cfg):
    """Zero every element whose magnitude is below the threshold.

    Values equal to the threshold survive; survivors keep their exact value.
    """
    if x.is_quantized:
        raise StateError("ASP runs on real-valued activations, dequantize first")
    if not cfg.enabled:
        return x
    kept = np.where(np.abs(x.data) < cfg.threshold, 0.0, x.data)
    return Tensor(x.dims, kept)
