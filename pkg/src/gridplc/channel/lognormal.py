"""Log-normal channel gains and the multiplicative-cascade mechanism behind them."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import stats


@dataclass(frozen=True)
class LogNormalChannelModel:
    """Linear power gain G with ln G ~ Normal(mu, sigma^2)."""

    mu: float
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")


def sample_lognormal_gains(model: LogNormalChannelModel, n: int, rng: np.random.Generator) -> np.ndarray:
    if n < 1:
        raise ValueError("n must be >= 1")
    return np.exp(rng.normal(model.mu, model.sigma, size=n))


@dataclass(frozen=True)
class UniformFactor:
    low: float
    high: float

    def __post_init__(self):
        if not (0 < self.low <= self.high):
            raise ValueError("factor support must be positive with low <= high")

    def sample(self, rng: np.random.Generator, size) -> np.ndarray:
        if self.low == self.high:
            return np.full(size, float(self.low))
        return rng.uniform(self.low, self.high, size=size)


@dataclass(frozen=True)
class CascadeResult:
    log_gains: np.ndarray
    ks_statistic: float
    p_value: float

    def is_normal(self, alpha: float = 0.01) -> bool:
        return self.p_value > alpha


def cascade_gain_monte_carlo(n_discontinuities: int, factor: UniformFactor | Callable, n_samples: int,
                             rng: np.random.Generator) -> CascadeResult:
    """Multiply ``n_discontinuities`` independent positive factors per sample.

    ``factor`` is a :class:`UniformFactor` or any callable ``(rng, size) -> array``.
    The KS statistic compares standardized log-gains with N(0, 1); a degenerate
    sample (zero spread) gets statistic 0 and p-value 1.
    """
    if n_discontinuities < 1 or n_samples < 2:
        raise ValueError("need at least one discontinuity and two samples")
    draw = factor.sample if isinstance(factor, UniformFactor) else factor
    f = np.asarray(draw(rng, (n_samples, n_discontinuities)), dtype=float)
    if np.any(f <= 0):
        raise ValueError("factors must be strictly positive")
    logs = np.log(f).sum(axis=1)
    sd = logs.std(ddof=1)
    if sd == 0:
        return CascadeResult(logs, 0.0, 1.0)
    res = stats.kstest((logs - logs.mean()) / sd, "norm")
    return CascadeResult(logs, float(res.statistic), float(res.pvalue))
