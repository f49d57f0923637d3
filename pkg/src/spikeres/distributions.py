"""Scalar parameter distributions used for heterogeneous model sampling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .errors import ConfigurationError


@dataclass(frozen=True)
class GammaSpec:
    """Gamma distribution with shape k and scale theta, both strictly positive."""

    shape: float
    scale: float

    def __post_init__(self):
        if not (self.shape > 0.0 and np.isfinite(self.shape)):
            raise ConfigurationError(f"gamma shape must be positive, got {self.shape}")
        if not (self.scale > 0.0 and np.isfinite(self.scale)):
            raise ConfigurationError(f"gamma scale must be positive, got {self.scale}")

    @property
    def mean(self) -> float:
        return self.shape * self.scale

    @property
    def variance(self) -> float:
        return self.shape * self.scale**2

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return rng.gamma(self.shape, self.scale, size=size)

    def ppf(self, u) -> np.ndarray:
        return stats.gamma.ppf(u, self.shape, scale=self.scale)


@dataclass(frozen=True)
class PointMass:
    """Degenerate distribution concentrated at a single value."""

    value: float

    def __post_init__(self):
        if not np.isfinite(self.value):
            raise ConfigurationError(f"point mass value must be finite, got {self.value}")

    @property
    def mean(self) -> float:
        return self.value

    @property
    def variance(self) -> float:
        return 0.0

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return np.full(size, self.value)

    def ppf(self, u) -> np.ndarray:
        return np.full_like(np.asarray(u, dtype=float), self.value)


# Any object exposing mean/variance/sample/ppf works where a ParamDist is expected.
ParamDist = GammaSpec | PointMass
