"""Chaotic benchmark series and synthetic classification tasks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError


@dataclass(frozen=True)
class ChaoticConfig:
    """RK4 integration settings; washout steps are discarded from the front."""

    system: str
    dt: float = 0.01
    n_steps: int = 1000
    washout: int = 0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.system not in ("lorenz63", "lorenz96", "rossler"):
            raise ConfigurationError(f"unknown system {self.system!r}")
        if self.dt <= 0.0:
            raise ConfigurationError("dt must be positive")
        if self.n_steps < 1:
            raise ConfigurationError("n_steps must be positive")
        if self.washout < 0:
            raise ConfigurationError("washout must be non-negative")


def _rk4(f, x0: np.ndarray, dt: float, n_steps: int) -> np.ndarray:
    out = np.empty((n_steps + 1, len(x0)))
    out[0] = x0
    x = np.array(x0, dtype=float)
    for k in range(n_steps):
        k1 = f(x)
        k2 = f(x + 0.5 * dt * k1)
        k3 = f(x + 0.5 * dt * k2)
        k4 = f(x + dt * k3)
        x = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out[k + 1] = x
    return out


def lorenz63_derivative(x: np.ndarray, sigma=10.0, rho=28.0, beta=8.0 / 3.0) -> np.ndarray:
    return np.array(
        [
            sigma * (x[1] - x[0]),
            x[0] * (rho - x[2]) - x[1],
            x[0] * x[1] - beta * x[2],
        ]
    )


def lorenz96_derivative(x: np.ndarray, forcing=8.0) -> np.ndarray:
    return (np.roll(x, -1) - np.roll(x, 2)) * np.roll(x, 1) - x + forcing


def rossler_derivative(x: np.ndarray, a=0.2, b=0.2, c=5.7) -> np.ndarray:
    return np.array([-x[1] - x[2], x[0] + a * x[1], b + x[2] * (x[0] - c)])


def generate_lorenz63(config: ChaoticConfig, seed: int = 0) -> np.ndarray:
    p = config.params
    sigma = p.get("sigma", 10.0)
    rho = p.get("rho", 28.0)
    beta = p.get("beta", 8.0 / 3.0)
    rng = np.random.default_rng(seed)
    x0 = np.array([1.0, 1.0, 1.0]) + 0.01 * rng.standard_normal(3)
    path = _rk4(lambda x: lorenz63_derivative(x, sigma, rho, beta), x0, config.dt, config.n_steps + config.washout)
    return path[config.washout : config.washout + config.n_steps]


def generate_lorenz96(config: ChaoticConfig, seed: int = 0) -> np.ndarray:
    p = config.params
    k = int(p.get("k", 8))
    forcing = p.get("forcing", 8.0)
    if k < 4:
        raise ConfigurationError("lorenz96 needs at least 4 variables")
    rng = np.random.default_rng(seed)
    x0 = np.full(k, forcing)
    x0[0] += 0.01
    x0 += 0.001 * rng.standard_normal(k)
    path = _rk4(lambda x: lorenz96_derivative(x, forcing), x0, config.dt, config.n_steps + config.washout)
    return path[config.washout : config.washout + config.n_steps]


def generate_rossler(config: ChaoticConfig, seed: int = 0) -> np.ndarray:
    p = config.params
    a, b, c = p.get("a", 0.2), p.get("b", 0.2), p.get("c", 5.7)
    rng = np.random.default_rng(seed)
    x0 = np.array([0.0, -6.78, 0.02]) + 0.01 * rng.standard_normal(3)
    path = _rk4(lambda x: rossler_derivative(x, a, b, c), x0, config.dt, config.n_steps + config.washout)
    return path[config.washout : config.washout + config.n_steps]


def generate_series(config: ChaoticConfig, seed: int = 0) -> np.ndarray:
    gen = {"lorenz63": generate_lorenz63, "lorenz96": generate_lorenz96, "rossler": generate_rossler}
    return gen[config.system](config, seed)


def normalize_series(series: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Center each dimension and divide by its standard deviation.

    Returns (normalized, mean, sigma). Zero-variance dimensions are an error.
    """
    s = np.atleast_2d(np.asarray(series, dtype=float))
    mean = s.mean(axis=0)
    sigma = s.std(axis=0)
    if np.any(sigma == 0.0):
        raise ConfigurationError("cannot normalize a zero-variance dimension")
    return (s - mean) / sigma, mean, sigma


@dataclass(frozen=True)
class ClassTaskSpec:
    """Rate-template classification: templates plus iid noise, stratified split."""

    n_classes: int = 3
    n_encoders: int = 8
    trials_per_class: int = 20
    noise: float = 0.05
    train_fraction: float = 0.7

    def __post_init__(self):
        if self.n_classes < 2:
            raise ConfigurationError("need at least two classes")
        if self.trials_per_class < 2:
            raise ConfigurationError("need at least two trials per class")
        if self.noise < 0.0:
            raise ConfigurationError("noise must be non-negative")
        if not (0.0 < self.train_fraction < 1.0):
            raise ConfigurationError("train_fraction must lie strictly between 0 and 1")


@dataclass
class ClassTaskData:
    templates: np.ndarray
    inputs: np.ndarray
    labels: np.ndarray
    train_idx: np.ndarray
    test_idx: np.ndarray


def make_classification_task(spec: ClassTaskSpec, seed: int = 0) -> ClassTaskData:
    """Per-class rate templates in [0.1, 0.9] with clipped additive noise.

    The split is stratified per class so the class priors match exactly on
    both sides; trial order inside each class is preserved.
    """
    rng = np.random.default_rng(seed)
    templates = 0.1 + 0.8 * rng.random((spec.n_classes, spec.n_encoders))
    inputs = np.empty((spec.n_classes * spec.trials_per_class, spec.n_encoders))
    labels = np.empty(spec.n_classes * spec.trials_per_class, dtype=np.int64)
    row = 0
    for c in range(spec.n_classes):
        for _ in range(spec.trials_per_class):
            trial = templates[c] + spec.noise * rng.standard_normal(spec.n_encoders)
            inputs[row] = np.clip(trial, 0.0, 1.0)
            labels[row] = c
            row += 1
    n_train_per_class = math.ceil(spec.train_fraction * spec.trials_per_class)
    train_idx, test_idx = [], []
    for c in range(spec.n_classes):
        base = c * spec.trials_per_class
        train_idx.extend(range(base, base + n_train_per_class))
        test_idx.extend(range(base + n_train_per_class, base + spec.trials_per_class))
    return ClassTaskData(
        templates=templates,
        inputs=inputs,
        labels=labels,
        train_idx=np.array(train_idx, dtype=np.int64),
        test_idx=np.array(test_idx, dtype=np.int64),
    )
