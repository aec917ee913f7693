"""Monte Carlo samplers for the limit laws of MOSUM change point estimators.

Two regimes:

* local changes (jump shrinking with n): the scaled estimation error converges
  to ``argmax_s {W_s - |s| / sqrt(6)}`` for a two-sided standard Wiener process;
* fixed changes: the raw error converges to ``argmax_l {-d Gamma(l) - |l| d^2}``
  where ``Gamma`` is a two-sided random walk with steps
  ``e1 - 2 e2 + e3`` built from three independent copies of the noise.

Draws are generated in fixed-size chunks, chunk ``c`` from
``task_rng(seed, c)``.  Within a chunk the noise is filled outward from the
origin, so a run with a larger horizon shares its inner path with a smaller
one (common random numbers for truncation checks).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import stats

from .errors import ConfigurationError, DiscreteErrorsWarning
from .seeding import chunked, ordered_map, task_rng

CHUNK = 512


@dataclass(frozen=True)
class WienerArgmaxConfig:
    horizon: float = 60.0
    grid_step: float = 0.05
    draws: int = 10_000
    seed: int = 0

    def __post_init__(self):
        if self.horizon <= 0 or self.grid_step <= 0:
            raise ConfigurationError("horizon and grid_step must be positive")
        if self.grid_step > self.horizon / 100 * (1 + 1e-12):
            raise ConfigurationError(
                f"grid_step {self.grid_step} too coarse for horizon {self.horizon} (need <= horizon/100)"
            )
        if int(self.draws) != self.draws or self.draws < 1:
            raise ConfigurationError(f"draws must be a positive integer, got {self.draws}")


def sample_wiener_argmax(cfg: WienerArgmaxConfig, threads: int = 1) -> np.ndarray:
    """Grid argmax of ``W_s - |s| / sqrt(6)`` on ``[-c, c]`` (ties to the smallest s)."""
    h = cfg.grid_step
    m = int(round(cfg.horizon / h))
    s = h * np.arange(-m, m + 1)
    drift = np.abs(s) / math.sqrt(6.0)

    def work(item):
        c, block = item
        rng = task_rng(cfg.seed, c)
        inc = rng.standard_normal((m, 2, len(block))) * math.sqrt(h)
        walk = np.cumsum(inc, axis=0)
        path = np.concatenate([walk[::-1, 0], np.zeros((1, len(block))), walk[:, 1]], axis=0)
        return s[np.argmax(path - drift[:, None], axis=0)]

    parts = ordered_map(work, list(enumerate(chunked(cfg.draws, CHUNK))), threads)
    return np.concatenate(parts)


def default_fixed_horizon(jump: float, sd: float = 1.0) -> int:
    """Smallest L with drift ``L d^2`` at least six noise sds ``6 |d| sd sqrt(6 L)``."""
    return max(10, math.ceil(216 * sd**2 / jump**2))


@dataclass(frozen=True)
class FixedArgmaxConfig:
    """Fixed-change limit law setup.

    ``errors`` is ``"gaussian"``, ``"t"`` (Student t with ``df`` degrees of
    freedom, rescaled to standard deviation ``sd``) or ``"empirical"`` (draws
    with replacement from the centred ``residuals``).
    """

    jump: float
    horizon: Optional[int] = None
    errors: str = "gaussian"
    sd: float = 1.0
    df: float = 5.0
    residuals: Optional[np.ndarray] = None
    draws: int = 10_000
    seed: int = 0

    def __post_init__(self):
        if self.jump == 0 or not np.isfinite(self.jump):
            raise ConfigurationError("jump must be a nonzero finite number")
        if self.errors not in ("gaussian", "t", "empirical"):
            raise ConfigurationError(f"unknown error law {self.errors!r}")
        if self.errors == "t" and self.df <= 2:
            raise ConfigurationError("t errors need df > 2 for a finite variance")
        if self.errors == "empirical":
            if self.residuals is None or np.size(self.residuals) < 2:
                raise ConfigurationError("empirical errors need at least two residuals")
            warnings.warn(
                "empirical error law is discrete; argmax ties occur with positive probability",
                DiscreteErrorsWarning,
                stacklevel=3,
            )
        if self.sd <= 0:
            raise ConfigurationError("sd must be positive")
        if int(self.draws) != self.draws or self.draws < 1:
            raise ConfigurationError(f"draws must be a positive integer, got {self.draws}")
        if self.horizon is None:
            sd = self.sd if self.errors != "empirical" else float(np.std(self.residuals))
            object.__setattr__(self, "horizon", default_fixed_horizon(self.jump, sd))
        if int(self.horizon) != self.horizon or self.horizon < 1:
            raise ConfigurationError(f"horizon must be a positive integer, got {self.horizon}")

    def noise(self, rng: np.random.Generator, shape) -> np.ndarray:
        if self.errors == "gaussian":
            return self.sd * rng.standard_normal(shape)
        if self.errors == "t":
            return self.sd * math.sqrt((self.df - 2) / self.df) * rng.standard_t(self.df, shape)
        r = np.asarray(self.residuals, dtype=float)
        r = r - r.mean()
        return r[rng.integers(0, r.size, size=shape)]


def sample_fixed_argmax(cfg: FixedArgmaxConfig, threads: int = 1) -> np.ndarray:
    """Argmax over ``l in [-L, L]`` of ``-d Gamma(l) - |l| d^2`` (ties to the smallest l)."""
    L, d = int(cfg.horizon), float(cfg.jump)
    ell = np.arange(-L, L + 1)
    drift = np.abs(ell) * d * d

    def work(item):
        c, block = item
        rng = task_rng(cfg.seed, c)
        e = cfg.noise(rng, (L, 2, 3, len(block)))
        steps = e[:, :, 0] - 2 * e[:, :, 1] + e[:, :, 2]
        walk = np.cumsum(steps, axis=0)
        gamma = np.concatenate([walk[::-1, 0], np.zeros((1, len(block))), walk[:, 1]], axis=0)
        return ell[np.argmax(-d * gamma - drift[:, None], axis=0)]

    parts = ordered_map(work, list(enumerate(chunked(cfg.draws, CHUNK))), threads)
    return np.concatenate(parts).astype(np.int64)


def distribution_distance(a, b, support=None) -> float:
    """Distance between two samples.

    Integer samples: total variation ``0.5 * sum |p_a(v) - p_b(v)|`` over
    ``support`` (default: all observed values).  Real samples: two-sample
    Kolmogorov-Smirnov statistic.
    """
    a, b = np.asarray(a).ravel(), np.asarray(b).ravel()
    if a.size == 0 or b.size == 0:
        raise ConfigurationError("samples must be nonempty")
    if np.issubdtype(a.dtype, np.integer) and np.issubdtype(b.dtype, np.integer):
        vals = np.union1d(a, b) if support is None else np.asarray(list(support))
        pa = np.array([np.mean(a == v) for v in vals])
        pb = np.array([np.mean(b == v) for v in vals])
        return float(0.5 * np.abs(pa - pb).sum())
    return float(stats.ks_2samp(a, b).statistic)


def quantile_summary(draws, probs=(0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99)) -> dict:
    return {f"{p:g}": float(np.quantile(draws, p)) for p in probs}
