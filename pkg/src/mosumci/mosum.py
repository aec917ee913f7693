"""Moving-sum statistics, local scale estimates and critical values.

All window sums come from one prefix-sum pass over the series, so a full
profile costs O(n) per bandwidth regardless of the window width.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import DegenerateConfigurationError, InvalidBandwidthError, MosumError

EPS = np.finfo(float).eps
SCALE_FLOOR = 1e-12


def as_series(values) -> np.ndarray:
    """Validate ``values`` as a time series: 1-D, finite, length >= 2."""
    x = np.asarray(values, dtype=float)
    if x.ndim != 1:
        raise MosumError(f"series must be one-dimensional, got shape {x.shape}")
    if x.size < 2:
        raise MosumError(f"series needs at least 2 observations, got {x.size}")
    if not np.all(np.isfinite(x)):
        raise MosumError("series contains NaN or infinite values")
    return x


@dataclass(frozen=True)
class Bandwidth:
    """Left and right window widths ``(G_l, G_r)``."""

    left: int
    right: int

    def __post_init__(self):
        for side in ("left", "right"):
            v = getattr(self, side)
            if int(v) != v or v < 1:
                raise InvalidBandwidthError(f"{side} bandwidth must be a positive integer, got {v!r}")
            object.__setattr__(self, side, int(v))

    @classmethod
    def symmetric(cls, g: int) -> "Bandwidth":
        return cls(g, g)

    @property
    def G(self) -> int:
        """The smaller of the two widths."""
        return min(self.left, self.right)

    @property
    def is_symmetric(self) -> bool:
        return self.left == self.right

    @property
    def prefactor(self) -> float:
        return math.sqrt(self.left * self.right / (self.left + self.right))

    def check(self, n: int) -> None:
        if self.left + self.right > n:
            raise InvalidBandwidthError(
                f"bandwidth ({self.left}, {self.right}) too large for series of length {n}"
            )

    def __str__(self):
        return str(self.left) if self.is_symmetric else f"({self.left},{self.right})"


BandwidthLike = Union[Bandwidth, int, tuple]


def as_bandwidth(bw: BandwidthLike) -> Bandwidth:
    if isinstance(bw, Bandwidth):
        return bw
    if isinstance(bw, (tuple, list)):
        return Bandwidth(*bw)
    return Bandwidth.symmetric(bw)


@dataclass(frozen=True)
class MosumProfile:
    """MOSUM statistic and local scale on ``k = G_l, ..., n - G_r``."""

    stats: np.ndarray
    local_scale: np.ndarray
    bandwidth: Bandwidth
    n: int

    @property
    def first(self) -> int:
        return self.bandwidth.left

    @property
    def last(self) -> int:
        return self.n - self.bandwidth.right

    @property
    def positions(self) -> np.ndarray:
        return np.arange(self.first, self.last + 1)

    def at(self, k: int) -> float:
        return float(self.stats[k - self.first])

    def scale_at(self, k: int) -> float:
        return float(self.local_scale[k - self.first])


def prefix_sums(x: np.ndarray, reference: float = 0.0) -> np.ndarray:
    """Cumulative sums of ``x - reference`` along the last axis, with a leading zero."""
    x = np.asarray(x, dtype=float) - reference
    out = np.zeros(x.shape[:-1] + (x.shape[-1] + 1,))
    np.cumsum(x, axis=-1, out=out[..., 1:])
    return out


def window_mean_difference(P: np.ndarray, ks: np.ndarray, bw: Bandwidth) -> np.ndarray:
    """Mean over ``(k - G_l, k]`` minus mean over ``(k, k + G_r]`` for each k.

    ``P`` holds prefix sums along its last axis (leading zero included).
    """
    gl, gr = bw.left, bw.right
    left = (P[..., ks] - P[..., ks - gl]) / gl
    right = (P[..., ks + gr] - P[..., ks]) / gr
    return left - right


def mosum_from_prefix(P: np.ndarray, ks: np.ndarray, bw: Bandwidth) -> np.ndarray:
    return bw.prefactor * window_mean_difference(P, ks, bw)


def _reference(x: np.ndarray) -> float:
    # centring keeps prefix sums small and shift errors out of the cancellation
    return float(np.median(x))


def compute_mosum(series, bw: BandwidthLike) -> MosumProfile:
    """MOSUM profile of ``series`` for bandwidth ``bw``.

    ``T_k = sqrt(G_l G_r / (G_l + G_r)) * (mean(X[k-G_l+1..k]) - mean(X[k+1..k+G_r]))``
    on ``G_l <= k <= n - G_r`` (1-based observation indices).  Mean differences
    below the rounding bound of the prefix sums are reported as exact zeros,
    so windows over constant stretches give ``T_k == 0``.
    """
    x = as_series(series)
    bw = as_bandwidth(bw)
    n = x.size
    bw.check(n)
    ks = np.arange(bw.left, n - bw.right + 1)
    P = prefix_sums(x, _reference(x))
    diff = window_mean_difference(P, ks, bw)
    tol = 4 * EPS * float(np.max(np.abs(P))) / bw.G
    diff[np.abs(diff) <= tol] = 0.0
    var = _local_variance(x, ks, bw)
    return MosumProfile(bw.prefactor * diff, np.sqrt(var), bw, n)


def _local_variance(x: np.ndarray, ks: np.ndarray, bw: Bandwidth) -> np.ndarray:
    ref = _reference(x)
    P1 = prefix_sums(x, ref)
    P2 = prefix_sums((x - ref) ** 2)
    gl, gr = bw.left, bw.right
    ml = (P1[ks] - P1[ks - gl]) / gl
    mr = (P1[ks + gr] - P1[ks]) / gr
    vl = (P2[ks] - P2[ks - gl]) / gl - ml**2
    vr = (P2[ks + gr] - P2[ks]) / gr - mr**2
    var = 0.5 * (vl + vr)
    tol = 8 * EPS * (float(P2[-1]) / bw.G + float(np.max(np.abs(P1))) ** 2 / bw.G**2)
    var[var <= tol] = 0.0
    return var


def local_variance_profile(series, bw: BandwidthLike) -> np.ndarray:
    """Average of the two within-window (population) variances at each valid k."""
    x = as_series(series)
    bw = as_bandwidth(bw)
    bw.check(x.size)
    ks = np.arange(bw.left, x.size - bw.right + 1)
    return _local_variance(x, ks, bw)


def critical_value(n: int, bw: BandwidthLike, alpha: float) -> float:
    """Asymptotic level-``alpha`` threshold ``D_n(G; alpha)`` for ``max_k |T_k| / sigma``.

    Uses the Gumbel-type limit of the scan maximum with ``G = min(G_l, G_r)``.
    """
    if not 0 < alpha < 1:
        raise MosumError(f"alpha must lie in (0, 1), got {alpha}")
    bw = as_bandwidth(bw)
    bw.check(n)
    r = n / bw.G
    if r <= math.e:
        raise DegenerateConfigurationError(f"n/G = {r:.3f} <= e; critical value undefined")
    log_r = math.log(r)
    a = math.sqrt(2 * log_r)
    b = 2 * log_r + 0.5 * math.log(log_r) + math.log(1.5) - 0.5 * math.log(math.pi)
    c_alpha = -math.log(math.log((1 - alpha) ** -0.5))
    return (b + c_alpha) / a
