"""Change point estimation from MOSUM profiles.

Indices follow the usual change point convention: a change at location ``k``
means the mean shifts between observation ``k`` and ``k + 1`` (1-based), i.e.
between ``x[k - 1]`` and ``x[k]`` of a 0-based array.  Per-change-point
helpers take a 0-based position ``j`` into the sorted estimate list.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Iterable, Literal, Optional, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import (
    BandwidthConditionWarning,
    DegenerateConfigurationError,
    InvalidBandwidthError,
    MosumError,
)
from .mosum import (
    SCALE_FLOOR,
    Bandwidth,
    BandwidthLike,
    MosumProfile,
    as_bandwidth,
    as_series,
    compute_mosum,
    critical_value,
)
from .seeding import ordered_map

ScaleMode = Literal["local", "global"]


@dataclass(frozen=True)
class ChangePointModel:
    """Piecewise constant mean: change locations, jumps and segment levels."""

    n: int
    locations: tuple
    jumps: Optional[tuple] = None
    levels: Optional[tuple] = None

    def __post_init__(self):
        locs = tuple(int(v) for v in self.locations)
        object.__setattr__(self, "locations", locs)
        if any(b <= a for a, b in zip(locs, locs[1:])):
            raise MosumError(f"change points must be strictly increasing: {locs}")
        if locs and (locs[0] <= 0 or locs[-1] >= self.n):
            raise MosumError(f"change points must lie in (0, {self.n}): {locs}")
        if self.levels is not None:
            levels = tuple(float(v) for v in self.levels)
            if len(levels) != len(locs) + 1:
                raise MosumError("need one level per segment")
            object.__setattr__(self, "levels", levels)
            if self.jumps is None:
                object.__setattr__(self, "jumps", tuple(np.diff(levels).tolist()))
        if self.jumps is not None:
            jumps = tuple(float(v) for v in self.jumps)
            if len(jumps) != len(locs):
                raise MosumError("need one jump per change point")
            object.__setattr__(self, "jumps", jumps)

    @classmethod
    def from_jumps(cls, n: int, locations: Sequence[int], jumps: Sequence[float], baseline: float = 0.0):
        levels = baseline + np.concatenate([[0.0], np.cumsum(jumps)])
        return cls(n, tuple(locations), tuple(jumps), tuple(levels))

    @property
    def q(self) -> int:
        return len(self.locations)

    @property
    def boundaries(self) -> np.ndarray:
        return np.array((0, *self.locations, self.n))

    def spacing(self, j: int) -> int:
        """``delta_j``: distance from change ``j`` to its nearest neighbour (or the series ends)."""
        b = self.boundaries
        return int(min(b[j + 1] - b[j], b[j + 2] - b[j + 1]))

    def spacings(self) -> np.ndarray:
        b = self.boundaries
        return np.minimum(np.diff(b)[:-1], np.diff(b)[1:])

    def signal(self) -> np.ndarray:
        if self.levels is None:
            raise MosumError("model has no segment levels")
        return np.repeat(self.levels, np.diff(self.boundaries))


@dataclass(frozen=True)
class CandidateEstimate:
    location: int
    bandwidth: Bandwidth
    stat_value: float
    exceeds_threshold: bool


@dataclass(frozen=True)
class DetectionResult:
    """Sorted change point estimates, each tagged with its detection bandwidth."""

    estimates: tuple
    n: int
    alpha: float = 0.1
    eta: float = 0.4
    method: str = "single-scale"
    threshold: Optional[float] = None

    def __post_init__(self):
        ests = tuple(sorted(self.estimates, key=lambda e: e.location))
        object.__setattr__(self, "estimates", ests)
        locs = [e.location for e in ests]
        if any(b <= a for a, b in zip(locs, locs[1:])):
            raise MosumError(f"estimates must have distinct locations: {locs}")
        if locs and (locs[0] <= 0 or locs[-1] >= self.n):
            raise MosumError(f"estimates must lie in (0, {self.n}): {locs}")

    @property
    def q(self) -> int:
        return len(self.estimates)

    @property
    def locations(self) -> np.ndarray:
        return np.array([e.location for e in self.estimates], dtype=np.int64)

    @property
    def bandwidths(self) -> list:
        return [e.bandwidth for e in self.estimates]

    @property
    def boundaries(self) -> np.ndarray:
        return np.concatenate([[0], self.locations, [self.n]]).astype(np.int64)

    @classmethod
    def from_locations(cls, n: int, locations: Iterable[int], bandwidths, **kw) -> "DetectionResult":
        """Wrap externally supplied estimates (e.g. from another detector)."""
        locations = list(locations)
        if not isinstance(bandwidths, (list, tuple)):
            bandwidths = [bandwidths] * len(locations)
        ests = tuple(
            CandidateEstimate(int(k), as_bandwidth(g), float("nan"), True)
            for k, g in zip(locations, bandwidths)
        )
        return cls(ests, n, method=kw.pop("method", "external"), **kw)


def _check_levels(alpha: float, eta: float) -> None:
    if not 0 < alpha < 1:
        raise MosumError(f"alpha must lie in (0, 1), got {alpha}")
    if not 0 < eta < 1:
        raise MosumError(f"eta must lie in (0, 1), got {eta}")


def _scale(profile: MosumProfile, mode: ScaleMode) -> np.ndarray:
    if mode == "local":
        s = profile.local_scale
    elif mode == "global":
        s = np.full_like(profile.local_scale, np.sqrt(np.median(profile.local_scale**2)))
    else:
        raise MosumError(f"unknown scale mode {mode!r}")
    return np.maximum(s, SCALE_FLOOR)


def local_maxima(values: np.ndarray, radius: int) -> np.ndarray:
    """Indices ``i`` that are the first maximiser of ``values`` within ``[i - r, i + r]``."""
    if radius <= 0:
        return np.arange(values.size)
    padded = np.concatenate([np.full(radius, -np.inf), values, np.full(radius, -np.inf)])
    windows = sliding_window_view(padded, 2 * radius + 1)
    return np.flatnonzero(np.argmax(windows, axis=1) == radius)


def detect_single_scale(
    series,
    bw: BandwidthLike,
    alpha: float = 0.1,
    eta: float = 0.4,
    scale: ScaleMode = "local",
) -> DetectionResult:
    """MOSUM procedure with the eta-criterion at a single bandwidth.

    A location ``k`` is reported when ``|T_k|`` is the (leftmost) maximum of
    ``|T|`` within ``floor(eta * G)`` positions and exceeds
    ``sigma_hat(k) * D_n(G; alpha)`` strictly.
    """
    _check_levels(alpha, eta)
    x = as_series(series)
    bw = as_bandwidth(bw)
    profile = compute_mosum(x, bw)
    d = critical_value(x.size, bw, alpha)
    absT = np.abs(profile.stats)
    thresholds = _scale(profile, scale) * d
    radius = int(np.floor(eta * bw.G))
    idx = [i for i in local_maxima(absT, radius) if absT[i] > thresholds[i]]
    ests = tuple(CandidateEstimate(int(profile.first + i), bw, float(absT[i]), True) for i in idx)
    return DetectionResult(ests, x.size, alpha, eta, "single-scale", d)


def detect_multiscale(
    series,
    bandwidths: Iterable[BandwidthLike],
    alpha: float = 0.1,
    eta: float = 0.4,
    scale: ScaleMode = "local",
    threads: int = 1,
) -> DetectionResult:
    """Bottom-up merge of single-scale detections over several bandwidths.

    Bandwidths are visited from the smallest ``G`` upwards.  A candidate found
    at a larger bandwidth is dropped when an estimate accepted at a smaller
    bandwidth lies in its detection interval ``(k - G_l, k + G_r]``.
    """
    x = as_series(series)
    bws = sorted({as_bandwidth(g) for g in bandwidths}, key=lambda b: (b.G, b.left, b.right))
    if not bws:
        raise MosumError("need at least one bandwidth")
    _check_levels(alpha, eta)
    per_bw = ordered_map(lambda b: detect_single_scale(x, b, alpha, eta, scale), bws, threads)
    accepted: list[CandidateEstimate] = []
    for res in per_bw:
        prior = np.array([e.location for e in accepted], dtype=np.int64)
        for cand in res.estimates:
            k, b = cand.location, cand.bandwidth
            if prior.size and np.any((prior > k - b.left) & (prior <= k + b.right)):
                continue
            accepted.append(cand)
    return DetectionResult(tuple(accepted), x.size, alpha, eta, "multiscale")


def _window_argmax(absT: np.ndarray, first: int, lo: int, hi: int) -> int:
    """Leftmost argmax of ``absT`` over locations ``lo..hi`` (inclusive)."""
    seg = absT[lo - first : hi - first + 1]
    return lo + int(np.argmax(seg))


def oracle_locate(series, truth: ChangePointModel, bandwidths, alpha: float = 0.1, warn: bool = True) -> DetectionResult:
    """Local maximiser of ``|T(G_j)|`` over ``(theta_j - G_l, theta_j + G_r]`` for each true change.

    A bandwidth with ``2 G_j >= delta_j`` triggers BandwidthConditionWarning
    unless ``warn`` is false.
    """
    x = as_series(series)
    n = x.size
    if truth.q < 1:
        raise MosumError("oracle estimation needs at least one true change point")
    if not isinstance(bandwidths, (list, tuple)):
        bandwidths = [bandwidths] * truth.q
    bws = [as_bandwidth(g) for g in bandwidths]
    if len(bws) != truth.q:
        raise MosumError(f"expected {truth.q} bandwidths, got {len(bws)}")
    profiles: dict[Bandwidth, MosumProfile] = {}
    ests = []
    for j, (theta, b) in enumerate(zip(truth.locations, bws)):
        delta = truth.spacing(j)
        if warn and 2 * max(b.left, b.right) >= delta:
            warnings.warn(
                f"bandwidth {b} at change {theta} violates 2G < delta = {delta}",
                BandwidthConditionWarning,
                stacklevel=2,
            )
        if b not in profiles:
            profiles[b] = compute_mosum(x, b)
        prof = profiles[b]
        lo, hi = theta - b.left + 1, theta + b.right
        if lo < prof.first or hi > prof.last:
            raise InvalidBandwidthError(
                f"window ({theta - b.left}, {hi}] for change {theta} leaves the statistic range "
                f"[{prof.first}, {prof.last}]"
            )
        absT = np.abs(prof.stats)
        k = _window_argmax(absT, prof.first, lo, hi)
        over = absT[k - prof.first] > max(prof.scale_at(k), SCALE_FLOOR) * critical_value(n, b, alpha)
        ests.append(CandidateEstimate(k, b, float(absT[k - prof.first]), bool(over)))
    return DetectionResult(tuple(ests), n, alpha, float("nan"), "oracle")


def _segments(x: np.ndarray, est: DetectionResult, j: int) -> tuple[np.ndarray, np.ndarray]:
    if not 0 <= j < est.q:
        raise IndexError(f"change point index {j} out of range for {est.q} estimates")
    b = est.boundaries
    return x[b[j] : b[j + 1]], x[b[j + 1] : b[j + 2]]


def estimate_jump(series, estimates: DetectionResult, j: int) -> float:
    """Signed jump: right segment mean minus left segment mean around estimate ``j``."""
    left, right = _segments(as_series(series), estimates, j)
    return float(right.mean() - left.mean())


def estimate_local_variance(series, estimates: DetectionResult, j: int) -> float:
    """Pooled residual variance of the two segments flanking estimate ``j``."""
    left, right = _segments(as_series(series), estimates, j)
    dof = left.size + right.size - 2
    if dof <= 0:
        raise DegenerateConfigurationError(
            f"segments around estimate {estimates.locations[j]} too short for a variance estimate"
        )
    ss = np.sum((left - left.mean()) ** 2) + np.sum((right - right.mean()) ** 2)
    return float(ss / dof)


def min_spacing(estimates: DetectionResult, j: int) -> int:
    """``delta_hat_j``: distance from estimate ``j`` to its nearest neighbour or the series ends."""
    b = estimates.boundaries
    return int(min(b[j + 1] - b[j], b[j + 2] - b[j + 1]))


def plugin_estimates(series, estimates: DetectionResult) -> tuple[np.ndarray, np.ndarray]:
    """Jump and local variance estimates for every change point."""
    x = as_series(series)
    jumps = np.array([estimate_jump(x, estimates, j) for j in range(estimates.q)])
    variances = np.array([estimate_local_variance(x, estimates, j) for j in range(estimates.q)])
    return jumps, variances
