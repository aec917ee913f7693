"""Segment-wise bootstrap for change point locations.

Each replicate redraws every estimated segment with replacement from its own
observations, relocates every change point as the local maximiser of the
MOSUM statistic inside a shrunken window around its estimate, and records the
deviation from the estimate.  Pointwise and uniform intervals are read off
the empirical quantiles of those deviations.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .detection import DetectionResult, min_spacing, plugin_estimates
from .errors import ConfigurationError, MosumError
from .mosum import Bandwidth, as_series, mosum_from_prefix, prefix_sums
from .seeding import chunked, ordered_map, task_rng

# replicates per work unit; fixed so that results never depend on the thread count
CHUNK = 64
PLUGIN_FLOOR = 1e-12


@dataclass(frozen=True)
class BootstrapConfig:
    replicates: int
    master_seed: int
    alphas: tuple = (0.1,)

    def __post_init__(self):
        if int(self.replicates) != self.replicates or self.replicates < 1:
            raise ConfigurationError(f"replicates must be a positive integer, got {self.replicates}")
        alphas = tuple(float(a) for a in np.atleast_1d(self.alphas))
        if not alphas or any(not 0 < a < 1 for a in alphas):
            raise ConfigurationError(f"every alpha must lie in (0, 1), got {alphas}")
        object.__setattr__(self, "alphas", alphas)
        object.__setattr__(self, "master_seed", int(self.master_seed))


@dataclass(frozen=True)
class BootstrapDeviations:
    """``deviations[b, j] = theta*_j^(b) - theta_hat_j`` with search half-widths ``windows[j]``."""

    deviations: np.ndarray
    windows: np.ndarray
    locations: np.ndarray
    n: int

    @property
    def replicates(self) -> int:
        return self.deviations.shape[0]

    @property
    def q(self) -> int:
        return self.deviations.shape[1]


@dataclass(frozen=True)
class IntervalSet:
    """Closed integer intervals per confidence level (rows) and change point (columns)."""

    kind: str
    alphas: tuple
    locations: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    quantiles: np.ndarray
    radius: np.ndarray
    n: int

    @property
    def q(self) -> int:
        return self.locations.size

    def interval(self, j: int, alpha: float) -> tuple[int, int]:
        a = self.alphas.index(alpha)
        return int(self.lower[a, j]), int(self.upper[a, j])

    def intervals(self, alpha: float) -> list[tuple[int, int]]:
        return [self.interval(j, alpha) for j in range(self.q)]

    def lengths(self) -> np.ndarray:
        return self.upper - self.lower


def _segment_index_map(boundaries: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    lengths = np.diff(boundaries)
    return np.repeat(boundaries[:-1], lengths), np.repeat(lengths, lengths)


def _resample(x: np.ndarray, starts: np.ndarray, lengths: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    u = rng.random(x.size)
    return x[starts + (u * lengths).astype(np.int64)]


def resample_segments(series, estimates: DetectionResult, seed: Union[int, np.random.Generator]) -> np.ndarray:
    """Redraw each estimated segment with replacement from its own values."""
    x = as_series(series)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    starts, lengths = _segment_index_map(estimates.boundaries)
    return _resample(x, starts, lengths, rng)


def search_windows(estimates: DetectionResult) -> np.ndarray:
    """Half-widths ``(H_l, H_r)`` of the bootstrap search window for each estimate.

    Symmetric bandwidths use ``H = min(G, floor(2 * delta_hat / 3))`` on both
    sides; asymmetric ones cap each side by two thirds of the distance to the
    neighbour on that side.
    """
    b = estimates.boundaries
    out = np.zeros((estimates.q, 2), dtype=np.int64)
    for j, bw in enumerate(estimates.bandwidths):
        if bw.is_symmetric:
            h = min(bw.left, (2 * min_spacing(estimates, j)) // 3)
            out[j] = h, h
        else:
            out[j, 0] = min(bw.left, (2 * (b[j + 1] - b[j])) // 3)
            out[j, 1] = min(bw.right, (2 * (b[j + 2] - b[j + 1])) // 3)
    return out


def _window_positions(estimates: DetectionResult, windows: np.ndarray) -> list[np.ndarray]:
    """Candidate locations ``(theta_hat - H_l, theta_hat + H_r]`` clipped to the statistic range.

    The estimate itself always stays a candidate, so a neighbour closer than
    two positions (``H = 0``) leaves the window ``{theta_hat}`` rather than nothing.
    """
    n = estimates.n
    out = []
    for theta, bw, (hl, hr) in zip(estimates.locations, estimates.bandwidths, windows):
        lo = max(theta - max(hl, 1) + 1, bw.left)
        hi = min(theta + hr, n - bw.right)
        if hi < lo:
            raise ConfigurationError(
                f"empty bootstrap search window around estimate {theta} (bandwidth {bw})"
            )
        out.append(np.arange(lo, hi + 1))
    return out


def _locate(P: np.ndarray, positions: list[np.ndarray], bandwidths: Sequence[Bandwidth]) -> np.ndarray:
    """Leftmost maximiser of ``|T|`` in each window, for every row of ``P``."""
    P = np.atleast_2d(P)
    out = np.empty((P.shape[0], len(positions)), dtype=np.int64)
    for j, (ks, bw) in enumerate(zip(positions, bandwidths)):
        T = np.abs(mosum_from_prefix(P, ks, bw))
        out[:, j] = ks[np.argmax(T, axis=1)]
    return out


def replicate_maximiser(boot_series, estimates: DetectionResult, j: int) -> int:
    """Bootstrap relocation of estimate ``j`` on one resampled series."""
    x = as_series(boot_series)
    positions = _window_positions(estimates, search_windows(estimates))
    P = prefix_sums(x, float(np.median(x)))
    return int(_locate(P, [positions[j]], [estimates.bandwidths[j]])[0, 0])


def run_bootstrap(series, estimates: DetectionResult, cfg: BootstrapConfig, threads: int = 1) -> BootstrapDeviations:
    """Draw ``cfg.replicates`` bootstrap relocations of every estimate.

    Replicate ``b`` draws from its own stream ``task_rng(cfg.master_seed, b)``,
    so the deviation matrix is identical for any ``threads``.
    """
    x = as_series(series)
    windows = search_windows(estimates)
    locs = estimates.locations
    if estimates.q == 0:
        return BootstrapDeviations(np.zeros((cfg.replicates, 0), dtype=np.int64), windows, locs, x.size)
    positions = _window_positions(estimates, windows)
    bws = estimates.bandwidths
    starts, lengths = _segment_index_map(estimates.boundaries)
    ref = float(np.median(x))

    def work(block: range) -> np.ndarray:
        Xs = np.stack([_resample(x, starts, lengths, task_rng(cfg.master_seed, b)) for b in block])
        return _locate(prefix_sums(Xs, ref), positions, bws) - locs

    parts = ordered_map(work, chunked(cfg.replicates, CHUNK), threads)
    return BootstrapDeviations(np.vstack(parts), windows, locs, x.size)


def empirical_quantile(values, alpha: float):
    """Smallest ``c`` among ``{0} U |values|`` with ``mean(|values| <= c) >= 1 - alpha``."""
    a = np.sort(np.abs(np.asarray(values)).ravel())
    if a.size == 0:
        raise MosumError("empirical quantile of an empty sample")
    if not 0 < alpha < 1:
        raise MosumError(f"alpha must lie in (0, 1), got {alpha}")
    frac = np.arange(1, a.size + 1) / a.size
    i = int(np.argmax(frac >= 1 - alpha))
    return a[i].item()


def pointwise_intervals(estimates: DetectionResult, devs: BootstrapDeviations, alphas) -> IntervalSet:
    """``[theta_hat_j - Q_j(alpha), theta_hat_j + Q_j(alpha)]`` clipped to ``[1, n]``."""
    alphas = tuple(float(a) for a in np.atleast_1d(alphas))
    locs = estimates.locations
    q = estimates.q
    Q = np.zeros((len(alphas), q), dtype=np.int64)
    if q:
        if devs.replicates == 0:
            raise MosumError("no bootstrap replicates")
        for a, alpha in enumerate(alphas):
            Q[a] = [empirical_quantile(devs.deviations[:, j], alpha) for j in range(q)]
    lower = np.clip(locs - Q, 1, estimates.n)
    upper = np.clip(locs + Q, 1, estimates.n)
    return IntervalSet("pointwise", alphas, locs, lower, upper, Q, Q.astype(float), estimates.n)


def _outward(theta: np.ndarray, radius: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # radii that are integers up to rounding noise must not gain a spurious unit
    r = np.where(np.abs(radius - np.round(radius)) <= 1e-9 * np.maximum(1.0, radius), np.round(radius), radius)
    return np.floor(theta - r).astype(np.int64), np.ceil(theta + r).astype(np.int64)


def uniform_intervals(series, estimates: DetectionResult, devs: BootstrapDeviations, alphas) -> IntervalSet:
    """Simultaneous intervals from the maximum of signal-to-noise scaled deviations.

    ``Q(alpha)`` is the empirical quantile of ``max_j (d_j^2 / s_j^2) |dev_j|``
    and change ``j`` gets radius ``(s_j^2 / d_j^2) Q(alpha)``, rounded outward.
    """
    alphas = tuple(float(a) for a in np.atleast_1d(alphas))
    locs = estimates.locations
    q = estimates.q
    if q == 0:
        empty = np.zeros((len(alphas), 0), dtype=np.int64)
        return IntervalSet("uniform", alphas, locs, empty, empty, np.zeros(len(alphas)), empty.astype(float), estimates.n)
    jumps, variances = plugin_estimates(series, estimates)
    snr = np.maximum(np.abs(jumps), PLUGIN_FLOOR) ** 2 / np.maximum(variances, PLUGIN_FLOOR)
    scaled_max = np.max(snr * np.abs(devs.deviations), axis=1)
    Q = np.array([empirical_quantile(scaled_max, a) for a in alphas])
    radius = Q[:, None] / snr[None, :]
    lo, hi = _outward(locs[None, :].astype(float), radius)
    lower = np.clip(lo, 1, estimates.n)
    upper = np.clip(hi, 1, estimates.n)
    return IntervalSet("uniform", alphas, locs, lower, upper, Q, radius, estimates.n)


@dataclass(frozen=True)
class BootstrapResult:
    deviations: BootstrapDeviations
    pointwise: IntervalSet
    uniform: IntervalSet
    jumps: np.ndarray
    variances: np.ndarray


def bootstrap_confidence_intervals(
    series, estimates: DetectionResult, cfg: BootstrapConfig, threads: int = 1
) -> BootstrapResult:
    """Run the bootstrap and build both interval families at every level in ``cfg``."""
    x = as_series(series)
    devs = run_bootstrap(x, estimates, cfg, threads)
    if estimates.q:
        jumps, variances = plugin_estimates(x, estimates)
    else:
        jumps = variances = np.zeros(0)
    return BootstrapResult(
        devs,
        pointwise_intervals(estimates, devs, cfg.alphas),
        uniform_intervals(x, estimates, devs, cfg.alphas),
        jumps,
        variances,
    )
