"""Coverage studies for bootstrap change point intervals.

Canonical test signals ship as JSON files (``name, n, baseline,
change_points, jumps, sd``) under ``mosumci/signals``.  An experiment
stretches a signal by ``theta`` (spacings times ``theta**2``, jumps divided by
``theta``), adds noise, estimates the change points either with the oracle
locator or with multiscale detection, bootstraps intervals and tallies how
often they cover the truth.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .bootstrap import BootstrapConfig, bootstrap_confidence_intervals
from .detection import ChangePointModel, DetectionResult, detect_multiscale, oracle_locate
from .errors import ConfigurationError
from .mosum import Bandwidth
from .seeding import derive_seed, ordered_map, task_rng


@dataclass(frozen=True)
class SignalSpec:
    name: str
    n: int
    baseline: float
    change_points: tuple
    jumps: tuple
    sd: float = 1.0

    def __post_init__(self):
        cps = tuple(int(c) for c in self.change_points)
        jumps = tuple(float(d) for d in self.jumps)
        if len(cps) != len(jumps):
            raise ConfigurationError(f"{self.name}: {len(cps)} change points but {len(jumps)} jumps")
        if any(b <= a for a, b in zip(cps, cps[1:])) or (cps and (cps[0] <= 0 or cps[-1] >= self.n)):
            raise ConfigurationError(f"{self.name}: change points must increase strictly inside (0, n)")
        if self.sd < 0:
            raise ConfigurationError(f"{self.name}: sd must be nonnegative")
        object.__setattr__(self, "change_points", cps)
        object.__setattr__(self, "jumps", jumps)
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "baseline", float(self.baseline))
        object.__setattr__(self, "sd", float(self.sd))

    @classmethod
    def from_dict(cls, d: dict) -> "SignalSpec":
        missing = [k for k in ("name", "n", "change_points", "jumps") if k not in d]
        if missing:
            raise ConfigurationError(f"signal spec missing field(s): {', '.join(missing)}")
        return cls(d["name"], d["n"], d.get("baseline", 0.0), d["change_points"], d["jumps"], d.get("sd", 1.0))

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "n": self.n,
            "baseline": self.baseline,
            "change_points": list(self.change_points),
            "jumps": list(self.jumps),
            "sd": self.sd,
        }

    def model(self) -> ChangePointModel:
        return ChangePointModel.from_jumps(self.n, self.change_points, self.jumps, self.baseline)


def available_signals() -> list[str]:
    files = resources.files("mosumci.signals").iterdir()
    return sorted(p.name[:-5] for p in files if p.name.endswith(".json"))


def load_signal(name_or_path: Union[str, Path]) -> SignalSpec:
    """Load a shipped signal by name, or any SignalSpec JSON file by path."""
    p = Path(name_or_path)
    if p.suffix == ".json" and p.exists():
        return SignalSpec.from_dict(json.loads(p.read_text()))
    name = str(name_or_path)
    if name not in available_signals():
        raise ConfigurationError(
            f"unknown signal {name!r}; available: {', '.join(available_signals())}"
        )
    text = resources.files("mosumci.signals").joinpath(f"{name}.json").read_text()
    return SignalSpec.from_dict(json.loads(text))


def scale_signal(spec: SignalSpec, theta: int) -> SignalSpec:
    """Stretch spacings by ``theta**2`` and shrink jumps by ``theta``; ``d_j^2 delta_j`` is unchanged."""
    if int(theta) != theta or theta < 1:
        raise ConfigurationError(f"theta must be a positive integer, got {theta}")
    if theta == 1:
        return spec
    t2 = theta * theta
    return replace(
        spec,
        n=spec.n * t2,
        change_points=tuple(c * t2 for c in spec.change_points),
        jumps=tuple(d / theta for d in spec.jumps),
    )


@dataclass(frozen=True)
class ErrorModel:
    """Noise law; ``sd=None`` uses the signal's own noise level."""

    family: str = "gaussian"
    df: int = 5
    sd: Optional[float] = None

    def __post_init__(self):
        if self.family not in ("gaussian", "t"):
            raise ConfigurationError(f"unknown error family {self.family!r} (gaussian | t)")
        if self.family == "t" and self.df <= 2:
            raise ConfigurationError("t errors need df > 2")
        if self.sd is not None and self.sd < 0:
            raise ConfigurationError("sd must be nonnegative")

    def sample(self, rng: np.random.Generator, n: int, default_sd: float) -> np.ndarray:
        sd = default_sd if self.sd is None else self.sd
        if self.family == "gaussian":
            return sd * rng.standard_normal(n)
        return sd * math.sqrt((self.df - 2) / self.df) * rng.standard_t(self.df, n)


def synthesize(spec: SignalSpec, errors: Optional[ErrorModel] = None, seed=0) -> tuple[np.ndarray, ChangePointModel]:
    """Piecewise constant mean plus noise, with the ground-truth model."""
    errors = errors or ErrorModel()
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    model = spec.model()
    return model.signal() + errors.sample(rng, spec.n, spec.sd), model


@dataclass(frozen=True)
class Matching:
    """Per true change point: detection flag ``Z_j`` and the matched estimate (index into the estimates)."""

    detected: np.ndarray
    index: tuple
    location: tuple


def match_estimators(truth: ChangePointModel, estimates: DetectionResult) -> Matching:
    """Match each true change to the closest estimate inside its midpoint cell.

    Cell ``j`` is ``floor((theta_{j-1} + theta_j)/2) + 1 .. floor((theta_j + theta_{j+1})/2)``
    with ``theta_0 = 0`` and ``theta_{q+1} = n``; ties go to the smaller location.
    """
    b = truth.boundaries
    locs = estimates.locations
    index, location = [], []
    for j in range(truth.q):
        lo = (b[j] + b[j + 1]) // 2 + 1
        hi = (b[j + 1] + b[j + 2]) // 2
        inside = np.flatnonzero((locs >= lo) & (locs <= hi))
        if inside.size == 0:
            index.append(None)
            location.append(None)
            continue
        best = inside[np.argmin(np.abs(locs[inside] - b[j + 1]))]
        index.append(int(best))
        location.append(int(locs[best]))
    detected = np.array([i is not None for i in index])
    return Matching(detected, tuple(index), tuple(location))


def coverage_measures(intervals: Sequence[tuple[int, int]], truth: ChangePointModel) -> tuple[int, int]:
    """``(cov1, cov2)``: every interval holds a true change; and every true change is held."""
    cps = np.asarray(truth.locations)
    cov1 = all(np.any((cps >= lo) & (cps <= hi)) for lo, hi in intervals)
    covered_all = all(any(lo <= c <= hi for lo, hi in intervals) for c in cps)
    return int(cov1), int(cov1 and covered_all)


def oracle_bandwidths(model: ChangePointModel) -> list[Bandwidth]:
    return [Bandwidth.symmetric(max(1, int(d) // 2)) for d in model.spacings()]


def detection_bandwidths(n: int, theta: int = 1) -> list[Bandwidth]:
    """Doubling grid from ``10 * theta`` up to ``n / 4``."""
    g, out = 10 * theta, []
    while g <= n / 4:
        out.append(Bandwidth.symmetric(g))
        g *= 2
    if not out:
        raise ConfigurationError(f"no bandwidth >= {10 * theta} fits n = {n}")
    return out


@dataclass(frozen=True)
class ExperimentConfig:
    signal: SignalSpec
    theta: int = 1
    errors: ErrorModel = field(default_factory=ErrorModel)
    mode: str = "oracle"
    replications: int = 100
    bootstrap: BootstrapConfig = field(default_factory=lambda: BootstrapConfig(500, 0, (0.2, 0.1, 0.05)))
    bandwidths: Union[str, tuple] = "half-spacing"
    alpha: float = 0.1
    eta: float = 0.4

    def __post_init__(self):
        if self.mode not in ("oracle", "detected"):
            raise ConfigurationError(f"mode must be 'oracle' or 'detected', got {self.mode!r}")
        if int(self.replications) != self.replications or self.replications < 1:
            raise ConfigurationError("replications must be a positive integer")
        if int(self.theta) != self.theta or self.theta < 1:
            raise ConfigurationError("theta must be a positive integer")
        if isinstance(self.bandwidths, str):
            if self.bandwidths not in ("half-spacing", "auto"):
                raise ConfigurationError(f"unknown bandwidth rule {self.bandwidths!r}")
        else:
            object.__setattr__(self, "bandwidths", tuple(int(g) for g in self.bandwidths))

    @property
    def scaled_signal(self) -> SignalSpec:
        return scale_signal(self.signal, self.theta)

    def resolve_bandwidths(self, model: ChangePointModel) -> list[Bandwidth]:
        if self.mode == "oracle":
            if isinstance(self.bandwidths, str):
                return oracle_bandwidths(model)
            if len(self.bandwidths) != model.q:
                raise ConfigurationError(f"oracle mode needs {model.q} bandwidths, got {len(self.bandwidths)}")
            return [Bandwidth.symmetric(g) for g in self.bandwidths]
        if isinstance(self.bandwidths, str):
            return detection_bandwidths(model.n, self.theta)
        return [Bandwidth.symmetric(g) for g in self.bandwidths]


@dataclass
class CoverageReport:
    signal: str
    theta: int
    mode: str
    replications: int
    levels: tuple
    locations: np.ndarray
    spacing: np.ndarray
    pointwise_coverage: np.ndarray
    pointwise_length: np.ndarray
    uniform_coverage: np.ndarray
    uniform_length: np.ndarray
    hit_rate: np.ndarray
    detection_rate: np.ndarray
    all_detected_rate: float
    coverage1: np.ndarray
    coverage2: np.ndarray

    CSV_FIELDS = (
        "signal", "theta", "mode", "level", "cp_index", "location", "spacing",
        "pointwise_coverage", "pointwise_length", "uniform_length", "uniform_coverage",
        "hit_rate", "detection_rate",
    )

    def rows(self) -> list[dict]:
        out = []
        for a, level in enumerate(self.levels):
            for j, loc in enumerate(self.locations):
                out.append({
                    "signal": self.signal, "theta": self.theta, "mode": self.mode,
                    "level": level, "cp_index": j + 1, "location": int(loc),
                    "spacing": int(self.spacing[j]),
                    "pointwise_coverage": _num(self.pointwise_coverage[a, j]),
                    "pointwise_length": _num(self.pointwise_length[a, j]),
                    "uniform_length": _num(self.uniform_length[a, j]),
                    "uniform_coverage": _num(self.uniform_coverage[a]),
                    "hit_rate": _num(self.hit_rate[j]),
                    "detection_rate": _num(self.detection_rate[j]),
                })
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=self.CSV_FIELDS, lineterminator="\n")
        w.writeheader()
        w.writerows(self.rows())
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "signal": self.signal,
            "theta": self.theta,
            "mode": self.mode,
            "replications": self.replications,
            "levels": list(self.levels),
            "locations": self.locations.tolist(),
            "spacing": self.spacing.tolist(),
            "pointwise_coverage": _nested(self.pointwise_coverage),
            "pointwise_length": _nested(self.pointwise_length),
            "uniform_coverage": _nested(self.uniform_coverage),
            "uniform_length": _nested(self.uniform_length),
            "hit_rate": _nested(self.hit_rate),
            "detection_rate": _nested(self.detection_rate),
            "all_detected_rate": _num(self.all_detected_rate),
            "coverage1": _nested(self.coverage1),
            "coverage2": _nested(self.coverage2),
        }


def _num(v):
    v = float(v)
    return None if math.isnan(v) else round(v, 12)


def _nested(a):
    return np.vectorize(_num, otypes=[object])(np.asarray(a, dtype=float)).tolist()


def _one_replication(cfg: ExperimentConfig, spec: SignalSpec, r: int) -> dict:
    seed = cfg.bootstrap.master_seed
    x, truth = synthesize(spec, cfg.errors, task_rng(seed, r, 0))
    bws = cfg.resolve_bandwidths(truth)
    if cfg.mode == "oracle":
        # half-spacing bandwidths sit on the 2G < delta boundary by design
        est = oracle_locate(x, truth, bws, cfg.alpha, warn=False)
        index = tuple(range(truth.q))
        detected = np.ones(truth.q, dtype=bool)
    else:
        est = detect_multiscale(x, bws, cfg.alpha, cfg.eta)
        m = match_estimators(truth, est)
        index, detected = m.index, m.detected

    A, q = len(cfg.bootstrap.alphas), truth.q
    out = {
        "detected": detected,
        "hit": np.array([i is not None and est.locations[i] == c for i, c in zip(index, truth.locations)]),
        "pw_cover": np.zeros((A, q)), "pw_len": np.zeros((A, q)),
        "un_len": np.zeros((A, q)), "un_cover": np.zeros(A),
        "all_detected": bool(detected.all() and est.q == q),
        "cov1": np.ones(A), "cov2": np.zeros(A),
    }
    if est.q == 0:
        return out
    bcfg = replace(cfg.bootstrap, master_seed=derive_seed(seed, r, 1))
    res = bootstrap_confidence_intervals(x, est, bcfg)
    cps = np.asarray(truth.locations)
    for a, alpha in enumerate(bcfg.alphas):
        pw_lo, pw_hi = res.pointwise.lower[a], res.pointwise.upper[a]
        un_lo, un_hi = res.uniform.lower[a], res.uniform.upper[a]
        covered_all = True
        for j, i in enumerate(index):
            if i is None:
                covered_all = False
                continue
            out["pw_cover"][a, j] = pw_lo[i] <= cps[j] <= pw_hi[i]
            out["pw_len"][a, j] = pw_hi[i] - pw_lo[i]
            out["un_len"][a, j] = un_hi[i] - un_lo[i]
            covered_all &= bool(un_lo[i] <= cps[j] <= un_hi[i])
        out["un_cover"][a] = covered_all
        out["cov1"][a], out["cov2"][a] = coverage_measures(list(zip(un_lo, un_hi)), truth)
    return out


def evaluate_coverage(cfg: ExperimentConfig, threads: int = 1) -> CoverageReport:
    """Run ``cfg.replications`` independent replications and aggregate coverage.

    Replication ``r`` draws its data from ``task_rng(seed, r, 0)`` and its
    bootstrap from a seed derived from ``(seed, r, 1)``, so the report depends
    only on the configuration.  In detected mode pointwise figures are
    conditional on the change being detected, uniform coverage on every change
    being detected with no extra estimates.
    """
    spec = cfg.scaled_signal
    truth = spec.model()
    if truth.q == 0:
        raise ConfigurationError("signal has no change points")
    recs = ordered_map(lambda r: _one_replication(cfg, spec, r), range(cfg.replications), threads)
    Z = np.array([rec["detected"] for rec in recs], dtype=float)  # (R, q)
    n_det = Z.sum(axis=0)
    all_det = np.array([rec["all_detected"] for rec in recs], dtype=float)

    def cond_mean(key):
        tot = np.sum([rec[key] * rec["detected"][None, :] for rec in recs], axis=0)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(n_det > 0, tot / np.maximum(n_det, 1), np.nan)

    un_tot = np.sum([rec["un_cover"] * rec["all_detected"] for rec in recs], axis=0)
    n_all = all_det.sum()
    return CoverageReport(
        signal=spec.name,
        theta=cfg.theta,
        mode=cfg.mode,
        replications=cfg.replications,
        levels=tuple(round(1 - a, 10) for a in cfg.bootstrap.alphas),
        locations=np.asarray(truth.locations),
        spacing=2 * truth.spacings(),  # reported as 2 * delta_j
        pointwise_coverage=cond_mean("pw_cover"),
        pointwise_length=cond_mean("pw_len"),
        uniform_coverage=un_tot / n_all if n_all else np.full(len(cfg.bootstrap.alphas), np.nan),
        uniform_length=cond_mean("un_len"),
        hit_rate=np.mean([rec["hit"] for rec in recs], axis=0),
        detection_rate=n_det / cfg.replications,
        all_detected_rate=float(all_det.mean()),
        coverage1=np.mean([rec["cov1"] for rec in recs], axis=0),
        coverage2=np.mean([rec["cov2"] for rec in recs], axis=0),
    )


def experiment_from_dict(d: dict, seed: Optional[int] = None) -> ExperimentConfig:
    """Build an ExperimentConfig from its JSON form; ``seed`` overrides ``bootstrap.seed``."""
    for key in ("signal", "mode", "replications", "bootstrap"):
        if key not in d:
            raise ConfigurationError(f"missing required field '{key}'")
    sig = d["signal"]
    signal = SignalSpec.from_dict(sig) if isinstance(sig, dict) else load_signal(sig)
    b = d["bootstrap"]
    if "replicates" not in b:
        raise ConfigurationError("missing required field 'bootstrap.replicates'")
    if seed is None:
        seed = b.get("seed")
    if seed is None:
        raise ConfigurationError("missing required field 'bootstrap.seed' (or pass a seed)")
    levels = b.get("levels", [0.8, 0.9, 0.95])
    e = d.get("errors", {})
    return ExperimentConfig(
        signal=signal,
        theta=d.get("theta", 1),
        errors=ErrorModel(e.get("family", "gaussian"), e.get("df", 5), e.get("sd")),
        mode=d["mode"],
        replications=d["replications"],
        bootstrap=BootstrapConfig(b["replicates"], seed, tuple(round(1 - lv, 10) for lv in levels)),
        bandwidths=d.get("bandwidths", "half-spacing"),
        alpha=d.get("alpha", 0.1),
        eta=d.get("eta", 0.4),
    )
