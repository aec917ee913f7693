import csv
import io
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mosumci import (
    BootstrapConfig,
    ChangePointModel,
    DetectionResult,
    ErrorModel,
    ExperimentConfig,
    SignalSpec,
    available_signals,
    coverage_measures,
    evaluate_coverage,
    load_signal,
    match_estimators,
    scale_signal,
    synthesize,
)
from mosumci.errors import ConfigurationError
from mosumci.simulation import CoverageReport, detection_bandwidths, experiment_from_dict, oracle_bandwidths

COUNTS = {"blocks": 11, "fms": 6, "mix": 13, "teeth10": 13, "stairs10": 14}


def toy(sd=0.0):
    return SignalSpec("toy", 60, 1.0, (20, 40), (2.0, -2.0), sd)


def test_shipped_signals():
    assert available_signals() == sorted(COUNTS)
    for name, q in COUNTS.items():
        s = load_signal(name)
        assert len(s.change_points) == q and s.sd > 0
        assert SignalSpec.from_dict(s.to_dict()) == s


def test_unknown_signal_lists_names():
    with pytest.raises(ConfigurationError, match="teeth10"):
        load_signal("sawtooth")


def test_signal_from_file(tmp_path):
    p = tmp_path / "s.json"
    p.write_text(json.dumps(toy().to_dict()))
    assert load_signal(p) == toy()


def test_signal_spec_validation():
    with pytest.raises(ConfigurationError):
        SignalSpec("bad", 10, 0, (3, 2), (1, 1))
    with pytest.raises(ConfigurationError):
        SignalSpec("bad", 10, 0, (3,), (1, 1))
    with pytest.raises(ConfigurationError, match="change_points"):
        SignalSpec.from_dict({"name": "x", "n": 5, "jumps": []})


def test_scale_identity_and_arithmetic():
    s = SignalSpec("s", 30, 0, (10, 20), (2.0, -2.0))
    assert scale_signal(s, 1) == s
    s2 = scale_signal(s, 2)
    assert s2.change_points == (40, 80) and s2.n == 120 and s2.jumps == (1.0, -1.0)
    s4 = scale_signal(s, 4)
    assert np.diff((0, *s4.change_points, s4.n)).tolist() == [160, 160, 160]
    assert s4.jumps == (0.5, -0.5)


@given(st.sampled_from(sorted(COUNTS)), st.sampled_from([1, 2, 4, 8]))
def test_detectability_invariant(name, theta):
    s = load_signal(name)
    t = scale_signal(s, theta)
    a = np.array(s.jumps) ** 2 * s.model().spacings()
    b = np.array(t.jumps) ** 2 * t.model().spacings()
    assert np.array_equal(a, b)


def test_synthesize():
    x, m = synthesize(toy(), ErrorModel(sd=0), 1)
    assert np.array_equal(x, m.signal())
    assert np.allclose(np.diff(m.levels), m.jumps)
    a, _ = synthesize(toy(1.0), seed=5)
    b, _ = synthesize(toy(1.0), seed=5)
    assert np.array_equal(a, b)


@pytest.mark.parametrize("family", ["gaussian", "t"])
def test_noise_variance(family):
    spec = SignalSpec("flat", 100_000, 0.0, (), (), 1.7)
    x, m = synthesize(spec, ErrorModel(family, 5), 3)
    assert np.var(x - m.signal()) == pytest.approx(1.7**2, rel=0.02)


def test_error_model_validation():
    with pytest.raises(ConfigurationError):
        ErrorModel("laplace")
    with pytest.raises(ConfigurationError):
        ErrorModel("t", df=2)


def test_matching_rules():
    truth = ChangePointModel(30, (10, 20))
    m = match_estimators(truth, DetectionResult.from_locations(30, [10, 20], 3))
    assert m.detected.tolist() == [True, True] and m.location == (10, 20)
    m = match_estimators(truth, DetectionResult.from_locations(30, [12, 27], 3))
    assert m.detected.tolist() == [True, False] and m.location == (12, None)
    m = match_estimators(ChangePointModel(30, (10,)), DetectionResult.from_locations(30, [9, 11], 3))
    assert m.location == (9,) and m.index == (0,)


def test_matching_cell_edges():
    truth = ChangePointModel(30, (10, 20))
    # cells are 6..15 and 16..25
    m = match_estimators(truth, DetectionResult.from_locations(30, [5, 15, 16, 26], 1))
    assert m.location == (15, 16)


def test_coverage_measure_examples():
    truth = ChangePointModel(30, (10, 20))
    assert coverage_measures([], truth) == (1, 0)
    assert coverage_measures([(8, 12), (18, 22)], truth) == (1, 1)
    assert coverage_measures([(8, 12)], truth) == (1, 0)
    assert coverage_measures([(8, 12), (13, 15)], truth) == (0, 0)


@given(st.lists(st.tuples(st.integers(1, 30), st.integers(0, 6)), max_size=5))
def test_coverage2_never_exceeds_coverage1(ivs):
    truth = ChangePointModel(30, (10, 20))
    c1, c2 = coverage_measures([(a, a + w) for a, w in ivs], truth)
    assert c2 <= c1


def test_bandwidth_rules():
    assert [b.G for b in oracle_bandwidths(load_signal("teeth10").model())] == [5] * 12 + [4]
    assert [b.G for b in detection_bandwidths(560)] == [10, 20, 40, 80]
    assert [b.G for b in detection_bandwidths(560 * 16, 4)] == [40, 80, 160, 320, 640, 1280]
    with pytest.raises(ConfigurationError):
        detection_bandwidths(30)


@pytest.mark.parametrize("mode", ["oracle", "detected"])
def test_noiseless_report_all_ones(mode):
    cfg = ExperimentConfig(toy(0.0), mode=mode, replications=2,
                           bootstrap=BootstrapConfig(20, 1, (0.2, 0.1)), bandwidths=(8,) if mode == "detected" else "half-spacing")
    rep = evaluate_coverage(cfg)
    for arr in (rep.pointwise_coverage, rep.uniform_coverage, rep.hit_rate, rep.detection_rate,
                rep.coverage1, rep.coverage2):
        assert np.all(arr == 1.0)
    assert np.all(rep.pointwise_length == 0) and np.all(rep.uniform_length == 0)


def test_report_rates_and_outputs():
    cfg = ExperimentConfig(load_signal("teeth10"), replications=6, bootstrap=BootstrapConfig(50, 7, (0.2, 0.1)))
    rep = evaluate_coverage(cfg)
    for arr in (rep.pointwise_coverage, rep.uniform_coverage, rep.hit_rate, rep.coverage1, rep.coverage2):
        assert np.all((arr >= 0) & (arr <= 1))
    assert np.all(rep.coverage2 <= rep.coverage1)
    rows = list(csv.DictReader(io.StringIO(rep.to_csv())))
    assert len(rows) == 2 * 13 and set(rows[0]) == set(CoverageReport.CSV_FIELDS)
    assert rows[0]["spacing"] == "20"
    summary = json.loads(json.dumps(rep.summary()))
    assert summary["levels"] == [0.8, 0.9]


def test_report_deterministic_and_thread_free():
    cfg = ExperimentConfig(load_signal("mix"), mode="detected", replications=4, bootstrap=BootstrapConfig(30, 5))
    a = evaluate_coverage(cfg).summary()
    b = evaluate_coverage(cfg, threads=4).summary()
    assert a == b


def test_experiment_from_dict():
    cfg = experiment_from_dict({"signal": "fms", "mode": "oracle", "replications": 3,
                                "bootstrap": {"replicates": 10, "seed": 4, "levels": [0.9]}})
    assert cfg.bootstrap.alphas == (0.1,) and cfg.signal.name == "fms"
    with pytest.raises(ConfigurationError, match="replications"):
        experiment_from_dict({"signal": "fms", "mode": "oracle", "bootstrap": {"replicates": 1, "seed": 1}})
    with pytest.raises(ConfigurationError, match="mode"):
        experiment_from_dict({"signal": "fms", "mode": "magic", "replications": 1,
                              "bootstrap": {"replicates": 1, "seed": 1}})
