import numpy as np
import pytest

from seqdesign import (
    ConfigError,
    CriterionSpec,
    PredictiveDistribution,
    mc_ei,
    verify_criterion,
)
from seqdesign.oracle import Z_LIMIT, McEstimate, _zscore


def test_mc_constant_zero_improvement():
    est = mc_ei(PredictiveDistribution(0.0, 1.0), lambda y: np.zeros_like(y), 2000, seed=0)
    assert est.mean == 0.0 and est.stderr == 0.0


def test_mc_constant_one_improvement():
    est = mc_ei(PredictiveDistribution(0.0, 1.0), lambda y: np.ones_like(y), 2000, seed=0)
    assert est.mean == 1.0 and est.stderr == 0.0


def test_mc_matches_ei_min_anchor():
    est = mc_ei(
        PredictiveDistribution(0.0, 1.0),
        lambda y: np.maximum(0.0 - y, 0.0),
        1_000_000,
        seed=1,
    )
    assert abs(est.mean - 0.398942) <= 4 * est.stderr


def test_mc_deterministic():
    imp = lambda y: np.maximum(1.0 - y, 0.0)  # noqa: E731
    a = mc_ei(PredictiveDistribution(0.0, 1.0), imp, 5000, seed=42)
    b = mc_ei(PredictiveDistribution(0.0, 1.0), imp, 5000, seed=42)
    assert a == b


def test_mc_rejects_small_samples_and_negative_improvement():
    with pytest.raises(ConfigError):
        mc_ei(PredictiveDistribution(0.0, 1.0), lambda y: y * 0, 10, seed=0)
    with pytest.raises(ConfigError):
        mc_ei(PredictiveDistribution(0.0, 1.0), lambda y: y, 2000, seed=0)


def test_mc_stderr_scaling():
    imp = lambda y: np.maximum(0.5 - y, 0.0)  # noqa: E731
    pred = PredictiveDistribution(0.0, 1.0)
    ratios = []
    for seed in range(5):
        small = mc_ei(pred, imp, 50_000, seed=seed)
        big = mc_ei(pred, imp, 200_000, seed=seed + 100)
        ratios.append(small.stderr / big.stderr)
    assert np.mean(ratios) == pytest.approx(2.0, rel=0.2)


def test_zscore_degenerate_cases():
    assert _zscore(0.0, McEstimate(0.0, 0.0, 1000)) == 0.0
    assert _zscore(1.0, McEstimate(0.0, 0.0, 1000)) == np.inf


@pytest.mark.parametrize(
    "spec",
    [
        CriterionSpec("minimize"),
        CriterionSpec("contour", a=0.0),
        CriterionSpec("noisy_quantile"),
    ],
)
def test_verify_passes_for_correct_forms(spec):
    report = verify_criterion(spec, trials=20, n_samples=200_000, seed=0)
    assert report.passed
    assert report.max_abs_z <= Z_LIMIT
    assert len(report.trials) == 20


def test_verify_constrained_kind():
    spec = CriterionSpec("constrained_minimize", constraint_bounds=(-1.0, 1.0))
    report = verify_criterion(spec, trials=10, n_samples=200_000, seed=3)
    assert report.passed


def test_verify_detects_corrupted_closed_form(monkeypatch):
    # shift the closed form by +0.01: most trials must blow past the z limit
    import seqdesign.oracle as oracle_module

    original = oracle_module.ei_min_values

    def corrupted(means, sds, y_min):
        return original(means, sds, y_min) + 0.01

    monkeypatch.setattr(oracle_module, "ei_min_values", corrupted)
    report = verify_criterion(CriterionSpec("minimize"), trials=10, n_samples=500_000, seed=0)
    assert not report.passed
    failing = sum(abs(t.z) > Z_LIMIT for t in report.trials)
    assert failing >= 6


def test_verify_rejects_weighted_kind():
    with pytest.raises(ConfigError):
        verify_criterion(CriterionSpec("minimize_weighted", w=0.5), trials=5)


def test_verify_report_serializes():
    report = verify_criterion(CriterionSpec("minimize"), trials=3, n_samples=10_000, seed=7)
    payload = report.to_dict()
    assert payload["kind"] == "minimize"
    assert len(payload["trials"]) == 3
    assert {"config", "closed_form", "mc_mean", "mc_stderr", "z"} <= set(
        payload["trials"][0]
    )
