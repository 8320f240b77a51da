"""Monte Carlo verification of the closed-form criteria.

Estimates E[I(x)] by direct sampling from the Gaussian predictive law and
compares against the closed forms, reporting z-scores. Sampling uses numpy's
PCG64 generator with ziggurat normals; every estimate is reproducible from
its seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .criteria import (
    CriterionSpec,
    PredictiveDistribution,
    ei_contour_values,
    ei_min_exponentiated_values,
    ei_min_values,
    ei_multi_contour_values,
    ei_noisy_quantile_values,
    ei_percentile_values,
)
from .errors import ConfigError

#: Verification passes when every trial's |z| stays at or below this.
Z_LIMIT = 4.0

VERIFIABLE_KINDS = (
    "minimize",
    "minimize_exponentiated",
    "contour",
    "multi_contour",
    "percentile",
    "noisy_quantile",
    "constrained_minimize",
)


@dataclass(frozen=True)
class McEstimate:
    """Sample mean of an improvement under the predictive distribution."""

    mean: float
    stderr: float
    n_samples: int


def mc_ei(pred: PredictiveDistribution, improvement, n_samples: int, seed) -> McEstimate:
    """Monte Carlo estimate of E[improvement(y)] with y ~ N(pred.mean, pred.sd^2).

    ``improvement`` must be vectorized over numpy arrays and nonnegative.
    """
    if n_samples < 1000:
        raise ConfigError("n_samples must be >= 1000")
    rng = np.random.default_rng(seed)
    draws = pred.mean + pred.sd * rng.standard_normal(int(n_samples))
    vals = np.asarray(improvement(draws), dtype=float)
    if vals.shape != draws.shape:
        raise ConfigError("improvement must map a sample vector to a value vector")
    if vals.min() < 0:
        raise ConfigError("improvement values must be nonnegative")
    mean = float(vals.mean())
    stderr = float(vals.std(ddof=1) / np.sqrt(vals.size)) if vals.size > 1 else 0.0
    return McEstimate(mean, stderr, int(n_samples))


@dataclass(frozen=True)
class TrialResult:
    config: dict
    closed_form: float
    mc_mean: float
    mc_stderr: float
    z: float

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "closed_form": self.closed_form,
            "mc_mean": self.mc_mean,
            "mc_stderr": self.mc_stderr,
            "z": self.z,
        }


@dataclass(frozen=True)
class VerificationReport:
    kind: str
    passed: bool
    max_abs_z: float
    n_samples: int
    trials: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "passed": self.passed,
            "max_abs_z": self.max_abs_z,
            "n_samples": self.n_samples,
            "z_limit": Z_LIMIT,
            "trials": [t.to_dict() for t in self.trials],
        }


def _zscore(closed: float, est: McEstimate) -> float:
    diff = closed - est.mean
    if est.stderr > 0:
        return diff / est.stderr
    if abs(diff) <= 1e-12 * max(1.0, abs(closed)):
        return 0.0
    return float(np.sign(diff) * np.inf)


def _trial_setup(kind: str, spec: CriterionSpec, rng: np.random.Generator):
    """Random (prediction, parameters) configuration plus its improvement sampler."""
    mean = float(rng.uniform(-3.0, 3.0))
    sd = float(rng.uniform(0.05, 2.0))
    config = {"mean": mean, "sd": sd}
    one = lambda arr: np.array([arr])  # noqa: E731

    if kind == "minimize":
        y_min = mean + sd * float(rng.uniform(-2.5, 2.5))
        config["y_min"] = y_min
        closed = float(ei_min_values(one(mean), one(sd), y_min)[0])
        improvement = lambda y: np.maximum(y_min - y, 0.0)  # noqa: E731
    elif kind == "minimize_exponentiated":
        g = spec.g if spec.g is not None else 2
        y_min = mean + sd * float(rng.uniform(-2.5, 2.5))
        config.update(y_min=y_min, g=g)
        closed = float(ei_min_exponentiated_values(one(mean), one(sd), y_min, g)[0])
        improvement = lambda y: np.maximum(y_min - y, 0.0) ** g  # noqa: E731
    elif kind == "contour":
        a = mean + sd * float(rng.uniform(-2.5, 2.5))
        alpha = float(rng.uniform(0.5, 3.0))
        eps2 = (alpha * sd) ** 2
        config.update(a=a, alpha=alpha)
        closed = float(ei_contour_values(one(mean), one(sd), a, alpha)[0])
        improvement = lambda y: eps2 - np.minimum((y - a) ** 2, eps2)  # noqa: E731
    elif kind == "multi_contour":
        a1 = mean + sd * float(rng.uniform(-2.5, 0.0))
        a2 = a1 + sd * float(rng.uniform(0.5, 3.0))
        alpha = float(rng.uniform(0.5, 3.0))
        eps2 = (alpha * sd) ** 2
        config.update(levels=[a1, a2], alpha=alpha)
        closed = float(ei_multi_contour_values(one(mean), one(sd), [a1, a2], alpha)[0])
        improvement = lambda y: eps2 - np.minimum(  # noqa: E731
            np.minimum((y - a1) ** 2, (y - a2) ** 2), eps2
        )
    elif kind == "percentile":
        g = spec.g if spec.g is not None else 2
        nu = mean + sd * float(rng.uniform(-2.5, 2.5))
        alpha = float(rng.uniform(0.5, 3.0))
        epsg = (alpha * sd) ** g
        config.update(nu_hat=nu, alpha=alpha, g=g)
        closed = float(ei_percentile_values(one(mean), one(sd), nu, alpha, g)[0])
        improvement = lambda y: epsg - np.minimum((y - nu) ** g, epsg)  # noqa: E731
    elif kind == "noisy_quantile":
        lam = spec.lam
        q_min = mean - lam * sd + sd * float(rng.uniform(-2.5, 2.5))
        config.update(q_min=q_min, **{"lambda": lam})
        closed = float(ei_noisy_quantile_values(one(mean), one(sd), q_min, lam)[0])
        # s(x) treated as fixed: the unobservable quantile is y - lam*sd.
        improvement = lambda y: np.maximum(q_min - (y - lam * sd), 0.0)  # noqa: E731
    else:
        raise ConfigError(f"criterion kind {kind!r} has no Monte Carlo improvement form")
    return PredictiveDistribution(mean, sd), config, closed, improvement


def _constrained_trial(spec: CriterionSpec, rng: np.random.Generator, n_samples: int, seed):
    from .criteria import ei_constrained_values

    mean = float(rng.uniform(-3.0, 3.0))
    sd = float(rng.uniform(0.05, 2.0))
    y_min = mean + sd * float(rng.uniform(-2.5, 2.5))
    c_mean = float(rng.uniform(-2.0, 2.0))
    c_sd = float(rng.uniform(0.1, 1.5))
    lo, hi = spec.constraint_bounds
    config = {
        "mean": mean,
        "sd": sd,
        "y_min": y_min,
        "c_mean": c_mean,
        "c_sd": c_sd,
        "constraint": [lo, hi],
    }
    closed = float(
        ei_constrained_values(
            np.array([mean]), np.array([sd]), y_min,
            np.array([c_mean]), np.array([c_sd]), (lo, hi),
        )[0]
    )
    draws_rng = np.random.default_rng(seed)
    y = mean + sd * draws_rng.standard_normal(n_samples)
    c = c_mean + c_sd * draws_rng.standard_normal(n_samples)
    vals = np.maximum(y_min - y, 0.0) * ((c > lo) & (c < hi))
    est = McEstimate(
        float(vals.mean()), float(vals.std(ddof=1) / np.sqrt(n_samples)), n_samples
    )
    return config, closed, est


def verify_criterion(
    spec: CriterionSpec, trials: int = 100, n_samples: int = 1_000_000, seed: int = 0
) -> VerificationReport:
    """Compare a criterion's closed form against fresh Monte Carlo on random configs.

    Each trial draws its own (prediction, parameter) configuration and an
    independent sample stream; the report carries every trial's z-score and
    passes when all |z| <= 4.
    """
    if spec.kind not in VERIFIABLE_KINDS:
        raise ConfigError(
            f"criterion {spec.kind!r} is not Monte Carlo verifiable "
            "(weighted EI is validated by its reduction identities)"
        )
    if trials < 1:
        raise ConfigError("trials must be >= 1")
    results = []
    for trial in range(trials):
        config_rng = np.random.default_rng([seed, trial, 977])
        mc_seed = [seed, trial]
        if spec.kind == "constrained_minimize":
            config, closed, est = _constrained_trial(spec, config_rng, n_samples, mc_seed)
        else:
            pred, config, closed, improvement = _trial_setup(spec.kind, spec, config_rng)
            est = mc_ei(pred, improvement, n_samples, mc_seed)
        results.append(
            TrialResult(config, closed, est.mean, est.stderr, _zscore(closed, est))
        )
    max_abs_z = max(abs(t.z) for t in results)
    return VerificationReport(
        kind=spec.kind,
        passed=bool(max_abs_z <= Z_LIMIT),
        max_abs_z=float(max_abs_z),
        n_samples=int(n_samples),
        trials=results,
    )
