"""Improvement functions and their expectations under a Gaussian predictive law.

Every criterion here is the expectation of a nonnegative improvement
function, so all values are >= 0; degenerate predictions (sd = 0) take the
deterministic limit so training points can be scored without special-casing
by callers. Each closed form is verified against the Monte Carlo estimator in
:mod:`seqdesign.oracle`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .emulator import GpModel, PredictiveDistribution, predict_batch
from .errors import ConfigError

CRITERION_KINDS = (
    "minimize",
    "minimize_exponentiated",
    "minimize_weighted",
    "contour",
    "multi_contour",
    "percentile",
    "noisy_quantile",
    "constrained_minimize",
)

_SQRT_2PI = np.sqrt(2.0 * np.pi)
#: Standardized range beyond which the normal density underflows to zero.
_TAIL = 38.0
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(256)


def _phi(t):
    return np.exp(-0.5 * t * t) / _SQRT_2PI


def _as_arrays(means, sds):
    means = np.atleast_1d(np.asarray(means, dtype=float))
    sds = np.atleast_1d(np.asarray(sds, dtype=float))
    if means.shape != sds.shape:
        raise ConfigError("means and sds must have matching shapes")
    if np.any(sds < 0):
        raise ConfigError("predictive sd must be >= 0")
    return means, sds


# ---------------------------------------------------------------------------
# improvement functions (pointwise, before taking expectations)


def improvement_min(y: float, y_min: float) -> float:
    """Gain over the current minimum if a run produced output y."""
    return max(y_min - y, 0.0)


def improvement_contour(y: float, pred_sd: float, a: float, alpha: float) -> float:
    """Contour-refinement gain: positive only within alpha*sd of the level a."""
    if alpha <= 0:
        raise ConfigError("alpha must be > 0")
    if pred_sd < 0:
        raise ConfigError("pred_sd must be >= 0")
    eps2 = (alpha * pred_sd) ** 2
    return eps2 - min((y - a) ** 2, eps2)


# ---------------------------------------------------------------------------
# closed-form expectations, vectorized over candidates


def ei_min_values(means, sds, y_min: float) -> np.ndarray:
    means, sds = _as_arrays(means, sds)
    out = np.maximum(y_min - means, 0.0)
    pos = sds > 0
    if np.any(pos):
        m, s = means[pos], sds[pos]
        u = (y_min - m) / s
        explore = s * _phi(u)
        exploit = (y_min - m) * ndtr(u)
        out[pos] = np.maximum(explore + exploit, 0.0)
    return out


def ei_min_weighted_values(means, sds, y_min: float, w: float) -> np.ndarray:
    if not 0.0 <= w <= 1.0:
        raise ConfigError("weight w must lie in [0, 1]")
    means, sds = _as_arrays(means, sds)
    out = w * np.maximum(y_min - means, 0.0)
    pos = sds > 0
    if np.any(pos):
        m, s = means[pos], sds[pos]
        u = (y_min - m) / s
        explore = s * _phi(u)
        exploit = (y_min - m) * ndtr(u)
        out[pos] = np.maximum(w * exploit + (1.0 - w) * explore, 0.0)
    return out


def ei_min_exponentiated_values(means, sds, y_min: float, g: int) -> np.ndarray:
    if int(g) != g or g < 1:
        raise ConfigError("exponent g must be an integer >= 1")
    g = int(g)
    if g == 1:
        return ei_min_values(means, sds, y_min)
    means, sds = _as_arrays(means, sds)
    out = np.maximum(y_min - means, 0.0) ** g
    pos = sds > 0
    if not np.any(pos):
        return out
    m, s = means[pos], sds[pos]
    u = (y_min - m) / s
    if g == 2:
        val = s * s * ((u * u + 1.0) * ndtr(u) + u * _phi(u))
    else:
        # E[(y_min - y)^g 1{y < y_min}] = s^g * int_{-inf}^{u} (u - t)^g phi(t) dt,
        # integrated numerically over the region where phi is representable;
        # rows with an empty region stay exactly zero
        hi = np.minimum(u, _TAIL)
        lo = np.full_like(u, -_TAIL)
        val = np.zeros_like(u)
        live = hi > lo
        if np.any(live):
            half = 0.5 * (hi[live] - lo[live])
            mid = lo[live] + half
            t = mid[:, None] + half[:, None] * _GL_NODES[None, :]
            integrand = (u[live, None] - t) ** g * _phi(t)
            val[live] = s[live] ** g * half * (integrand @ _GL_WEIGHTS)
    out[pos] = np.maximum(val, 0.0)
    return out


def ei_contour_values(means, sds, a: float, alpha: float = 1.96) -> np.ndarray:
    if alpha <= 0:
        raise ConfigError("alpha must be > 0")
    means, sds = _as_arrays(means, sds)
    out = np.zeros_like(means)
    pos = sds > 0
    if np.any(pos):
        m, s = means[pos], sds[pos]
        eps = alpha * s
        u1 = (a - m - eps) / s
        u2 = (a - m + eps) / s
        dphi = ndtr(u2) - ndtr(u1)
        t1 = (eps * eps - (m - a) ** 2) * dphi
        t2 = s * s * ((u2 * _phi(u2) - u1 * _phi(u1)) - dphi)
        t3 = 2.0 * (m - a) * s * (_phi(u2) - _phi(u1))
        out[pos] = np.maximum(t1 + t2 + t3, 0.0)
    return out


def _validate_levels(levels) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(levels, dtype=float))
    if arr.size < 1:
        raise ConfigError("need at least one contour level")
    if arr.size > 1 and np.any(np.diff(arr) <= 0):
        raise ConfigError("contour levels must be sorted strictly increasing")
    return arr


def ei_multi_contour_values(means, sds, levels, alpha: float = 1.96) -> np.ndarray:
    """EI for refining several contours at once.

    The improvement is driven by the nearest level, so the expectation splits
    at the midpoints between consecutive levels and each piece integrates the
    single-level gain over its own interval in closed form.
    """
    if alpha <= 0:
        raise ConfigError("alpha must be > 0")
    arr = _validate_levels(levels)
    if arr.size == 1:
        return ei_contour_values(means, sds, float(arr[0]), alpha)
    means, sds = _as_arrays(means, sds)
    out = np.zeros_like(means)
    pos = sds > 0
    if not np.any(pos):
        return out
    m, s = means[pos], sds[pos]
    eps = alpha * s
    mids = 0.5 * (arr[:-1] + arr[1:])
    total = np.zeros_like(m)
    for i, a in enumerate(arr):
        lo = a - eps if i == 0 else np.maximum(mids[i - 1], a - eps)
        hi = a + eps if i == arr.size - 1 else np.minimum(mids[i], a + eps)
        live = hi > lo
        lo_s = np.where(live, lo, m)
        hi_s = np.where(live, hi, m)
        l = (lo_s - m) / s
        v = (hi_s - m) / s
        b = (a - m) / s
        prob = ndtr(v) - ndtr(l)
        m1 = _phi(l) - _phi(v)
        m2 = prob + l * _phi(l) - v * _phi(v)
        seg = eps * eps * prob - s * s * (m2 - 2.0 * b * m1 + b * b * prob)
        total += np.where(live, seg, 0.0)
    out[pos] = np.maximum(total, 0.0)
    return out


def ei_percentile_values(means, sds, nu_hat: float, alpha: float = 1.96, g: int = 2) -> np.ndarray:
    """EI for pinning down the contour at an estimated output percentile.

    Odd exponents are rejected: the improvement is only guaranteed
    nonnegative for even g, and g = 2 recovers the plain contour criterion at
    the current percentile estimate.
    """
    if int(g) != g or g < 2 or g % 2 != 0:
        raise ConfigError("percentile improvement exponent g must be a positive even integer")
    g = int(g)
    if g == 2:
        return ei_contour_values(means, sds, float(nu_hat), alpha)
    if alpha <= 0:
        raise ConfigError("alpha must be > 0")
    means, sds = _as_arrays(means, sds)
    out = np.zeros_like(means)
    pos = sds > 0
    if not np.any(pos):
        return out
    m, s = means[pos], sds[pos]
    eps = alpha * s
    # E[eps^g - min(|y - nu|^g, eps^g)] integrates (eps^g - (y - nu)^g) over
    # |y - nu| < eps, numerically in standardized coordinates; rows whose
    # band misses the representable range stay exactly zero
    lo = np.maximum((nu_hat - eps - m) / s, -_TAIL)
    hi = np.minimum((nu_hat + eps - m) / s, _TAIL)
    val = np.zeros_like(m)
    live = hi > lo
    if np.any(live):
        half = 0.5 * (hi[live] - lo[live])
        mid = lo[live] + half
        t = mid[:, None] + half[:, None] * _GL_NODES[None, :]
        dev = m[live, None] + s[live, None] * t - nu_hat
        integrand = (eps[live, None] ** g - dev**g) * _phi(t)
        val[live] = half * (integrand @ _GL_WEIGHTS)
    out[pos] = np.maximum(val, 0.0)
    return out


def ei_noisy_quantile_values(means, sds, q_min: float, lam: float = 1.96) -> np.ndarray:
    if lam <= 0:
        raise ConfigError("quantile multiplier must be > 0")
    means, sds = _as_arrays(means, sds)
    out = np.maximum(q_min - means, 0.0)
    pos = sds > 0
    if np.any(pos):
        m, s = means[pos], sds[pos]
        gap = q_min - m + lam * s
        u = gap / s
        out[pos] = np.maximum(s * _phi(u) + gap * ndtr(u), 0.0)
    return out


def feasibility_probability_values(c_means, c_sds, bounds) -> np.ndarray:
    lo, hi = float(bounds[0]), float(bounds[1])
    if lo >= hi:
        raise ConfigError("constraint interval must satisfy a < b")
    c_means, c_sds = _as_arrays(c_means, c_sds)
    out = np.where((c_means > lo) & (c_means < hi), 1.0, 0.0)
    pos = c_sds > 0
    if np.any(pos):
        m, s = c_means[pos], c_sds[pos]
        out[pos] = ndtr((hi - m) / s) - ndtr((lo - m) / s)
    return out


def ei_constrained_values(means, sds, y_min: float, c_means, c_sds, bounds) -> np.ndarray:
    return ei_min_values(means, sds, y_min) * feasibility_probability_values(
        c_means, c_sds, bounds
    )


# ---------------------------------------------------------------------------
# single-point wrappers


def _scalar(fn, pred: PredictiveDistribution, *args, **kwargs) -> float:
    return float(fn(np.array([pred.mean]), np.array([pred.sd]), *args, **kwargs)[0])


def ei_min(pred: PredictiveDistribution, y_min: float) -> float:
    """Expected gain over y_min: s*phi(u) + (y_min - yhat)*Phi(u)."""
    return _scalar(ei_min_values, pred, y_min)


def ei_min_exponentiated(pred: PredictiveDistribution, y_min: float, g: int) -> float:
    """Expectation of the g-th power of the minimization improvement."""
    return _scalar(ei_min_exponentiated_values, pred, y_min, g)


def ei_min_weighted(pred: PredictiveDistribution, y_min: float, w: float) -> float:
    """Weighted EI: w on the exploitation term, 1-w on the exploration term."""
    return _scalar(ei_min_weighted_values, pred, y_min, w)


def ei_contour(pred: PredictiveDistribution, a: float, alpha: float = 1.96) -> float:
    """Closed-form expected contour improvement at level a."""
    return _scalar(ei_contour_values, pred, a, alpha)


def ei_multi_contour(pred: PredictiveDistribution, levels, alpha: float = 1.96) -> float:
    return _scalar(ei_multi_contour_values, pred, levels, alpha)


def ei_percentile(
    pred: PredictiveDistribution, nu_hat: float, alpha: float = 1.96, g: int = 2
) -> float:
    return _scalar(ei_percentile_values, pred, nu_hat, alpha, g)


def ei_noisy_quantile(pred: PredictiveDistribution, q_min: float, lam: float = 1.96) -> float:
    """EI for minimizing a lower predictive quantile under a noisy simulator."""
    return _scalar(ei_noisy_quantile_values, pred, q_min, lam)


def feasibility_probability(pred_c: PredictiveDistribution, bounds) -> float:
    """Probability the constraint output lands inside [a, b]."""
    return _scalar(feasibility_probability_values, pred_c, bounds)


def ei_constrained(
    pred_y: PredictiveDistribution, y_min: float, pred_c: PredictiveDistribution, bounds
) -> float:
    """Minimization EI damped by the probability of constraint feasibility."""
    return ei_min(pred_y, y_min) * feasibility_probability(pred_c, bounds)


def estimate_percentile(
    model: GpModel, p_target: float, n_mc: int, seed
) -> float:
    """Monte Carlo estimate of the p-th percentile of the predicted output.

    Draws inputs uniformly over the model's domain and takes the empirical
    quantile of the predictive means; the estimate moves as the model is
    refit, which is intentional.
    """
    if not 0.0 < p_target < 1.0:
        raise ConfigError("p_target must lie strictly inside (0, 1)")
    if n_mc < 1:
        raise ConfigError("n_mc must be >= 1")
    rng = np.random.default_rng(seed)
    domain = model.dataset.domain
    draws = domain.lower + rng.random((int(n_mc), domain.dims)) * domain.widths
    means, _ = predict_batch(model, draws)
    return float(np.quantile(means, p_target))


# ---------------------------------------------------------------------------
# criterion specification


_ALLOWED_KEYS = {
    "minimize": set(),
    "minimize_exponentiated": {"g"},
    "minimize_weighted": {"w"},
    "contour": {"a", "alpha"},
    "multi_contour": {"levels", "alpha"},
    "percentile": {"p_target", "alpha", "g"},
    "noisy_quantile": {"lambda"},
    "constrained_minimize": {"constraint"},
}


@dataclass(frozen=True)
class CriterionSpec:
    """Which improvement function is in force, with its parameters."""

    kind: str
    a: float | None = None
    levels: tuple[float, ...] | None = None
    alpha: float = 1.96
    g: int | None = None
    w: float | None = None
    lam: float = 1.96
    p_target: float | None = None
    constraint_bounds: tuple[float, float] | None = None

    def __post_init__(self):
        if self.kind not in CRITERION_KINDS:
            raise ConfigError(f"unknown criterion kind {self.kind!r}")
        if self.alpha <= 0:
            raise ConfigError("alpha must be > 0")
        if self.lam <= 0:
            raise ConfigError("lambda must be > 0")
        kind = self.kind
        if kind == "minimize_exponentiated":
            g = self.g if self.g is not None else 1
            if int(g) != g or g < 1:
                raise ConfigError("g must be an integer >= 1")
            object.__setattr__(self, "g", int(g))
        if kind == "minimize_weighted":
            if self.w is None or not 0.0 <= self.w <= 1.0:
                raise ConfigError("minimize_weighted requires w in [0, 1]")
        if kind == "contour" and self.a is None:
            raise ConfigError("contour criterion requires a level a")
        if kind == "multi_contour":
            if self.levels is None:
                raise ConfigError("multi_contour requires levels")
            arr = _validate_levels(self.levels)
            object.__setattr__(self, "levels", tuple(float(v) for v in arr))
        if kind == "percentile":
            if self.p_target is None or not 0.0 < self.p_target < 1.0:
                raise ConfigError("percentile criterion requires p_target in (0, 1)")
            g = self.g if self.g is not None else 2
            if int(g) != g or g < 2 or g % 2 != 0:
                raise ConfigError("percentile exponent g must be a positive even integer")
            object.__setattr__(self, "g", int(g))
        if kind == "constrained_minimize":
            if self.constraint_bounds is None:
                raise ConfigError("constrained_minimize requires constraint bounds")
            lo, hi = self.constraint_bounds
            if not lo < hi:
                raise ConfigError("constraint interval must satisfy a < b")
            object.__setattr__(self, "constraint_bounds", (float(lo), float(hi)))

    @property
    def incumbent_role(self) -> str | None:
        """What the incumbent means for this kind, or None if unused."""
        if self.kind in (
            "minimize",
            "minimize_exponentiated",
            "minimize_weighted",
            "constrained_minimize",
        ):
            return "y_min"
        if self.kind == "noisy_quantile":
            return "q_min"
        if self.kind == "percentile":
            return "nu_hat"
        return None

    def evaluate(self, means, sds, incumbent: float | None = None, constraint=None) -> np.ndarray:
        """EI of this criterion at many candidates at once."""
        role = self.incumbent_role
        if role is not None and incumbent is None:
            raise ConfigError(f"criterion {self.kind!r} needs an incumbent ({role})")
        if self.kind == "minimize":
            return ei_min_values(means, sds, incumbent)
        if self.kind == "minimize_exponentiated":
            return ei_min_exponentiated_values(means, sds, incumbent, self.g)
        if self.kind == "minimize_weighted":
            return ei_min_weighted_values(means, sds, incumbent, self.w)
        if self.kind == "contour":
            return ei_contour_values(means, sds, self.a, self.alpha)
        if self.kind == "multi_contour":
            return ei_multi_contour_values(means, sds, self.levels, self.alpha)
        if self.kind == "percentile":
            return ei_percentile_values(means, sds, incumbent, self.alpha, self.g)
        if self.kind == "noisy_quantile":
            return ei_noisy_quantile_values(means, sds, incumbent, self.lam)
        if constraint is None:
            raise ConfigError("constrained_minimize needs constraint predictions")
        c_means, c_sds = constraint
        return ei_constrained_values(
            means, sds, incumbent, c_means, c_sds, self.constraint_bounds
        )

    @classmethod
    def from_dict(cls, payload: dict) -> "CriterionSpec":
        """Parse the JSON run-config form, rejecting parameters foreign to the kind."""
        if not isinstance(payload, dict) or "kind" not in payload:
            raise ConfigError("criterion spec must be an object with a 'kind'")
        kind = payload["kind"]
        if kind not in CRITERION_KINDS:
            raise ConfigError(f"unknown criterion kind {kind!r}")
        extra = set(payload) - {"kind"} - _ALLOWED_KEYS[kind]
        if extra:
            raise ConfigError(
                f"criterion {kind!r} does not take parameters {sorted(extra)}"
            )
        kwargs: dict = {"kind": kind}
        if "a" in payload:
            kwargs["a"] = float(payload["a"])
        if "levels" in payload:
            kwargs["levels"] = tuple(float(v) for v in payload["levels"])
        if "alpha" in payload:
            kwargs["alpha"] = float(payload["alpha"])
        if "g" in payload:
            kwargs["g"] = payload["g"]
        if "w" in payload:
            kwargs["w"] = float(payload["w"])
        if "lambda" in payload:
            kwargs["lam"] = float(payload["lambda"])
        if "p_target" in payload:
            kwargs["p_target"] = float(payload["p_target"])
        if "constraint" in payload:
            c = payload["constraint"]
            if not isinstance(c, (list, tuple)) or len(c) != 2:
                raise ConfigError("constraint must be a [a, b] pair")
            kwargs["constraint_bounds"] = (float(c[0]), float(c[1]))
        return cls(**kwargs)

    def to_dict(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.kind == "contour":
            out.update(a=self.a, alpha=self.alpha)
        elif self.kind == "multi_contour":
            out.update(levels=list(self.levels), alpha=self.alpha)
        elif self.kind == "minimize_exponentiated":
            out.update(g=self.g)
        elif self.kind == "minimize_weighted":
            out.update(w=self.w)
        elif self.kind == "percentile":
            out.update(p_target=self.p_target, alpha=self.alpha, g=self.g)
        elif self.kind == "noisy_quantile":
            out["lambda"] = self.lam
        elif self.kind == "constrained_minimize":
            out["constraint"] = list(self.constraint_bounds)
        return out
