"""Gaussian-process emulation: correlation model, profile likelihood, fitting, prediction, diagnostics.

The emulator treats the deterministic code output as a realization of a
stationary process with constant mean and power-exponential correlation.
Inputs are scaled to the unit box internally, so correlation parameters are
comparable across dimensions regardless of the original units.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve
from scipy.optimize import minimize

from .design import DUPLICATE_TOL, pairwise_min_distance, point_header
from .domain import Domain
from .errors import ConfigError, FactorizationError, FitError
from .transforms import IDENTITY, TRANSFORMATION_KINDS, Transformation

THETA_BOUNDS = (1e-6, 1e3)
P_BOUNDS = (1.0, 2.0)
#: Diagonal inflation ladder tried when the correlation matrix will not factorize.
NUGGET_LADDER = (1e-8, 1e-7, 1e-6, 1e-5, 1e-4)

_FAIL_PENALTY = 1e12
_SIGMA2_FLOOR = np.finfo(float).tiny


class DegenerateDataWarning(UserWarning):
    """Outputs are (numerically) constant; the fitted process variance is ~0."""


class ExtrapolationWarning(UserWarning):
    """Prediction requested outside the training domain."""


@dataclass(frozen=True, eq=False)
class Dataset:
    """Evaluated runs: inputs, raw outputs, and the transformed outputs actually modeled."""

    x: np.ndarray
    z_raw: np.ndarray
    domain: Domain
    transformation: Transformation = IDENTITY
    y: np.ndarray = field(init=False)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.domain == other.domain
            and self.transformation == other.transformation
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.z_raw, other.z_raw)
        )

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        z = np.asarray(self.z_raw, dtype=float).ravel()
        if x.ndim != 2 or x.shape[0] != z.size or x.shape[0] < 1:
            raise ConfigError("dataset needs matching nonempty x (n,d) and z (n,)")
        if x.shape[1] != self.domain.dims:
            raise ConfigError("dataset dimension does not match the domain")
        if not self.domain.contains(x):
            raise ConfigError("dataset has inputs outside the domain")
        if x.shape[0] >= 2 and pairwise_min_distance(x, self.domain) <= DUPLICATE_TOL:
            raise ConfigError("dataset has duplicate input rows")
        y = self.transformation.forward(z)
        for arr in (x, z, y):
            arr.flags.writeable = False
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "z_raw", z)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def dims(self) -> int:
        return self.x.shape[1]

    def append(self, x_new, z_new: float) -> "Dataset":
        """New dataset with one extra evaluated run."""
        x_new = np.asarray(x_new, dtype=float).reshape(1, -1)
        return Dataset(
            np.vstack([self.x, x_new]),
            np.append(self.z_raw, float(z_new)),
            self.domain,
            self.transformation,
        )

    def with_transformation(self, kind: str) -> "Dataset":
        return Dataset(self.x, self.z_raw, self.domain, Transformation(kind))


@dataclass(frozen=True, eq=False)
class CorrelationParams:
    """Power-exponential correlation parameters, one (theta, p) pair per dimension."""

    theta: np.ndarray
    p: np.ndarray

    def __eq__(self, other):
        if not isinstance(other, CorrelationParams):
            return NotImplemented
        return np.array_equal(self.theta, other.theta) and np.array_equal(self.p, other.p)

    def __hash__(self):
        return hash((self.theta.tobytes(), self.p.tobytes()))

    def __post_init__(self):
        theta = np.atleast_1d(np.asarray(self.theta, dtype=float))
        p = np.atleast_1d(np.asarray(self.p, dtype=float))
        if theta.shape != p.shape or theta.ndim != 1:
            raise ConfigError("theta and p must be equal-length vectors")
        if np.any(theta < 0):
            raise ConfigError("theta must be >= 0")
        if np.any(p < 1.0) or np.any(p > 2.0):
            raise ConfigError("p must lie in [1, 2]")
        theta.flags.writeable = False
        p.flags.writeable = False
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "p", p)

    @property
    def dims(self) -> int:
        return self.theta.size


@dataclass(frozen=True)
class PredictiveDistribution:
    """Gaussian predictive law N(mean, sd^2) at one input."""

    mean: float
    sd: float

    def __post_init__(self):
        if not np.isfinite(self.mean) or not np.isfinite(self.sd) or self.sd < 0:
            raise ConfigError("predictive distribution needs finite mean and sd >= 0")


@dataclass(frozen=True)
class Diagnostics:
    """Leave-one-out cross-validation summaries."""

    loo_means: np.ndarray
    loo_sds: np.ndarray
    standardized_residuals: np.ndarray

    @property
    def max_abs_residual(self) -> float:
        return float(np.max(np.abs(self.standardized_residuals)))

    @property
    def rms_residual(self) -> float:
        return float(np.sqrt(np.mean(self.standardized_residuals**2)))


def correlation(x, x2, params: CorrelationParams) -> float:
    """Power-exponential correlation exp(-sum_j theta_j |x_j - x2_j|^{p_j})."""
    a = np.atleast_1d(np.asarray(x, dtype=float))
    b = np.atleast_1d(np.asarray(x2, dtype=float))
    if a.shape != b.shape or a.ndim != 1 or a.size != params.dims:
        raise ConfigError("correlation inputs must be d-vectors matching the parameters")
    return float(np.exp(-np.sum(params.theta * np.abs(a - b) ** params.p)))


def _abs_diffs(unit_x: np.ndarray) -> np.ndarray:
    """Pairwise |u_i - u_k| per dimension, shape (n, n, d)."""
    return np.abs(unit_x[:, None, :] - unit_x[None, :, :])


def _corr_matrix_from_diffs(diffs: np.ndarray, params: CorrelationParams) -> np.ndarray:
    return np.exp(-np.einsum("ijk,k->ij", np.power(diffs, params.p), params.theta))


def _cross_corr(unit_train: np.ndarray, unit_new: np.ndarray, params: CorrelationParams) -> np.ndarray:
    """Correlations between new points (rows) and training points (columns)."""
    diffs = np.abs(unit_new[:, None, :] - unit_train[None, :, :])
    return np.exp(-np.einsum("ijk,k->ij", np.power(diffs, params.p), params.theta))


def _profile_from_matrix(k_matrix: np.ndarray, y: np.ndarray):
    """Concentrated-likelihood pieces for a fixed correlation matrix."""
    n = y.size
    try:
        chol = cho_factor(k_matrix, lower=True)
    except LinAlgError as exc:
        raise FactorizationError(
            "correlation matrix is not positive definite; try a larger nugget"
        ) from exc
    kinv_y = cho_solve(chol, y)
    ones = np.ones(n)
    kinv_one = cho_solve(chol, ones)
    one_kinv_one = float(ones @ kinv_one)
    mu = float(ones @ kinv_y) / one_kinv_one
    resid = y - mu
    sigma2 = float(resid @ cho_solve(chol, resid)) / n
    logdet = 2.0 * float(np.sum(np.log(np.diag(chol[0]))))
    sigma2_safe = max(sigma2, _SIGMA2_FLOOR)
    loglik = -0.5 * (n * np.log(2.0 * np.pi) + n * np.log(sigma2_safe) + logdet + n)
    return chol, kinv_one, one_kinv_one, mu, sigma2, float(loglik)


def profile_loglik(dataset: Dataset, params: CorrelationParams, nugget: float = 0.0):
    """Log-likelihood concentrated over the mean and variance.

    Returns ``(loglik, mu_hat, sigma2_hat)`` where mu_hat and sigma2_hat are
    the concentrating estimates for the given correlation parameters.
    """
    if dataset.n < 2:
        raise ConfigError("profile likelihood needs at least two runs")
    if params.dims != dataset.dims:
        raise ConfigError("parameter dimension does not match the dataset")
    if nugget < 0:
        raise ConfigError("nugget must be >= 0")
    unit = dataset.domain.scale01(dataset.x)
    k = _corr_matrix_from_diffs(_abs_diffs(unit), params)
    k[np.diag_indices_from(k)] += nugget
    _, _, _, mu, sigma2, loglik = _profile_from_matrix(k, dataset.y)
    return loglik, mu, sigma2


@dataclass
class GpModel:
    """Fitted emulator with cached factorization for fast repeated prediction."""

    dataset: Dataset
    params: CorrelationParams
    mu: float
    sigma2: float
    nugget: float
    loglik: float
    inference: str = "plugin_mle"
    _unit_x: np.ndarray = field(repr=False, default=None)
    _chol: tuple = field(repr=False, default=None)
    _alpha: np.ndarray = field(repr=False, default=None)
    _kinv_one: np.ndarray = field(repr=False, default=None)
    _one_kinv_one: float = field(repr=False, default=0.0)

    @property
    def sd(self) -> float:
        return float(np.sqrt(self.sigma2))


def build_model(dataset: Dataset, params: CorrelationParams, nugget: float = 0.0) -> GpModel:
    """Assemble a model at fixed correlation parameters (mean and variance profiled out)."""
    if params.dims != dataset.dims:
        raise ConfigError("parameter dimension does not match the dataset")
    if nugget < 0:
        raise ConfigError("nugget must be >= 0")
    unit = dataset.domain.scale01(dataset.x)
    if dataset.n == 1:
        # Degenerate but valid: the profile mean is the single observation.
        k = np.array([[1.0 + nugget]])
        chol = cho_factor(k, lower=True)
        mu = float(dataset.y[0])
        sigma2 = 0.0
        kinv_one = cho_solve(chol, np.ones(1))
        one_kinv_one = float(kinv_one[0])
        loglik = float("nan")
    else:
        k = _corr_matrix_from_diffs(_abs_diffs(unit), params)
        k[np.diag_indices_from(k)] += nugget
        chol, kinv_one, one_kinv_one, mu, sigma2, loglik = _profile_from_matrix(
            k, dataset.y
        )
    alpha = cho_solve(chol, dataset.y - mu)
    return GpModel(
        dataset=dataset,
        params=params,
        mu=mu,
        sigma2=max(sigma2, _SIGMA2_FLOOR),
        nugget=float(nugget),
        loglik=loglik,
        _unit_x=unit,
        _chol=chol,
        _alpha=alpha,
        _kinv_one=kinv_one,
        _one_kinv_one=one_kinv_one,
    )


@dataclass(frozen=True)
class FitConfig:
    """Settings for maximum-likelihood fitting.

    ``n_starts`` defaults to 10 per input dimension. ``nugget=None`` uses the
    smallest value on the escalation ladder that factorizes; an explicit value
    (including 0.0) is used as-is and never escalated.
    """

    seed: int = 0
    n_starts: int | None = None
    nugget: float | None = None
    warm_start: CorrelationParams | None = None
    maxiter: int = 100


def fit(dataset: Dataset, config: FitConfig = FitConfig()) -> GpModel:
    """Fit the emulator by multistart local maximization of the profile likelihood.

    Deterministic given ``config.seed``: starting points come from a seeded
    generator, every start runs bounded L-BFGS-B on (log10 theta, p), and ties
    keep the earliest start.
    """
    n, d = dataset.n, dataset.dims
    if n < 2:
        raise ConfigError("fitting needs at least two runs")
    if n < d + 2:
        warnings.warn(
            f"only {n} runs for {d} dimensions; n >= d + 2 is recommended",
            UserWarning,
            stacklevel=2,
        )
    if np.ptp(dataset.y) == 0.0:
        warnings.warn(
            "outputs are constant; fitted process variance is degenerate",
            DegenerateDataWarning,
            stacklevel=2,
        )

    unit = dataset.domain.scale01(dataset.x)
    diffs = _abs_diffs(unit)
    y = dataset.y
    n_starts = config.n_starts if config.n_starts is not None else 10 * d
    if n_starts < 1:
        raise ConfigError("n_starts must be >= 1")

    rng = np.random.default_rng(config.seed)
    starts = [np.concatenate([np.zeros(d), np.full(d, 2.0)])]
    if config.warm_start is not None:
        theta = np.clip(config.warm_start.theta, THETA_BOUNDS[0], THETA_BOUNDS[1])
        starts.append(np.concatenate([np.log10(theta), config.warm_start.p]))
    while len(starts) < n_starts + (config.warm_start is not None):
        starts.append(
            np.concatenate([rng.uniform(-2.0, 2.0, d), rng.uniform(1.0, 2.0, d)])
        )
    bounds = [(np.log10(THETA_BOUNDS[0]), np.log10(THETA_BOUNDS[1]))] * d + [
        P_BOUNDS
    ] * d

    def objective(v: np.ndarray, nugget: float) -> float:
        params = CorrelationParams(10.0 ** v[:d], np.clip(v[d:], *P_BOUNDS))
        k = _corr_matrix_from_diffs(diffs, params)
        k[np.diag_indices_from(k)] += nugget
        try:
            return -_profile_from_matrix(k, y)[5]
        except FactorizationError:
            return _FAIL_PENALTY

    ladder = (config.nugget,) if config.nugget is not None else NUGGET_LADDER
    for nugget in ladder:
        best_v, best_fun = None, np.inf
        for v0 in starts:
            res = minimize(
                objective,
                v0,
                args=(nugget,),
                method="L-BFGS-B",
                bounds=bounds,
                options={"maxiter": config.maxiter},
            )
            if res.fun < best_fun and res.fun < _FAIL_PENALTY:
                best_v, best_fun = res.x, res.fun
        if best_v is None:
            continue
        params = CorrelationParams(10.0 ** best_v[:d], np.clip(best_v[d:], *P_BOUNDS))
        try:
            return build_model(dataset, params, nugget)
        except FactorizationError:
            continue
    raise FitError("every start failed to factorize; data may contain near-duplicates")


def predict_batch(model: GpModel, points) -> tuple[np.ndarray, np.ndarray]:
    """Predictive means and standard deviations at many inputs at once."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, model.dataset.dims) if model.dataset.dims > 1 else pts.reshape(-1, 1)
    if pts.shape[1] != model.dataset.dims:
        raise ConfigError("prediction points do not match the model dimension")
    if not model.dataset.domain.contains(pts):
        warnings.warn(
            "predicting outside the training domain", ExtrapolationWarning, stacklevel=2
        )
    unit_new = model.dataset.domain.scale01(pts)
    r = _cross_corr(model._unit_x, unit_new, model.params)
    means = model.mu + r @ model._alpha
    kinv_r = cho_solve(model._chol, r.T)
    r_kinv_r = np.einsum("ij,ji->i", r, kinv_r)
    h = 1.0 - r @ model._kinv_one
    s2 = model.sigma2 * (1.0 - r_kinv_r + h * h / model._one_kinv_one)
    sds = np.sqrt(np.maximum(s2, 0.0))
    return means, sds


def predict(model: GpModel, x) -> PredictiveDistribution:
    """Gaussian predictive distribution at a single input.

    The variance includes the adjustment for the estimated constant mean, so
    it is the mean squared error of the best linear unbiased predictor; it
    vanishes at training inputs when the nugget is zero.
    """
    means, sds = predict_batch(model, np.atleast_2d(np.asarray(x, dtype=float)))
    return PredictiveDistribution(float(means[0]), float(sds[0]))


def standardized_residual(observed: float, predicted: float, sd: float) -> float:
    """(observed - predicted) / sd, the usual emulator diagnostic."""
    if sd <= 0:
        return 0.0 if observed == predicted else float(np.sign(observed - predicted) * np.inf)
    return (observed - predicted) / sd


def loo_cv(model: GpModel) -> Diagnostics:
    """Leave-one-out diagnostics with all fitted parameters held fixed.

    Uses the closed-form identities for dropping one row from a factorized
    system, so no refitting is performed: each held-out prediction is the
    fixed-mean conditional of the remaining runs.
    """
    n = model.dataset.n
    if n < 3:
        raise ConfigError("leave-one-out diagnostics need at least three runs")
    kinv = cho_solve(model._chol, np.eye(n))
    diag = np.diag(kinv)
    resid = model.dataset.y - model.mu
    loo_means = model.dataset.y - (kinv @ resid) / diag
    loo_vars = model.sigma2 * np.maximum(1.0 / diag - model.nugget, 0.0)
    loo_sds = np.sqrt(loo_vars)
    with np.errstate(divide="ignore", invalid="ignore"):
        std = np.where(
            loo_sds > 0,
            (model.dataset.y - loo_means) / np.where(loo_sds > 0, loo_sds, 1.0),
            0.0,
        )
    return Diagnostics(loo_means, loo_sds, std)


def choose_transformation(datasets, config: FitConfig = FitConfig()) -> Transformation:
    """Pick the output transformation with the best cross-validation diagnostics.

    Candidates must share inputs and raw outputs. The winner minimizes the
    largest absolute standardized leave-one-out residual; ties go to the
    candidate whose residual RMS is closest to 1, then to the fixed order
    identity, sqrt, log1p.
    """
    datasets = list(datasets)
    if not datasets:
        raise ConfigError("no candidate transformations supplied")
    base = datasets[0]
    for ds in datasets[1:]:
        if not np.array_equal(ds.x, base.x) or not np.array_equal(ds.z_raw, base.z_raw):
            raise ConfigError("candidate datasets must share x and raw outputs")
    scored = []
    for idx, ds in enumerate(datasets):
        diag = loo_cv(fit(ds, config))
        scored.append(
            (
                diag.max_abs_residual,
                abs(diag.rms_residual - 1.0),
                ds.transformation.preference_index,
                idx,
            )
        )
    return datasets[min(scored)[3]].transformation


def candidate_datasets(x, z_raw, domain: Domain, kinds=TRANSFORMATION_KINDS) -> list[Dataset]:
    """Datasets for every transformation whose domain admits the raw outputs."""
    out = []
    for kind in kinds:
        t = Transformation(kind)
        try:
            t.validate_raw(z_raw)
        except Exception:
            continue
        out.append(Dataset(x, z_raw, domain, t))
    if not out:
        raise ConfigError("no transformation admits these outputs")
    return out


def model_to_payload(model: GpModel) -> dict:
    """JSON-ready representation of a fitted model (training data included)."""
    return {
        "theta": [float(v) for v in model.params.theta],
        "p": [float(v) for v in model.params.p],
        "mu": float(model.mu),
        "sigma2": float(model.sigma2),
        "nugget": float(model.nugget),
        "loglik": None if np.isnan(model.loglik) else float(model.loglik),
        "transformation": model.dataset.transformation.kind,
        "inference": model.inference,
        "bounds": model.dataset.domain.bounds(),
        "x": [[float(v) for v in row] for row in model.dataset.x],
        "z": [float(v) for v in model.dataset.z_raw],
    }


def model_from_payload(payload: dict) -> GpModel:
    """Rebuild a model from :func:`model_to_payload` output.

    The factorization is recomputed from the stored inputs and parameters, so
    predictions from the reloaded model are bit-identical to the original.
    """
    try:
        domain = Domain.from_bounds(payload["bounds"])
        dataset = Dataset(
            np.asarray(payload["x"], dtype=float),
            np.asarray(payload["z"], dtype=float),
            domain,
            Transformation(payload.get("transformation", "identity")),
        )
        params = CorrelationParams(
            np.asarray(payload["theta"], dtype=float),
            np.asarray(payload["p"], dtype=float),
        )
        nugget = float(payload.get("nugget", 0.0))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed model payload: {exc}") from exc
    return build_model(dataset, params, nugget)


def write_dataset_csv(x, z, path) -> None:
    """Write evaluated runs as CSV with header x1,...,xd,z."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    z = np.asarray(z, dtype=float).ravel()
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(point_header(x.shape[1]) + ["z"])
        for row, out in zip(x, z):
            writer.writerow([repr(float(v)) for v in row] + [repr(float(out))])


def read_dataset_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Read runs written by :func:`write_dataset_csv`; returns (x, z)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) for v in row] for row in reader if row]
    d = len(header) - 1
    if d < 1 or header != point_header(d) + ["z"]:
        raise ConfigError(f"unexpected dataset header {header!r}")
    data = np.asarray(rows, dtype=float)
    return data[:, :d], data[:, d]
