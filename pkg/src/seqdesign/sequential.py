"""The sequential loop: refit, maximize EI over candidates, evaluate, update, stop."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .criteria import CriterionSpec, estimate_percentile
from .design import (
    DUPLICATE_TOL,
    CandidateSet,
    Design,
    grid_candidates,
    initial_run_count,
    latin_hypercube,
    maximin_lhs,
)
from .domain import Domain
from .emulator import (
    Dataset,
    FitConfig,
    GpModel,
    build_model,
    fit,
    predict_batch,
)
from .errors import ConfigError, SeqDesignError
from .simulators import SimulatorSpec, build_simulator
from .transforms import Transformation

#: Proposals within this relative slack of the best EI count as tied.
TIE_RTOL = 1e-12

STOP_REASONS = ("ei_below_threshold", "budget_exhausted", "simulator_failure")


@dataclass(frozen=True)
class Proposal:
    """Argmax of the criterion over a candidate set, with the full surface kept."""

    x_new: np.ndarray
    ei_value: float
    index: int
    tie_broken: bool
    means: np.ndarray
    sds: np.ndarray
    ei: np.ndarray


@dataclass(frozen=True)
class StopRule:
    """Stop when the best EI drops below the threshold or the run budget is spent."""

    threshold: float | None
    budget: int

    def __post_init__(self):
        if self.threshold is not None and self.threshold < 0:
            raise ConfigError("stopping threshold must be >= 0")
        if self.budget < 0:
            raise ConfigError("budget must be >= 0")


@dataclass(frozen=True)
class StopDecision:
    stop: bool
    reason: str | None = None


def stop_check(ei_max: float, threshold: float, runs_used: int, budget: int) -> StopDecision:
    """EI rule first, then the budget rule."""
    if threshold < 0:
        raise ConfigError("threshold must be >= 0")
    if ei_max < threshold:
        return StopDecision(True, "ei_below_threshold")
    if runs_used >= budget:
        return StopDecision(True, "budget_exhausted")
    return StopDecision(False)


def propose(
    model: GpModel,
    spec: CriterionSpec,
    incumbent: float | None,
    candidates: CandidateSet,
    constraint_model: GpModel | None = None,
) -> Proposal:
    """Evaluate the criterion at every candidate and return the first argmax.

    Candidates whose EI is within a 1e-12 relative slack of the maximum are
    treated as tied and the lowest index wins, so proposals are deterministic.
    """
    means, sds = predict_batch(model, candidates.points)
    constraint = None
    if spec.kind == "constrained_minimize":
        if constraint_model is None:
            raise ConfigError("constrained criterion needs a constraint emulator")
        constraint = predict_batch(constraint_model, candidates.points)
    ei = spec.evaluate(means, sds, incumbent, constraint)
    ei_max = float(ei.max())
    tied = ei >= ei_max - TIE_RTOL * abs(ei_max)
    index = int(np.argmax(tied))
    return Proposal(
        x_new=candidates.points[index].copy(),
        ei_value=ei_max,
        index=index,
        tie_broken=bool(tied.sum() > 1),
        means=means,
        sds=sds,
        ei=ei,
    )


def update_incumbent(
    dataset: Dataset,
    spec: CriterionSpec,
    model: GpModel,
    seed=0,
    percentile_n_mc: int = 2048,
) -> float | None:
    """Best value to beat given the runs so far and the current model.

    Minimization kinds take the smallest observed output; the noisy-quantile
    kind takes the smallest predictive lower quantile over the evaluated
    sites; the percentile kind re-estimates its moving target. Contour kinds
    have no incumbent.
    """
    role = spec.incumbent_role
    if role is None:
        return None
    if role == "y_min":
        return float(np.min(dataset.y))
    if role == "q_min":
        means, sds = predict_batch(model, dataset.x)
        return float(np.min(means - spec.lam * sds))
    return estimate_percentile(model, spec.p_target, percentile_n_mc, seed)


@dataclass
class IterationRecord:
    x: np.ndarray
    z_raw: float
    y: float
    incumbent: float | None
    ei_max: float
    model_summary: dict
    surface: dict | None = None

    def to_dict(self) -> dict:
        return {
            "x": [float(v) for v in np.atleast_1d(self.x)],
            "z": float(self.z_raw),
            "y": float(self.y),
            "incumbent": None if self.incumbent is None else float(self.incumbent),
            "ei_max": float(self.ei_max),
            "model": self.model_summary,
        }


@dataclass
class RunHistory:
    """Complete record of one sequential experiment."""

    domain: Domain
    transformation: str
    criterion: dict
    seed: int
    initial_x: np.ndarray
    initial_z: np.ndarray
    iterations: list[IterationRecord]
    stop_reason: str
    best_x: list | None
    best_y: float | None
    best_z: float | None
    failure: str | None = None

    def to_dict(self) -> dict:
        return {
            "domain": {"bounds": self.domain.bounds()},
            "transformation": self.transformation,
            "criterion": self.criterion,
            "seed": self.seed,
            "initial": {
                "x": [[float(v) for v in row] for row in self.initial_x],
                "z": [float(v) for v in self.initial_z],
            },
            "iterations": [rec.to_dict() for rec in self.iterations],
            "runs_added": len(self.iterations),
            "stop_reason": self.stop_reason,
            "best": {"x": self.best_x, "y": self.best_y, "z": self.best_z},
            "failure": self.failure,
        }


def _model_summary(model: GpModel) -> dict:
    return {
        "mu": float(model.mu),
        "sigma2": float(model.sigma2),
        "nugget": float(model.nugget),
        "theta": [float(v) for v in model.params.theta],
        "p": [float(v) for v in model.params.p],
        "loglik": None if np.isnan(model.loglik) else float(model.loglik),
    }


def resolve_threshold(threshold: float | None, spec: CriterionSpec, initial: Dataset) -> float:
    """Default stopping threshold: a small fraction of the initial output spread.

    Contour-style criteria have no natural output scale for "small enough",
    so they must state a threshold explicitly.
    """
    if threshold is not None:
        return float(threshold)
    if spec.incumbent_role != "y_min":
        raise ConfigError(
            f"criterion {spec.kind!r} requires an explicit stopping threshold"
        )
    return 1e-3 * float(np.ptp(initial.y))


def _best_so_far(dataset: Dataset, spec: CriterionSpec, model: GpModel):
    role = spec.incumbent_role
    if role == "y_min":
        idx = int(np.argmin(dataset.y))
    elif role == "q_min":
        means, sds = predict_batch(model, dataset.x)
        idx = int(np.argmin(means - spec.lam * sds))
    else:
        return None, None, None
    return (
        [float(v) for v in dataset.x[idx]],
        float(dataset.y[idx]),
        float(dataset.z_raw[idx]),
    )


def run_loop(
    initial: Dataset,
    simulator,
    spec: CriterionSpec,
    candidates: CandidateSet,
    stop: StopRule,
    seed: int = 0,
    fit_config: FitConfig | None = None,
    constraint_simulator=None,
    record_surfaces: bool = False,
    percentile_n_mc: int = 2048,
    refit_every: int = 1,
) -> RunHistory:
    """Iterate refit -> propose -> evaluate -> update until a stop rule fires.

    The emulator is refit after every evaluation by default; ``refit_every=k``
    re-optimizes the correlation parameters only every k-th run and rebuilds
    the factorization at fixed parameters otherwise. Fully deterministic given
    the seed: fit starts, percentile draws, and any simulator noise all derive
    from it.

    A proposal that coincides with an already-evaluated site means the
    criterion is exhausted on this candidate set (its EI is zero up to the
    numerical nugget), so the loop stops as if the EI rule fired rather than
    re-running the simulator at a duplicate input.
    """
    if spec.kind == "constrained_minimize":
        raise ConfigError(
            "the sequential loop does not orchestrate constrained runs; "
            "use propose() with an explicit constraint emulator"
        )
    if refit_every < 1:
        raise ConfigError("refit_every must be >= 1")
    base_fit = fit_config if fit_config is not None else FitConfig()
    threshold = resolve_threshold(stop.threshold, spec, initial)

    dataset = initial
    model = fit(dataset, _derived_fit(base_fit, seed, 0, None))
    incumbent = update_incumbent(
        dataset, spec, model, seed=[seed, 10_000], percentile_n_mc=percentile_n_mc
    )
    iterations: list[IterationRecord] = []
    failure = None
    added = 0
    while True:
        if added >= stop.budget:
            stop_reason = "budget_exhausted"
            break
        proposal = propose(model, spec, incumbent, candidates)
        decision = stop_check(proposal.ei_value, threshold, added, stop.budget)
        if decision.stop:
            stop_reason = decision.reason
            break
        unit_gap = np.linalg.norm(
            initial.domain.scale01(dataset.x) - initial.domain.scale01(proposal.x_new),
            axis=1,
        )
        if float(unit_gap.min()) <= DUPLICATE_TOL:
            stop_reason = "ei_below_threshold"
            break
        try:
            z_new = float(simulator(proposal.x_new))
        except Exception as exc:  # simulator crash is a recorded outcome
            failure = f"{type(exc).__name__}: {exc}"
            stop_reason = "simulator_failure"
            break
        dataset = dataset.append(proposal.x_new, z_new)
        added += 1
        if added % refit_every == 0:
            model = fit(dataset, _derived_fit(base_fit, seed, added, model.params))
        else:
            model = build_model(dataset, model.params, model.nugget)
        incumbent = update_incumbent(
            dataset, spec, model, seed=[seed, 10_000 + added], percentile_n_mc=percentile_n_mc
        )
        surface = None
        if record_surfaces:
            surface = {
                "points": candidates.points,
                "yhat": proposal.means,
                "s": proposal.sds,
                "ei": proposal.ei,
            }
        iterations.append(
            IterationRecord(
                x=proposal.x_new,
                z_raw=z_new,
                y=float(dataset.y[-1]),
                incumbent=incumbent,
                ei_max=proposal.ei_value,
                model_summary=_model_summary(model),
                surface=surface,
            )
        )
    best_x, best_y, best_z = _best_so_far(dataset, spec, model)
    return RunHistory(
        domain=initial.domain,
        transformation=initial.transformation.kind,
        criterion=spec.to_dict(),
        seed=seed,
        initial_x=initial.x,
        initial_z=initial.z_raw,
        iterations=iterations,
        stop_reason=stop_reason,
        best_x=best_x,
        best_y=best_y,
        best_z=best_z,
        failure=failure,
    )


def _derived_fit(base: FitConfig, seed: int, iteration: int, warm) -> FitConfig:
    return FitConfig(
        seed=[seed, iteration],
        n_starts=base.n_starts,
        nugget=base.nugget,
        warm_start=warm,
        maxiter=base.maxiter,
    )


@dataclass
class RunConfig:
    """Parsed run configuration for a full sequential experiment."""

    domain: Domain
    simulator: SimulatorSpec
    criterion: CriterionSpec
    transformation: str = "identity"
    initial_points: np.ndarray | None = None
    initial_n: int | None = None
    initial_maximin: bool = True
    initial_n_restarts: int = 8
    candidate_points: np.ndarray | None = None
    candidate_grid: tuple[int, ...] | None = None
    threshold: float | None = None
    budget: int = 10
    seed: int = 0
    fit_n_starts: int | None = None
    fit_nugget: float | None = None
    record_surfaces: bool = False

    @classmethod
    def from_dict(cls, payload: dict) -> "RunConfig":
        if not isinstance(payload, dict):
            raise ConfigError("run config must be a JSON object")
        sim = SimulatorSpec.from_dict(payload.get("simulator", {}))
        domain_payload = payload.get("domain")
        if domain_payload is not None:
            domain = Domain.from_bounds(domain_payload["bounds"])
        else:
            _, domain = build_simulator(sim)
            if domain is None:
                raise ConfigError(
                    f"simulator kind {sim.kind!r} has no natural domain; config must give one"
                )
        criterion = CriterionSpec.from_dict(payload.get("criterion", {"kind": "minimize"}))
        initial = payload.get("initial", {})
        candidates = payload.get("candidates", {})
        stop = payload.get("stop", {})
        if "budget" not in stop:
            raise ConfigError("stop rule needs a budget")
        fit_opts = payload.get("fit", {})
        cfg = cls(
            domain=domain,
            simulator=sim,
            criterion=criterion,
            transformation=payload.get("transformation", "identity"),
            initial_points=(
                np.asarray(initial["points"], dtype=float) if "points" in initial else None
            ),
            initial_n=initial.get("n"),
            initial_maximin=bool(initial.get("maximin", True)),
            initial_n_restarts=int(initial.get("n_restarts", 8)),
            candidate_points=(
                np.asarray(candidates["points"], dtype=float)
                if "points" in candidates
                else None
            ),
            candidate_grid=(
                tuple(int(v) for v in candidates["grid"]) if "grid" in candidates else None
            ),
            threshold=None if stop.get("threshold") is None else float(stop["threshold"]),
            budget=int(stop["budget"]),
            seed=int(payload.get("seed", 0)),
            fit_n_starts=fit_opts.get("n_starts"),
            fit_nugget=fit_opts.get("nugget"),
            record_surfaces=bool(payload.get("record_surfaces", False)),
        )
        if cfg.candidate_points is None and cfg.candidate_grid is None:
            raise ConfigError("config needs candidates: either 'points' or 'grid'")
        Transformation(cfg.transformation)  # validate the name early
        return cfg


def run_from_config(config: RunConfig) -> RunHistory:
    """Materialize a config (simulator, initial design, candidates) and run the loop."""
    simulator, _ = build_simulator(config.simulator)
    if config.initial_points is not None:
        design = Design(config.initial_points, config.domain)
    else:
        n0 = config.initial_n if config.initial_n is not None else initial_run_count(
            config.domain.dims
        )
        if config.initial_maximin and n0 >= 2:
            design = maximin_lhs(n0, config.domain, config.seed, config.initial_n_restarts)
        else:
            design = latin_hypercube(n0, config.domain, config.seed)
    try:
        z0 = np.array([float(simulator(row)) for row in design.points])
    except Exception as exc:
        raise SeqDesignError(f"simulator failed during initial evaluation: {exc}") from exc
    dataset = Dataset(design.points, z0, config.domain, Transformation(config.transformation))

    if config.candidate_points is not None:
        candidates = CandidateSet(config.candidate_points, config.domain, provenance="user")
    else:
        candidates = grid_candidates(config.domain, config.candidate_grid)

    return run_loop(
        dataset,
        simulator,
        config.criterion,
        candidates,
        StopRule(config.threshold, config.budget),
        seed=config.seed,
        fit_config=FitConfig(n_starts=config.fit_n_starts, nugget=config.fit_nugget),
        record_surfaces=config.record_surfaces,
    )
