"""FastAPI application: stateless computation endpoints over the core package."""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, HTTPException

from .. import __version__
from ..criteria import CriterionSpec
from ..design import (
    CandidateSet,
    grid_candidates,
    latin_hypercube,
    maximin_lhs,
    min_interpoint_distance,
)
from ..domain import Domain
from ..emulator import (
    Dataset,
    FitConfig,
    candidate_datasets,
    choose_transformation,
    fit,
    loo_cv,
    model_from_payload,
    model_to_payload,
    predict_batch,
)
from ..errors import SeqDesignError
from ..oracle import verify_criterion
from ..sequential import propose, run_from_config, update_incumbent
from ..transforms import Transformation
from . import schemas


def _bad_request(exc: Exception) -> HTTPException:
    return HTTPException(status_code=400, detail=str(exc))


def _candidates(payload: schemas.CandidatesPayload, domain: Domain) -> CandidateSet:
    if payload.points is not None:
        return CandidateSet(np.asarray(payload.points, dtype=float), domain, "user")
    if payload.grid is not None:
        return grid_candidates(domain, payload.grid)
    raise SeqDesignError("candidates need either 'points' or 'grid'")


def _verify_spec(req: schemas.VerifyRequest) -> CriterionSpec:
    """Spec for verification; level-style parameters are randomized per trial."""
    kwargs: dict = {"kind": req.kind}
    if req.kind == "contour":
        kwargs["a"] = 0.0
    elif req.kind == "multi_contour":
        kwargs["levels"] = (0.0, 1.0)
    elif req.kind == "percentile":
        kwargs["p_target"] = 0.5
    elif req.kind == "constrained_minimize":
        kwargs["constraint_bounds"] = req.constraint or (-1.0, 1.0)
    elif req.kind == "minimize_weighted":
        kwargs["w"] = 0.5
    if req.g is not None:
        kwargs["g"] = req.g
    if req.lam is not None:
        kwargs["lam"] = req.lam
    return CriterionSpec(**kwargs)


def create_app() -> FastAPI:
    app = FastAPI(title="seqdesign", version=__version__)

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return schemas.HealthResponse(status="ok", version=__version__)

    @app.post("/design", response_model=schemas.DesignResponse)
    def design(req: schemas.DesignRequest):
        try:
            domain = Domain.from_bounds(req.bounds)
            if req.maximin:
                des = maximin_lhs(req.n, domain, req.seed, req.n_restarts)
            else:
                des = latin_hypercube(req.n, domain, req.seed, centered=req.centered)
            dist = min_interpoint_distance(des) if des.n >= 2 else None
        except SeqDesignError as exc:
            raise _bad_request(exc) from exc
        return schemas.DesignResponse(
            points=[[float(v) for v in row] for row in des.points],
            min_distance=dist,
        )

    @app.post("/fit", response_model=schemas.FitResponse)
    def fit_model(req: schemas.FitRequest):
        try:
            domain = Domain.from_bounds(req.bounds)
            config = FitConfig(seed=req.seed, n_starts=req.n_starts, nugget=req.nugget)
            if req.select_transform:
                cands = candidate_datasets(req.x, req.z, domain)
                transformation = choose_transformation(cands, config)
            else:
                transformation = Transformation(req.transformation)
            dataset = Dataset(
                np.asarray(req.x, dtype=float),
                np.asarray(req.z, dtype=float),
                domain,
                transformation,
            )
            model = fit(dataset, config)
            diagnostics = None
            if dataset.n >= 3:
                diag = loo_cv(model)
                diagnostics = schemas.DiagnosticsPayload(
                    loo_means=[float(v) for v in diag.loo_means],
                    loo_sds=[float(v) for v in diag.loo_sds],
                    standardized_residuals=[
                        float(v) for v in diag.standardized_residuals
                    ],
                    max_abs_standardized_residual=diag.max_abs_residual,
                    rms_standardized_residual=diag.rms_residual,
                )
        except SeqDesignError as exc:
            raise _bad_request(exc) from exc
        return schemas.FitResponse(
            model=schemas.ModelPayload(**model_to_payload(model)),
            diagnostics=diagnostics,
            transformation=transformation.kind,
        )

    @app.post("/predict", response_model=schemas.PredictResponse)
    def predict_points(req: schemas.PredictRequest):
        try:
            model = model_from_payload(req.model.model_dump())
            means, sds = predict_batch(model, np.asarray(req.points, dtype=float))
        except SeqDesignError as exc:
            raise _bad_request(exc) from exc
        return schemas.PredictResponse(
            means=[float(v) for v in means], sds=[float(v) for v in sds]
        )

    @app.post("/propose", response_model=schemas.ProposeResponse)
    def propose_point(req: schemas.ProposeRequest):
        try:
            model = model_from_payload(req.model.model_dump())
            spec = req.criterion.to_core()
            candidates = _candidates(req.candidates, model.dataset.domain)
            constraint_model = None
            if req.constraint_model is not None:
                constraint_model = model_from_payload(req.constraint_model.model_dump())
            incumbent = req.incumbent
            if incumbent is None and spec.incumbent_role is not None:
                incumbent = update_incumbent(model.dataset, spec, model, seed=req.seed)
            proposal = propose(model, spec, incumbent, candidates, constraint_model)
        except SeqDesignError as exc:
            raise _bad_request(exc) from exc
        surface = None
        if req.include_surface:
            surface = schemas.SurfacePayload(
                points=[[float(v) for v in row] for row in candidates.points],
                yhat=[float(v) for v in proposal.means],
                s=[float(v) for v in proposal.sds],
                ei=[float(v) for v in proposal.ei],
            )
        return schemas.ProposeResponse(
            x_new=[float(v) for v in proposal.x_new],
            ei_value=proposal.ei_value,
            index=proposal.index,
            tie_broken=proposal.tie_broken,
            incumbent=incumbent,
            surface=surface,
        )

    @app.post("/loop", response_model=schemas.LoopResponse)
    def loop(req: schemas.LoopRequest):
        try:
            history = run_from_config(req.to_core())
        except SeqDesignError as exc:
            raise _bad_request(exc) from exc
        surfaces = None
        if req.record_surfaces:
            surfaces = [
                schemas.SurfacePayload(
                    points=[[float(v) for v in row] for row in rec.surface["points"]],
                    yhat=[float(v) for v in rec.surface["yhat"]],
                    s=[float(v) for v in rec.surface["s"]],
                    ei=[float(v) for v in rec.surface["ei"]],
                )
                for rec in history.iterations
                if rec.surface is not None
            ]
        return schemas.LoopResponse(history=history.to_dict(), surfaces=surfaces)

    @app.post("/verify", response_model=schemas.VerifyResponse)
    def verify(req: schemas.VerifyRequest):
        try:
            spec = _verify_spec(req)
            report = verify_criterion(spec, req.trials, req.n_samples, req.seed)
        except SeqDesignError as exc:
            raise _bad_request(exc) from exc
        return schemas.VerifyResponse(**report.to_dict())

    return app


app = create_app()
