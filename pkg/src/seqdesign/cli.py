"""Command-line front end; every command is a thin client of the service.

Commands talk to the ASGI app in-process by default, so outputs are
byte-identical to a deployed server given the same inputs and seed. Point
``--server`` (or SEQDESIGN_SERVER) at a running instance to go remote.
"""

from __future__ import annotations

import csv
import json
import sys
from pathlib import Path

import click

from .design import read_points_csv
from .emulator import read_dataset_csv
from .errors import SeqDesignError
from .oracle import VERIFIABLE_KINDS
from .service.client import ServiceClient, ServiceError

EXIT_VERIFICATION_FAILED = 1
EXIT_CONFIG_ERROR = 2


def _fail(message: str, code: int = EXIT_CONFIG_ERROR) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _parse_bounds(text: str) -> list[list[float]]:
    """'0.75:0.95,0.2:0.8' -> [[0.75, 0.95], [0.2, 0.8]]."""
    out = []
    for part in text.split(","):
        pieces = part.split(":")
        if len(pieces) != 2:
            raise click.BadParameter(f"bad bounds segment {part!r}; expected lo:hi")
        out.append([float(pieces[0]), float(pieces[1])])
    return out


def _parse_grid(text: str) -> list[int]:
    """'13x41' -> [13, 41]; '200' -> [200]."""
    try:
        return [int(p) for p in text.lower().split("x")]
    except ValueError as exc:
        raise click.BadParameter(f"bad grid spec {text!r}; expected like 50x50") from exc


def _write_json(payload: dict, path: str) -> None:
    Path(path).write_text(json.dumps(payload, indent=2) + "\n")


def _write_surface_csv(surface: dict, path: str) -> None:
    d = len(surface["points"][0])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{j + 1}" for j in range(d)] + ["yhat", "s", "ei"])
        for pt, yhat, s, ei in zip(
            surface["points"], surface["yhat"], surface["s"], surface["ei"]
        ):
            writer.writerow(
                [repr(float(v)) for v in pt]
                + [repr(float(yhat)), repr(float(s)), repr(float(ei))]
            )


def _client(ctx: click.Context) -> ServiceClient:
    return ServiceClient(ctx.obj.get("server"))


def _post(ctx: click.Context, path: str, payload: dict) -> dict:
    try:
        with _client(ctx) as client:
            return client.post(path, payload)
    except ServiceError as exc:
        _fail(str(exc.detail))
    except (SeqDesignError, OSError) as exc:
        _fail(str(exc))


@click.group()
@click.option(
    "--server",
    envvar="SEQDESIGN_SERVER",
    default=None,
    help="Base URL of a running service; defaults to in-process execution.",
)
@click.pass_context
def cli(ctx: click.Context, server: str | None):
    """Sequential design toolkit: designs, emulators, proposals, full EI loops."""
    ctx.ensure_object(dict)
    ctx.obj["server"] = server


@cli.command()
@click.option("--n", type=click.IntRange(min=1), required=True, help="Number of points.")
@click.option("--bounds", required=True, help="Per-dimension bounds, e.g. 0:1,0:1.")
@click.option("--maximin/--plain", default=True, help="Maximin-optimized or plain LHS.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--restarts", type=click.IntRange(min=1), default=8, show_default=True)
@click.option("--centered", is_flag=True, help="Pin points to stratum centers (plain LHS only).")
@click.option("--out", type=click.Path(dir_okay=False), default="design.csv", show_default=True)
@click.pass_context
def design(ctx, n, bounds, maximin, seed, restarts, centered, out):
    """Generate a space-filling design and write it as CSV."""
    payload = {
        "n": n,
        "bounds": _parse_bounds(bounds),
        "maximin": maximin,
        "seed": seed,
        "n_restarts": restarts,
        "centered": centered,
    }
    result = _post(ctx, "/design", payload)
    d = len(payload["bounds"])
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"x{j + 1}" for j in range(d)])
        for row in result["points"]:
            writer.writerow([repr(float(v)) for v in row])
    click.echo(f"wrote {len(result['points'])} points to {out}")
    if result["min_distance"] is not None:
        click.echo(f"min interpoint distance (unit scale): {result['min_distance']}")


@cli.command()
@click.option("--data", type=click.Path(exists=True, dir_okay=False), required=True,
              help="Dataset CSV with header x1,...,xd,z.")
@click.option("--bounds", default=None, help="Domain bounds; defaults to the data range.")
@click.option("--transform", "transform", type=click.Choice(["identity", "sqrt", "log1p"]),
              default="identity", show_default=True)
@click.option("--select-transform", is_flag=True,
              help="Pick the transformation by cross-validation diagnostics.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--n-starts", type=click.IntRange(min=1), default=None)
@click.option("--nugget", type=float, default=None)
@click.option("--out", type=click.Path(dir_okay=False), default="model.json", show_default=True)
@click.pass_context
def fit(ctx, data, bounds, transform, select_transform, seed, n_starts, nugget, out):
    """Fit the emulator to a dataset and write the model JSON."""
    try:
        x, z = read_dataset_csv(data)
    except (SeqDesignError, ValueError, OSError) as exc:
        _fail(f"could not read {data}: {exc}")
    if bounds is not None:
        bounds_list = _parse_bounds(bounds)
    else:
        bounds_list = [[float(col.min()), float(col.max())] for col in x.T]
        if any(lo >= hi for lo, hi in bounds_list):
            _fail("data has a constant input column; pass --bounds explicitly")
    payload = {
        "x": x.tolist(),
        "z": z.tolist(),
        "bounds": bounds_list,
        "transformation": transform,
        "select_transform": select_transform,
        "seed": seed,
        "n_starts": n_starts,
        "nugget": nugget,
    }
    result = _post(ctx, "/fit", payload)
    _write_json(result["model"], out)
    click.echo(f"wrote model to {out}")
    click.echo(f"transformation: {result['transformation']}")
    diag = result["diagnostics"]
    if diag is not None:
        click.echo(
            "LOO residuals: max |r| = "
            f"{diag['max_abs_standardized_residual']:.4g}, "
            f"rms = {diag['rms_standardized_residual']:.4g}"
        )


@cli.command()
@click.option("--model", "model_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--criterion", type=click.Choice([
    "minimize", "minimize_exponentiated", "minimize_weighted", "contour",
    "multi_contour", "percentile", "noisy_quantile", "constrained_minimize",
]), default="minimize", show_default=True)
@click.option("--a", type=float, default=None, help="Contour level.")
@click.option("--levels", default=None, help="Comma-separated contour levels.")
@click.option("--alpha", type=float, default=None)
@click.option("--g", type=int, default=None)
@click.option("--w", type=float, default=None)
@click.option("--lambda", "lam", type=float, default=None)
@click.option("--p-target", type=float, default=None)
@click.option("--constraint", default=None, help="Feasible interval a:b.")
@click.option("--constraint-model", type=click.Path(exists=True, dir_okay=False), default=None)
@click.option("--grid", default=None, help="Candidate grid, e.g. 50x50.")
@click.option("--candidates", "candidates_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="Candidate CSV with header x1,...,xd.")
@click.option("--incumbent", type=float, default=None,
              help="Value to beat; derived from the model's data when omitted.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--surface", type=click.Path(dir_okay=False), default=None,
              help="Also write the per-candidate x1,...,xd,yhat,s,ei surface CSV.")
@click.option("--out", type=click.Path(dir_okay=False), default="proposal.json", show_default=True)
@click.pass_context
def propose(ctx, model_path, criterion, a, levels, alpha, g, w, lam, p_target,
            constraint, constraint_model, grid, candidates_path, incumbent, seed,
            surface, out):
    """Maximize the chosen criterion over candidates and write the proposal."""
    try:
        model = json.loads(Path(model_path).read_text())
    except (ValueError, OSError) as exc:
        _fail(f"could not read model: {exc}")
    crit: dict = {"kind": criterion}
    if a is not None:
        crit["a"] = a
    if levels is not None:
        crit["levels"] = [float(v) for v in levels.split(",")]
    if alpha is not None:
        crit["alpha"] = alpha
    if g is not None:
        crit["g"] = g
    if w is not None:
        crit["w"] = w
    if lam is not None:
        crit["lambda"] = lam
    if p_target is not None:
        crit["p_target"] = p_target
    if constraint is not None:
        lo, _, hi = constraint.partition(":")
        crit["constraint"] = [float(lo), float(hi)]
    if (grid is None) == (candidates_path is None):
        _fail("pass exactly one of --grid or --candidates")
    cands = (
        {"grid": _parse_grid(grid)}
        if grid is not None
        else {"points": read_points_csv(candidates_path).tolist()}
    )
    payload = {
        "model": model,
        "criterion": crit,
        "candidates": cands,
        "incumbent": incumbent,
        "include_surface": surface is not None,
        "seed": seed,
    }
    if constraint_model is not None:
        payload["constraint_model"] = json.loads(Path(constraint_model).read_text())
    result = _post(ctx, "/propose", payload)
    surf = result.pop("surface", None)
    _write_json(result, out)
    click.echo(f"proposal: x = {result['x_new']}, EI = {result['ei_value']}")
    if surface is not None and surf is not None:
        _write_surface_csv(surf, surface)
        click.echo(f"wrote EI surface ({len(surf['ei'])} candidates) to {surface}")


def _resolve_loop_config(config_path: str) -> dict:
    """Load a run config, inlining any file references relative to its directory."""
    path = Path(config_path)
    config = json.loads(path.read_text())
    base = path.parent
    initial = config.get("initial", {})
    if isinstance(initial, dict) and "file" in initial:
        pts = read_points_csv(base / initial.pop("file"))
        initial["points"] = pts.tolist()
        config["initial"] = initial
    sim = config.get("simulator", {})
    if isinstance(sim, dict) and "path" in sim:
        sim["grid"] = json.loads((base / sim.pop("path")).read_text())
        config["simulator"] = sim
    cands = config.get("candidates", {})
    if isinstance(cands, dict) and "file" in cands:
        cands["points"] = read_points_csv(base / cands.pop("file")).tolist()
        config["candidates"] = cands
    return config


@cli.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              required=True, help="Run config JSON.")
@click.option("--out", type=click.Path(dir_okay=False), default="history.json", show_default=True)
@click.option("--surface-dir", type=click.Path(file_okay=False), default=None,
              help="Directory for per-iteration EI surface CSVs.")
@click.pass_context
def loop(ctx, config_path, out, surface_dir):
    """Run the full sequential experiment described by a config file."""
    try:
        config = _resolve_loop_config(config_path)
    except (SeqDesignError, ValueError, OSError) as exc:
        _fail(f"could not read config: {exc}")
    if surface_dir is not None:
        config["record_surfaces"] = True
    result = _post(ctx, "/loop", config)
    history = result["history"]
    _write_json(history, out)
    best = history["best"]
    click.echo(
        f"stop reason: {history['stop_reason']} after {history['runs_added']} added runs"
    )
    if best["y"] is not None:
        click.echo(f"best: y = {best['y']} at x = {best['x']}")
    if surface_dir is not None and result.get("surfaces"):
        dirpath = Path(surface_dir)
        dirpath.mkdir(parents=True, exist_ok=True)
        for i, surf in enumerate(result["surfaces"], start=1):
            _write_surface_csv(surf, dirpath / f"surface_{i:03d}.csv")
        click.echo(f"wrote {len(result['surfaces'])} surface files to {surface_dir}")


@cli.command()
@click.option("--kind", type=click.Choice(list(VERIFIABLE_KINDS)), required=True)
@click.option("--trials", type=click.IntRange(min=1), default=100, show_default=True)
@click.option("--samples", type=click.IntRange(min=1000), default=1_000_000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--g", type=int, default=None)
@click.option("--lambda", "lam", type=float, default=None)
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Write the full per-trial report JSON here.")
@click.pass_context
def verify(ctx, kind, trials, samples, seed, g, lam, out):
    """Check a closed-form criterion against its Monte Carlo oracle."""
    payload = {"kind": kind, "trials": trials, "n_samples": samples, "seed": seed}
    if g is not None:
        payload["g"] = g
    if lam is not None:
        payload["lambda"] = lam
    result = _post(ctx, "/verify", payload)
    if out is not None:
        _write_json(result, out)
    status = "PASS" if result["passed"] else "FAIL"
    click.echo(
        f"{kind}: {status} (max |z| = {result['max_abs_z']:.3f} over "
        f"{trials} trials, limit {result['z_limit']})"
    )
    if not result["passed"]:
        sys.exit(EXIT_VERIFICATION_FAILED)


@cli.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    uvicorn.run("seqdesign.service.app:app", host=host, port=port)


def main():
    cli(obj={})


if __name__ == "__main__":
    main()
