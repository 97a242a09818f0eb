"""``kkm`` command line interface.

The CLI is a thin client of the HTTP service: by default it talks to an
in-process instance of the app, and ``--server URL`` points it at a running
one instead (paths in requests are then resolved on the server). Exit codes:
0 success, 2 configuration error, 3 data error.
"""

from __future__ import annotations

import json
import sys

import click

from .errors import InvalidArgumentError
from .experiment import ExperimentConfig, RunRecord, emit_csv, emit_summary

EXIT_CONFIG = 2
EXIT_DATA = 3


def _client(server: str | None):
    import httpx

    if server:
        return httpx.Client(base_url=server, timeout=600.0)
    from starlette.testclient import TestClient

    from .service.app import app

    return TestClient(app, raise_server_exceptions=False)


def _post(client, path: str, payload: dict) -> dict:
    resp = client.post(path, json=payload)
    if resp.status_code >= 400:
        try:
            body = resp.json()
            code = body.get("code", "internal")
            detail = body.get("detail", resp.text)
        except ValueError:
            code, detail = "internal", resp.text
        click.echo(f"error: {detail}", err=True)
        sys.exit(EXIT_CONFIG if code == "config" else EXIT_DATA if code == "data" else 1)
    return resp.json()


def _fail_config(message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(EXIT_CONFIG)


def _fail_data(message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(EXIT_DATA)


def _data_ref(data, fmt, scale_255, label_column) -> dict:
    if not data:
        _fail_config("--data is required (or set data_path in the config file)")
    return {
        "path": data,
        "format": fmt,
        "scale_255": scale_255,
        "label_column": label_column,
    }


def _kernel_ref(kernel: str, sigma: float | None) -> dict:
    return {"family": kernel, "sigma": sigma}


@click.group()
@click.option(
    "--server",
    envvar="KKM_SERVER",
    default=None,
    help="Base URL of a running service; default runs the service in-process.",
)
@click.pass_context
def main(ctx, server):
    """Landmark-embedded kernel k-means benchmark harness."""
    ctx.obj = {"server": server}


@main.command()
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--data", default=None, help="Dataset path (overrides config).")
@click.option("--format", "fmt", type=click.Choice(["csv", "libsvm", "idx"]), default=None)
@click.option("--k", type=int, default=None)
@click.option("--sampler", type=click.Choice(["uniform", "rls"]), default=None)
@click.option("--m", "m_values", type=int, multiple=True, help="Dictionary sizes to sweep.")
@click.option("--gamma", "gamma_values", type=float, multiple=True,
              help="Ridge values to sweep (sizes then come from the sampler formulas).")
@click.option("--repeats", type=int, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--sigma", type=float, default=None, help="Gaussian bandwidth override.")
@click.option("--kernel", type=click.Choice(["gaussian", "linear"]), default=None)
@click.option("--scale-255/--no-scale-255", default=None)
@click.option("--label-column", default=None)
@click.option("--test-fraction", type=float, default=None)
@click.option("--timings", is_flag=True, default=False, help="Record wall times (breaks byte-determinism).")
@click.option("--output", type=click.Path(), default=None, help="Records CSV path.")
@click.pass_context
def run(ctx, config_path, data, fmt, k, sampler, m_values, gamma_values, repeats,
        seed, sigma, kernel, scale_255, label_column, test_fraction, timings, output):
    """Run a seeded sweep and write records + summary CSVs."""
    payload = {}
    if config_path:
        try:
            with open(config_path, "r", encoding="utf-8") as fh:
                payload = json.load(fh)
        except OSError as exc:
            _fail_config(f"cannot read config file: {exc}")
        except json.JSONDecodeError as exc:
            _fail_config(f"config file is not valid JSON: {exc}")
        if not isinstance(payload, dict):
            _fail_config("config file must hold a flat JSON object")

    overrides = {
        "data_path": data,
        "data_format": fmt,
        "k": k,
        "sampler": sampler,
        "m_grid": list(m_values) or None,
        "gamma_grid": list(gamma_values) or None,
        "repeats": repeats,
        "seed": seed,
        "sigma": sigma,
        "kernel_family": kernel,
        "scale_255": scale_255,
        "label_column": label_column,
        "test_fraction": test_fraction,
        "output_path": output,
    }
    for key, value in overrides.items():
        if value is not None:
            payload[key] = value
    if timings:
        payload["collect_timings"] = True
    if payload.get("m_grid") is not None and payload.get("gamma_grid") is not None:
        # A flag override of one grid kind replaces a configured other kind.
        if m_values:
            payload.pop("gamma_grid")
        elif gamma_values:
            payload.pop("m_grid")

    try:
        cfg = ExperimentConfig.from_dict(payload)
    except (InvalidArgumentError, TypeError) as exc:
        _fail_config(str(exc))
    if not cfg.data_path:
        _fail_config("no dataset given: use --data or data_path in the config")

    request = {
        "data": _data_ref(cfg.data_path, cfg.data_format, cfg.scale_255, cfg.label_column),
        "k": cfg.k,
        "kernel": _kernel_ref(cfg.kernel_family, cfg.sigma),
        "sampler": cfg.sampler,
        "m_grid": None if cfg.m_grid is None else list(cfg.m_grid),
        "gamma_grid": None if cfg.gamma_grid is None else list(cfg.gamma_grid),
        "gamma": cfg.gamma,
        "epsilon": cfg.epsilon,
        "delta": cfg.delta,
        "repeats": cfg.repeats,
        "test_fraction": cfg.test_fraction,
        "seed": cfg.seed,
        "max_iter": cfg.max_iter,
        "move_tol": cfg.move_tol,
        "rank_tol": cfg.rank_tol,
        "max_pairs": cfg.max_pairs,
        "nmi_on_test": cfg.nmi_on_test,
        "collect_timings": cfg.collect_timings,
    }
    with _client(ctx.obj["server"]) as client:
        body = _post(client, "/experiment/run", request)
    records = [RunRecord(**rec) for rec in body["records"]]

    out = cfg.output_path or "runs.csv"
    summary = _summary_path(out)
    try:
        emit_csv(records, out)
        emit_summary(records, summary)
    except OSError as exc:
        _fail_data(f"cannot write output: {exc}")
    click.echo(f"wrote {len(records)} records to {out} (summary: {summary})")


def _summary_path(out: str) -> str:
    stem, dot, ext = out.rpartition(".")
    if dot and ext.lower() == "csv":
        return f"{stem}_summary.csv"
    return out + "_summary.csv"


@main.command()
@click.option("--data", required=True, type=click.Path())
@click.option("--format", "fmt", type=click.Choice(["csv", "libsvm", "idx"]), default="csv")
@click.option("--scale-255", is_flag=True, default=False)
@click.option("--kernel", type=click.Choice(["gaussian", "linear"]), default="gaussian")
@click.option("--sigma", type=float, default=None)
@click.option("--gamma", type=float, required=True)
@click.option("--epsilon", type=float, required=True)
@click.option("--delta", type=float, default=0.1)
@click.option("--m", type=int, default=None, help="Landmark count; defaults to the sampler's size formula.")
@click.option("--sampler", type=click.Choice(["uniform", "rls"]), default="uniform")
@click.option("--seed", type=int, default=0)
@click.option("--no-sandwich", is_flag=True, default=False)
@click.option("--output", type=click.Path(), default=None, help="Write the report JSON here instead of stdout.")
@click.pass_context
def certify(ctx, data, fmt, scale_255, kernel, sigma, gamma, epsilon, delta, m,
            sampler, seed, no_sandwich, output):
    """Sample a dictionary and emit its certification report as JSON."""
    request = {
        "data": _data_ref(data, fmt, scale_255, None),
        "kernel": _kernel_ref(kernel, sigma),
        "gamma": gamma,
        "epsilon": epsilon,
        "delta": delta,
        "m": m,
        "sampler": sampler,
        "seed": seed,
        "include_sandwich": not no_sandwich,
    }
    with _client(ctx.obj["server"]) as client:
        body = _post(client, "/certify", request)
    text = json.dumps(body, indent=2)
    if output:
        try:
            with open(output, "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
        except OSError as exc:
            _fail_data(f"cannot write output: {exc}")
        click.echo(f"wrote report to {output}")
    else:
        click.echo(text)


@main.command()
@click.option("--data", required=True, type=click.Path())
@click.option("--format", "fmt", type=click.Choice(["csv", "libsvm", "idx"]), default="csv")
@click.option("--scale-255", is_flag=True, default=False)
@click.option("--kernel", type=click.Choice(["gaussian", "linear"]), default="gaussian")
@click.option("--sigma", type=float, default=None)
@click.option("--gamma", type=float, required=True)
@click.option("--output", type=click.Path(), default=None, help="Scores CSV path (default stdout).")
@click.pass_context
def rls(ctx, data, fmt, scale_255, kernel, sigma, gamma, output):
    """Compute exact ridge leverage scores and emit them as CSV."""
    request = {
        "data": _data_ref(data, fmt, scale_255, None),
        "kernel": _kernel_ref(kernel, sigma),
        "gamma": gamma,
    }
    with _client(ctx.obj["server"]) as client:
        body = _post(client, "/leverage-scores", request)
    lines = ["index,tau"] + [f"{i},{tau!r}" for i, tau in enumerate(body["tau"])]
    text = "\n".join(lines) + "\n"
    if output:
        try:
            with open(output, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            _fail_data(f"cannot write output: {exc}")
        click.echo(f"wrote {len(body['tau'])} scores to {output}")
    else:
        click.echo(text, nl=False)
    click.echo(f"d_eff = {body['d_eff']!r} at gamma = {body['gamma']!r}", err=True)


@main.command()
@click.option("--data", required=True, type=click.Path())
@click.option("--format", "fmt", type=click.Choice(["csv", "libsvm", "idx"]), default="csv")
@click.option("--scale-255", is_flag=True, default=False)
@click.option("--artifact", type=click.Path(), default=None,
              help="Apply an existing embedder artifact instead of building one.")
@click.option("--kernel", type=click.Choice(["gaussian", "linear"]), default="gaussian")
@click.option("--sigma", type=float, default=None)
@click.option("--m", type=int, default=None)
@click.option("--sampler", type=click.Choice(["uniform", "rls"]), default="uniform")
@click.option("--seed", type=int, default=0)
@click.option("--gamma", type=float, default=None)
@click.option("--rank-tol", type=float, default=1e-10)
@click.option("--output", required=True, type=click.Path())
@click.pass_context
def embed(ctx, data, fmt, scale_255, artifact, kernel, sigma, m, sampler, seed,
          gamma, rank_tol, output):
    """Build a reusable embedder artifact, or apply one to new points."""
    if artifact is None:
        if m is None:
            _fail_config("--m is required when building an embedder")
        request = {
            "data": _data_ref(data, fmt, scale_255, None),
            "kernel": _kernel_ref(kernel, sigma),
            "sampler": sampler,
            "m": m,
            "seed": seed,
            "gamma": gamma,
            "rank_tol": rank_tol,
        }
        with _client(ctx.obj["server"]) as client:
            body = _post(client, "/embedder/build", request)
        try:
            with open(output, "w", encoding="utf-8") as fh:
                json.dump(body, fh)
        except OSError as exc:
            _fail_data(f"cannot write output: {exc}")
        click.echo(f"wrote embedder artifact to {output}")
        return

    try:
        with open(artifact, "r", encoding="utf-8") as fh:
            artifact_body = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        _fail_data(f"cannot read artifact: {exc}")
    from .data_io import ingest

    try:
        dataset = ingest(data, fmt, scale_255, None)
    except Exception as exc:
        _fail_data(str(exc))
    request = {"artifact": artifact_body, "points": dataset.points.tolist()}
    with _client(ctx.obj["server"]) as client:
        body = _post(client, "/embed", request)
    coords = body["coords"]
    residuals = body["residuals"]
    header = ",".join(f"c{i}" for i in range(len(coords[0]))) + ",residual"
    lines = [header]
    for row, res in zip(coords, residuals):
        lines.append(",".join(repr(v) for v in row) + f",{res!r}")
    try:
        with open(output, "w", encoding="utf-8", newline="") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        _fail_data(f"cannot write output: {exc}")
    click.echo(f"embedded {len(coords)} points to {output}")


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
def serve(host, port):
    """Run the service under uvicorn."""
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
