"""Command line front end; a thin client over the HTTP service.

All commands accept ``--server URL`` to target a running instance; without
it the service app runs in-process, so no daemon is needed for local work.
"""

from __future__ import annotations

import sys
from pathlib import Path

import click

from .client import ApiClient, ServiceError


@click.group()
def main():
    """Desk-scale PINN training laboratory."""


def _client(server):
    return ApiClient(server=server, timeout=None if server is None else 60.0)


@main.command()
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", type=click.Path(), default=None, help="Output directory.")
@click.option("--seed", "seeds", type=int, multiple=True, help="Override the seed list.")
@click.option("--threads", type=int, default=1, show_default=True, help="Worker processes.")
@click.option("--preset", type=click.Choice(["desk", "paper"]), default=None,
              help="Fill in the model block when the config omits it.")
@click.option("--server", default=None, help="Remote service URL (default: in-process).")
@click.option("--poll-interval", type=float, default=2.0, show_default=True)
def run(config, out, seeds, threads, preset, server, poll_interval):
    """Run every (arm, seed) of an experiment config and print the report."""
    text = Path(config).read_text()
    with _client(server) as api:
        try:
            job_id = api.submit(
                text,
                workers=threads,
                output_dir=out,
                preset=preset,
                seeds=list(seeds) or None,
            )
        except ServiceError as exc:
            click.echo(f"config rejected: {exc}", err=True)
            sys.exit(2)
        click.echo(f"job {job_id} submitted")
        last = {"state": None}

        def on_poll(st):
            if st["state"] != last["state"]:
                click.echo(f"state: {st['state']}")
                last["state"] = st["state"]

        st = api.wait(job_id, poll_interval=poll_interval, on_poll=on_poll)
        if st["state"] == "failed":
            click.echo(f"experiment failed: {st.get('error')}", err=True)
            sys.exit(1)
        click.echo(api.report(job_id))
        click.echo(f"artifacts: {st['output_dir']}")
        if not st.get("all_ok", True):
            click.echo("some runs aborted", err=True)
            sys.exit(1)


@main.command()
@click.argument("directory", type=click.Path(exists=True, file_okay=False))
@click.option("--server", default=None, help="Remote service URL (default: in-process).")
def report(directory, server):
    """Rebuild and print the summary table from run artifacts."""
    with _client(server) as api:
        try:
            click.echo(api.report_dir(str(Path(directory).resolve())))
        except ServiceError as exc:
            click.echo(str(exc), err=True)
            sys.exit(1)


@main.command()
@click.option("--server", default=None, help="Remote service URL (default: in-process).")
def check(server):
    """Run the oracle and property suite; exit 0 iff everything passes."""
    with _client(server) as api:
        result = api.check()
    for item in result["checks"]:
        mark = "PASS" if item["passed"] else "FAIL"
        click.echo(f"[{mark}] {item['name']}: {item['detail']}")
    if not result["passed"]:
        sys.exit(1)


@main.command()
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
@click.option("--server", default=None, help="Remote service URL (default: in-process).")
def validate(config, server):
    """Validate a config document and echo the resolved spec."""
    with _client(server) as api:
        result = api.validate(Path(config).read_text())
    if result["valid"]:
        click.echo("config ok")
    else:
        for err in result["errors"]:
            click.echo(f"error: {err}", err=True)
        sys.exit(2)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8321, show_default=True)
def serve(host, port):
    """Start the HTTP service."""
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=host, port=port)


if __name__ == "__main__":
    main()
