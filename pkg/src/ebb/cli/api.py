"""ebb-api: serve the investigation HTTP API."""

from __future__ import annotations

from pathlib import Path

import click
import uvicorn

from ..api.app import build_app


@click.command()
@click.option("--port", default=8574, show_default=True, type=int)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--case-store", required=True, type=click.Path())
@click.option(
    "--ui-dir",
    default=None,
    type=click.Path(file_okay=False),
    help="serve a built workbench UI at /ui",
)
def main(port, host, case_store, ui_dir) -> None:
    """Expose extraction, simulation and analysis over HTTP."""
    if ui_dir is None:
        candidate = Path(__file__).resolve().parents[3] / "frontend" / "dist"
        ui_dir = str(candidate) if candidate.is_dir() else None
    app = build_app(case_store, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port, log_level="info")
