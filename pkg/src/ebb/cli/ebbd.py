"""ebbd: the telemetry ingestion daemon."""

from __future__ import annotations

import logging
import signal
import threading

import click

from ..ingest import IngestServer
from ..recorder import RetentionPolicy, RingLog, SyncMode


def parse_listen(value: str) -> tuple[str, int]:
    host, _, port = value.rpartition(":")
    if not host or not port.isdigit():
        raise click.BadParameter("want host:port")
    return host, int(port)


@click.command()
@click.option("--listen", default="127.0.0.1:7574", show_default=True)
@click.option("--log-dir", required=True, type=click.Path())
@click.option("--max-bytes", default=256 << 20, show_default=True, type=int)
@click.option(
    "--max-duration",
    default=24 * 3600,
    show_default=True,
    type=int,
    help="retention window, seconds",
)
@click.option("--heartbeat-ms", default=1000, show_default=True, type=int)
@click.option("--segment-bytes", default=1 << 20, show_default=True, type=int)
@click.option("--robot-id", default="unknown", show_default=True)
@click.option("--model", default="unknown", show_default=True)
@click.option(
    "--sync-mode",
    type=click.Choice(["always", "batched"]),
    default="batched",
    show_default=True,
)
def main(
    listen, log_dir, max_bytes, max_duration, heartbeat_ms, segment_bytes, robot_id, model, sync_mode
) -> None:
    """Accept framed robot telemetry and append it to a ring log."""
    logging.basicConfig(
        level=logging.INFO, format="%(asctime)s %(name)s %(levelname)s %(message)s"
    )
    host, port = parse_listen(listen)
    policy = RetentionPolicy(
        max_bytes=max_bytes,
        max_duration_ns=max_duration * 10**9,
        segment_bytes=segment_bytes,
    )
    try:
        policy.validate()
    except ValueError as exc:
        raise click.UsageError(str(exc)) from None
    mode = SyncMode.always_sync() if sync_mode == "always" else SyncMode.batched()
    log = RingLog.create(log_dir, policy, robot_id=robot_id, model=model, sync_mode=mode)
    server = IngestServer(log, host=host, port=port, heartbeat_ms=heartbeat_ms)
    server.start()
    click.echo(f"ebbd listening on {server.address[0]}:{server.address[1]}")
    stop = threading.Event()

    def handle_signal(signum, frame):
        stop.set()

    signal.signal(signal.SIGINT, handle_signal)
    signal.signal(signal.SIGTERM, handle_signal)
    stop.wait()
    click.echo("shutting down")
    server.stop()
    log.close()
