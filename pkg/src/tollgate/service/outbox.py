"""Notification delivery transports. The default writes one text file per message."""

from __future__ import annotations

from pathlib import Path

from tollgate.model import Notification


class TransportError(Exception):
    pass


class FileTransport:
    """Writes `<outbox_dir>/<idempotency_key>.txt`; rewriting the same key is harmless."""

    def __init__(self, outbox_dir: str | Path) -> None:
        self.outbox_dir = Path(outbox_dir)
        self.outbox_dir.mkdir(parents=True, exist_ok=True)

    def send(self, notif: Notification) -> None:
        name = notif.idempotency_key.replace("/", "_") + ".txt"
        body = (
            f"to: {notif.recipient}\n"
            f"kind: {notif.kind.value}\n"
            f"\n{notif.body}\n"
        )
        (self.outbox_dir / name).write_text(body, encoding="utf-8")


class MemoryTransport:
    def __init__(self) -> None:
        self.sent: list[Notification] = []

    def send(self, notif: Notification) -> None:
        self.sent.append(notif)


class FailingTransport:
    """Refuses every send; messages stay queued."""

    def send(self, notif: Notification) -> None:
        raise TransportError("transport unavailable")
