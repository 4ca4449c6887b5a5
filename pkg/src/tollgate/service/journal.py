"""Append-only command journal: JSON Lines, gap-free seq, per-record checksum.

Every state change the service makes is the deterministic result of executing
the journal in order, so replaying any prefix yields a consistent state.
"""

from __future__ import annotations

import json
import zlib
from pathlib import Path
from typing import Iterator, Optional


class CorruptJournalError(Exception):
    def __init__(self, message: str, last_good_seq: int) -> None:
        super().__init__(f"{message} (last good seq {last_good_seq})")
        self.last_good_seq = last_good_seq


def _canonical(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def _crc(seq: int, kind: str, data: dict) -> str:
    return f"{zlib.crc32(_canonical({'seq': seq, 'kind': kind, 'data': data}).encode()):08x}"


def encode_record(seq: int, kind: str, data: dict) -> str:
    record = {"seq": seq, "kind": kind, "data": data, "crc": _crc(seq, kind, data)}
    return _canonical(record) + "\n"


def decode_records(text: str) -> Iterator[tuple[int, str, dict]]:
    """Yield (seq, kind, data); raise CorruptJournalError on the first bad record."""
    last_good = 0
    if text and not text.endswith("\n"):
        # validate the complete lines first, then flag the torn tail
        complete, _, _ = text.rpartition("\n")
        for rec in decode_records(complete + "\n" if complete else ""):
            last_good = rec[0]
            yield rec
        raise CorruptJournalError("truncated record at end of journal", last_good)
    for lineno, line in enumerate(text.splitlines(), start=1):
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorruptJournalError(f"line {lineno} is not valid JSON: {exc}", last_good)
        try:
            seq, kind, data, crc = record["seq"], record["kind"], record["data"], record["crc"]
        except (KeyError, TypeError):
            raise CorruptJournalError(f"line {lineno} missing fields", last_good)
        if seq != last_good + 1:
            raise CorruptJournalError(f"line {lineno} has seq {seq}, expected {last_good + 1}", last_good)
        if crc != _crc(seq, kind, data):
            raise CorruptJournalError(f"line {lineno} fails its checksum", last_good)
        last_good = seq
        yield seq, kind, data


class Journal:
    """File-backed when given a path, memory-only otherwise."""

    def __init__(self, path: Optional[str | Path] = None) -> None:
        self.path = Path(path) if path is not None else None
        self.last_seq = 0
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self.path.touch(exist_ok=True)

    def load(self) -> list[tuple[int, str, dict]]:
        if self.path is None:
            return []
        records = list(decode_records(self.path.read_text(encoding="utf-8")))
        self.last_seq = records[-1][0] if records else 0
        return records

    def append(self, kind: str, data: dict) -> int:
        seq = self.last_seq + 1
        if self.path is not None:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(encode_record(seq, kind, data))
                fh.flush()
        self.last_seq = seq
        return seq
