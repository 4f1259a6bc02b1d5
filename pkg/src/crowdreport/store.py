"""Durability: an append-only, line-delimited JSON event log.

The log is the single source of truth. Every record is one canonical JSON
object per line, fsynced before the write is acknowledged, so replaying the
file deterministically rebuilds all platform state. A truncated or corrupt
tail stops replay at the last valid record instead of failing the whole
recovery.
"""

from __future__ import annotations

import json
import os
import threading
from pathlib import Path
from typing import Any

LOG_FILENAME = "events.jsonl"


def encode_record(record: dict[str, Any]) -> str:
    """Canonical single-line encoding; stable key order keeps replay
    comparisons byte-exact."""
    return json.dumps(record, sort_keys=True, separators=(",", ":"))


class EventLog:
    """Append-only writer over the store directory's event file."""

    def __init__(self, store_dir: str | Path):
        self.dir = Path(store_dir)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.path = self.dir / LOG_FILENAME
        self._lock = threading.Lock()
        self._fh = open(self.path, "a", encoding="utf-8")

    def append(self, record: dict[str, Any]) -> None:
        line = encode_record(record) + "\n"
        with self._lock:
            self._fh.write(line)
            self._fh.flush()
            os.fsync(self._fh.fileno())

    def close(self) -> None:
        with self._lock:
            if not self._fh.closed:
                self._fh.close()

    def __enter__(self) -> "EventLog":
        return self

    def __exit__(self, *exc_info: object) -> None:
        self.close()


def read_records(store_dir: str | Path) -> tuple[list[dict[str, Any]], str | None]:
    """All intact records plus a warning describing a bad tail, if any.

    A line that is missing its newline (interrupted write) or fails to parse
    ends the scan; everything before it is returned.
    """
    path = Path(store_dir) / LOG_FILENAME
    if not path.exists():
        return [], None
    records: list[dict[str, Any]] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.endswith("\n"):
                return records, f"truncated record at line {lineno}; recovered {len(records)} records"
            try:
                record = json.loads(line)
            except json.JSONDecodeError:
                return records, f"corrupt record at line {lineno}; recovered {len(records)} records"
            if not isinstance(record, dict) or "type" not in record:
                return records, f"malformed record at line {lineno}; recovered {len(records)} records"
            records.append(record)
    return records, None
