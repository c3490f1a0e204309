"""Persistent JSONL response cache with single-flight fetches."""

from __future__ import annotations

import json
import logging
import os
import tempfile
import threading
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable

from ..errors import IoFailure

log = logging.getLogger(__name__)


class ResponseCache:
    """Key -> serialized response map backed by a JSONL file.

    Values are stored as the exact JSON text first produced for a key, so a
    hit returns byte-identical content. ``get_or_fetch`` guarantees at most
    one fetch per key per cache lifetime even under concurrent callers.
    """

    def __init__(self, path: str | os.PathLike | None = None):
        self.path = Path(path) if path is not None else None
        self._entries: dict[str, dict] = {}
        self._lock = threading.Lock()
        self._key_locks: dict[str, threading.Lock] = {}
        self._dirty = False
        self.hits = 0
        self.misses = 0
        if self.path is not None and self.path.exists():
            self._load()

    def _load(self) -> None:
        with open(self.path, encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                if not line.strip():
                    continue
                try:
                    entry = json.loads(line)
                    key, value = entry["key"], entry["value"]
                except (json.JSONDecodeError, KeyError, TypeError) as exc:
                    raise IoFailure(f"{self.path}:{line_no}: corrupt cache entry ({exc})") from exc
                if not isinstance(value, str):
                    raise IoFailure(f"{self.path}:{line_no}: cache value must be a JSON string")
                self._entries[key] = entry

    def __len__(self) -> int:
        return len(self._entries)

    def __contains__(self, key: str) -> bool:
        return key in self._entries

    def get(self, key: str) -> str | None:
        entry = self._entries.get(key)
        return None if entry is None else entry["value"]

    def put(self, key: str, value: str) -> None:
        with self._lock:
            if key in self._entries:
                return
            self._entries[key] = {
                "key": key,
                "value": value,
                "fetched_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
            }
            self._dirty = True

    def _key_lock(self, key: str) -> threading.Lock:
        with self._lock:
            lock = self._key_locks.get(key)
            if lock is None:
                lock = self._key_locks[key] = threading.Lock()
            return lock

    def get_or_fetch(self, key: str, fetch: Callable[[], str]) -> str:
        value = self.get(key)
        if value is not None:
            self.hits += 1
            return value
        with self._key_lock(key):
            value = self.get(key)
            if value is not None:
                self.hits += 1
                return value
            self.misses += 1
            value = fetch()
            self.put(key, value)
            return value

    def flush(self) -> int:
        """Write all entries sorted by key via temp file + rename.

        Returns the number of entries persisted; 0 when nothing changed since
        the last flush, in which case the file is left untouched.
        """
        if self.path is None:
            return 0
        with self._lock:
            if not self._dirty:
                return 0
            entries = [self._entries[k] for k in sorted(self._entries)]
            self.path.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(prefix=self.path.name + ".", suffix=".tmp", dir=self.path.parent)
            try:
                with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
                    for entry in entries:
                        fh.write(json.dumps(entry, ensure_ascii=False, sort_keys=True))
                        fh.write("\n")
                os.replace(tmp, self.path)
            except OSError as exc:
                try:
                    os.unlink(tmp)
                except OSError:
                    pass
                raise IoFailure(f"cache flush to {self.path} failed: {exc}") from exc
            self._dirty = False
            log.debug("flushed %d cache entries to %s", len(entries), self.path)
            return len(entries)
