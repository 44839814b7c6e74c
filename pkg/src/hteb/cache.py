"""Persistent transformation cache.

Append-only JSONL, one file per (generator, transformation), one record
per line: {"key": hex, "output": str, "attempts": int, "ts": iso8601}.
The latest record for a key wins, so a retried generation simply appends.
Safe for concurrent in-process callers: writers on the same key are
serialised and the producer runs at most once per key.
"""

from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Optional, Union


def content_key(
    generator_id: str,
    transformation_id: str,
    step_index: int,
    rendered_prompt: str,
    input_text: str,
    run_seed: int,
) -> str:
    """Hex content hash identifying one generation request."""
    payload = "\x1f".join(
        [generator_id, transformation_id, str(step_index), rendered_prompt, input_text, str(run_seed)]
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


@dataclass
class CacheRecord:
    key: str
    output: str
    attempts: int
    ts: str


class TransformationCache:
    def __init__(self, root: Union[str, Path]):
        self.root = Path(root)
        self._tables: dict[tuple[str, str], dict[str, CacheRecord]] = {}
        self._master_lock = threading.Lock()
        self._key_locks: dict[tuple[str, str, str], threading.Lock] = {}
        self._file_locks: dict[tuple[str, str], threading.Lock] = {}

    def _path(self, generator_id: str, transformation_id: str) -> Path:
        return self.root / generator_id / f"{transformation_id}.jsonl"

    def _table(self, generator_id: str, transformation_id: str) -> dict[str, CacheRecord]:
        scope = (generator_id, transformation_id)
        with self._master_lock:
            if scope not in self._tables:
                table: dict[str, CacheRecord] = {}
                path = self._path(*scope)
                if path.exists():
                    with path.open("r", encoding="utf-8") as fh:
                        for line in fh:
                            line = line.strip()
                            if not line:
                                continue
                            raw = json.loads(line)
                            table[raw["key"]] = CacheRecord(
                                key=raw["key"],
                                output=raw["output"],
                                attempts=int(raw.get("attempts", 1)),
                                ts=raw.get("ts", ""),
                            )
                self._tables[scope] = table
            return self._tables[scope]

    def get(self, generator_id: str, transformation_id: str, key: str) -> Optional[CacheRecord]:
        return self._table(generator_id, transformation_id).get(key)

    def get_or_put(
        self,
        generator_id: str,
        transformation_id: str,
        key: str,
        producer: Callable[[], Union[str, tuple[str, int]]],
    ) -> str:
        """Return the cached output for `key`, producing and persisting it
        on a miss. Concurrent callers on the same key observe exactly one
        producer invocation.

        The producer may return either the output string or
        (output, attempt_count).
        """
        table = self._table(generator_id, transformation_id)
        with self._master_lock:
            lock = self._key_locks.setdefault((generator_id, transformation_id, key), threading.Lock())
        with lock:
            record = table.get(key)
            if record is not None:
                return record.output
            produced = producer()
            if isinstance(produced, tuple):
                output, attempts = produced
            else:
                output, attempts = produced, 1
            record = CacheRecord(
                key=key,
                output=output,
                attempts=attempts,
                ts=datetime.now(timezone.utc).isoformat(),
            )
            self._append(generator_id, transformation_id, record)
            table[key] = record
            return output

    def _append(self, generator_id: str, transformation_id: str, record: CacheRecord) -> None:
        scope = (generator_id, transformation_id)
        with self._master_lock:
            file_lock = self._file_locks.setdefault(scope, threading.Lock())
        path = self._path(*scope)
        with file_lock:
            path.parent.mkdir(parents=True, exist_ok=True)
            with path.open("a", encoding="utf-8") as fh:
                fh.write(
                    json.dumps(
                        {
                            "key": record.key,
                            "output": record.output,
                            "attempts": record.attempts,
                            "ts": record.ts,
                        },
                        ensure_ascii=False,
                    )
                    + "\n"
                )
