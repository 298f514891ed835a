"""Write-ahead log, snapshots, and the single-writer state engine.

Log format: each record is an 8-byte header (little-endian payload length
and CRC32) followed by the JSON payload {"seq", "name", "args"}. Recovery
reads the longest valid prefix: a short or checksum-failing tail is
truncated away with a warning, losing at most the final unflushed record.

The engine serializes all mutations (apply to memory, then append+flush),
lets readers run concurrently under a readers-writer lock, and wakes
long-poll waiters after every applied operation. Snapshots are canonical
JSON (sorted keys), so recovering the same bytes twice yields byte-identical
state.
"""
from __future__ import annotations

import json
import logging
import os
import struct
import threading
import zlib
from pathlib import Path

from .errors import CorruptLog

log = logging.getLogger(__name__)

_HEADER = struct.Struct("<II")
_MAX_RECORD = 32 * 1024 * 1024

WAL_FILENAME = "wal.log"
SNAPSHOT_FILENAME = "snapshot.json"


def encode_record(payload: bytes) -> bytes:
    if len(payload) > _MAX_RECORD:
        raise ValueError("record exceeds the maximum WAL record size")
    return _HEADER.pack(len(payload), zlib.crc32(payload)) + payload


def read_valid_prefix(path: Path) -> tuple[list[bytes], int]:
    """All complete, checksum-valid records from the front of the log and
    the byte length of that prefix."""
    records: list[bytes] = []
    valid = 0
    if not path.exists():
        return records, valid
    with open(path, "rb") as fh:
        data = fh.read()
    offset = 0
    while offset + _HEADER.size <= len(data):
        length, crc = _HEADER.unpack_from(data, offset)
        if length > _MAX_RECORD:
            break
        end = offset + _HEADER.size + length
        if end > len(data):
            break
        payload = data[offset + _HEADER.size:end]
        if zlib.crc32(payload) != crc:
            break
        records.append(payload)
        offset = end
        valid = end
    return records, valid


def canonical_json(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"),
                      ensure_ascii=False).encode("utf-8")


class RwLock:
    """Readers-writer lock with writer preference."""

    def __init__(self):
        self._cond = threading.Condition()
        self._readers = 0
        self._writer = False
        self._writers_waiting = 0

    def acquire_read(self):
        with self._cond:
            while self._writer or self._writers_waiting:
                self._cond.wait()
            self._readers += 1

    def release_read(self):
        with self._cond:
            self._readers -= 1
            if self._readers == 0:
                self._cond.notify_all()

    def acquire_write(self):
        with self._cond:
            self._writers_waiting += 1
            while self._writer or self._readers:
                self._cond.wait()
            self._writers_waiting -= 1
            self._writer = True

    def release_write(self):
        with self._cond:
            self._writer = False
            self._cond.notify_all()


class StateEngine:
    """Applies named operations to a state object and makes them durable.

    ``apply_fn(state, name, args) -> (result, effects)`` must be a pure
    function of its inputs; anything nondeterministic belongs in ``args``.
    ``state`` provides to_snapshot()/load_snapshot(dict).
    """

    def __init__(self, state, apply_fn, data_dir: str | os.PathLike | None = None,
                 snapshot_every: int = 1000, effect_handler=None):
        self.state = state
        self._apply = apply_fn
        self._effects = effect_handler
        self._lock = RwLock()
        self._event_cond = threading.Condition()
        self.seq = 0
        self._ops_since_snapshot = 0
        self._snapshot_every = snapshot_every
        self._wal_path: Path | None = None
        self._snapshot_path: Path | None = None
        self._wal_file = None
        if data_dir is not None:
            data_dir = Path(data_dir)
            data_dir.mkdir(parents=True, exist_ok=True)
            self._wal_path = data_dir / WAL_FILENAME
            self._snapshot_path = data_dir / SNAPSHOT_FILENAME
            self._recover()
            self._wal_file = open(self._wal_path, "ab")

    # -- recovery -------------------------------------------------------------

    def _recover(self) -> None:
        if self._snapshot_path.exists():
            with open(self._snapshot_path, "rb") as fh:
                snap = json.loads(fh.read().decode("utf-8"))
            self.state.load_snapshot(snap["state"])
            self.seq = int(snap["seq"])
        records, valid = read_valid_prefix(self._wal_path)
        for idx, payload in enumerate(records):
            record = json.loads(payload.decode("utf-8"))
            seq = int(record["seq"])
            if seq <= self.seq:
                continue  # already inside the snapshot
            if seq != self.seq + 1:
                # A sequence gap means the tail is not trustworthy.
                log.warning("WAL sequence gap at seq %d; truncating", seq)
                valid = self._record_offset(records, idx)
                break
            self._apply(self.state, record["name"], record["args"])
            self.seq = seq
        file_size = self._wal_path.stat().st_size if self._wal_path.exists() else 0
        if valid < file_size:
            log.warning(
                "truncating corrupt WAL tail of %s: keeping %d of %d bytes (%s)",
                self._wal_path, valid, file_size, CorruptLog().code,
            )
            with open(self._wal_path, "ab") as fh:
                fh.truncate(valid)

    @staticmethod
    def _record_offset(records: list[bytes], count: int) -> int:
        return sum(_HEADER.size + len(r) for r in records[:count])

    # -- access ---------------------------------------------------------------

    def read(self, fn):
        self._lock.acquire_read()
        try:
            return fn(self.state)
        finally:
            self._lock.release_read()

    def submit(self, name: str, args: dict):
        """Apply one operation, append it to the log, wake waiters."""
        self._lock.acquire_write()
        try:
            result, effects = self._apply(self.state, name, args)
            self.seq += 1
            if self._wal_file is not None:
                payload = canonical_json({"seq": self.seq, "name": name, "args": args})
                self._wal_file.write(encode_record(payload))
                self._wal_file.flush()
                self._ops_since_snapshot += 1
                if self._snapshot_every and self._ops_since_snapshot >= self._snapshot_every:
                    self._write_snapshot()
        finally:
            self._lock.release_write()
        if effects and self._effects is not None:
            for effect in effects:
                self._effects(effect)
        with self._event_cond:
            self._event_cond.notify_all()
        return result

    def wait_event(self, timeout: float) -> None:
        """Block until any operation is applied (or the timeout passes)."""
        with self._event_cond:
            self._event_cond.wait(timeout)

    # -- snapshots ---------------------------------------------------------------

    def snapshot_bytes(self) -> bytes:
        """Canonical serialized state; equal bytes mean equal state."""
        self._lock.acquire_read()
        try:
            return canonical_json({"seq": self.seq, "state": self.state.to_snapshot()})
        finally:
            self._lock.release_read()

    def _write_snapshot(self) -> None:
        # Caller holds the write lock.
        blob = canonical_json({"seq": self.seq, "state": self.state.to_snapshot()})
        tmp = self._snapshot_path.with_suffix(".tmp")
        with open(tmp, "wb") as fh:
            fh.write(blob)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, self._snapshot_path)
        self._wal_file.truncate(0)
        self._wal_file.seek(0)
        self._ops_since_snapshot = 0

    def checkpoint(self) -> None:
        """Write a snapshot now and clear the log."""
        if self._wal_file is None:
            return
        self._lock.acquire_write()
        try:
            self._write_snapshot()
        finally:
            self._lock.release_write()

    def close(self) -> None:
        if self._wal_file is None:
            return
        self.checkpoint()
        self._wal_file.close()
        self._wal_file = None
