"""RunLog: the JSON-lines record of one simulation run.

One record per (tick, stream).  Streams: ``header``, ``truth``,
``counters``, ``local``, ``fused``, ``alloc``, ``event``, ``end``.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class RunLogError(ValueError):
    pass


def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (np.floating, float)):
        return round(float(x), 6)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    return x


def dumps(record: dict) -> str:
    return json.dumps(_plain(record), separators=(",", ":"), sort_keys=True, allow_nan=False)


@dataclass
class RunLog:
    records: list[dict] = field(default_factory=list)

    def append(self, record: dict) -> None:
        self.records.append(json.loads(dumps(record)))

    def stream(self, name: str) -> list[dict]:
        return [r for r in self.records if r.get("stream") == name]

    @property
    def header(self) -> dict:
        hs = self.stream("header")
        if not hs:
            raise RunLogError("log has no header record")
        return hs[0]

    def to_jsonl(self) -> str:
        return "".join(dumps(r) + "\n" for r in self.records)

    def digest(self) -> str:
        return hashlib.sha256(self.to_jsonl().encode()).hexdigest()

    def write(self, path) -> None:
        Path(path).write_text(self.to_jsonl(), encoding="utf-8")

    @classmethod
    def read(cls, path) -> "RunLog":
        records = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise RunLogError(f"line {lineno}: malformed record ({exc.msg})") from None
                if not isinstance(rec, dict) or "stream" not in rec:
                    raise RunLogError(f"line {lineno}: record without a stream tag")
                records.append(rec)
        log = cls(records)
        log.header  # noqa: B018 - raises on a headerless log
        if not log.stream("end"):
            raise RunLogError(f"line {len(records)}: log is truncated (no end record)")
        return log
