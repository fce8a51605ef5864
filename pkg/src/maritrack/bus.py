"""Fixed-layout track-summary messages and the lossy broadcast bus.

Wire record (little-endian, 96 bytes)::

    u64 sender | u64 track id | f64 timestamp | 3 x f64 mean |
    6 x f64 covariance upper triangle (xx, xy, xz, yy, yz, zz)
"""
from __future__ import annotations

import struct
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from .fuse import TrackSummary

RECORD = struct.Struct("<QQd3d6d")
RECORD_SIZE = RECORD.size
assert RECORD_SIZE == 96
_IU = np.triu_indices(3)


@dataclass(frozen=True)
class BusMessage:
    sender: int
    track_id: int
    timestamp: float
    mean: tuple[float, float, float]
    cov_upper: tuple[float, float, float, float, float, float]

    @classmethod
    def from_summary(cls, s: TrackSummary) -> "BusMessage":
        P = np.asarray(s.covariance, dtype=float)
        return cls(int(s.agent), int(s.track_id), float(s.timestamp),
                   tuple(float(x) for x in s.mean), tuple(float(x) for x in P[_IU]))

    def to_summary(self) -> TrackSummary:
        P = np.zeros((3, 3))
        P[_IU] = self.cov_upper
        P = P + np.triu(P, 1).T
        return TrackSummary(self.sender, self.track_id, self.timestamp, np.array(self.mean), P)

    def pack(self) -> bytes:
        return RECORD.pack(self.sender, self.track_id, self.timestamp, *self.mean, *self.cov_upper)

    @classmethod
    def unpack(cls, data: bytes) -> "BusMessage":
        if len(data) != RECORD_SIZE:
            raise ValueError(f"expected {RECORD_SIZE} bytes, got {len(data)}")
        v = RECORD.unpack(data)
        return cls(v[0], v[1], v[2], tuple(v[3:6]), tuple(v[6:12]))


@dataclass
class BusStats:
    messages: int = 0
    bytes: int = 0
    dropped: int = 0
    delivered: int = 0
    per_link: Counter = field(default_factory=Counter)

    def merge(self, other: "BusStats") -> None:
        self.messages += other.messages
        self.bytes += other.bytes
        self.dropped += other.dropped
        self.delivered += other.delivered
        self.per_link.update(other.per_link)

    def to_dict(self) -> dict:
        return {
            "messages": self.messages,
            "bytes": self.bytes,
            "dropped": self.dropped,
            "delivered": self.delivered,
            "per_link": {str(k): v for k, v in sorted(self.per_link.items())},
        }


@dataclass(frozen=True)
class BusConfig:
    period: float = 0.5
    drop_prob: float = 0.0


def broadcast_round(summaries_by_agent: dict[int, list[TrackSummary]], cfg: BusConfig,
                    rng: np.random.Generator) -> tuple[list[TrackSummary], BusStats]:
    """Serialize, send and (maybe) drop every summary; returns what the vessel decodes."""
    stats = BusStats()
    delivered: list[TrackSummary] = []
    for agent in sorted(summaries_by_agent):
        for s in sorted(summaries_by_agent[agent], key=lambda s: s.track_id):
            wire = BusMessage.from_summary(s).pack()
            stats.messages += 1
            stats.bytes += len(wire)
            stats.per_link[agent] += 1
            if cfg.drop_prob > 0 and rng.random() < cfg.drop_prob:
                stats.dropped += 1
                continue
            stats.delivered += 1
            delivered.append(BusMessage.unpack(wire).to_summary())
    return delivered, stats
