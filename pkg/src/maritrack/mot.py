"""Per-agent multi-object tracker: CV Kalman tracks, gated nearest-neighbour
association, and track lifecycle with hypothesis counters."""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .linalg import joseph_update, logdet, symmetrize
from .percept import Measurement3D

I3 = np.eye(3)
H_POS = np.hstack([I3, np.zeros((3, 3))])
CHI2_3DOF_99 = 11.345


class TrackStatus(str, Enum):
    TENTATIVE = "tentative"
    CONFIRMED = "confirmed"
    PRUNED = "pruned"


_ALLOWED = {
    (TrackStatus.TENTATIVE, TrackStatus.CONFIRMED),
    (TrackStatus.TENTATIVE, TrackStatus.PRUNED),
    (TrackStatus.CONFIRMED, TrackStatus.PRUNED),
}


@dataclass(frozen=True)
class MotConfig:
    tau_gate: float = CHI2_3DOF_99
    n_confirm: int = 3
    t_prune: float = 5.0
    t_prune_tentative: float = 1.0
    tau_prune_cov: float = 6.0       # logdet of the position block
    process_psd: float = 0.01        # white-noise acceleration PSD, m^2/s^3
    init_vel_var: float = 1.0


@dataclass(frozen=True)
class Track:
    id: int
    mean: np.ndarray        # [p, v]
    covariance: np.ndarray  # 6x6
    last_update: float
    hits: int = 1
    status: TrackStatus = TrackStatus.TENTATIVE
    truth_id: int | None = None

    @property
    def position(self) -> np.ndarray:
        return self.mean[:3]

    @property
    def position_cov(self) -> np.ndarray:
        return self.covariance[:3, :3]

    def with_status(self, status: TrackStatus) -> "Track":
        if status == self.status:
            return self
        if (self.status, status) not in _ALLOWED:
            raise ValueError(f"illegal transition {self.status.value} -> {status.value}")
        return replace(self, status=status)


@dataclass(frozen=True)
class AssociationResult:
    matches: list[tuple[int, int, float]]    # (track id, measurement index, d2)
    unmatched_measurements: list[int]
    unmatched_tracks: list[int]


@dataclass
class TrackCounters:
    raw: int = 0
    pruned: int = 0
    used: int = 0

    def __iadd__(self, other: "TrackCounters"):
        self.raw += other.raw
        self.pruned += other.pruned
        self.used = other.used
        return self


def cv_transition(dt: float) -> np.ndarray:
    F = np.eye(6)
    F[:3, 3:] = dt * I3
    return F


def cv_process_noise(dt: float, psd: float) -> np.ndarray:
    q = np.array([[dt**3 / 3, dt**2 / 2], [dt**2 / 2, dt]]) * psd
    return np.kron(q, I3)


def init_track(track_id: int, m: Measurement3D, cfg: MotConfig) -> Track:
    P = np.zeros((6, 6))
    P[:3, :3] = m.R
    P[3:, 3:] = cfg.init_vel_var * I3
    mean = np.concatenate([m.position, np.zeros(3)])
    return Track(track_id, mean, P, m.timestamp, 1, TrackStatus.TENTATIVE, m.truth_id)


def track_predict(t: Track, dt: float, psd: float = 0.0) -> Track:
    if not dt > 0:
        raise ValueError("dt must be positive")
    F = cv_transition(dt)
    P = F @ t.covariance @ F.T
    if psd > 0:
        P = P + cv_process_noise(dt, psd)
    return replace(t, mean=F @ t.mean, covariance=symmetrize(P))


def mahalanobis_d2(t: Track, m: Measurement3D) -> float:
    nu = m.position - t.mean[:3]
    S = t.covariance[:3, :3] + m.R
    try:
        return float(nu @ np.linalg.solve(S, nu))
    except np.linalg.LinAlgError:
        raise ValueError("innovation covariance is singular") from None


def associate(tracks: list[Track], measurements: list[Measurement3D],
              tau_gate: float = CHI2_3DOF_99) -> AssociationResult:
    """Greedy global-minimum-first matching over the gated d2 matrix.

    Ties on d2 go to the lower track id, then the lower measurement index.
    """
    pairs = []
    for t in tracks:
        for k, m in enumerate(measurements):
            d2 = mahalanobis_d2(t, m)
            if d2 <= tau_gate:
                pairs.append((d2, t.id, k))
    pairs.sort()
    used_t, used_m, matches = set(), set(), []
    for d2, tid, k in pairs:
        if tid in used_t or k in used_m:
            continue
        used_t.add(tid)
        used_m.add(k)
        matches.append((tid, k, d2))
    return AssociationResult(
        matches=matches,
        unmatched_measurements=[k for k in range(len(measurements)) if k not in used_m],
        unmatched_tracks=[t.id for t in tracks if t.id not in used_t],
    )


def track_update(t: Track, m: Measurement3D) -> Track:
    R = np.asarray(m.R, dtype=float)
    try:
        np.linalg.cholesky(R)
    except np.linalg.LinAlgError:
        raise ValueError("measurement covariance must be SPD") from None
    mean, cov = joseph_update(t.mean, t.covariance, m.position, H_POS, R)
    return replace(t, mean=mean, covariance=cov, last_update=m.timestamp, hits=t.hits + 1)


def lifecycle_step(tracks: list[Track], assoc: AssociationResult, measurements: list[Measurement3D],
                   now: float, cfg: MotConfig, next_id: int):
    """Spawn, confirm, and prune.

    ``tracks`` must already carry this tick's updates.  Returns
    ``(tracks, counters_delta, next_id)``; pruned tracks are dropped from
    the returned list.
    """
    delta = TrackCounters()
    kept: list[Track] = []
    for t in tracks:
        if t.status == TrackStatus.TENTATIVE and t.hits >= cfg.n_confirm:
            t = t.with_status(TrackStatus.CONFIRMED)
        timeout = cfg.t_prune_tentative if t.status == TrackStatus.TENTATIVE else cfg.t_prune
        if now - t.last_update > timeout or logdet(t.position_cov) > cfg.tau_prune_cov:
            delta.pruned += 1
            continue
        kept.append(t)
    for k in assoc.unmatched_measurements:
        kept.append(init_track(next_id, measurements[k], cfg))
        next_id += 1
        delta.raw += 1
    out = _drop_redundant(kept, cfg.tau_gate)
    delta.pruned += len(kept) - len(out)
    delta.used = sum(t.status == TrackStatus.CONFIRMED for t in out)
    return out, delta, next_id


def track_pair_d2(a: Track, b: Track) -> float:
    diff = a.position - b.position
    return float(diff @ np.linalg.solve(a.position_cov + b.position_cov, diff))


def _drop_redundant(tracks: list[Track], tau_gate: float) -> list[Track]:
    """Prune hypotheses that gate with an older confirmed track.

    Older means lower id.  A tentative track inside any confirmed track's
    gate is a duplicate of it; of two mutually gated confirmed tracks the
    younger one goes.
    """
    confirmed = sorted((t for t in tracks if t.status == TrackStatus.CONFIRMED), key=lambda t: t.id)
    survivors: list[Track] = []
    for t in confirmed:
        if all(track_pair_d2(t, c) > tau_gate for c in survivors):
            survivors.append(t)
    keep = {t.id for t in survivors}
    for t in tracks:
        if t.status == TrackStatus.TENTATIVE and all(track_pair_d2(t, c) > tau_gate for c in survivors):
            keep.add(t.id)
    return [t for t in tracks if t.id in keep]


@dataclass
class ContractionLog:
    """Counts logdet(posterior) <= logdet(prior) checks over a run."""
    checks: int = 0
    violations: int = 0
    worst: float = -np.inf

    def record(self, prior: float, posterior: float, tol: float = 1e-9) -> None:
        self.checks += 1
        excess = posterior - prior
        self.worst = max(self.worst, excess)
        if excess > tol:
            self.violations += 1


@dataclass
class Tracker:
    """Stateful per-agent wrapper around the pure track operations."""
    agent: int
    cfg: MotConfig = field(default_factory=MotConfig)
    tracks: list[Track] = field(default_factory=list)
    counters: TrackCounters = field(default_factory=TrackCounters)
    contraction: ContractionLog = field(default_factory=ContractionLog)
    next_id: int = 1
    time: float | None = None

    def step(self, measurements: list[Measurement3D], now: float) -> AssociationResult:
        if self.time is not None and now > self.time:
            dt = now - self.time
            self.tracks = [track_predict(t, dt, self.cfg.process_psd) for t in self.tracks]
        self.time = now
        assoc = associate(self.tracks, measurements, self.cfg.tau_gate)
        by_id = {t.id: t for t in self.tracks}
        for tid, k, _ in assoc.matches:
            prior = by_id[tid]
            post = track_update(prior, measurements[k])
            self.contraction.record(logdet(prior.position_cov), logdet(post.position_cov))
            by_id[tid] = post
        updated = [by_id[t.id] for t in self.tracks]
        self.tracks, delta, self.next_id = lifecycle_step(
            updated, assoc, measurements, now, self.cfg, self.next_id)
        self.counters += delta
        return assoc

    def confirmed(self) -> list[Track]:
        return [t for t in self.tracks if t.status == TrackStatus.CONFIRMED]
