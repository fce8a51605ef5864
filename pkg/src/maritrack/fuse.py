"""Track-to-track fusion with Covariance Intersection.

Summaries from all agents are gated against the fused set, clustered, and
each cluster is folded pairwise in canonical ``(agent, local id)`` order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh

from .linalg import check_spd, logdet, spd_inv, symmetrize
from .mot import CHI2_3DOF_99, ContractionLog

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
_PLATEAU_TOL = 1e-12


@dataclass(frozen=True)
class TrackSummary:
    agent: int
    track_id: int
    timestamp: float
    mean: np.ndarray
    covariance: np.ndarray

    @property
    def key(self) -> tuple[int, int]:
        return (self.agent, self.track_id)


@dataclass
class FusedTrack:
    id: int
    mean: np.ndarray
    covariance: np.ndarray
    members: tuple[tuple[int, int], ...] = ()
    last_fuse: float = 0.0
    logdet: float = 0.0
    done: bool = False
    history: list[tuple[float, float]] = field(default_factory=list)

    def mark_done(self) -> None:
        self.done = True

    def stale(self, now: float, horizon: float) -> bool:
        return now - self.last_fuse > horizon

    def coasted(self, now: float, psd: float) -> "_GateView":
        """Covariance grown by a random-walk term since the last refresh, for gating only."""
        dt = max(0.0, now - self.last_fuse)
        return _GateView(self.id, self.mean, self.covariance + psd * dt * np.eye(3))


@dataclass(frozen=True)
class _GateView:
    id: int
    mean: np.ndarray
    covariance: np.ndarray


def _omega_objective(lam: np.ndarray):
    """``w -> logdet(P_CI(w)) + const`` written through the generalized eigenvalues.

    With ``lam`` the eigenvalues of ``P1^-1 P2``,
    ``det(w P1^-1 + (1-w) P2^-1) = det(P2^-1) * prod(1 + w (lam - 1))``.
    """
    b = [float(x) - 1.0 for x in lam]

    def f(w: float) -> float:
        return -sum(math.log(1.0 + w * bk) for bk in b)
    return f


def optimize_omega(P1, P2, tol: float = 1e-10) -> float:
    """Weight in [0, 1] minimizing logdet of the CI covariance.

    Golden-section search on the (convex) objective, with the endpoints
    checked explicitly.  A flat objective returns 0.5.
    """
    P1 = check_spd(P1, "P1")
    P2 = check_spd(P2, "P2")
    f = _omega_objective(eigh(P2, P1, eigvals_only=True))
    f0, f1, fm = f(0.0), f(1.0), f(0.5)
    if abs(f0 - fm) <= _PLATEAU_TOL and abs(f1 - fm) <= _PLATEAU_TOL:
        return 0.5

    a, b = 0.0, 1.0
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
    w = 0.5 * (a + b)
    best_w, best_f = w, f(w)
    # the minimizer may sit on the boundary; never return worse than an endpoint
    for cand, fc_ in ((0.0, f0), (1.0, f1)):
        if fc_ <= best_f:
            best_w, best_f = cand, fc_
    return best_w


def ci_covariance(P1, P2, w: float) -> np.ndarray:
    return spd_inv(w * spd_inv(P1) + (1.0 - w) * spd_inv(P2))


def ci_fuse_pair(a: TrackSummary, b: TrackSummary):
    """Fuse two position estimates; returns ``(mean, covariance, omega)``."""
    P1 = check_spd(a.covariance, "first covariance")
    P2 = check_spd(b.covariance, "second covariance")
    w = optimize_omega(P1, P2)
    I1, I2 = spd_inv(P1), spd_inv(P2)
    info = w * I1 + (1.0 - w) * I2
    P = spd_inv(info)
    mean = P @ (w * I1 @ a.mean + (1.0 - w) * I2 @ b.mean)
    return mean, symmetrize(P), w


def naive_fuse_pair(a: TrackSummary, b: TrackSummary):
    """Independence-assuming information fusion (overconfident under correlation)."""
    I1 = spd_inv(check_spd(a.covariance, "first covariance"))
    I2 = spd_inv(check_spd(b.covariance, "second covariance"))
    P = spd_inv(I1 + I2)
    return P @ (I1 @ a.mean + I2 @ b.mean), P


def canonical_order(summaries) -> list[TrackSummary]:
    return sorted(summaries, key=lambda s: s.key)


def ci_fuse_sequential(summaries, contraction: ContractionLog | None = None):
    """Left fold of ``ci_fuse_pair`` in canonical order.

    Returns ``(mean, covariance)``.  When ``contraction`` is given, every
    pairwise step is checked against the tighter of its two inputs.
    """
    ordered = canonical_order(summaries)
    if not ordered:
        raise ValueError("cannot fuse an empty list")
    head = ordered[0]
    mean = np.asarray(head.mean, dtype=float)
    cov = np.asarray(head.covariance, dtype=float)
    for s in ordered[1:]:
        acc = TrackSummary(head.agent, head.track_id, s.timestamp, mean, cov)
        prior = min(logdet(cov), logdet(s.covariance))
        mean, cov, _ = ci_fuse_pair(acc, s)
        if contraction is not None:
            contraction.record(prior, logdet(cov))
    return mean, cov


def pair_d2(mu_a, P_a, mu_b, P_b) -> float:
    diff = np.asarray(mu_a) - np.asarray(mu_b)
    return float(diff @ np.linalg.solve(np.asarray(P_a) + np.asarray(P_b), diff))


@dataclass(frozen=True)
class Cluster:
    fused_id: int
    summaries: tuple[TrackSummary, ...]
    is_new: bool


def cross_agent_associate(summaries, fused, tau_fuse: float = CHI2_3DOF_99,
                          next_id: int = 1) -> tuple[list[Cluster], int]:
    """Group summaries by target.

    Each summary goes to the gated fused track with the smallest d2
    (greedy, global minimum first, one summary per agent per fused track).
    Leftovers are clustered among themselves in canonical order and get
    fresh ids.  Returns ``(clusters, next_id)``.
    """
    summaries = canonical_order(summaries)
    pairs = []
    for si, s in enumerate(summaries):
        for f in fused:
            d2 = pair_d2(s.mean, s.covariance, f.mean, f.covariance)
            if d2 <= tau_fuse:
                pairs.append((d2, f.id, si))
    pairs.sort()
    assigned: dict[int, int] = {}
    taken: set[tuple[int, int]] = set()
    for d2, fid, si in pairs:
        if si in assigned or (fid, summaries[si].agent) in taken:
            continue
        assigned[si] = fid
        taken.add((fid, summaries[si].agent))

    groups: dict[int, list[TrackSummary]] = {}
    for si, fid in assigned.items():
        groups.setdefault(fid, []).append(summaries[si])
    clusters = [Cluster(fid, tuple(canonical_order(g)), False) for fid, g in sorted(groups.items())]

    fresh: list[list[TrackSummary]] = []
    for si, s in enumerate(summaries):
        if si in assigned:
            continue
        best = None
        for ci, group in enumerate(fresh):
            if any(m.agent == s.agent for m in group):
                continue
            seed = group[0]
            d2 = pair_d2(s.mean, s.covariance, seed.mean, seed.covariance)
            if d2 <= tau_fuse and (best is None or d2 < best[0]):
                best = (d2, ci)
        if best is None:
            fresh.append([s])
        else:
            fresh[best[1]].append(s)
    for group in fresh:
        clusters.append(Cluster(next_id, tuple(group), True))
        next_id += 1
    return clusters, next_id


@dataclass
class FusionCenter:
    """Vessel-side reducer holding the global fused set.

    Fused tracks are never deleted.  One that has not been refreshed for
    ``t_stale`` seconds is dormant: it is left out of allocation and
    publication but can still be revived by gating, against a covariance
    grown by ``process_psd`` per second since its last refresh.
    """
    tau_fuse: float = CHI2_3DOF_99
    process_psd: float = 0.01
    t_stale: float = 5.0
    tracks: dict[int, FusedTrack] = field(default_factory=dict)
    contraction: ContractionLog = field(default_factory=ContractionLog)
    next_id: int = 1

    def fuse_round(self, summaries, now: float) -> list[Cluster]:
        gates = [f.coasted(now, self.process_psd) for _, f in sorted(self.tracks.items())]
        clusters, self.next_id = cross_agent_associate(summaries, gates, self.tau_fuse, self.next_id)
        for c in clusters:
            mean, cov = ci_fuse_sequential(c.summaries, self.contraction)
            ld = logdet(cov)
            f = self.tracks.get(c.fused_id)
            if f is None:
                f = FusedTrack(c.fused_id, mean, cov)
                self.tracks[c.fused_id] = f
            f.mean, f.covariance, f.logdet = mean, cov, ld
            f.members = tuple(s.key for s in c.summaries)
            f.last_fuse = now
            f.history.append((now, ld))
        return clusters

    def published(self, now: float) -> list[FusedTrack]:
        """Done tracks plus every track refreshed within ``t_stale``."""
        return [f for _, f in sorted(self.tracks.items()) if f.done or not f.stale(now, self.t_stale)]

    def active(self, now: float) -> list[FusedTrack]:
        """Allocation candidates: live and not yet done."""
        return [f for _, f in sorted(self.tracks.items()) if not f.done and not f.stale(now, self.t_stale)]
