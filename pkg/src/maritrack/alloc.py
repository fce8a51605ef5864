"""UAV-to-target assignment as a capacitated min-cost flow.

Network: source -> UAV (capacity K, cost 0), UAV -> target (capacity 1,
cost C[j, i], only for feasible pairs), target -> sink (capacity 1, cost 0).
Solved by successive shortest paths: one Bellman-Ford pass for initial
potentials (assignment costs may be negative), then Dijkstra on reduced
costs for every unit augmentation.
"""
from __future__ import annotations

import heapq
from dataclasses import dataclass, field

import numpy as np

from .linalg import check_spd, logdet, spd_inv
from .percept import RangeNoiseModel, range_noise


@dataclass(frozen=True)
class AllocWeights:
    eta: float = 1.0
    beta: float = 0.1
    rho: float = 0.2
    gamma: float = 0.2
    kappa: float = 1e3      # kept for config compatibility; infeasible pairs are dropped
    d_max: float = 100.0
    r_safe: float = 0.5

    def __post_init__(self):
        for name in ("eta", "beta", "rho", "gamma", "kappa", "d_max", "r_safe"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


@dataclass
class CostMatrix:
    cost: np.ndarray            # (M, N)
    feasible: np.ndarray        # (M, N) bool
    uav_ids: list[int]
    target_ids: list[int]

    @classmethod
    def from_array(cls, cost, feasible=None, uav_ids=None, target_ids=None) -> "CostMatrix":
        cost = np.atleast_2d(np.asarray(cost, dtype=float))
        if feasible is None:
            feasible = np.ones(cost.shape, dtype=bool)
        M, N = cost.shape
        return cls(cost, np.asarray(feasible, dtype=bool),
                   list(range(1, M + 1)) if uav_ids is None else list(uav_ids),
                   list(range(1, N + 1)) if target_ids is None else list(target_ids))

    @property
    def shape(self) -> tuple[int, int]:
        return self.cost.shape


@dataclass
class AssignmentSet:
    assigned: dict[int, list[int]] = field(default_factory=dict)   # uav -> targets, cheapest first
    total_cost: float = 0.0

    def primary(self, uav: int) -> int | None:
        targets = self.assigned.get(uav) or []
        return targets[0] if targets else None

    def pairs(self) -> list[tuple[int, int]]:
        return [(j, i) for j, ts in sorted(self.assigned.items()) for i in ts]


def info_gain_proxy(P, d: float, noise: RangeNoiseModel) -> float:
    """Expected logdet reduction from one isotropic measurement at range ``d``."""
    P = check_spd(P, "target covariance")
    R = range_noise(d, noise)
    P_plus = spd_inv(spd_inv(P) + spd_inv(R))
    return max(logdet(P) - logdet(P_plus), 0.0)


def separation_penalty(r_j, others, r_safe: float) -> float:
    if r_safe <= 0:
        return 0.0
    r_j = np.asarray(r_j, dtype=float)
    phi = 0.0
    for r in others:
        dist = float(np.linalg.norm(r_j - np.asarray(r, dtype=float)))
        phi += max(0.0, (r_safe - dist) / r_safe)
    return phi


def assignment_cost(gain: float, distance: float, is_prev: bool, phi: float,
                    w: AllocWeights) -> tuple[float, bool]:
    cost = -w.eta * gain + w.beta * distance - w.rho * float(is_prev) + w.gamma * phi
    return cost, distance <= w.d_max


def build_cost_matrix(uavs: dict[int, np.ndarray], targets: dict[int, tuple[np.ndarray, np.ndarray]],
                      prev: dict[int, int | None], noise: RangeNoiseModel,
                      w: AllocWeights) -> CostMatrix:
    """``uavs``: id -> position; ``targets``: id -> (mean, covariance)."""
    uav_ids, target_ids = sorted(uavs), sorted(targets)
    M, N = len(uav_ids), len(target_ids)
    cost = np.zeros((M, N))
    feasible = np.zeros((M, N), dtype=bool)
    for a, j in enumerate(uav_ids):
        others = [uavs[k] for k in uav_ids if k != j]
        phi = separation_penalty(uavs[j], others, w.r_safe)
        for b, i in enumerate(target_ids):
            mean, P = targets[i]
            d = float(np.linalg.norm(uavs[j] - mean))
            gain = info_gain_proxy(P, d, noise)
            cost[a, b], feasible[a, b] = assignment_cost(gain, d, prev.get(j) == i, phi, w)
    return CostMatrix(cost, feasible, uav_ids, target_ids)


class _Graph:
    def __init__(self, n: int):
        self.n = n
        self.adj: list[list[int]] = [[] for _ in range(n)]
        self.to: list[int] = []
        self.cap: list[int] = []
        self.cost: list[float] = []

    def add_edge(self, u: int, v: int, cap: int, cost: float) -> int:
        self.adj[u].append(len(self.to))
        self.to.append(v); self.cap.append(cap); self.cost.append(cost)
        self.adj[v].append(len(self.to))
        self.to.append(u); self.cap.append(0); self.cost.append(-cost)
        return len(self.to) - 2


def _bellman_ford(g: _Graph, src: int) -> list[float]:
    dist = [float("inf")] * g.n
    dist[src] = 0.0
    for _ in range(g.n - 1):
        changed = False
        for u in range(g.n):
            if dist[u] == float("inf"):
                continue
            for e in g.adj[u]:
                if g.cap[e] > 0 and dist[u] + g.cost[e] < dist[g.to[e]]:
                    dist[g.to[e]] = dist[u] + g.cost[e]
                    changed = True
        if not changed:
            break
    return dist


def _dijkstra(g: _Graph, src: int, pot: list[float]):
    inf = float("inf")
    dist = [inf] * g.n
    prev_edge = [-1] * g.n
    dist[src] = 0.0
    heap = [(0.0, src)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        for e in g.adj[u]:
            if g.cap[e] <= 0:
                continue
            v = g.to[e]
            # reduced costs are >= 0 up to rounding
            nd = d + max(g.cost[e] + pot[u] - pot[v], 0.0)
            if nd < dist[v]:
                dist[v] = nd
                prev_edge[v] = e
                heapq.heappush(heap, (nd, v))
    return dist, prev_edge


def solve_cmcf(costs: CostMatrix, K: int) -> AssignmentSet:
    """Min-cost maximum flow; per-UAV lists ordered by cost, then target id."""
    M, N = costs.shape if costs.cost.size else (len(costs.uav_ids), len(costs.target_ids))
    if M == 0 or N == 0 or K <= 0:
        return AssignmentSet({j: [] for j in costs.uav_ids}, 0.0)
    src, sink = 0, M + N + 1
    g = _Graph(M + N + 2)
    for a in range(M):
        g.add_edge(src, 1 + a, K, 0.0)
    arc = {}
    for a in range(M):
        for b in range(N):
            if costs.feasible[a, b]:
                arc[(a, b)] = g.add_edge(1 + a, 1 + M + b, 1, float(costs.cost[a, b]))
    for b in range(N):
        g.add_edge(1 + M + b, sink, 1, 0.0)

    pot = _bellman_ford(g, src)
    pot = [p if p != float("inf") else 0.0 for p in pot]
    for _ in range(min(M * K, N)):
        dist, prev_edge = _dijkstra(g, src, pot)
        if dist[sink] == float("inf"):
            break
        for v in range(g.n):
            if dist[v] != float("inf"):
                pot[v] += dist[v]
        v = sink
        while v != src:
            e = prev_edge[v]
            g.cap[e] -= 1
            g.cap[e ^ 1] += 1
            v = g.to[e ^ 1]

    assigned: dict[int, list[int]] = {j: [] for j in costs.uav_ids}
    total = 0.0
    for (a, b), e in sorted(arc.items()):
        if g.cap[e] == 0:
            assigned[costs.uav_ids[a]].append(b)
            total += float(costs.cost[a, b])
    for a, j in enumerate(costs.uav_ids):
        assigned[j] = [costs.target_ids[b] for b in
                       sorted(assigned[j], key=lambda b: (costs.cost[a, b], costs.target_ids[b]))]
    return AssignmentSet(assigned, total)
