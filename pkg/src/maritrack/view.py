"""Hover-ring viewpoint selection, target termination, and the per-UAV mode machine."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from .alloc import info_gain_proxy
from .linalg import check_spd, logdet
from .percept import RangeNoiseModel


@dataclass(frozen=True)
class RingParams:
    r_h: float = 4.0
    h: float = 6.0
    L: int = 8
    eps: float = 0.1

    def __post_init__(self):
        if self.L < 1:
            raise ValueError("L must be at least 1")
        if not self.r_h > 0:
            raise ValueError("r_h must be positive")


@dataclass(frozen=True)
class HoverCandidate:
    psi: float
    pose: np.ndarray
    gain: float = 0.0
    feasible: bool = True
    travel: float = 0.0


def ring_candidates(center, r_h: float, h: float, L: int) -> list[HoverCandidate]:
    if L < 1:
        raise ValueError("L must be at least 1")
    if not r_h > 0:
        raise ValueError("r_h must be positive")
    c = np.asarray(center, dtype=float)
    out = []
    for ell in range(L):
        psi = 2.0 * math.pi * ell / L
        out.append(HoverCandidate(psi, c + np.array([r_h * math.cos(psi), r_h * math.sin(psi), h])))
    return out


def viewpoint_gain(P, q, target, noise: RangeNoiseModel) -> float:
    return info_gain_proxy(P, float(np.linalg.norm(np.asarray(q) - np.asarray(target))), noise)


def candidate_feasible(q, blockers, r_safe: float) -> bool:
    """Infeasible when within ``r_safe`` of any other UAV position or hover pose."""
    q = np.asarray(q, dtype=float)
    return all(np.linalg.norm(q - np.asarray(b, dtype=float)) >= r_safe for b in blockers)


def score_ring(r_j, target, P, blockers, r_safe: float, ring: RingParams,
               noise: RangeNoiseModel) -> list[HoverCandidate]:
    P = check_spd(P, "target covariance")
    r_j = np.asarray(r_j, dtype=float)
    scored = []
    for c in ring_candidates(target, ring.r_h, ring.h, ring.L):
        scored.append(replace(
            c,
            gain=viewpoint_gain(P, c.pose, target, noise),
            feasible=candidate_feasible(c.pose, blockers, r_safe),
            travel=float(np.linalg.norm(r_j - c.pose)),
        ))
    return scored


def select_hover(r_j, target, P, blockers, r_safe: float, ring: RingParams,
                 noise: RangeNoiseModel) -> HoverCandidate | None:
    """Feasible ring pose maximizing gain / (travel + eps); ties go to the smaller angle."""
    best, best_score = None, -math.inf
    for c in score_ring(r_j, target, P, blockers, r_safe, ring, noise):
        if not c.feasible:
            continue
        s = c.gain / (c.travel + ring.eps)
        if s > best_score:
            best, best_score = c, s
    return best


def best_feasible_gain(uav_positions: dict[int, np.ndarray], hover_poses: dict[int, np.ndarray],
                       target, P, r_safe: float, ring: RingParams, noise: RangeNoiseModel) -> float:
    """Max over UAVs and feasible ring angles of the D-optimal gain; 0 if none is feasible."""
    best = 0.0
    for j, r_j in sorted(uav_positions.items()):
        blockers = [p for k, p in sorted(uav_positions.items()) if k != j]
        blockers += [p for k, p in sorted(hover_poses.items()) if k != j and p is not None]
        for c in score_ring(r_j, target, P, blockers, r_safe, ring, noise):
            if c.feasible:
                best = max(best, c.gain)
    return best


def check_termination(P, best_gain: float, tau_logdet: float, tau_dj: float) -> bool:
    return logdet(check_spd(P, "target covariance")) <= tau_logdet or best_gain <= tau_dj


class Mode(str, Enum):
    SURVEILLANCE = "surveillance"
    TRACKING = "tracking"


@dataclass(frozen=True)
class ModeState:
    mode: Mode = Mode.SURVEILLANCE
    target: int | None = None
    hover: np.ndarray | None = None
    patrol_index: int = 0

    def __post_init__(self):
        if self.mode == Mode.TRACKING and self.target is None:
            raise ValueError("tracking mode requires an active target")
        if self.mode == Mode.SURVEILLANCE and self.hover is not None:
            raise ValueError("surveillance mode carries no hover pose")


@dataclass
class ModeEvents:
    handoffs: list[int] = field(default_factory=list)
    switched: bool = False


def mode_step(m: ModeState, assigned: list[int], done: set[int],
              choose_hover) -> tuple[ModeState, ModeEvents]:
    """Advance one UAV's mode for an allocation cycle.

    ``assigned`` is this UAV's list, cheapest first; ``done`` the set of
    retired target ids; ``choose_hover(target_id)`` returns a hover pose
    or ``None`` when the ring is fully infeasible.
    """
    ev = ModeEvents()
    state = m
    if state.mode == Mode.TRACKING and state.target in done:
        ev.handoffs.append(state.target)
        state = ModeState(Mode.SURVEILLANCE, None, None, state.patrol_index)
    live = [i for i in assigned if i not in done]
    if live:
        primary = live[0]
        hover = choose_hover(primary)
        if hover is not None:
            state = ModeState(Mode.TRACKING, primary, np.asarray(hover, dtype=float), state.patrol_index)
        elif state.mode == Mode.TRACKING and state.target == primary:
            pass  # keep the previous pose while the ring is blocked
        else:
            state = ModeState(Mode.SURVEILLANCE, None, None, state.patrol_index)
    elif state.mode == Mode.TRACKING:
        state = ModeState(Mode.SURVEILLANCE, None, None, state.patrol_index)
    ev.switched = state.mode != m.mode or state.target != m.target
    return state, ev
