"""Deterministic discrete-time world and the closed perception/fusion/allocation loop."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import alloc, view
from .bus import BusStats, broadcast_round
from .config import ScenarioConfig, to_dict
from .fuse import FusionCenter, TrackSummary
from .geom import FrameTree, RigidTransform, compose, rot_ypr, world_to_frame
from .mot import Tracker
from .nav import NavFilter
from .percept import lift_detection, project, synth_detect
from .runlog import RunLog

# rng stream tags, combined with the seed and an agent id
_NAV, _DETECT, _ATTITUDE = 1, 2, 3
_BUS_AGENT, _VESSEL_AGENT = 10**6, 10**6 + 1


def agent_rng(seed: int, agent: int, stream: int) -> np.random.Generator:
    return np.random.default_rng([seed, agent, stream])


@dataclass
class ContainerState:
    id: int
    base: np.ndarray
    drift: np.ndarray
    bob_amplitude: float = 0.0
    bob_period: float = 6.0

    def position(self, t: float) -> np.ndarray:
        p = self.base.copy()
        if self.bob_amplitude > 0:
            p[2] += self.bob_amplitude * math.sin(2.0 * math.pi * t / self.bob_period)
        return p


@dataclass
class UavState:
    id: int
    position: np.ndarray
    velocity: np.ndarray
    v_max: float
    goal: np.ndarray | None = None
    accel: np.ndarray = field(default_factory=lambda: np.zeros(3))


@dataclass
class WorldState:
    time: float
    uavs: dict[int, UavState]
    containers: dict[int, ContainerState]

    def truth(self) -> dict[int, np.ndarray]:
        return {cid: c.position(self.time) for cid, c in sorted(self.containers.items())}


def step_world(w: WorldState, dt: float) -> WorldState:
    """Advance containers by their drift and UAVs toward their goal at most ``v_max``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    for c in w.containers.values():
        c.base = c.base + c.drift * dt
    for u in w.uavs.values():
        v_old = u.velocity
        if u.goal is None:
            v_new = np.zeros(3)
        else:
            delta = u.goal - u.position
            dist = float(np.linalg.norm(delta))
            step = min(u.v_max * dt, dist)
            v_new = delta * (step / (dist * dt)) if dist > 0 else np.zeros(3)
        u.position = u.position + v_new * dt
        u.accel = (v_new - v_old) / dt
        u.velocity = v_new
    w.time += dt
    return w


class Simulation:
    """Owns every per-run component; ``run()`` produces the RunLog."""

    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        self.dt = cfg.dt
        self.intr = cfg.sensor.intrinsics()
        self.detector = cfg.sensor.detector()
        self.noise = cfg.sensor.noise()
        self.weights = cfg.alloc.weights()
        self.ring = cfg.mission.ring()
        self.nav_noise = cfg.nav.noise()
        self.comm_every = max(1, round(cfg.rates.tick_hz / cfg.rates.comm_hz))
        self.alloc_every = max(1, round(cfg.rates.tick_hz / cfg.rates.alloc_hz))
        self.n_ticks = int(round(cfg.duration * cfg.rates.tick_hz))

        self.world = WorldState(
            0.0,
            {a.id: UavState(a.id, np.array(a.start, float), np.zeros(3), a.v_max) for a in cfg.agents},
            {c.id: ContainerState(c.id, np.array(c.position, float), np.array(c.drift, float),
                                  c.bob_amplitude, c.bob_period) for c in cfg.containers},
        )
        self.agents = {a.id: a for a in cfg.agents}
        self.odom_T_body = {a.id: a.odom_T_body.transform() for a in cfg.agents}
        self.body_T_cam = {a.id: a.body_T_camera.transform() for a in cfg.agents}
        self.nav = {a.id: NavFilter(self.nav_noise) for a in cfg.agents}
        self.vessel_nav = NavFilter(self.nav_noise)
        self.trackers = {a.id: Tracker(a.id, cfg.mot.params()) for a in cfg.agents}
        self.fusion = FusionCenter(cfg.fuse.tau_fuse, cfg.fuse.process_psd, cfg.fuse.t_stale)
        self.modes = {a.id: view.ModeState() for a in cfg.agents}
        self.prev_primary: dict[int, int | None] = {a.id: None for a in cfg.agents}
        self.bus_stats = BusStats()
        self.tree = FrameTree()
        self.done_time: dict[int, float] = {}

        seed = cfg.seed
        self.rng_nav = {a.id: agent_rng(seed, a.id, _NAV) for a in cfg.agents}
        self.rng_det = {a.id: agent_rng(seed, a.id, _DETECT) for a in cfg.agents}
        self.rng_att = {a.id: agent_rng(seed, a.id, _ATTITUDE) for a in cfg.agents}
        self.rng_bus = agent_rng(seed, _BUS_AGENT, 0)
        self.rng_vessel = agent_rng(seed, _VESSEL_AGENT, _NAV)
        self.log = RunLog()

    # -- localization -------------------------------------------------------

    def _gps(self, rng, p_true) -> np.ndarray:
        s = self.cfg.nav.truth_noise_scale * self.nav_noise.gps_std
        return p_true + s * rng.standard_normal(3)

    def _imu(self, rng, a_true) -> np.ndarray:
        s = self.cfg.nav.truth_noise_scale * self.nav_noise.imu_std
        return a_true + s * rng.standard_normal(3)

    def _estimated_attitude(self, agent: int) -> np.ndarray:
        s = self.cfg.nav.truth_noise_scale * self.cfg.nav.attitude_noise_deg
        if s == 0:
            return np.eye(3)
        return rot_ypr(*(s * self.rng_att[agent].standard_normal(3)))

    def _init_localization(self) -> None:
        for j, u in self.world.uavs.items():
            self.nav[j].gps(self._gps(self.rng_nav[j], u.position), 0.0)
        vp = np.array(self.cfg.vessel.position, float)
        self.vessel_nav.gps(self._gps(self.rng_vessel, vp), 0.0)
        self._refresh_tree()

    def _localize(self, k: int) -> None:
        thr = self.cfg.nav.maneuver_threshold
        for j, u in self.world.uavs.items():
            f = self.nav[j]
            # commanded speed change over this tick
            f.predict(self.dt, aggressive=float(np.linalg.norm(u.accel)) * self.dt > thr)
            if k % self.cfg.nav.imu_divisor == 0:
                f.imu(self._imu(self.rng_nav[j], u.accel))
            if k % self.cfg.nav.gps_divisor == 0:
                f.gps(self._gps(self.rng_nav[j], u.position), self.world.time)
        self.vessel_nav.predict(self.dt)
        if k % self.cfg.nav.gps_divisor == 0:
            vp = np.array(self.cfg.vessel.position, float)
            self.vessel_nav.gps(self._gps(self.rng_vessel, vp), self.world.time)
        self._refresh_tree()

    def _refresh_tree(self) -> None:
        for j in self.world.uavs:
            w_T_o = RigidTransform(self._estimated_attitude(j), self.nav[j].state.position)
            self.tree.add_agent(j, w_T_o, self.odom_T_body[j], self.body_T_cam[j])
        v = self.cfg.vessel
        self.tree.add_vessel(RigidTransform(rot_ypr(*v.ypr_deg), self.vessel_nav.state.position),
                             v.odom_T_base.transform())

    def est_position(self, j: int) -> np.ndarray:
        return self.nav[j].state.position

    def true_camera(self, j: int) -> RigidTransform:
        u = self.world.uavs[j]
        return compose(compose(RigidTransform(np.eye(3), u.position), self.odom_T_body[j]),
                       self.body_T_cam[j])

    # -- commands -----------------------------------------------------------

    def _command(self) -> None:
        for j, u in self.world.uavs.items():
            m = self.modes[j]
            if m.mode == view.Mode.TRACKING:
                goal = m.hover
            else:
                patrol = self.agents[j].patrol
                if patrol:
                    idx = m.patrol_index % len(patrol)
                    goal = np.array(patrol[idx], float)
                    if np.linalg.norm(u.position - goal) <= self.cfg.mission.arrive_tol:
                        idx = (idx + 1) % len(patrol)
                        self.modes[j] = view.ModeState(m.mode, m.target, m.hover, idx)
                        goal = np.array(patrol[idx], float)
                else:
                    goal = np.array(self.agents[j].start, float)
            u.goal = goal

    # -- perception and tracking -------------------------------------------

    def _perceive(self, truth: dict[int, np.ndarray]) -> dict[int, dict[int, float]]:
        """Runs detection and tracking; returns each UAV's in-frustum containers with slant range."""
        seen: dict[int, dict[int, float]] = {}
        t = self.world.time
        for j in sorted(self.world.uavs):
            cam = self.true_camera(j)
            cam_inv = cam.inverse()
            seen[j] = {}
            for cid, p in truth.items():
                pc = cam_inv.apply(p)
                if project(pc, self.intr) is not None:
                    seen[j][cid] = float(np.linalg.norm(pc))
            dets = synth_detect(truth, cam, self.intr, self.detector, self.rng_det[j])
            w_T_c = self.tree.camera_chain(j)
            meas = [m for m in (lift_detection(d, self.intr, w_T_c, self.noise, j, t) for d in dets)
                    if m is not None]
            self.trackers[j].step(meas, t)
        return seen

    def summaries(self) -> dict[int, list[TrackSummary]]:
        t = self.world.time
        return {j: [TrackSummary(j, tr.id, t, tr.position.copy(), tr.position_cov.copy())
                    for tr in self.trackers[j].confirmed()]
                for j in sorted(self.trackers)}

    # -- allocation ---------------------------------------------------------

    def _allocate(self, k: int) -> None:
        t = self.world.time
        uav_pos = {j: self.est_position(j) for j in sorted(self.world.uavs)}
        hover = {j: m.hover for j, m in self.modes.items()}
        for f in self.fusion.active(t):
            g = view.best_feasible_gain(uav_pos, hover, f.mean, f.covariance,
                                        self.weights.r_safe, self.ring, self.noise)
            if view.check_termination(f.covariance, g, self.cfg.mission.tau_logdet, self.cfg.mission.tau_dj):
                f.mark_done()
                self.done_time[f.id] = t
                self._event(k, "done", target=f.id, logdet=f.logdet, best_gain=g)
        done = {fid for fid, f in self.fusion.tracks.items() if f.done}
        targets = {f.id: (f.mean, f.covariance) for f in self.fusion.active(t)}
        cm = alloc.build_cost_matrix(uav_pos, targets, self.prev_primary, self.noise, self.weights)
        asg = alloc.solve_cmcf(cm, self.cfg.alloc.K)

        for j in sorted(self.world.uavs):
            def choose(i, j=j):
                blockers = [p for q, p in uav_pos.items() if q != j]
                blockers += [self.modes[q].hover for q in sorted(self.modes)
                             if q != j and self.modes[q].hover is not None]
                f = self.fusion.tracks[i]
                c = view.select_hover(uav_pos[j], f.mean, f.covariance, blockers,
                                      self.weights.r_safe, self.ring, self.noise)
                return None if c is None else c.pose
            before = self.modes[j]
            self.modes[j], ev = view.mode_step(before, asg.assigned.get(j, []), done, choose)
            for i in ev.handoffs:
                self._event(k, "handoff", uav=j, target=i)
            if ev.switched:
                self._event(k, "mode", uav=j, mode=self.modes[j].mode.value, target=self.modes[j].target)
            self.prev_primary[j] = asg.primary(j)
        self.log.append({
            "stream": "alloc", "k": k, "t": t,
            "uavs": cm.uav_ids, "targets": cm.target_ids,
            "cost": cm.cost, "feasible": cm.feasible,
            "assigned": {str(j): ts for j, ts in sorted(asg.assigned.items())},
            "primary": {str(j): asg.primary(j) for j in sorted(asg.assigned)},
            "total_cost": asg.total_cost,
        })

    def _event(self, k: int, kind: str, **data) -> None:
        self.log.append({"stream": "event", "k": k, "t": self.world.time, "kind": kind, **data})

    # -- main loop ----------------------------------------------------------

    def run(self) -> RunLog:
        cfg = self.cfg
        self.log.append({"stream": "header", "version": 1, "config": to_dict(cfg),
                         "dt": self.dt, "comm_every": self.comm_every, "alloc_every": self.alloc_every})
        self._init_localization()
        for k in range(1, self.n_ticks + 1):
            self._command()
            step_world(self.world, self.dt)
            self._localize(k)
            truth = self.world.truth()
            seen = self._perceive(truth)
            self._log_tick(k, truth, seen)
            if k % self.comm_every == 0:
                self._comm_round(k, truth)
            if k % self.alloc_every == 0:
                self._allocate(k)
        return self._finish()

    def _log_tick(self, k: int, truth, seen) -> None:
        t = self.world.time
        visible = set().union(*seen.values()) if seen else set()
        self.log.append({
            "stream": "truth", "k": k, "t": t,
            "containers": [[cid, *p, cid in visible] for cid, p in truth.items()],
            "uavs": [[j, *u.position, *self.est_position(j), self.modes[j].mode.value, self.modes[j].target]
                     for j, u in sorted(self.world.uavs.items())],
            "ranges": {str(j): [[cid, r] for cid, r in sorted(rs.items())] for j, rs in sorted(seen.items())},
        })
        self.log.append({
            "stream": "counters", "k": k, "t": t,
            "agents": {str(j): [tr.counters.raw, tr.counters.pruned, tr.counters.used]
                       for j, tr in sorted(self.trackers.items())},
        })

    def _comm_round(self, k: int, truth) -> None:
        t = self.world.time
        per_agent = self.summaries()
        self.log.append({
            "stream": "local", "k": k, "t": t,
            "agents": {str(j): [[s.track_id, *s.mean] for s in ss] for j, ss in per_agent.items()},
        })
        delivered, stats = broadcast_round(per_agent, self.cfg.bus_config(), self.rng_bus)
        self.bus_stats.merge(stats)
        self.fusion.fuse_round(delivered, t)
        tracks = []
        for f in self.fusion.published(t):
            fid = f.id
            P = f.covariance
            tracks.append({
                "id": fid, "mean": f.mean, "cov": [P[0, 0], P[0, 1], P[0, 2], P[1, 1], P[1, 2], P[2, 2]],
                "logdet": f.logdet, "done": f.done, "fresh": f.last_fuse == t,
                "members": [list(m) for m in f.members],
                "in_vessel": world_to_frame(self.tree, "s", f.mean),
            })
        self.log.append({"stream": "fused", "k": k, "t": t, "tracks": tracks,
                         "bus": {"messages": stats.messages, "bytes": stats.bytes,
                                 "dropped": stats.dropped}})

    def _finish(self) -> RunLog:
        t = self.world.time
        tr_checks = sum(tr.contraction.checks for tr in self.trackers.values())
        tr_viol = sum(tr.contraction.violations for tr in self.trackers.values())
        self.log.append({
            "stream": "end", "k": self.n_ticks, "t": t,
            "bus": self.bus_stats.to_dict(),
            "bytes_per_s": self.bus_stats.bytes / t if t > 0 else 0.0,
            "counters": {str(j): [tr.counters.raw, tr.counters.pruned, tr.counters.used]
                         for j, tr in sorted(self.trackers.items())},
            "contraction": {
                "track_update": {"checks": tr_checks, "violations": tr_viol},
                "ci_fuse": {"checks": self.fusion.contraction.checks,
                            "violations": self.fusion.contraction.violations},
            },
            "done": {str(i): tm for i, tm in sorted(self.done_time.items())},
            "n_fused": len(self.fusion.tracks),
        })
        return self.log


def run_scenario(cfg: ScenarioConfig) -> RunLog:
    return Simulation(cfg).run()
