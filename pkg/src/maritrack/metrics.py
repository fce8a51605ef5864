"""Identity, accuracy, and bookkeeping metrics computed from a RunLog."""
from __future__ import annotations

import csv
import math
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import linear_sum_assignment

from .mot import TrackCounters
from .runlog import RunLog


@dataclass
class Frame:
    truths: dict[int, np.ndarray]
    tracks: dict[int, np.ndarray]


@dataclass
class FrameMatch:
    matches: list[tuple[int, int, float]]   # (truth id, track id, error)
    misses: list[int]
    false_tracks: list[int]


@dataclass
class FrameMatching:
    frames: list[FrameMatch] = field(default_factory=list)

    def errors(self) -> list[float]:
        return [e for f in self.frames for _, _, e in f.matches]


def match_frame(truths: dict[int, np.ndarray], tracks: dict[int, np.ndarray], radius: float) -> FrameMatch:
    """One-to-one greedy minimum-distance matching within ``radius``."""
    pairs = []
    for g, pg in truths.items():
        for h, ph in tracks.items():
            d = float(np.linalg.norm(np.asarray(pg) - np.asarray(ph)))
            if d <= radius:
                pairs.append((d, g, h))
    pairs.sort()
    used_g, used_h, matches = set(), set(), []
    for d, g, h in pairs:
        if g in used_g or h in used_h:
            continue
        used_g.add(g)
        used_h.add(h)
        matches.append((g, h, d))
    return FrameMatch(sorted(matches),
                      sorted(g for g in truths if g not in used_g),
                      sorted(h for h in tracks if h not in used_h))


def match_frames(frames: list[Frame], radius: float) -> FrameMatching:
    return FrameMatching([match_frame(f.truths, f.tracks, radius) for f in frames])


def identity_metrics(fm: FrameMatching) -> tuple[float, int, int]:
    """``(IDF1, IDSW, Frag)``.

    IDF1 uses the truth<->identity bijection maximizing the number of
    co-matched frames; IDSW counts changes of matched identity per truth
    (across gaps); Frag counts returns to matched after an unmatched spell.
    """
    n_truth_frames = 0
    n_track_frames = 0
    co = defaultdict(int)
    last_id: dict[int, int] = {}
    was_matched: dict[int, bool] = {}
    idsw = frag = 0
    for f in fm.frames:
        present = {g for g, _, _ in f.matches} | set(f.misses)
        n_truth_frames += len(present)
        n_track_frames += len(f.matches) + len(f.false_tracks)
        matched = {g: h for g, h, _ in f.matches}
        for g, h in matched.items():
            co[(g, h)] += 1
            if g in last_id and last_id[g] != h:
                idsw += 1
            if g in last_id and not was_matched[g]:
                frag += 1
            last_id[g] = h
        for g in present:
            was_matched[g] = g in matched
    if n_truth_frames + n_track_frames == 0:
        return 1.0, 0, 0
    idtp = _best_identity_tp(co)
    return 2.0 * idtp / (n_truth_frames + n_track_frames), idsw, frag


def _best_identity_tp(co: dict[tuple[int, int], int]) -> int:
    if not co:
        return 0
    gs = sorted({g for g, _ in co})
    hs = sorted({h for _, h in co})
    W = np.zeros((len(gs), len(hs)))
    for (g, h), n in co.items():
        W[gs.index(g), hs.index(h)] = n
    rows, cols = linear_sum_assignment(W, maximize=True)
    return int(W[rows, cols].sum())


def nearest_rank(values, q: float) -> float:
    v = sorted(values)
    rank = max(1, math.ceil(q / 100.0 * len(v)))
    return float(v[rank - 1])


@dataclass(frozen=True)
class ErrorStats:
    med: float
    rmse: float
    p95: float
    n: int

    @property
    def empty(self) -> bool:
        return self.n == 0


EMPTY_STATS = ErrorStats(math.nan, math.nan, math.nan, 0)


def error_stats(errors) -> ErrorStats:
    """Median, RMSE and nearest-rank P95; ``EMPTY_STATS`` when there is nothing to score."""
    if isinstance(errors, FrameMatching):
        errors = errors.errors()
    e = np.asarray(list(errors), dtype=float)
    if e.size == 0:
        return EMPTY_STATS
    return ErrorStats(float(np.median(e)), float(np.sqrt(np.mean(e * e))), nearest_rank(e, 95), int(e.size))


def pruning_efficiency(c: TrackCounters) -> float:
    return c.pruned / c.raw if c.raw > 0 else 0.0


# -- RunLog extraction ------------------------------------------------------

def _truth_by_tick(log: RunLog) -> dict[int, dict]:
    return {r["k"]: r for r in log.stream("truth")}


def fused_frames(log: RunLog) -> tuple[list[Frame], list[float]]:
    """Evaluation frames at every communication round.

    A container enters the evaluation at the first tick it falls inside any
    UAV's camera frustum and stays in it for the rest of the run.
    """
    truth = _truth_by_tick(log)
    first_seen: dict[int, int] = {}
    for k in sorted(truth):
        for cid, x, y, z, vis in truth[k]["containers"]:
            if vis and cid not in first_seen:
                first_seen[cid] = k
    frames, times = [], []
    for r in log.stream("fused"):
        k = r["k"]
        tr = truth[k]
        truths = {cid: np.array([x, y, z]) for cid, x, y, z, _ in tr["containers"]
                  if cid in first_seen and first_seen[cid] <= k}
        tracks = {t["id"]: np.array(t["mean"]) for t in r["tracks"]}
        frames.append(Frame(truths, tracks))
        times.append(r["t"])
    return frames, times


@dataclass
class MetricsReport:
    idf1: float
    idsw: int
    frag: int
    med_err: float | None
    rmse: float | None
    p95: float | None
    n_matches: int
    empty_stats: bool
    mean_logdet: float | None
    pruning_efficiency: dict[str, float]
    bytes_per_s: float
    containers_done: int
    n_containers: int
    n_fused: int
    contraction_violations: int
    typical_range: float | None
    injected_sigma: float | None

    def to_dict(self) -> dict:
        return asdict(self)


def _nan_to_none(x: float) -> float | None:
    return None if x is None or math.isnan(x) else x


def typical_range(log: RunLog) -> float | None:
    """Median slant range over every (tick, UAV, container) in-frustum sighting."""
    r = [x[1] for t in log.stream("truth") for rs in t.get("ranges", {}).values() for x in rs]
    return float(np.median(r)) if r else None


def injected_depth_sigma(z: float, sensor: dict) -> float:
    """Depth std produced by the disparity noise at depth ``z``: Z^2 sigma_d / (f B)."""
    return z * z * sensor["sigma_d"] / (sensor["f"] * sensor["baseline"])


def evaluate(log: RunLog, radius: float | None = None) -> MetricsReport:
    cfg = log.header["config"]
    radius = cfg["eval"]["radius"] if radius is None else radius
    frames, _ = fused_frames(log)
    fm = match_frames(frames, radius)
    idf1, idsw, frag = identity_metrics(fm)
    st = error_stats(fm)
    logdets = [t["logdet"] for r in log.stream("fused") for t in r["tracks"]]
    end = log.stream("end")[-1]
    eff = {a: pruning_efficiency(TrackCounters(raw, pruned, used))
           for a, (raw, pruned, used) in end["counters"].items()}
    c = end["contraction"]
    z = typical_range(log)
    return MetricsReport(
        idf1=idf1, idsw=idsw, frag=frag,
        med_err=_nan_to_none(st.med), rmse=_nan_to_none(st.rmse), p95=_nan_to_none(st.p95),
        n_matches=st.n,
        empty_stats=st.empty,
        mean_logdet=float(np.mean(logdets)) if logdets else None,
        pruning_efficiency=eff,
        bytes_per_s=end["bytes_per_s"],
        containers_done=len(_done_containers(log, fm, frames)),
        n_containers=len(cfg["containers"]),
        n_fused=end["n_fused"],
        contraction_violations=c["track_update"]["violations"] + c["ci_fuse"]["violations"],
        typical_range=z,
        injected_sigma=None if z is None else injected_depth_sigma(z, cfg["sensor"]),
    )


def truth_identity_map(fm: FrameMatching) -> dict[int, int]:
    """Track id that each truth was matched to most often."""
    co = defaultdict(int)
    for f in fm.frames:
        for g, h, _ in f.matches:
            co[(g, h)] += 1
    best: dict[int, tuple[int, int]] = {}
    for (g, h), n in sorted(co.items()):
        if g not in best or n > best[g][0]:
            best[g] = (n, h)
    return {g: h for g, (_, h) in best.items()}


def _done_containers(log: RunLog, fm: FrameMatching, frames) -> set[int]:
    """Containers whose fused track was marked done while matched to them."""
    done_ids = {e["target"] for e in log.stream("event") if e["kind"] == "done"}
    out = set()
    for f in fm.frames:
        for g, h, _ in f.matches:
            if h in done_ids:
                out.add(g)
    return out


# -- CSV series -------------------------------------------------------------

def write_series(log: RunLog, out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    p = out / "logdet.csv"
    with p.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "fused_id", "logdet", "done"])
        for r in log.stream("fused"):
            for t in r["tracks"]:
                w.writerow([r["t"], t["id"], t["logdet"], int(t["done"])])
    written.append(p)

    p = out / "pruning.csv"
    with p.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "agent", "raw", "pruned", "used", "efficiency"])
        for r in log.stream("counters"):
            for a, (raw, pruned, used) in sorted(r["agents"].items()):
                w.writerow([r["t"], a, raw, pruned, used,
                            pruning_efficiency(TrackCounters(raw, pruned, used))])
    written.append(p)

    p = out / "assignment_fraction.csv"
    counts: dict[tuple[str, int], int] = defaultdict(int)
    totals: dict[str, int] = defaultdict(int)
    for r in log.stream("alloc"):
        for j, prim in r["primary"].items():
            if prim is not None:
                counts[(j, prim)] += 1
                totals[j] += 1
    with p.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["uav", "fused_id", "fraction"])
        for (j, i), n in sorted(counts.items()):
            w.writerow([j, i, n / totals[j]])
    written.append(p)
    return written
