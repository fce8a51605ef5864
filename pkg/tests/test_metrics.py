import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from maritrack.metrics import (EMPTY_STATS, Frame, FrameMatch, FrameMatching, error_stats, identity_metrics,
                               injected_depth_sigma, match_frame, nearest_rank, pruning_efficiency)
from maritrack.mot import TrackCounters


def trace(ids):
    """One truth over len(ids) frames; None marks an unmatched frame."""
    frames = []
    for h in ids:
        if h is None:
            frames.append(FrameMatch([], [1], []))
        else:
            frames.append(FrameMatch([(1, h, 0.0)], [], []))
    return FrameMatching(frames)


def test_match_frame_examples():
    assert match_frame({1: np.zeros(3)}, {7: np.zeros(3)}, 5.0).matches == [(1, 7, 0.0)]
    m = match_frame({1: np.zeros(3)}, {7: np.array([5.0 + 1e-9, 0, 0])}, 5.0)
    assert m.matches == [] and m.misses == [1] and m.false_tracks == [7]
    truths = {1: np.array([0.0, 0, 0]), 2: np.array([10.0, 0, 0])}
    tracks = {1: np.array([1.0, 0, 0]), 2: np.array([9.0, 0, 0])}
    m = match_frame(truths, tracks, 5.0)
    assert [(g, h) for g, h, _ in m.matches] == [(1, 1), (2, 2)]


def test_identity_examples():
    assert identity_metrics(trace([4] * 10)) == (1.0, 0, 0)
    idf1, idsw, frag = identity_metrics(trace([1] * 5 + [2] * 5))
    assert (idf1, idsw, frag) == (0.5, 1, 0)
    idf1, idsw, frag = identity_metrics(trace([3, 3, None, 3, 3]))
    assert (idsw, frag) == (0, 1)
    assert idf1 == pytest.approx(2 * 4 / (5 + 4))


def test_identity_empty():
    assert identity_metrics(FrameMatching([])) == (1.0, 0, 0)


@given(st.lists(st.integers(1, 3), min_size=1, max_size=30))
def test_idf1_is_one_iff_single_identity(ids):
    idf1, idsw, _ = identity_metrics(trace(ids))
    assert 0.0 <= idf1 <= 1.0
    assert (idf1 == 1.0) == (len(set(ids)) == 1)
    assert (idsw == 0) == (len(set(ids)) == 1)


def test_error_stats_examples():
    s = error_stats([1.0, 2.0, 3.0])
    assert s.med == 2.0 and s.rmse == math.sqrt(14 / 3) and s.p95 == 3.0
    z = error_stats([0.0] * 4)
    assert (z.med, z.rmse, z.p95) == (0.0, 0.0, 0.0)
    s = error_stats([0.7])
    assert (s.med, s.rmse, s.p95) == (0.7, pytest.approx(0.7), 0.7)
    assert error_stats([]) is EMPTY_STATS and EMPTY_STATS.empty


@given(st.lists(st.floats(0, 100), min_size=1, max_size=50))
def test_error_stats_ordering(errs):
    s = error_stats(errs)
    assert s.med <= s.p95 + 1e-12
    assert s.rmse >= 0
    assert s.p95 in errs


def test_nearest_rank():
    v = list(range(1, 101))
    assert nearest_rank(v, 95) == 95
    assert nearest_rank([5, 1], 95) == 5
    assert nearest_rank([3], 1) == 3


def test_pruning_efficiency():
    assert pruning_efficiency(TrackCounters(100, 38, 62)) == 0.38
    assert pruning_efficiency(TrackCounters(0, 0, 0)) == 0.0


def test_injected_sigma():
    sensor = {"sigma_d": 0.1, "f": 320.0, "baseline": 0.3}
    assert injected_depth_sigma(24.0, sensor) == pytest.approx(24.0**2 * 0.1 / 96.0)


def test_frame_dataclass_roundtrip():
    f = Frame({1: np.zeros(3)}, {})
    assert match_frame(f.truths, f.tracks, 5.0).misses == [1]
