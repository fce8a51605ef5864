import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from maritrack.bus import RECORD_SIZE, BusConfig, BusMessage, BusStats, broadcast_round
from maritrack.fuse import TrackSummary
from oracles import random_spd


def summaries(n_agents=3, n_tracks=5, seed=0):
    r = np.random.default_rng(seed)
    return {a: [TrackSummary(a, t, 1.5, r.normal(size=3), random_spd(r)) for t in range(1, n_tracks + 1)]
            for a in range(1, n_agents + 1)}


def test_record_is_96_bytes():
    s = summaries(1, 1)[1][0]
    assert RECORD_SIZE == 96
    assert len(BusMessage.from_summary(s).pack()) == 96
    with pytest.raises(ValueError):
        BusMessage.unpack(b"\0" * 95)


@given(st.integers(0, 2**64 - 1), st.integers(0, 2**64 - 1), st.floats(allow_nan=False), st.integers(0, 10**6))
def test_wire_round_trip_is_lossless(sender, tid, ts, seed):
    r = np.random.default_rng(seed)
    P = random_spd(r)
    s = TrackSummary(sender, tid, ts, r.normal(size=3) * 1e3, P)
    back = BusMessage.unpack(BusMessage.from_summary(s).pack()).to_summary()
    assert (back.agent, back.track_id, back.timestamp) == (sender, tid, ts)
    np.testing.assert_array_equal(back.mean, s.mean)
    np.testing.assert_array_equal(np.triu(back.covariance), np.triu(P))
    np.testing.assert_array_equal(back.covariance, back.covariance.T)


def test_broadcast_examples():
    rng = np.random.default_rng(0)
    got, st_ = broadcast_round(summaries(), BusConfig(drop_prob=0.0), rng)
    assert len(got) == 15 and st_.messages == 15 and st_.bytes == 1440 and st_.dropped == 0
    assert dict(st_.per_link) == {1: 5, 2: 5, 3: 5}
    got, st_ = broadcast_round(summaries(), BusConfig(drop_prob=1.0), rng)
    assert got == [] and st_.messages == 15 and st_.dropped == 15 and st_.delivered == 0


def test_two_hertz_for_ten_seconds():
    rng = np.random.default_rng(0)
    total = BusStats()
    for _ in range(20):
        total.merge(broadcast_round(summaries(), BusConfig(period=0.5), rng)[1])
    assert total.bytes / 10.0 == 2880.0
    assert total.bytes == RECORD_SIZE * total.messages


@given(st.floats(0, 1), st.integers(0, 1000))
def test_conservation(p, seed):
    got, s = broadcast_round(summaries(seed=seed), BusConfig(drop_prob=p), np.random.default_rng(seed))
    assert s.delivered + s.dropped == s.messages == 15
    assert len(got) == s.delivered
    assert s.bytes == 96 * s.messages


def test_drop_rate_is_roughly_bernoulli():
    rng = np.random.default_rng(1)
    total = BusStats()
    for _ in range(200):
        total.merge(broadcast_round(summaries(), BusConfig(drop_prob=0.2), rng)[1])
    assert total.dropped / total.messages == pytest.approx(0.2, abs=0.03)
