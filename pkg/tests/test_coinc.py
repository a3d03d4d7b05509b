import numpy as np
import pytest

from qpcm.centroid import PLANE_FAR, PLANE_NEAR, PhotonEventStream
from qpcm.coinc import (CoincidenceConfig, accidental_rate, dt_histogram,
                        pair_events, pair_events_chunked)
from qpcm.errors import ConfigError, StreamOrderError


def make_photons(toa, plane=PLANE_NEAR):
    toa = np.asarray(toa, float)
    n = toa.size
    return PhotonEventStream(
        toa=toa,
        x=np.arange(n, dtype=float),
        y=np.arange(n, dtype=float) * 2,
        n_pixels=np.ones(n, np.uint16),
        plane=np.full(n, plane, np.uint8),
    )


def oracle_pairs(near_toa, far_toa, window, policy="closest_time"):
    """O(n^2) greedy reference matcher."""
    cand = []
    for i, tn in enumerate(near_toa):
        for j, tf in enumerate(far_toa):
            dt = abs(tf - tn)
            if dt < window:
                if policy == "closest_time":
                    cand.append((dt, i, j))
                else:
                    cand.append((i, dt, j))
    cand.sort()
    used_i, used_j, out = set(), set(), []
    for key in cand:
        i, j = (key[1], key[2]) if policy == "closest_time" else (key[0], key[2])
        if i not in used_i and j not in used_j:
            used_i.add(i)
            used_j.add(j)
            out.append((i, j))
    out.sort(key=lambda p: near_toa[p[0]])
    return out


def test_simple_pairing():
    near = make_photons([100.0, 500.0])
    far = make_photons([105.0, 600.0], PLANE_FAR)
    pairs, stats = pair_events(near, far, CoincidenceConfig(window=20.0))
    assert len(pairs) == 1
    assert pairs.near_toa[0] == 100.0
    assert pairs.dt[0] == 5.0
    assert stats == {"pairs": 1, "singles_near": 1, "singles_far": 1,
                     "multi_candidate_count": 0}


def test_window_boundary_is_open():
    near = make_photons([0.0])
    far = make_photons([20.0], PLANE_FAR)
    pairs, _ = pair_events(near, far, CoincidenceConfig(window=20.0))
    assert len(pairs) == 0
    pairs, _ = pair_events(near, far, CoincidenceConfig(window=20.001))
    assert len(pairs) == 1


def test_closest_time_wins_contested():
    # one far event between two near events: closer near event gets it
    near = make_photons([0.0, 12.0])
    far = make_photons([10.0], PLANE_FAR)
    pairs, stats = pair_events(near, far, CoincidenceConfig(window=20.0))
    assert len(pairs) == 1
    assert pairs.near_toa[0] == 12.0
    assert stats["multi_candidate_count"] == 1


def test_first_come_policy():
    near = make_photons([0.0, 12.0])
    far = make_photons([10.0], PLANE_FAR)
    cfg = CoincidenceConfig(window=20.0, policy="first_come")
    pairs, _ = pair_events(near, far, cfg)
    assert pairs.near_toa[0] == 0.0


def test_each_event_used_at_most_once():
    near = make_photons([0.0, 1.0, 2.0])
    far = make_photons([0.5, 1.5], PLANE_FAR)
    pairs, stats = pair_events(near, far, CoincidenceConfig(window=20.0))
    assert len(pairs) == 2
    assert len(set(pairs.near_toa.tolist())) == 2
    assert len(set(pairs.far_x.tolist())) == 2


@pytest.mark.parametrize("policy", ["closest_time", "first_come"])
@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_matches_brute_force_oracle(policy, seed):
    rng = np.random.default_rng(seed)
    near_toa = np.sort(rng.uniform(0, 2000, 120))
    far_toa = np.sort(rng.uniform(0, 2000, 100))
    cfg = CoincidenceConfig(window=15.0, policy=policy)
    pairs, _ = pair_events(make_photons(near_toa), make_photons(far_toa, PLANE_FAR), cfg)
    expected = oracle_pairs(near_toa, far_toa, 15.0, policy)
    assert len(pairs) == len(expected)
    assert np.allclose(pairs.near_toa, [near_toa[i] for i, _ in expected])
    assert np.allclose(pairs.dt, [far_toa[j] - near_toa[i] for i, j in expected])


def test_output_sorted_by_near_toa():
    rng = np.random.default_rng(10)
    near = make_photons(np.sort(rng.uniform(0, 1e6, 3000)))
    far = make_photons(np.sort(rng.uniform(0, 1e6, 3000)), PLANE_FAR)
    pairs, _ = pair_events(near, far, CoincidenceConfig(window=50.0))
    assert np.all(np.diff(pairs.near_toa) >= 0)


@pytest.mark.parametrize("n_chunks", [1, 2, 5, 16])
def test_chunked_equals_unchunked(n_chunks):
    rng = np.random.default_rng(11)
    near = make_photons(np.sort(rng.uniform(0, 1e6, 2000)))
    far = make_photons(np.sort(rng.uniform(0, 1e6, 2000)), PLANE_FAR)
    cfg = CoincidenceConfig(window=30.0)
    p1, s1 = pair_events(near, far, cfg)
    p2, s2 = pair_events_chunked(near, far, cfg, n_chunks)
    assert s1 == s2
    assert np.array_equal(p1.near_toa, p2.near_toa)
    assert np.array_equal(p1.dt, p2.dt)
    assert np.array_equal(p1.far_x, p2.far_x)


def test_unsorted_stream_rejected():
    near = make_photons([10.0, 5.0])
    far = make_photons([1.0], PLANE_FAR)
    with pytest.raises(StreamOrderError):
        pair_events(near, far, CoincidenceConfig())


def test_invalid_config():
    with pytest.raises(ConfigError):
        pair_events(make_photons([]), make_photons([]), CoincidenceConfig(window=0))
    with pytest.raises(ConfigError):
        CoincidenceConfig(policy="random").validate()


def test_empty_streams():
    pairs, stats = pair_events(make_photons([]), make_photons([]), CoincidenceConfig())
    assert len(pairs) == 0
    assert stats["pairs"] == 0


def test_accidental_rate_formula():
    assert accidental_rate(1e4, 2e4, 20.0) == pytest.approx(8.0)
    with pytest.raises(ConfigError):
        accidental_rate(-1, 1, 20)


def test_accidental_rate_monte_carlo():
    # independent Poisson streams: pairs/s ~ 2 r1 r2 tau for r*tau << 1
    rng = np.random.default_rng(12)
    duration = 1.0
    r1, r2, window = 2e4, 3e4, 10.0
    near = make_photons(np.sort(rng.uniform(0, duration * 1e9, int(r1 * duration))))
    far = make_photons(np.sort(rng.uniform(0, duration * 1e9, int(r2 * duration))),
                       PLANE_FAR)
    pairs, _ = pair_events(near, far, CoincidenceConfig(window=window))
    expected = accidental_rate(r1, r2, window) * duration
    assert len(pairs) == pytest.approx(expected, rel=0.2)


def test_dt_histogram():
    near = make_photons([0.0, 100.0])
    far = make_photons([3.5, 95.0], PLANE_FAR)
    pairs, _ = pair_events(near, far, CoincidenceConfig(window=20.0))
    starts, counts = dt_histogram(pairs, 20.0, 1.0)
    assert counts.sum() == 2
    assert counts[np.searchsorted(starts, 3.5, side="right") - 1] == 1
    assert counts[np.searchsorted(starts, -5.0, side="right") - 1] == 1
