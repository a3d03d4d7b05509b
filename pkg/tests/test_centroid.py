import numpy as np
import pytest

from qpcm.centroid import PLANE_FAR, PLANE_NEAR, cluster_and_centroid
from qpcm.detector import CameraConfig, RawEventStream, detect
from qpcm.errors import StreamOrderError
from qpcm.optics import Region

NEAR = Region(10, 73, 120, 183)
FAR = Region(136, 73, 246, 183)


def make_raw(toa, x, y, tot=None):
    toa = np.asarray(toa, float)
    n = toa.size
    return RawEventStream(
        toa=toa,
        x=np.asarray(x, np.uint16),
        y=np.asarray(y, np.uint16),
        tot=np.full(n, 10, np.uint16) if tot is None else np.asarray(tot, np.uint16),
        flags=np.zeros(n, np.uint16),
    )


def run(ev, **kw):
    return cluster_and_centroid(ev, NEAR, FAR, **kw)


def test_single_pixel_cluster():
    ph, stats = run(make_raw([100.0], [20], [80]))
    assert len(ph) == 1
    assert (ph.x[0], ph.y[0]) == (20.0, 80.0)
    assert ph.toa[0] == 100.0
    assert ph.plane[0] == PLANE_NEAR
    assert ph.n_pixels[0] == 1


def test_square_cluster_equal_tot():
    ph, _ = run(make_raw([0, 0, 0, 0], [20, 21, 20, 21], [80, 80, 81, 81]))
    assert len(ph) == 1
    assert (ph.x[0], ph.y[0]) == (20.5, 80.5)
    assert ph.n_pixels[0] == 4


def test_tot_weighted_centroid():
    ph, _ = run(make_raw([0, 0], [20, 21], [80, 80], tot=[30, 10]))
    assert ph.x[0] == pytest.approx(20.25)


def test_earliest_member_timestamp():
    ph, _ = run(make_raw([5.0, 7.0], [20, 21], [80, 80]))
    assert ph.toa[0] == 5.0


def test_time_gate_separates_clusters():
    ph, _ = run(make_raw([0.0, 200.0], [20, 20], [80, 80]), time_gate=100.0)
    assert len(ph) == 2


def test_spatial_separation():
    ph, _ = run(make_raw([0.0, 1.0], [20, 30], [80, 80]))
    assert len(ph) == 2


def test_diagonal_is_connected():
    ph, _ = run(make_raw([0.0, 1.0], [20, 21], [80, 81]))
    assert len(ph) == 1


def test_plane_tags_and_out_of_region_drop():
    ph, stats = run(make_raw([0.0, 500.0, 1000.0], [20, 200, 5], [80, 80, 5]))
    assert len(ph) == 2
    assert ph.plane[0] == PLANE_NEAR
    assert ph.plane[1] == PLANE_FAR
    assert stats["dropped_clusters"] == 1
    assert stats["dropped_out_of_region"] == 1


def test_unsorted_input_rejected():
    ev = make_raw([10.0, 5.0], [20, 20], [80, 90])
    with pytest.raises(StreamOrderError):
        run(ev)


def test_idempotence_on_single_pixel_stream():
    rng = np.random.default_rng(0)
    n = 500
    toa = np.sort(rng.uniform(0, 1e9, n))
    x = rng.integers(NEAR.x0, NEAR.x1, n)
    y = rng.integers(NEAR.y0, NEAR.y1, n)
    ph1, _ = run(make_raw(toa, x, y))
    # re-centroid the centroided stream (coordinates are integers here)
    ev2 = make_raw(ph1.toa, ph1.x.astype(int), ph1.y.astype(int))
    ph2, _ = run(ev2)
    assert np.array_equal(ph1.x, ph2.x)
    assert np.array_equal(ph1.y, ph2.y)


def test_count_conservation():
    cfg = CameraConfig(efficiency=1.0, cluster_size_mean=4.0, jitter_fwhm=0.0)
    rng = np.random.default_rng(1)
    n = 2000
    t = np.sort(rng.uniform(0, 1e9, n))
    px = rng.uniform(NEAR.x0 + 3, NEAR.x1 - 3, n)
    py = rng.uniform(NEAR.y0 + 3, NEAR.y1 - 3, n)
    ev, _ = detect(px, py, t, cfg, rng)
    ev = ev.sort_time()
    ph, stats = run(ev)
    assert int(ph.n_pixels.sum()) + stats["dropped_out_of_region"] == len(ev)


def test_permutation_robustness_within_gate():
    # shuffling events that share one timestamp must not change the clusters
    toa = [0.0, 0.0, 0.0, 1000.0, 1000.0]
    x = [20, 21, 20, 50, 51]
    y = [80, 80, 81, 90, 90]
    ph1, _ = run(make_raw(toa, x, y))
    perm = [2, 0, 1, 4, 3]
    ph2, _ = run(make_raw([toa[i] for i in perm], [x[i] for i in perm],
                          [y[i] for i in perm]))
    assert np.array_equal(ph1.x, ph2.x)
    assert np.array_equal(ph1.y, ph2.y)
    assert np.array_equal(ph1.toa, ph2.toa)


def test_recovery_fidelity_well_separated():
    # criterion-9-style check at small scale
    cfg = CameraConfig(efficiency=1.0, cluster_size_mean=4.0, jitter_fwhm=0.0)
    rng = np.random.default_rng(2)
    n = 5000
    t = np.sort(rng.uniform(0, 5e9, n))  # ~1 kHz: well separated
    px = rng.uniform(NEAR.x0 + 3, NEAR.x1 - 4, n)
    py = rng.uniform(NEAR.y0 + 3, NEAR.y1 - 4, n)
    ev, _ = detect(px, py, t, cfg, rng)
    ev = ev.sort_time()
    ph, _ = run(ev)
    assert abs(len(ph) - n) <= 0.02 * n
    # match recovered events to the nearest truth time (toa is quantized)
    hi = np.clip(np.searchsorted(t, ph.toa), 1, n - 1)
    lo = hi - 1
    idx = np.where(np.abs(t[hi] - ph.toa) < np.abs(t[lo] - ph.toa), hi, lo)
    err = np.hypot(ph.x - px[idx], ph.y - py[idx])
    assert np.sqrt(np.mean(err**2)) < 0.5


def test_empty_stream():
    ph, stats = run(RawEventStream.empty())
    assert len(ph) == 0
    assert stats["clusters"] == 0
