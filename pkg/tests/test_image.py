import numpy as np
import pytest

from qpcm.centroid import PhotonEventStream
from qpcm.coinc import CoincidencePairStream
from qpcm.errors import AnalysisError, ConfigError, ShapeError
from qpcm.image import (DpcFrame, ImageFrame, LineRoi, accumulate,
                        accumulate_photons, dpc, dpc_to_csv, dpc_to_pgm,
                        frame_pgm_bytes, frame_to_csv, frame_to_pgm,
                        line_profile, profile_to_csv, visibility)
from qpcm.optics import Region
from qpcm.pgm import read_pgm

NEAR = Region(10, 73, 120, 183)


def make_pairs(near_x, near_y):
    near_x = np.asarray(near_x, float)
    n = near_x.size
    return CoincidencePairStream(
        near_toa=np.arange(n, dtype=float), dt=np.zeros(n),
        near_x=near_x, near_y=np.asarray(near_y, float),
        far_x=np.zeros(n), far_y=np.zeros(n),
    )


def frame_from(counts, **kw):
    return ImageFrame(counts=np.asarray(counts, np.int64), exposure=1.0, **kw)


class TestAccumulate:
    def test_rounding_to_pixels(self):
        img = accumulate(make_pairs([10.4, 10.6, 119.0], [73.0, 73.0, 182.4]), NEAR)
        assert img.counts.shape == (110, 110)
        assert img.counts[0, 0] == 1
        assert img.counts[0, 1] == 1
        assert img.counts[109, 109] == 1
        assert img.total == 3

    def test_out_of_region_dropped(self):
        img = accumulate(make_pairs([5.0, 300.0], [73.0, 73.0]), NEAR)
        assert img.total == 0

    def test_binning(self):
        img = accumulate(make_pairs([10.0, 11.0, 12.0], [73.0, 73.0, 73.0]),
                         NEAR, bin_factor=2)
        assert img.counts.shape == (55, 55)
        assert img.counts[0, 0] == 2
        assert img.counts[0, 1] == 1

    def test_bad_bin_factor(self):
        with pytest.raises(ConfigError):
            accumulate(make_pairs([], []), NEAR, bin_factor=3)
        with pytest.raises(ConfigError):
            accumulate(make_pairs([], []), NEAR, bin_factor=0)

    def test_accumulate_photons(self):
        ph = PhotonEventStream(
            toa=np.array([0.0]), x=np.array([60.0]), y=np.array([100.0]),
            n_pixels=np.array([1], np.uint16), plane=np.array([0], np.uint8),
        )
        img = accumulate_photons(ph, NEAR)
        assert img.counts[100 - 73, 60 - 10] == 1


class TestDpc:
    def test_formula(self):
        r = frame_from([[30, 0]])
        l = frame_from([[10, 0]])
        out = dpc(r, l, min_counts=10)
        assert out.values[0, 0] == pytest.approx(2 * (30 - 10) / 40)
        assert out.valid[0, 0]
        assert not out.valid[0, 1]
        assert out.values[0, 1] == 0.0

    def test_min_counts_threshold(self):
        r = frame_from([[5, 6]])
        l = frame_from([[4, 4]])
        out = dpc(r, l, min_counts=10)
        assert not out.valid[0, 0]
        assert out.valid[0, 1]

    def test_range_bounds(self):
        r = frame_from([[20, 0]])
        l = frame_from([[0, 20]])
        out = dpc(r, l)
        assert out.values[0, 0] == 2.0
        assert out.values[0, 1] == -2.0

    def test_antisymmetry(self):
        rng = np.random.default_rng(0)
        r = frame_from(rng.integers(0, 100, (8, 8)))
        l = frame_from(rng.integers(0, 100, (8, 8)))
        a = dpc(r, l)
        b = dpc(l, r)
        assert np.allclose(a.values, -b.values)
        assert np.array_equal(a.valid, b.valid)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            dpc(frame_from(np.zeros((4, 4))), frame_from(np.zeros((5, 4))))


class TestLineProfile:
    def test_horizontal_line_on_column_pattern(self):
        counts = np.zeros((20, 30), np.int64)
        counts[:, 10] = 7
        frame = frame_from(counts)
        roi = LineRoi(2.0, 10.0, 27.0, 10.0, width=5.0)
        prof = line_profile(frame, roi)
        assert prof.size == 26
        assert prof[8] == pytest.approx(5 * 7)   # sample at x=10 sums 5 rows
        assert prof[0] == 0.0

    def test_roi_validation(self):
        frame = frame_from(np.zeros((10, 10)))
        with pytest.raises(ConfigError):
            line_profile(frame, LineRoi(-1.0, 0.0, 5.0, 0.0))
        with pytest.raises(ConfigError):
            line_profile(frame, LineRoi(0.0, 0.0, 1.0, 0.0))
        with pytest.raises(ConfigError):
            line_profile(frame, LineRoi(0.0, 0.0, 5.0, 0.0, width=0.0))

    def test_roi_dict_roundtrip(self):
        roi = LineRoi(1.0, 2.0, 3.0, 4.0, width=6.0)
        assert LineRoi.from_dict(roi.to_dict()) == roi
        with pytest.raises(ConfigError):
            LineRoi.from_dict({"x0": 1.0})


class TestVisibility:
    @staticmethod
    def bar_frame(mean=1000.0, amp=800.0, period=12):
        xs = np.arange(80)
        row = mean + amp * np.cos(2 * np.pi * xs / period)
        counts = np.tile(np.round(row).astype(np.int64), (40, 1))
        return frame_from(counts)

    def test_clean_grating(self):
        frame = self.bar_frame()
        roi = LineRoi(2.0, 20.0, 70.0, 20.0, width=5.0)
        rep = visibility(frame, roi, n_lines=3)
        # 3-sample smoothing scales a period-12 cosine by (1 + 2 cos(pi/6)) / 3
        c = (1 + 2 * np.cos(np.pi / 6)) / 3
        expected = c * 800.0 / 1000.0
        assert rep.v == pytest.approx(expected, abs=0.005)
        assert len(rep.peak_positions) == 3
        assert len(rep.trough_positions) == 2
        # peak/trough positions land on the grating extrema (x = i + 2)
        assert all((p + 2) % 12 == 0 for p in rep.peak_positions)
        assert all((t + 2) % 12 == 6 for t in rep.trough_positions)

    def test_monotone_in_contrast(self):
        roi = LineRoi(2.0, 20.0, 70.0, 20.0, width=5.0)
        v_lo = visibility(self.bar_frame(amp=100.0), roi).v
        v_hi = visibility(self.bar_frame(amp=900.0), roi).v
        assert v_hi > v_lo > 0

    def test_flat_profile_raises(self):
        frame = frame_from(np.full((40, 80), 50, np.int64))
        roi = LineRoi(2.0, 20.0, 70.0, 20.0, width=5.0)
        with pytest.raises(AnalysisError) as exc:
            visibility(frame, roi, n_lines=3)
        assert exc.value.profile is not None

    def test_report_dict(self):
        rep = visibility(self.bar_frame(), LineRoi(2.0, 20.0, 70.0, 20.0))
        d = rep.to_dict()
        assert set(d) == {"v", "i_max_bar", "i_min_bar", "roi", "profile",
                          "peak_positions", "trough_positions"}
        assert d["i_max_bar"] > d["i_min_bar"]


class TestExports:
    def test_pgm_roundtrip(self, tmp_path):
        rng = np.random.default_rng(1)
        frame = frame_from(rng.integers(0, 70000, (16, 16)))
        path = tmp_path / "img.pgm"
        frame_to_pgm(frame, path)
        back = read_pgm(path)
        assert np.array_equal(back, np.clip(frame.counts, 0, 65535))
        assert frame_pgm_bytes(frame) == path.read_bytes()

    def test_frame_csv(self, tmp_path):
        frame = frame_from([[1, 2], [3, 4]])
        path = tmp_path / "img.csv"
        frame_to_csv(frame, path)
        back = np.loadtxt(path, delimiter=",")
        assert np.array_equal(back, frame.counts)

    def test_dpc_exports(self, tmp_path):
        values = np.array([[2.0, -2.0], [0.5, 0.0]])
        valid = np.array([[True, True], [True, False]])
        frame = DpcFrame(values=values, valid=valid)
        dpc_to_csv(frame, tmp_path / "d.csv")
        back = np.loadtxt(tmp_path / "d.csv", delimiter=",")
        assert np.allclose(back, values)
        dpc_to_pgm(frame, tmp_path / "d.pgm")
        g = read_pgm(tmp_path / "d.pgm")
        assert g[0, 0] == 255 and g[0, 1] == 0
        assert g[1, 1] == 128  # invalid pixels sit mid-scale

    def test_profile_csv(self, tmp_path):
        rep = visibility(TestVisibility.bar_frame(), LineRoi(2.0, 20.0, 70.0, 20.0))
        profile_to_csv(rep, tmp_path / "p.csv")
        lines = (tmp_path / "p.csv").read_text().strip().splitlines()
        assert lines[0] == "sample,integrated_counts"
        assert len(lines) == rep.profile.size + 1
