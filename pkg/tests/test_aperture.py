import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qpcm.aperture import (ApertureMask, area, complement, contains, intersect,
                           load_mask, mask_from_dict, mask_to_dict,
                           save_mask, select_pairs)
from qpcm.coinc import CoincidencePairStream
from qpcm.errors import ConfigError
from qpcm.optics import Region

REGION = Region(136, 73, 246, 183)
CX, CY = REGION.center


def grid_points():
    xs = np.arange(REGION.x0, REGION.x1)
    ys = np.arange(REGION.y0, REGION.y1)
    xx, yy = np.meshgrid(xs, ys)
    return xx.ravel().astype(float), yy.ravel().astype(float)


def test_full_mask_contains_everything():
    px, py = grid_points()
    assert contains(ApertureMask("full"), px, py, REGION).all()
    assert area(ApertureMask("full"), REGION) == REGION.width * REGION.height


def test_half_plane_zero_angle():
    m = ApertureMask("half_plane", angle=0.0, offset=0.0)
    assert contains(m, CX + 5, CY, REGION)
    assert contains(m, CX, CY, REGION)       # boundary closed
    assert not contains(m, CX - 5, CY, REGION)


def test_half_plane_offset_and_angle():
    m = ApertureMask("half_plane", angle=np.pi / 2, offset=3.0)
    assert contains(m, CX, CY + 3.0, REGION)
    assert not contains(m, CX, CY + 2.9, REGION)


def test_disk_and_annulus_membership():
    d = ApertureMask("disk", center=(2.0, -1.0), radius=10.0)
    assert contains(d, CX + 2.0, CY - 1.0, REGION)
    assert contains(d, CX + 12.0, CY - 1.0, REGION)   # closed boundary
    assert not contains(d, CX + 12.1, CY - 1.0, REGION)
    a = ApertureMask("annulus", r_in=5.0, r_out=15.0)
    assert not contains(a, CX, CY, REGION)
    assert contains(a, CX + 5.0, CY, REGION)
    assert contains(a, CX + 15.0, CY, REGION)
    assert not contains(a, CX + 15.2, CY, REGION)


@pytest.mark.parametrize("mask", [
    ApertureMask("half_plane", angle=0.7, offset=4.0),
    ApertureMask("half_plane", angle=0.0, offset=0.0),
    ApertureMask("disk", center=(3.0, 3.0), radius=20.0),
    ApertureMask("annulus", r_in=8.0, r_out=30.0),
])
def test_complement_partitions_grid(mask):
    px, py = grid_points()
    base = contains(mask, px, py, REGION)
    comp = contains(complement(mask, REGION), px, py, REGION)
    # boundary points belong to the base mask, never both, never neither
    assert not np.any(base & comp)
    assert np.all(base | comp)


def test_half_plane_complement_stays_analytic():
    m = ApertureMask("half_plane", angle=0.3, offset=2.0)
    c = complement(m, REGION)
    assert c.kind == "half_plane"
    assert c.angle == pytest.approx(0.3 + np.pi)
    assert c.offset == -2.0


def test_intersect():
    a = ApertureMask("half_plane", angle=0.0)
    b = ApertureMask("half_plane", angle=np.pi / 2)
    quad = intersect(a, b, REGION)
    px, py = grid_points()
    got = contains(quad, px, py, REGION)
    want = contains(a, px, py, REGION) & contains(b, px, py, REGION)
    assert np.array_equal(got, want)


def test_select_pairs_preserves_order():
    rng = np.random.default_rng(0)
    n = 1000
    pairs = CoincidencePairStream(
        near_toa=np.sort(rng.uniform(0, 1e6, n)),
        dt=rng.uniform(-20, 20, n),
        near_x=rng.uniform(10, 120, n), near_y=rng.uniform(73, 183, n),
        far_x=rng.uniform(REGION.x0, REGION.x1, n),
        far_y=rng.uniform(REGION.y0, REGION.y1, n),
    )
    mask = ApertureMask("half_plane", angle=0.0)
    kept, count = select_pairs(pairs, mask, REGION)
    assert count == len(kept)
    assert np.all(np.diff(kept.near_toa) >= 0)
    assert contains(mask, kept.far_x, kept.far_y, REGION).all()
    other, count2 = select_pairs(pairs, complement(mask, REGION), REGION)
    assert count + count2 == n


def test_bitmap_indexing_rounds_to_pixels():
    grid = np.zeros((REGION.height, REGION.width), bool)
    grid[7, 3] = True
    m = ApertureMask("bitmap", bitmap=grid)
    assert contains(m, REGION.x0 + 3.4, REGION.y0 + 6.6, REGION)
    assert not contains(m, REGION.x0 + 4.0, REGION.y0 + 7.0, REGION)
    # points outside the region never match
    assert not contains(m, REGION.x0 - 1.0, REGION.y0 + 7.0, REGION)


def test_bitmap_shape_mismatch():
    m = ApertureMask("bitmap", bitmap=np.zeros((4, 4), bool))
    with pytest.raises(ConfigError, match="shape"):
        contains(m, CX, CY, REGION)


@pytest.mark.parametrize("mask", [
    ApertureMask("full", label="everything"),
    ApertureMask("half_plane", label="hp", angle=1.25, offset=-3.5),
    ApertureMask("disk", label="d", center=(1.0, 2.0), radius=9.0),
    ApertureMask("annulus", label="a", center=(-2.0, 0.5), r_in=4.0, r_out=11.0),
])
def test_dict_roundtrip_analytic(mask):
    back = mask_from_dict(mask_to_dict(mask))
    px, py = grid_points()
    assert np.array_equal(contains(mask, px, py, REGION),
                          contains(back, px, py, REGION))
    assert back.label == mask.label


@settings(max_examples=50, deadline=None)
@given(st.lists(st.lists(st.booleans(), min_size=1, max_size=40),
                min_size=1, max_size=12).filter(
                    lambda rows: len({len(r) for r in rows}) == 1))
def test_bitmap_rle_roundtrip(rows):
    grid = np.array(rows, dtype=bool)
    d = mask_to_dict(ApertureMask("bitmap", bitmap=grid))
    # rows encode run lengths that alternate False/True starting with False
    for row, runs in zip(grid, d["rows"]):
        assert sum(runs) == grid.shape[1]
        if row[0]:
            assert runs[0] == 0
    back = mask_from_dict(d)
    assert np.array_equal(back.bitmap, grid)


def test_mask_json_file_roundtrip(tmp_path):
    grid = np.zeros((5, 7), bool)
    grid[2, 1:5] = True
    path = tmp_path / "mask.json"
    save_mask(path, ApertureMask("bitmap", label="brush", bitmap=grid))
    with open(path) as fh:
        doc = json.load(fh)
    assert doc["kind"] == "bitmap"
    assert doc["width"] == 7 and doc["height"] == 5
    back = load_mask(path)
    assert np.array_equal(back.bitmap, grid)


def test_bad_mask_dicts():
    with pytest.raises(ConfigError):
        mask_from_dict({"kind": "wedge"})
    with pytest.raises(ConfigError):
        mask_from_dict({"kind": "disk"})  # missing radius raises KeyError -> bubbles
    with pytest.raises(ConfigError):
        mask_from_dict({"kind": "bitmap", "width": 4, "height": 2,
                        "rows": [[4], [3]]})
    with pytest.raises(ConfigError):
        mask_from_dict([1, 2, 3])


def test_invalid_mask_params():
    with pytest.raises(ConfigError):
        ApertureMask("disk", radius=0.0)
    with pytest.raises(ConfigError):
        ApertureMask("annulus", r_in=5.0, r_out=3.0)
    with pytest.raises(ConfigError):
        ApertureMask("bitmap")
