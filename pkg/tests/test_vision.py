import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from balltrack.imaging import GrayImage, Mask, RgbImage
from balltrack.vision import (
    Cluster,
    ParameterError,
    PipelineConfig,
    bounding_box,
    box_size,
    center_of_gravity,
    circularity,
    cluster_points,
    detect_ball,
    detect_circle,
    green_channel_extract,
    mean_filter,
    segment_intensity,
    threshold_hysteresis,
)

from .oracles import (
    centroid_fraction,
    disk_points,
    flood_components,
    hysteresis_rows,
    mean_filter_rows,
)

BG = 64


def rgb(*px):
    return RgbImage(np.array([list(px)], dtype=np.uint8))


def gray(rows):
    return GrayImage(np.array(rows, dtype=np.uint8))


def mask_of(points, w, h):
    m = np.zeros((h, w), dtype=bool)
    for x, y in points:
        m[y, x] = True
    return Mask(m)


def disk_frame(cx=320, cy=240, r=65, color=(0, 200, 0), w=640, h=480):
    data = np.full((h, w, 3), BG, dtype=np.uint8)
    for x, y in disk_points(cx, cy, r):
        if 0 <= x < w and 0 <= y < h:
            data[y, x] = color
    return data


# -- green channel -------------------------------------------------------------


@pytest.mark.parametrize(
    "px,expected",
    [((255, 255, 255), 0), ((0, 255, 0), 255), ((100, 50, 30), 0), ((10, 200, 20), 255)],
)
def test_green_channel_examples(px, expected):
    assert green_channel_extract(rgb(px)).data[0, 0] == expected


@settings(max_examples=200)
@given(st.integers(0, 255), st.integers(0, 255), st.integers(0, 255))
def test_green_channel_formula(r, g, b):
    out = green_channel_extract(rgb((r, g, b))).data[0, 0]
    assert out == min(255, max(0, (g - r) + (g - b)))


# -- hysteresis ----------------------------------------------------------------


def test_hysteresis_empty():
    assert threshold_hysteresis(gray(np.zeros((5, 5))), 50, 128).count() == 0


def test_hysteresis_isolated_seed():
    g = np.zeros((5, 5))
    g[2, 3] = 255
    m = threshold_hysteresis(gray(g), 50, 128)
    assert m.count() == 1 and m[3, 2]


def test_hysteresis_row():
    m = threshold_hysteresis(gray([[60, 60, 200, 60, 40]]), 50, 128)
    assert m.data[0].tolist() == [True, True, True, True, False]


def test_hysteresis_rejects_inverted_band():
    with pytest.raises(ParameterError):
        threshold_hysteresis(gray([[0]]), 130, 120)


@settings(max_examples=60, deadline=None)
@given(arrays(np.uint8, st.tuples(st.integers(1, 14), st.integers(1, 14))), st.integers(0, 255), st.integers(0, 255))
def test_hysteresis_matches_flood_fill(data, a, b):
    low, high = min(a, b), max(a, b)
    got = threshold_hysteresis(GrayImage(data), low, high).data
    assert got.tolist() == hysteresis_rows(data.tolist(), low, high)
    assert not (got & (data < low)).any()
    assert got[data >= high].all()


@settings(max_examples=40, deadline=None)
@given(arrays(np.uint8, st.tuples(st.integers(1, 10), st.integers(1, 10))), st.integers(0, 255))
def test_hysteresis_equal_levels_is_plain_threshold(data, t):
    g = GrayImage(data)
    assert threshold_hysteresis(g, t, t) == segment_intensity(g, t, 255)


# -- mean filter ---------------------------------------------------------------


def test_mean_constant():
    out = mean_filter(gray(np.full((6, 7), 77)), 3)
    assert (out.data == 77).all()


def test_mean_single_pixel():
    g = np.zeros((7, 7))
    g[3, 3] = 90
    out = mean_filter(gray(g), 3).data
    expected = np.zeros((7, 7), dtype=np.uint8)
    expected[2:5, 2:5] = 10
    assert (out == expected).all()


def test_mean_identity_k1():
    g = gray(np.arange(12).reshape(3, 4))
    assert mean_filter(g, 1) == g


@pytest.mark.parametrize("k", [0, 2, 4, -1])
def test_mean_rejects_even_kernel(k):
    with pytest.raises(ParameterError):
        mean_filter(gray([[1]]), k)


@settings(max_examples=50, deadline=None)
@given(arrays(np.uint8, st.tuples(st.integers(1, 9), st.integers(1, 9))), st.sampled_from([1, 3, 5, 7]))
def test_mean_matches_direct_convolution(data, k):
    out = mean_filter(GrayImage(data), k).data
    assert out.tolist() == mean_filter_rows(data.tolist(), k)
    assert out.min() >= data.min() and out.max() <= data.max()


# -- segmentation --------------------------------------------------------------


def test_segment_full_range():
    assert segment_intensity(gray([[0, 128, 255]]), 0, 255).count() == 3


def test_segment_boundary():
    assert segment_intensity(gray([[127, 128, 129]]), 128, 128).data[0].tolist() == [False, True, False]


def test_segment_random_matches_per_pixel():
    rng = np.random.default_rng(5)
    data = rng.integers(0, 256, size=(40, 50), dtype=np.uint8)
    m = segment_intensity(GrayImage(data), 64, 192)
    for y in range(40):
        for x in range(50):
            assert m[x, y] == (64 <= int(data[y, x]) <= 192)


def test_segment_rejects_inverted():
    with pytest.raises(ParameterError):
        segment_intensity(gray([[0]]), 5, 4)


# -- clustering ----------------------------------------------------------------


def test_cluster_empty():
    assert cluster_points(Mask(np.zeros((4, 4), dtype=bool)), 1, 1) == []


def test_cluster_two_disks():
    pts = disk_points(60, 60, 20) + disk_points(150, 60, 20)  # 50 px apart at the rims
    clusters = cluster_points(mask_of(pts, 200, 120), 1, 1)
    assert len(clusters) == 2


def test_cluster_disk_size():
    pts = disk_points(320, 240, 50)
    assert len(pts) == 7845
    clusters = cluster_points(mask_of(pts, 640, 480), 1, 50)
    assert len(clusters) == 1 and clusters[0].size == 7845


def test_cluster_discards_small_and_sorts():
    pts = disk_points(20, 20, 8) + disk_points(70, 20, 4) + [(5, 50)]
    clusters = cluster_points(mask_of(pts, 100, 60), 1, 2)
    assert [c.size for c in clusters] == sorted((len(disk_points(20, 20, 8)), len(disk_points(70, 20, 4))), reverse=True)


def test_cluster_equal_size_tie_break():
    # two identical 2x2 blocks: the upper one comes first regardless of x
    pts = [(8, 1), (9, 1), (8, 2), (9, 2), (1, 6), (2, 6), (1, 7), (2, 7)]
    clusters = cluster_points(mask_of(pts, 12, 10), 1, 1)
    assert bounding_box(clusters[0]).min_y == 1


@pytest.mark.parametrize("radius", [1, 2, 3])
def test_cluster_matches_flood_fill(radius):
    rng = np.random.default_rng(100 + radius)
    for _ in range(25):
        data = rng.random((30, 40)) < 0.12
        pts = {(int(x), int(y)) for y, x in zip(*np.nonzero(data))}
        got = {frozenset(c.point_set()) for c in cluster_points(Mask(data), radius, 1)}
        want = {frozenset(c) for c in flood_components(pts, radius)}
        assert got == want


@settings(max_examples=40, deadline=None)
@given(arrays(np.bool_, st.tuples(st.integers(1, 16), st.integers(1, 16))), st.integers(1, 6))
def test_cluster_partition(data, min_cluster):
    clusters = cluster_points(Mask(data), 1, min_cluster)
    seen = set()
    for c in clusters:
        s = c.point_set()
        assert len(s) == c.size >= min_cluster
        assert not (s & seen)
        seen |= s
    pts = {(int(x), int(y)) for y, x in zip(*np.nonzero(data))}
    kept = set().union(*[c for c in flood_components(pts, 1) if len(c) >= min_cluster])
    assert seen == kept
    sizes = [c.size for c in clusters]
    assert sizes == sorted(sizes, reverse=True)


def test_cluster_independent_of_scan_order():
    rng = np.random.default_rng(9)
    data = rng.random((25, 25)) < 0.2
    a = [c.point_set() for c in cluster_points(Mask(data), 1, 1)]
    # transpose, cluster, transpose back
    b = [{(y, x) for x, y in c.point_set()} for c in cluster_points(Mask(data.T), 1, 1)]
    assert sorted(map(sorted, a)) == sorted(map(sorted, b))


# -- centroid / box ------------------------------------------------------------


def test_centroid_single():
    assert center_of_gravity(Cluster.from_points([(10, 20)])) == (10.0, 20.0)


def test_centroid_disk():
    cx, cy = center_of_gravity(Cluster.from_points(disk_points(320, 240, 50)))
    assert abs(cx - 320) <= 0.51 and abs(cy - 240) <= 0.51


def test_centroid_l_shape():
    cx, cy = center_of_gravity(Cluster.from_points([(0, 0), (1, 0), (0, 1)]))
    assert (cx, cy) == (1 / 3, 1 / 3)


def test_centroid_empty_rejected():
    with pytest.raises(ValueError):
        center_of_gravity(Cluster.from_points([]))
    with pytest.raises(ValueError):
        bounding_box(Cluster.from_points([]))


def test_centroid_exact_on_random_masks():
    rng = np.random.default_rng(2)
    for _ in range(50):
        pts = {(int(x), int(y)) for x, y in rng.integers(0, 500, size=(rng.integers(1, 300), 2))}
        got = center_of_gravity(Cluster.from_points(sorted(pts)))
        fx, fy = centroid_fraction(pts)
        assert got == (float(fx), float(fy))


def test_box_sizes():
    assert box_size(bounding_box(Cluster.from_points([(4, 4)]))) == 1
    assert box_size(bounding_box(Cluster.from_points(disk_points(100, 100, 65)))) == 131
    assert box_size(bounding_box(Cluster.from_points([(0, 0), (9, 3)]))) == 10


# -- circle test ---------------------------------------------------------------


def test_circle_disk_50():
    c = detect_circle(Cluster.from_points(disk_points(320, 240, 50)))
    assert c is not None
    assert abs(c.radius - 50) <= 1
    assert c.circularity >= 0.95


def test_circle_square_rejected():
    sq = Cluster.from_points([(x, y) for x in range(100) for y in range(100)])
    # pixel-scan value; the continuum limit is 2/pi
    assert circularity(sq) == pytest.approx(0.6495457324432011, abs=1e-12)
    assert abs(circularity(sq) - 2 / math.pi) < 0.02
    assert detect_circle(sq) is None


def test_circle_radius_bounds():
    small = Cluster.from_points(disk_points(50, 50, 5))
    assert math.sqrt(small.size / math.pi) == pytest.approx(5.0777, abs=1e-4)
    assert detect_circle(small) is None
    assert detect_circle(Cluster.from_points(disk_points(300, 300, 250))) is None


def _rot90(pts, cx, cy):
    return [(int(round(cx - (y - cy))), int(round(cy + (x - cx)))) for x, y in pts]


@settings(max_examples=30, deadline=None)
@given(
    st.lists(st.tuples(st.integers(0, 30), st.integers(0, 30)), min_size=1, max_size=80, unique=True),
    st.integers(-50, 50),
    st.integers(-50, 50),
)
def test_circularity_translation_and_rotation(pts, dx, dy):
    base = circularity(Cluster.from_points(pts))
    moved = circularity(Cluster.from_points([(x + dx, y + dy) for x, y in pts]))
    assert moved == pytest.approx(base, rel=1e-12)
    # 90 degree rotation about an integer pivot keeps the pixel geometry
    rotated = circularity(Cluster.from_points(_rot90(pts, 15, 15)))
    assert rotated == pytest.approx(base, rel=1e-12)
    assert 0 <= base <= 1


def test_config_invariants():
    for bad in (
        dict(hyst_low=130, hyst_high=120),
        dict(mean_kernel=4),
        dict(r_min=300),
        dict(circ_thresh=0),
        dict(link_radius=0),
    ):
        with pytest.raises(ParameterError):
            PipelineConfig(**bad)


# -- full detector -------------------------------------------------------------


def test_detect_ball_scene():
    d = detect_ball(RgbImage(disk_frame()))
    assert d is not None
    assert d.cx == pytest.approx(320, abs=0.51)
    assert d.cy == pytest.approx(240, abs=0.51)
    assert d.box_size == 131
    assert d.bbox.contains(d.cx, d.cy)


def test_detect_ball_gray_frame():
    assert detect_ball(RgbImage(np.full((480, 640, 3), BG, dtype=np.uint8))) is None


def test_detect_ball_noise():
    clean = detect_ball(RgbImage(disk_frame()))
    data = disk_frame()
    rng = np.random.default_rng(1234)
    idx = rng.choice(640 * 480, size=round(0.005 * 640 * 480), replace=False)
    data.reshape(-1, 3)[idx] = (0, 200, 0)
    noisy = detect_ball(RgbImage(data))
    assert noisy is not None
    assert abs(noisy.cx - clean.cx) <= 1 and abs(noisy.cy - clean.cy) <= 1
    assert abs(noisy.box_size - clean.box_size) <= 2


def test_detect_ball_falls_through_to_smaller_cluster():
    data = np.full((480, 640, 3), BG, dtype=np.uint8)
    data[50:250, 50:250] = (0, 200, 0)  # big square, rejected as non-circular
    for x, y in disk_points(450, 300, 30):
        data[y, x] = (0, 200, 0)
    d = detect_ball(RgbImage(data))
    assert d is not None and d.cx == pytest.approx(450, abs=0.51)


def test_detect_ball_deterministic():
    frame = RgbImage(disk_frame(cx=301, cy=222, r=40))
    assert detect_ball(frame) == detect_ball(frame)


@pytest.mark.parametrize("dx,dy", [(0, 0), (17, -9), (-120, 60), (200, 100)])
def test_detect_ball_translation(dx, dy):
    base = detect_ball(RgbImage(disk_frame(300, 220, 45)))
    moved = detect_ball(RgbImage(disk_frame(300 + dx, 220 + dy, 45)))
    assert moved.cx - base.cx == pytest.approx(dx, abs=0.51)
    assert moved.cy - base.cy == pytest.approx(dy, abs=0.51)
    assert moved.box_size == base.box_size
