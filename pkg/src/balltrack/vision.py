"""Green-ball detector.

Stages, in order::

    RGB frame -> green-excess channel -> mean filter -> hysteresis threshold
              -> point clustering -> circle test on clusters, largest first

Each stage is a pure function and can be called on its own; ``detect_ball``
composes them. ``run_pipeline`` does the same but keeps every intermediate
result so the CLI can dump them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields

import numpy as np
from scipy import ndimage
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .imaging import GrayImage, Mask, PointPx, RgbImage


class ParameterError(ValueError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    hyst_low: int = 60
    hyst_high: int = 120
    mean_kernel: int = 3
    link_radius: int = 1
    min_cluster: int = 50
    r_min: float = 10.0
    r_max: float = 210.0
    circ_thresh: float = 0.8

    def __post_init__(self):
        if not 0 <= self.hyst_low <= self.hyst_high <= 255:
            raise ParameterError("need 0 <= hyst_low <= hyst_high <= 255")
        if self.mean_kernel < 1 or self.mean_kernel % 2 == 0:
            raise ParameterError("mean_kernel must be odd and >= 1")
        if self.link_radius < 1:
            raise ParameterError("link_radius must be >= 1")
        if self.min_cluster < 1:
            raise ParameterError("min_cluster must be >= 1")
        if not 0 <= self.r_min < self.r_max:
            raise ParameterError("need 0 <= r_min < r_max")
        if not 0 < self.circ_thresh <= 1:
            raise ParameterError("circ_thresh must lie in (0, 1]")


@dataclass(frozen=True, eq=False)
class Cluster:
    """A group of linked foreground pixels; ``points`` is an ``(n, 2)`` int array of (x, y)."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.int64).reshape(-1, 2)
        object.__setattr__(self, "points", pts)

    @classmethod
    def from_points(cls, points) -> Cluster:
        return cls(np.array([tuple(p) for p in points], dtype=np.int64).reshape(-1, 2))

    @property
    def size(self) -> int:
        return len(self.points)

    def point_set(self) -> set[PointPx]:
        return {PointPx(int(x), int(y)) for x, y in self.points}


@dataclass(frozen=True)
class BBox:
    min_x: int
    max_x: int
    min_y: int
    max_y: int

    @property
    def width(self) -> int:
        return self.max_x - self.min_x + 1

    @property
    def height(self) -> int:
        return self.max_y - self.min_y + 1

    def contains(self, x: float, y: float) -> bool:
        return self.min_x <= x <= self.max_x and self.min_y <= y <= self.max_y


@dataclass(frozen=True)
class Circle:
    cx: float
    cy: float
    radius: float
    circularity: float


@dataclass(frozen=True)
class Detection:
    cx: float
    cy: float
    radius: float
    box_size: int
    bbox: BBox
    circularity: float = 1.0


# --------------------------------------------------------------------------
# per-pixel stages


def green_channel_extract(img: RgbImage) -> GrayImage:
    """Green excess ``(G-R) + (G-B)``, clamped to [0, 255]."""
    px = img.data.astype(np.int16)
    r, g, b = px[..., 0], px[..., 1], px[..., 2]
    out = 2 * g - r - b
    np.clip(out, 0, 255, out=out)
    return GrayImage(out.astype(np.uint8))


def mean_filter(g: GrayImage, k: int) -> GrayImage:
    """k-by-k box average, floored, with replicated borders."""
    if k < 1 or k % 2 == 0:
        raise ParameterError(f"mean filter kernel must be odd and >= 1, got {k}")
    if k == 1:
        return g
    h = k // 2
    padded = np.pad(g.data.astype(np.int32), h, mode="edge")
    # summed-area table with a zero row/column in front
    sat = np.zeros((padded.shape[0] + 1, padded.shape[1] + 1), dtype=np.int32)
    np.cumsum(padded, axis=0, out=sat[1:, 1:])
    np.cumsum(sat[1:, 1:], axis=1, out=sat[1:, 1:])
    H, W = g.shape
    box = sat[k : k + H, k : k + W] - sat[:H, k : k + W] - sat[k : k + H, :W] + sat[:H, :W]
    return GrayImage((box // (k * k)).astype(np.uint8))


def segment_intensity(g: GrayImage, lo: int, hi: int) -> Mask:
    if lo > hi:
        raise ParameterError(f"lo ({lo}) > hi ({hi})")
    d = g.data
    return Mask((d >= lo) & (d <= hi))


_EIGHT = np.ones((3, 3), dtype=bool)


def label_linked(mask: np.ndarray, link_radius: int = 1) -> tuple[np.ndarray, int]:
    """Label components where pixels link when their Chebyshev distance is <= link_radius.

    Returns ``(labels, count)`` with background 0 and labels ``1..count``.
    """
    if link_radius == 1:
        labels, count = ndimage.label(mask, structure=_EIGHT)
        return labels, int(count)
    ys, xs = np.nonzero(mask)
    n = len(xs)
    labels = np.zeros(mask.shape, dtype=np.int32)
    if n == 0:
        return labels, 0
    index = np.full(mask.shape, -1, dtype=np.int64)
    index[ys, xs] = np.arange(n)
    H, W = mask.shape
    src, dst = [], []
    # half of the (2r+1)^2 neighbourhood suffices for an undirected graph
    for dy in range(0, link_radius + 1):
        for dx in range(-link_radius, link_radius + 1):
            if dy == 0 and dx <= 0:
                continue
            ty, tx = ys + dy, xs + dx
            ok = (ty < H) & (tx >= 0) & (tx < W)
            j = np.full(n, -1, dtype=np.int64)
            j[ok] = index[ty[ok], tx[ok]]
            hit = j >= 0
            src.append(np.nonzero(hit)[0])
            dst.append(j[hit])
    src = np.concatenate(src)
    dst = np.concatenate(dst)
    graph = coo_matrix((np.ones(len(src), dtype=np.int8), (src, dst)), shape=(n, n))
    count, comp = connected_components(graph, directed=False)
    labels[ys, xs] = comp + 1
    return labels, int(count)


def threshold_hysteresis(g: GrayImage, low: int, high: int) -> Mask:
    """Keep pixels >= low that are 8-connected, through pixels >= low, to a pixel >= high."""
    if low > high:
        raise ParameterError(f"hysteresis low ({low}) > high ({high})")
    weak = g.data >= low
    labels, count = label_linked(weak, 1)
    if count == 0:
        return Mask(weak)
    seeded = np.zeros(count + 1, dtype=bool)
    seeded[labels[g.data >= high]] = True
    seeded[0] = False
    return Mask(seeded[labels])


# --------------------------------------------------------------------------
# clusters


def _bbox_of(points: np.ndarray) -> BBox:
    mn = points.min(axis=0)
    mx = points.max(axis=0)
    return BBox(int(mn[0]), int(mx[0]), int(mn[1]), int(mx[1]))


def cluster_points(m: Mask, link_radius: int = 1, min_cluster: int = 1) -> list[Cluster]:
    """Linked components of ``m`` with at least ``min_cluster`` pixels.

    Sorted by size descending; equal sizes are ordered by the top-left
    corner of their bounding box, (min_y, min_x), so the order does not
    depend on how the mask was scanned.
    """
    if link_radius < 1:
        raise ParameterError("link_radius must be >= 1")
    labels, count = label_linked(m.data, link_radius)
    if count == 0:
        return []
    flat = labels.ravel()
    order = np.argsort(flat, kind="stable")
    sizes = np.bincount(flat, minlength=count + 1)
    starts = np.concatenate(([0], np.cumsum(sizes)))
    W = m.width
    clusters = []
    for lab in range(1, count + 1):
        if sizes[lab] < min_cluster:
            continue
        idx = order[starts[lab] : starts[lab + 1]]
        pts = np.column_stack((idx % W, idx // W))
        clusters.append(Cluster(pts))

    def key(c: Cluster):
        bb = _bbox_of(c.points)
        return (-c.size, bb.min_y, bb.min_x)

    clusters.sort(key=key)
    return clusters


def center_of_gravity(c: Cluster) -> tuple[float, float]:
    """Mean pixel coordinate. Sums are exact integers, so the result is the correctly rounded ratio."""
    n = c.size
    if n == 0:
        raise ValueError("center of gravity of an empty cluster")
    sx = int(c.points[:, 0].sum())
    sy = int(c.points[:, 1].sum())
    return sx / n, sy / n


def bounding_box(c: Cluster) -> BBox:
    if c.size == 0:
        raise ValueError("bounding box of an empty cluster")
    return _bbox_of(c.points)


def box_size(bb: BBox) -> int:
    return max(bb.width, bb.height)


def circularity(c: Cluster) -> float:
    """``n / (pi * d_max^2)``, capped at 1.

    ``d_max`` is the largest distance from a pixel centre to the centroid,
    floored at half a pixel. A rasterized disk scores close to 1, an
    axis-aligned square about 2/pi.
    """
    cx, cy = center_of_gravity(c)
    d = c.points - np.array([cx, cy])
    d_max = max(math.sqrt(float((d * d).sum(axis=1).max())), 0.5)
    return min(1.0, c.size / (math.pi * d_max * d_max))


def detect_circle(c: Cluster, cfg: PipelineConfig = PipelineConfig()) -> Circle | None:
    if c.size == 0:
        raise ValueError("circle test on an empty cluster")
    cx, cy = center_of_gravity(c)
    r_est = math.sqrt(c.size / math.pi)
    if not cfg.r_min <= r_est <= cfg.r_max:
        return None
    circ = circularity(c)
    if circ < cfg.circ_thresh:
        return None
    return Circle(cx, cy, r_est, circ)


# --------------------------------------------------------------------------
# composed detector


@dataclass
class PipelineResult:
    green: GrayImage
    smoothed: GrayImage
    mask: Mask
    clusters: list[Cluster]
    detection: Detection | None
    chosen: int | None = None  # index into clusters of the accepted one
    circles: list[Circle | None] = field(default_factory=list)


def run_pipeline(frame: RgbImage, cfg: PipelineConfig = PipelineConfig()) -> PipelineResult:
    green = green_channel_extract(frame)
    smoothed = mean_filter(green, cfg.mean_kernel)
    mask = threshold_hysteresis(smoothed, cfg.hyst_low, cfg.hyst_high)
    clusters = cluster_points(mask, cfg.link_radius, cfg.min_cluster)
    result = PipelineResult(green, smoothed, mask, clusters, None)
    for i, c in enumerate(clusters):
        circle = detect_circle(c, cfg)
        result.circles.append(circle)
        if circle is None:
            continue
        bb = bounding_box(c)
        result.detection = Detection(
            cx=circle.cx,
            cy=circle.cy,
            radius=circle.radius,
            box_size=box_size(bb),
            bbox=bb,
            circularity=circle.circularity,
        )
        result.chosen = i
        break
    return result


def detect_ball(frame: RgbImage, cfg: PipelineConfig = PipelineConfig()) -> Detection | None:
    return run_pipeline(frame, cfg).detection


def config_fields() -> list[str]:
    return [f.name for f in fields(PipelineConfig)]
