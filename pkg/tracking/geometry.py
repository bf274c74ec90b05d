"""
Bounding boxes and spatial similarity metrics.

Boxes use the MOT Challenge convention (left, top, width, height) in
continuous pixels. Every function here is pure.
"""

import logging
import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

from .exceptions import GeometryError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BBox:
    """
    Axis-aligned box with non-negative size.
    """
    left: float
    top: float
    width: float
    height: float

    def __post_init__(self):
        values = (self.left, self.top, self.width, self.height)
        if not all(math.isfinite(v) for v in values):
            raise GeometryError(f'Coordonnées non finies: {values}')
        if self.width < 0 or self.height < 0:
            raise GeometryError(f'Taille négative: width={self.width}, height={self.height}')

    @classmethod
    def from_center(cls, cx, cy, width, height):
        width = max(float(width), 0.0)
        height = max(float(height), 0.0)
        return cls(cx - width / 2.0, cy - height / 2.0, width, height)

    @property
    def right(self):
        return self.left + self.width

    @property
    def bottom(self):
        return self.top + self.height

    @property
    def center(self):
        return (self.left + self.width / 2.0, self.top + self.height / 2.0)

    @property
    def area(self):
        return self.width * self.height

    @property
    def diagonal(self):
        return math.hypot(self.width, self.height)

    @property
    def is_degenerate(self):
        return self.width == 0 or self.height == 0

    def as_tlwh(self):
        return (self.left, self.top, self.width, self.height)

    def as_xyxy(self):
        return (self.left, self.top, self.right, self.bottom)


class LengthMode(str, Enum):
    """
    Per-box length used for the GIoU modulation ratio.
    """
    DIAG = 'diag'
    WIDTH = 'width'
    HEIGHT = 'height'
    NONE = 'none'


class SpatialMode(str, Enum):
    """
    Spatial distance names exposed to users (one per ablation row).
    """
    IOU = 'iou'
    GIOU = 'giou'
    WGIOU = 'wgiou'
    HGIOU = 'hgiou'
    DGIOU = 'dgiou'


SPATIAL_LENGTH_MODES = {
    SpatialMode.GIOU: LengthMode.NONE,
    SpatialMode.WGIOU: LengthMode.WIDTH,
    SpatialMode.HGIOU: LengthMode.HEIGHT,
    SpatialMode.DGIOU: LengthMode.DIAG,
}


class Similarity(NamedTuple):
    value: float
    degenerate: bool


def intersection_area(a, b):
    w = min(a.right, b.right) - max(a.left, b.left)
    h = min(a.bottom, b.bottom) - max(a.top, b.top)
    if w <= 0 or h <= 0:
        return 0.0
    return w * h


def enclosing_box(a, b):
    """
    Smallest axis-aligned box containing both boxes.
    """
    left = min(a.left, b.left)
    top = min(a.top, b.top)
    return BBox(left, top, max(a.right, b.right) - left, max(a.bottom, b.bottom) - top)


def iou(a, b):
    """
    Intersection over union, 0 when the union is empty.
    """
    inter = intersection_area(a, b)
    union = a.area + b.area - inter
    if union <= 0:
        return 0.0
    return inter / union


def giou_flagged(a, b):
    """
    Generalized IoU with a degeneracy flag.

    The flag is set when the enclosing box has zero area, in which case
    the value is 0.
    """
    hull = enclosing_box(a, b).area
    if hull <= 0:
        logger.debug('GIoU dégénéré: enveloppe vide pour %s et %s', a, b)
        return Similarity(0.0, True)
    inter = intersection_area(a, b)
    union = a.area + b.area - inter
    value = iou(a, b) - (hull - union) / hull
    return Similarity(value, False)


def giou(a, b):
    return giou_flagged(a, b).value


def _length(box, mode):
    if mode is LengthMode.DIAG:
        return box.diagonal
    if mode is LengthMode.WIDTH:
        return box.width
    return box.height


def modulation_ratio(a, b, mode):
    """
    Ratio min(l_a, l_b) / max(l_a, l_b) of the per-box lengths selected by ``mode``.

    Returns a ``Similarity`` flagged degenerate when both lengths are zero
    (the ratio is then 1).
    """
    mode = LengthMode(mode)
    if mode is LengthMode.NONE:
        return Similarity(1.0, False)
    la, lb = _length(a, mode), _length(b, mode)
    longest = max(la, lb)
    if longest <= 0:
        return Similarity(1.0, True)
    return Similarity(min(la, lb) / longest, False)


def modulated_giou_flagged(a, b, mode=LengthMode.DIAG):
    ratio = modulation_ratio(a, b, mode)
    overlap = giou_flagged(a, b)
    return Similarity(1.0 - ratio.value * overlap.value, ratio.degenerate or overlap.degenerate)


def modulated_giou(a, b, mode=LengthMode.DIAG):
    """
    Modulated GIoU distance ``1 - r * GIoU(a, b)`` in [0, 2].

    ``mode`` picks the length behind ``r``: box diagonal, width, height,
    or none (plain GIoU distance).
    """
    return modulated_giou_flagged(a, b, mode).value


def spatial_distance(a, b, spatial_mode=SpatialMode.DGIOU):
    """
    Distance used for the spatial modulation, dispatched on the user-facing mode.

    ``iou`` is the compatibility distance ``1 - IoU``.
    """
    spatial_mode = SpatialMode(spatial_mode)
    if spatial_mode is SpatialMode.IOU:
        return 1.0 - iou(a, b)
    return modulated_giou(a, b, SPATIAL_LENGTH_MODES[spatial_mode])


def spatial_modulation(distance, off):
    """
    lambda_C = min(1, d / 2 + off).
    """
    if off < 0:
        raise ValueError(f'off doit être positif, reçu {off}')
    return min(1.0, distance / 2.0 + off)


def _array_length(w, h, mode):
    if mode is LengthMode.DIAG:
        return np.hypot(w, h)
    if mode is LengthMode.WIDTH:
        return w
    return h


def spatial_distance_array(a, b, spatial_mode=SpatialMode.DGIOU):
    """
    Elementwise ``spatial_distance`` over broadcastable ``(..., 4)`` tlwh arrays.

    Degenerate cases follow the scalar functions: empty union gives IoU 0,
    empty hull gives GIoU 0, two zero lengths give a ratio of 1.
    """
    spatial_mode = SpatialMode(spatial_mode)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    al, at, aw, ah = np.moveaxis(a, -1, 0)
    bl, bt, bw, bh = np.moveaxis(b, -1, 0)
    ar, ab = al + aw, at + ah
    br, bb = bl + bw, bt + bh
    iw = np.minimum(ar, br) - np.maximum(al, bl)
    ih = np.minimum(ab, bb) - np.maximum(at, bt)
    inter = np.where((iw > 0) & (ih > 0), iw * ih, 0.0)
    union = aw * ah + bw * bh - inter
    with np.errstate(divide='ignore', invalid='ignore'):
        overlap = np.where(union > 0, inter / union, 0.0)
        if spatial_mode is SpatialMode.IOU:
            return 1.0 - overlap
        left, top = np.minimum(al, bl), np.minimum(at, bt)
        hull = (np.maximum(ar, br) - left) * (np.maximum(ab, bb) - top)
        generalized = np.where(hull > 0, overlap - (hull - union) / hull, 0.0)
        mode = SPATIAL_LENGTH_MODES[spatial_mode]
        if mode is LengthMode.NONE:
            return 1.0 - generalized
        la, lb = _array_length(aw, ah, mode), _array_length(bw, bh, mode)
        longest = np.maximum(la, lb)
        ratio = np.where(longest > 0, np.minimum(la, lb) / longest, 1.0)
    return 1.0 - ratio * generalized
