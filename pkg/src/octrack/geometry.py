"""Axis-aligned bounding-box arithmetic: areas, IoU, directional IoA.

Boxes are stored as (left, top, width, height) in continuous pixel
coordinates, matching the MOT file convention. Corner form is derived
internally where needed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box in pixel coordinates.

    Zero or negative extents are rejected at construction so overlap
    ratios never divide by zero.
    """

    left: float
    top: float
    width: float
    height: float

    def __post_init__(self):
        for name in ("left", "top", "width", "height"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValueError(f"non-finite box field {name}={v!r}")
        if self.width <= 0 or self.height <= 0:
            raise ValueError(
                f"box extents must be positive, got width={self.width}, height={self.height}"
            )

    @property
    def right(self) -> float:
        return self.left + self.width

    @property
    def bottom(self) -> float:
        return self.top + self.height

    @property
    def center(self) -> tuple[float, float]:
        return (self.left + self.width / 2.0, self.top + self.height / 2.0)

    def as_tlwh(self) -> tuple[float, float, float, float]:
        return (self.left, self.top, self.width, self.height)


def area(b: BoundingBox) -> float:
    """Box area in pixels^2."""
    return b.width * b.height


def intersection_area(a: BoundingBox, b: BoundingBox) -> float:
    """Overlap area of two boxes; 0 when disjoint. Symmetric."""
    iw = min(a.right, b.right) - max(a.left, b.left)
    ih = min(a.bottom, b.bottom) - max(a.top, b.top)
    if iw <= 0 or ih <= 0:
        return 0.0
    return iw * ih


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union, symmetric, in [0, 1]."""
    inter = intersection_area(a, b)
    if inter == 0.0:
        return 0.0
    return inter / (area(a) + area(b) - inter)


def ioa(reference: BoundingBox, other: BoundingBox) -> float:
    """Intersection over the *reference* box's area.

    Directional: ioa(a, b) and ioa(b, a) generally differ. Value is 1
    exactly when `other` covers `reference`.
    """
    return intersection_area(reference, other) / area(reference)


def pairwise_ioa_matrix(boxes: list[BoundingBox]) -> np.ndarray:
    """n x n matrix with entry (i, j) = ioa(box_i, box_j).

    Row index is the reference box. Diagonal entries are exactly 1.
    Empty input yields a 0 x 0 matrix.
    """
    n = len(boxes)
    if n == 0:
        return np.zeros((0, 0), dtype=np.float64)
    left = np.array([b.left for b in boxes])
    top = np.array([b.top for b in boxes])
    right = np.array([b.right for b in boxes])
    bottom = np.array([b.bottom for b in boxes])
    areas = np.array([area(b) for b in boxes])

    iw = np.minimum(right[:, None], right[None, :]) - np.maximum(left[:, None], left[None, :])
    ih = np.minimum(bottom[:, None], bottom[None, :]) - np.maximum(top[:, None], top[None, :])
    inter = np.clip(iw, 0.0, None) * np.clip(ih, 0.0, None)
    mat = inter / areas[:, None]
    # exact ones on the diagonal regardless of float rounding
    np.fill_diagonal(mat, 1.0)
    return mat
