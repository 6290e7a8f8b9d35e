"""Detector probes rasterised onto the output grid, and measurement matrices.

Pixel ``(i, j)`` occupies ``[j, j+1) x [i, i+1)`` in continuous image
coordinates; probe centres are continuous.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import ConfigurationError, EmptyProbeError
from .io import KIND_MEASUREMENT, read_matrix, write_matrix

SUPERSAMPLE = 16


class Shape(str, Enum):
    SQUARE = "square"
    CIRCLE = "circle"
    POINT = "point"


@dataclass(frozen=True)
class Probe:
    shape: Shape
    size: float = 1.0  # side for squares, diameter for circles

    def __post_init__(self):
        object.__setattr__(self, "shape", Shape(self.shape))
        if self.shape is not Shape.POINT and not self.size > 0:
            raise ConfigurationError("probe size must be positive")

    @property
    def area(self) -> float:
        if self.shape is Shape.SQUARE:
            return self.size**2
        if self.shape is Shape.CIRCLE:
            return np.pi * (self.size / 2) ** 2
        return 1.0


@dataclass(frozen=True)
class SamplePoint:
    x: float
    y: float


@dataclass
class MeasurementMatrix:
    matrix: np.ndarray  # (m, width*height)
    width: int
    height: int

    @property
    def shape(self):
        return self.matrix.shape

    def save(self, path) -> None:
        write_matrix(path, self.matrix, KIND_MEASUREMENT, self.width, self.height)

    @classmethod
    def load(cls, path) -> "MeasurementMatrix":
        d = read_matrix(path)
        if d["kind"] != KIND_MEASUREMENT:
            raise ValueError(f"{path} does not hold a measurement matrix")
        return cls(d["matrix"], d["width"], d["height"])


def grid_positions(grid_w: int, grid_h: int, img_w: int, img_h: int) -> list[SamplePoint]:
    """Cell centres of a ``grid_w x grid_h`` grid laid over the image, row-major."""
    if grid_w <= 0 or grid_h <= 0:
        raise ConfigurationError("grid dimensions must be positive")
    if grid_w > img_w or grid_h > img_h:
        raise ConfigurationError("grid is finer than the image")
    xs = (np.arange(grid_w) + 0.5) * img_w / grid_w
    ys = (np.arange(grid_h) + 0.5) * img_h / grid_h
    return [SamplePoint(float(x), float(y)) for y in ys for x in xs]


def _interval_overlap(lo: float, hi: float, n: int) -> np.ndarray:
    """Length of ``[lo, hi]`` inside each unit cell ``[k, k+1)``, k = 0..n-1."""
    k = np.arange(n)
    return np.clip(np.minimum(hi, k + 1) - np.maximum(lo, k), 0.0, None)


def _circle_coverage(cx, cy, r, i0, i1, j0, j1) -> np.ndarray:
    """Supersampled hit fraction per pixel of the box ``[i0, i1) x [j0, j1)``.

    Pixels entirely inside or outside the disk are decided from their nearest
    and farthest points; only pixels straddling the rim are supersampled.
    """
    px = np.arange(j0, j1, dtype=float)
    py = np.arange(i0, i1, dtype=float)
    near_x = np.clip(cx, px, px + 1) - cx
    near_y = np.clip(cy, py, py + 1) - cy
    far_x = np.maximum(np.abs(px - cx), np.abs(px + 1 - cx))
    far_y = np.maximum(np.abs(py - cy), np.abs(py + 1 - cy))
    near = near_y[:, None] ** 2 + near_x[None, :] ** 2
    far = far_y[:, None] ** 2 + far_x[None, :] ** 2
    r2 = r * r
    cov = (far <= r2).astype(float)
    rim = (near <= r2) & (far > r2)
    if rim.any():
        ii, jj = np.nonzero(rim)
        sub = (np.arange(SUPERSAMPLE) + 0.5) / SUPERSAMPLE
        sx = (jj + j0)[:, None] + sub[None, :] - cx
        sy = (ii + i0)[:, None] + sub[None, :] - cy
        inside = sy[:, :, None] ** 2 + sx[:, None, :] ** 2 <= r2
        cov[ii, jj] = inside.mean(axis=(1, 2))
    return cov


def rasterize(probe: Probe, center: SamplePoint, img_w: int, img_h: int) -> np.ndarray:
    """Pixel-coverage weights of one probe, flattened row-major (length ``img_w*img_h``).

    Squares use exact intersection areas, circles a 16x16 supersample of every
    candidate pixel, and point probes put weight 1 on the pixel holding the
    centre.  Area falling outside the image is discarded.
    """
    row = np.zeros((img_h, img_w))
    cx, cy = center.x, center.y
    if probe.shape is Shape.POINT:
        j, i = int(np.floor(cx)), int(np.floor(cy))
        if 0 <= i < img_h and 0 <= j < img_w:
            row[i, j] = 1.0
    elif probe.shape is Shape.SQUARE:
        half = probe.size / 2
        wx = _interval_overlap(cx - half, cx + half, img_w)
        wy = _interval_overlap(cy - half, cy + half, img_h)
        row = np.outer(wy, wx)
    else:
        r = probe.size / 2
        j0, j1 = max(int(np.floor(cx - r)), 0), min(int(np.ceil(cx + r)), img_w)
        i0, i1 = max(int(np.floor(cy - r)), 0), min(int(np.ceil(cy + r)), img_h)
        if j0 < j1 and i0 < i1:
            row[i0:i1, j0:j1] = _circle_coverage(cx, cy, r, i0, i1, j0, j1)
    row = row.ravel()
    if not row.any():
        raise EmptyProbeError("empty probe row")
    return row


def build_measurement_matrix(points, probe, img_w: int, img_h: int) -> MeasurementMatrix:
    """Stack one rasterised probe per sample point.

    ``probe`` is either a single :class:`Probe` shared by all points or a
    sequence with one probe per point.
    """
    points = list(points)
    if not points:
        raise ConfigurationError("no sample points")
    probes = [probe] * len(points) if isinstance(probe, Probe) else list(probe)
    if len(probes) != len(points):
        raise ConfigurationError("need one probe per sample point")
    matrix = np.empty((len(points), img_w * img_h))
    for k, (pt, pr) in enumerate(zip(points, probes)):
        matrix[k] = rasterize(pr, pt, img_w, img_h)
    return MeasurementMatrix(matrix, img_w, img_h)


def measure(img, M: MeasurementMatrix) -> np.ndarray:
    """Detector readings ``M @ vec(img)``; ``img`` may also be a stack ``(n, h, w)``."""
    img = np.asarray(img, dtype=float)
    if img.shape[-2:] != (M.height, M.width):
        raise ValueError(f"image shape {img.shape[-2:]} does not match matrix dims {(M.height, M.width)}")
    if img.ndim == 2:
        return M.matrix @ img.ravel()
    return img.reshape(len(img), -1) @ M.matrix.T
