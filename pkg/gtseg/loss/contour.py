from __future__ import annotations

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from scipy import ndimage

CONTOUR_SOURCES = ("predicted", "reference")

# Moore neighbourhood, clockwise on screen (rows grow downwards), starting west.
_NEIGHBOURS: Tuple[Tuple[int, int], ...] = (
    (0, -1), (-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1),
)
_DIRECTION = {offset: i for i, offset in enumerate(_NEIGHBOURS)}
_EIGHT_CONNECTED = np.ones((3, 3), dtype=int)


class NoForegroundError(ValueError):
    """Raised when a mask has no foreground pixel to trace."""


@dataclass(frozen=True)
class Contour:
    """
    Closed boundary as an (M, 2) array of (x, y) points; the last point
    connects back to the first.
    """

    points: np.ndarray
    source: str = "reference"

    @classmethod
    def from_points(cls, points, source: str = "reference") -> "Contour":
        if source not in CONTOUR_SOURCES:
            raise ValueError(f"source must be one of {CONTOUR_SOURCES}, got {source!r}")
        pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        if len(pts) == 0:
            raise ValueError("a contour needs at least one point")
        keep = np.ones(len(pts), dtype=bool)
        keep[1:] = np.any(pts[1:] != pts[:-1], axis=1)
        pts = pts[keep]
        while len(pts) > 1 and np.array_equal(pts[-1], pts[0]):
            pts = pts[:-1]
        if signed_area(pts) < 0:
            pts = np.concatenate([pts[:1], pts[:0:-1]])
        return cls(points=pts, source=source)

    def __len__(self) -> int:
        return len(self.points)

    @property
    def perimeter(self) -> float:
        return perimeter(self.points)


def signed_area(points: np.ndarray) -> float:
    """Shoelace area in (x, y); positive for counter-clockwise order."""
    if len(points) < 3:
        return 0.0
    x, y = points[:, 0], points[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def perimeter(points: np.ndarray) -> float:
    if len(points) < 2:
        return 0.0
    closed = np.vstack([points, points[:1]])
    return float(np.sum(np.hypot(*np.diff(closed, axis=0).T)))


# -------------------------------------------------------------------
# Extraction
# -------------------------------------------------------------------
def largest_component(mask: np.ndarray) -> np.ndarray:
    """Boolean mask of the largest 8-connected foreground component."""
    binary = np.asarray(mask) > 0
    labels, count = ndimage.label(binary, structure=_EIGHT_CONNECTED)
    if count == 0:
        raise NoForegroundError("mask has no foreground pixels")
    sizes = np.bincount(labels.ravel())[1:]
    return labels == (int(np.argmax(sizes)) + 1)


def _trace(component: np.ndarray) -> List[Tuple[int, int]]:
    padded = np.pad(component, 1)
    rows, cols = np.nonzero(padded)
    start = (int(rows[0]), int(cols[0]))
    path = [start]
    current = start
    backtrack = 0  # the pixel west of the raster-first pixel is background
    second = None
    limit = 4 * int(component.sum()) + 8
    for _ in range(limit):
        found = None
        for step in range(1, 9):
            d = (backtrack + step) % 8
            candidate = (current[0] + _NEIGHBOURS[d][0], current[1] + _NEIGHBOURS[d][1])
            if padded[candidate]:
                prev = (backtrack + step - 1) % 8
                came_from = (current[0] + _NEIGHBOURS[prev][0], current[1] + _NEIGHBOURS[prev][1])
                found = (candidate, _DIRECTION[(came_from[0] - candidate[0], came_from[1] - candidate[1])])
                break
        if found is None:
            break
        nxt, nxt_backtrack = found
        if second is None:
            second = nxt
        elif current == start and nxt == second:
            break
        path.append(nxt)
        current, backtrack = nxt, nxt_backtrack
    if len(path) > 1 and path[-1] == start:
        path.pop()
    return [(r - 1, c - 1) for r, c in path]


def extract_contour(mask: np.ndarray, source: str = "reference") -> Contour:
    """
    Moore-neighbour boundary trace of the largest 8-connected component.
    Points are (x, y) = (column, row).
    """
    mask = np.asarray(mask)
    if mask.ndim != 2:
        raise ValueError(f"extract_contour expects a 2-D mask, got shape {mask.shape}")
    component = largest_component(mask)
    pixels = _trace(component)
    points = np.array([(c, r) for r, c in pixels], dtype=np.float64)
    return Contour.from_points(points, source=source)


def rasterize(contour: Contour, shape: Tuple[int, int]) -> np.ndarray:
    out = np.zeros(shape, dtype=np.uint8)
    pts = np.rint(contour.points).astype(int)
    out[pts[:, 1], pts[:, 0]] = 1
    return out


def boundary_pixels(component: np.ndarray) -> np.ndarray:
    """Foreground pixels with at least one background 4-neighbour."""
    component = np.asarray(component) > 0
    interior = ndimage.binary_erosion(component, structure=ndimage.generate_binary_structure(2, 1), border_value=0)
    return (component & ~interior).astype(np.uint8)


# -------------------------------------------------------------------
# Resampling
# -------------------------------------------------------------------
def resample_contour(contour: Contour, n_points: int) -> Contour:
    """
    ``n_points`` points evenly spaced by arc length along the closed polygon,
    starting at the first point.
    """
    if n_points < 4:
        raise ValueError(f"resampling needs N >= 4, got {n_points}")
    pts = contour.points
    total = perimeter(pts)
    if len(pts) == 1 or total <= 0.0:
        return Contour(points=np.repeat(pts[:1], n_points, axis=0), source=contour.source)
    closed = np.vstack([pts, pts[:1]])
    arc = np.concatenate([[0.0], np.cumsum(np.hypot(*np.diff(closed, axis=0).T))])
    targets = np.arange(n_points) * (total / n_points)
    x = np.interp(targets, arc, closed[:, 0])
    y = np.interp(targets, arc, closed[:, 1])
    return Contour(points=np.column_stack([x, y]), source=contour.source)
