import numpy as np
import pytest
from scipy import ndimage

from gtseg.loss.contour import (
    Contour,
    NoForegroundError,
    boundary_pixels,
    extract_contour,
    largest_component,
    rasterize,
    resample_contour,
    signed_area,
)


def _rect(shape, top, left, height, width):
    mask = np.zeros(shape, dtype=np.uint8)
    mask[top:top + height, left:left + width] = 1
    return mask


def _disk(size, cy, cx, radius):
    yy, xx = np.mgrid[0:size, 0:size]
    return ((yy - cy) ** 2 + (xx - cx) ** 2 <= radius ** 2).astype(np.uint8)


def test_rectangle_trace_visits_each_boundary_pixel_once():
    mask = _rect((12, 12), 3, 2, 5, 4)
    contour = extract_contour(mask)
    assert len(contour) == 2 * (5 + 4) - 4
    assert len({tuple(p) for p in contour.points}) == len(contour)
    np.testing.assert_array_equal(rasterize(contour, mask.shape), boundary_pixels(mask))


def test_points_are_column_row_and_start_at_raster_first_pixel():
    mask = _rect((10, 10), 4, 6, 2, 2)
    contour = extract_contour(mask)
    np.testing.assert_array_equal(contour.points[0], [6, 4])
    assert set(map(tuple, contour.points)) == {(6, 4), (7, 4), (6, 5), (7, 5)}


def test_orientation_is_normalized():
    contour = extract_contour(_disk(40, 20, 20, 9))
    assert signed_area(contour.points) > 0


def test_disk_trace_stays_on_the_border_and_is_connected():
    mask = _disk(48, 23, 25, 14)
    contour = extract_contour(mask)
    traced = rasterize(contour, mask.shape).astype(bool)
    interior = ndimage.binary_erosion(mask, structure=np.ones((3, 3)), border_value=0)
    assert not np.any(traced & ~mask.astype(bool))
    assert not np.any(traced & interior)
    assert contour.perimeter == pytest.approx(2 * np.pi * 14, rel=0.15)
    steps = np.abs(np.diff(np.vstack([contour.points, contour.points[:1]]), axis=0))
    assert steps.max() <= 1.0


def test_largest_component_is_chosen():
    mask = _rect((20, 20), 1, 1, 3, 3) | _rect((20, 20), 8, 8, 6, 7)
    component = largest_component(mask)
    assert component.sum() == 42
    contour = extract_contour(mask)
    assert contour.points[:, 0].min() == 8 and contour.points[:, 1].min() == 8


def test_diagonal_pixels_form_one_component():
    mask = np.zeros((6, 6), dtype=np.uint8)
    mask[1, 1] = mask[2, 2] = mask[3, 3] = 1
    assert largest_component(mask).sum() == 3


def test_empty_mask_raises():
    with pytest.raises(NoForegroundError):
        extract_contour(np.zeros((5, 5)))


def test_single_pixel_gives_single_point():
    mask = np.zeros((5, 5))
    mask[2, 3] = 1
    contour = extract_contour(mask)
    np.testing.assert_array_equal(contour.points, [[3, 2]])


def test_from_points_drops_duplicates_and_closing_point():
    contour = Contour.from_points([[0, 0], [0, 0], [1, 0], [1, 1], [0, 1], [0, 0]])
    assert len(contour) == 4


def test_resample_is_evenly_spaced_on_a_square():
    square = Contour.from_points([[0, 0], [4, 0], [4, 4], [0, 4]])
    resampled = resample_contour(square, 8)
    expected = [[0, 0], [2, 0], [4, 0], [4, 2], [4, 4], [2, 4], [0, 4], [0, 2]]
    np.testing.assert_allclose(resampled.points, expected, atol=1e-12)


def test_resample_replicates_a_point_contour():
    point = Contour.from_points([[3.0, 2.0]])
    resampled = resample_contour(point, 16)
    assert resampled.points.shape == (16, 2)
    assert np.all(resampled.points == [3.0, 2.0])


def test_resample_needs_four_points():
    with pytest.raises(ValueError):
        resample_contour(Contour.from_points([[0, 0], [1, 0], [1, 1]]), 3)


@pytest.mark.parametrize("n_points", [64, 128, 256])
def test_resample_keeps_the_perimeter(n_points):
    theta = np.linspace(0.0, 2.0 * np.pi, 400, endpoint=False)
    radius = 12.0 * (1.0 + 0.3 * np.cos(2.0 * theta) + 0.1 * np.cos(theta))
    lobed = Contour.from_points(np.column_stack([20 + radius * np.cos(theta), 20 + radius * np.sin(theta)]))
    resampled = resample_contour(lobed, n_points)
    assert len(resampled) == n_points
    assert resampled.perimeter == pytest.approx(lobed.perimeter, rel=5e-3)
