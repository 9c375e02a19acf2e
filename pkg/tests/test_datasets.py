import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fvaelab.datasets import (
    ConfigurationError,
    Factor,
    FactorSpec,
    ImageDataset,
    PlacementError,
    ShapeSpec,
    a4_max_length,
    coverage,
    extract_action,
    gen_a4,
    gen_action_grid,
    gen_dsprites,
    gen_transformation_suite,
    gen_translation_dataset,
    named_dataset,
    render_shape,
    sequence_dataset,
    shape_extent,
)


def test_factor_rejects_unsorted_and_empty():
    with pytest.raises(ConfigurationError):
        Factor("x", (1.0, 0.0))
    with pytest.raises(ConfigurationError):
        Factor("x", ())
    with pytest.raises(ConfigurationError):
        FactorSpec((Factor("x", (0,)), Factor("x", (1,))))


def test_grid_first_factor_slowest():
    spec = FactorSpec((Factor("a", (0, 1)), Factor("b", (0, 1, 2))))
    g = spec.grid()
    assert g.shape == (6, 2)
    assert g[:3, 0].tolist() == [0, 0, 0] and g[:3, 1].tolist() == [0, 1, 2]


def test_dataset_validates_labels_and_pixels():
    spec = FactorSpec((Factor("a", (0, 1)),))
    with pytest.raises(ConfigurationError):
        ImageDataset(np.zeros((2, 4, 4)), np.array([[0], [2]]), spec)
    with pytest.raises(ConfigurationError):
        ImageDataset(np.full((2, 4, 4), 2), np.array([[0], [1]]), spec)
    ds = ImageDataset(np.zeros((2, 4, 4)), np.array([[0], [1]]), spec)
    with pytest.raises(ValueError):
        ds.images[0, 0, 0] = 1


def test_rectangle_axis_aligned_has_exact_area():
    img = render_shape(ShapeSpec("rectangle", 11, 5, 0.0, (31, 31)))
    assert img.sum() == 55
    ys, xs = np.nonzero(img)
    assert xs.min() == 26 and xs.max() == 36 and ys.min() == 29 and ys.max() == 33


def test_rectangle_quarter_turn_is_transpose():
    a = render_shape(ShapeSpec("rectangle", 11, 5, 0.0, (31, 31)))
    b = render_shape(ShapeSpec("rectangle", 11, 5, math.pi / 2, (31, 31)))
    assert np.array_equal(a.T, b)


def test_placement_error_names_side():
    with pytest.raises(PlacementError, match="left"):
        render_shape(ShapeSpec("rectangle", 11, 5, 0.0, (3, 31)))


def test_shape_extent_ellipse_exact():
    s = ShapeSpec("ellipse", 10, 4, math.pi / 2, (20, 20))
    assert shape_extent(s) == pytest.approx((18, 22, 15, 25))


@settings(max_examples=30, deadline=None)
@given(st.floats(0, 2 * math.pi), st.floats(20, 44), st.floats(20, 44))
def test_coverage_area_close_to_geometric_area(theta, cx, cy):
    cov = coverage(ShapeSpec("rectangle", 11, 5, theta, (cx, cy)), supersample=8)
    assert abs(cov.sum() - 55.0) < 1.0


def test_heart_lobes_point_up():
    img = render_shape(ShapeSpec("heart", 20, 20, 0.0, (31.5, 31.5)))
    rows = img.sum(axis=1)
    lit = np.flatnonzero(rows)
    # the wide lobes sit in the upper half, the narrow tip in the lower
    assert rows[lit[0] : lit[0] + 5].sum() > rows[lit[-1] - 4 : lit[-1] + 1].sum()


def test_a1_a3_share_labels_but_not_images():
    a1, a3 = named_dataset("A1"), named_dataset("A3")
    assert len(a1) == 1600 and a1.spec.names == ["posX", "posY"]
    assert np.array_equal(a1.labels, a3.labels)
    assert not np.array_equal(a1.images, a3.images)


def test_a1_first_image_matches_render():
    a1 = named_dataset("A1")
    x0 = a1.spec["posX"].values[0]
    y0 = a1.spec["posY"].values[0]
    ref = render_shape(ShapeSpec("rectangle", 11, 5, 0.0, (x0, y0)))
    assert np.array_equal(a1.images[a1.lookup([0, 0])], ref)


def test_polar_dataset_center_ring():
    a2 = gen_translation_dataset(0.0, "polar", grid=5)
    assert a2.spec.names == ["r", "phi"]
    assert np.allclose(a2.meta["centers"][:5], 31.5)  # r = 0 for every phi


def test_unknown_named_dataset():
    with pytest.raises(ConfigurationError):
        named_dataset("A9")


def test_a4_path_and_limits():
    ds = gen_a4(0.0, 20.0, n=5)
    assert len(ds) == 5
    assert np.allclose(np.diff(ds.meta["centers"][:, 0]), 5.0)
    with pytest.raises(ConfigurationError):
        gen_a4(0.0, 60.0)
    zero = gen_a4(0.0, 0.0, n=4)
    assert zero.spec.names == ["frame"]
    assert all(np.array_equal(zero.images[0], im) for im in zero.images)


def test_a4_max_length_value():
    lmax = a4_max_length([0.0, math.pi / 4, math.pi / 2])
    assert lmax == pytest.approx(64 - 16 / math.sqrt(2))  # 45 degrees is the widest
    gen_a4(math.pi / 4, lmax)


def test_dsprites_subset_shape():
    ds = gen_dsprites((3, 2, 4, 8, 8))
    assert len(ds) == 1536
    assert ds.spec.names == ["shape", "scale", "orientation", "posX", "posY"]
    assert ds.spec["scale"].values == (0.5, 1.0)
    with pytest.raises(ConfigurationError):
        gen_dsprites((3, 7, 4, 8, 8))


@pytest.mark.parametrize("kind", ["y", "x", "diagonal", "cycle", "rotation", "random"])
def test_suite_kinds_render(kind):
    ds = gen_transformation_suite(kind, n=8)
    assert ds.images.shape == (8, 64, 64)
    assert ds.images.reshape(8, -1).sum(axis=1).min() > 40


def test_suite_random_seeded():
    a = gen_transformation_suite("random", seed=1)
    b = gen_transformation_suite("random", seed=1)
    c = gen_transformation_suite("random", seed=2)
    assert np.array_equal(a.images, b.images) and not np.array_equal(a.images, c.images)


def test_suite_rotation_half_turn_repeats():
    ds = gen_transformation_suite("rotation", n=8)
    assert np.array_equal(ds.images[0], ds.images[4])


def test_suite_rejects_unknown():
    with pytest.raises(ConfigurationError):
        gen_transformation_suite("spin")


def test_action_grid():
    ds = gen_action_grid([("x", 4, 20.0), ("rotation", 3, math.pi)])
    assert ds.spec.names == ["posX", "orientation"] and len(ds) == 12
    with pytest.raises(ConfigurationError):
        gen_action_grid([("x", 2, 4.0), ("x", 2, 4.0)])


def test_extract_action_a1():
    a1 = named_dataset("A1")
    seq = extract_action(a1, "posX", {"posY": 0})
    assert len(seq) == 40
    rows = [a1.lookup([i, 0]) for i in range(40)]
    centers = a1.meta["centers"][rows]
    assert np.allclose(centers[:, 1], centers[0, 1]) and np.all(np.diff(centers[:, 0]) > 0)
    assert np.array_equal(seq.images, a1.images[rows])


def test_extract_action_errors(tiny_dataset):
    with pytest.raises(KeyError):
        extract_action(tiny_dataset, "zz")
    with pytest.raises(KeyError):
        extract_action(tiny_dataset, "a", {"a": 0})
    with pytest.raises(IndexError):
        extract_action(tiny_dataset, "a", {"b": 5})
    partial = tiny_dataset.subset([0, 1, 2])
    with pytest.raises(ValueError):
        extract_action(partial, "a", {"b": 1})


def test_sequence_dataset_roundtrip(tiny_dataset):
    seq = extract_action(tiny_dataset, "b", [1])
    ds = sequence_dataset(seq)
    assert ds.spec.names == ["b"] and np.array_equal(ds.images, seq.images)
