import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fvaelab.analysis import (
    SweepPoint,
    SweepResult,
    afterimage,
    axis_alignment,
    best_fit_frame,
    binary_entropy,
    detect_critical_points,
    discrete_mutual_info,
    estimate_threshold,
    frame_distance,
    geometric_schedule,
    iterations_to_reach,
    mig_from_codes,
    read_pgm,
    reference_level,
    sequence_entropy,
    tile,
    write_pgm,
    write_png,
)
from fvaelab.datasets import a4_max_length, gen_a4


# -- entropy -----------------------------------------------------------------

def test_entropy_constant_sequence_is_zero():
    frames = np.repeat(np.eye(4)[None], 5, axis=0)
    assert sequence_entropy(frames) == 0.0


def test_entropy_one_pixel_half_the_time():
    frames = np.zeros((4, 3, 3))
    frames[:2, 1, 1] = 1
    assert sequence_entropy(frames) == pytest.approx(math.log(2))


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 6), st.integers(0, 2**16))
def test_entropy_permutation_invariant_and_bounded(n, seed):
    rng = np.random.default_rng(seed)
    frames = (rng.random((n, 4, 5)) > 0.5).astype(float)
    h = sequence_entropy(frames)
    assert h == pytest.approx(sequence_entropy(frames[rng.permutation(n)]))
    assert 0 <= h <= 20 * math.log(2) + 1e-12


def test_binary_entropy_endpoints():
    assert binary_entropy([0.0, 1.0]).tolist() == [0.0, 0.0]
    assert binary_entropy(0.5) == pytest.approx(math.log(2))


def test_entropy_rejects_empty():
    with pytest.raises(ValueError):
        sequence_entropy(np.zeros((0, 2, 2)))


def test_a4_entropy_grid_trend():
    thetas = [0.0, math.pi / 4, math.pi / 2]
    top = math.floor(a4_max_length(thetas))
    lengths = np.linspace(4, top, 6)
    grid = np.array([[sequence_entropy(gen_a4(t, L).images) for L in lengths] for t in thetas])
    assert np.all(np.diff(grid, axis=1) > 0)
    assert np.unravel_index(grid.argmax(), grid.shape) == (2, 5)


# -- thresholds --------------------------------------------------------------

def _sweep(betas, kls):
    return SweepResult([SweepPoint(b, k, 0.0) for b, k in zip(betas, kls)],
                       {(b, 0): (k, 0.0) for b, k in zip(betas, kls)})


def test_threshold_cases():
    th = estimate_threshold(_sweep((10, 20, 40), (2.0, 1.5, 0.01)), 0.1)
    assert th.status == "within" and th.value == 20 and str(th) == "20"
    above = estimate_threshold(_sweep((10, 20, 120), (2.0, 1.5, 0.5)))
    assert above.status == "above" and str(above) == "120+"
    below = estimate_threshold(_sweep((10, 20), (0.01, 0.0)))
    assert below.status == "below" and below.value is None
    with pytest.raises(ValueError):
        estimate_threshold(_sweep((10,), (1.0,)))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(0, 3), min_size=2, max_size=6), st.floats(0.01, 1), st.floats(0, 1))
def test_threshold_monotone_in_eps(kls, eps, extra):
    sweep = _sweep(tuple(range(1, len(kls) + 1)), kls)
    low, high = estimate_threshold(sweep, eps), estimate_threshold(sweep, eps + extra)
    assert high.sort_key <= low.sort_key


def test_sweep_result_rejects_unsorted():
    with pytest.raises(ValueError):
        _sweep((2, 1), (0.0, 0.0))


def test_detector_on_synthetic_levels():
    levels = [(100, 0.0), (50, 0.1), (25, 1.1), (12, 1.2)]
    assert detect_critical_points(levels, 0.5) == [(25, pytest.approx(1.0))]
    flat = [(10, 0.0), (10, 2.0), (10, 4.0)]
    assert detect_critical_points(flat) == []
    with pytest.raises(ValueError):
        detect_critical_points(levels, 0.0)


def test_geometric_schedule():
    s = geometric_schedule()
    assert len(s) == 12 and s[0] == pytest.approx(120) and s[-1] == pytest.approx(1)
    assert all(a > b for a, b in zip(s, s[1:]))


# -- MIG ---------------------------------------------------------------------

def _factor_grid(k=5, m=4, reps=10):
    a, b = np.meshgrid(np.arange(k), np.arange(m), indexing="ij")
    labels = np.stack([a.ravel(), b.ravel()], axis=1)
    return np.repeat(labels, reps, axis=0)


def test_mig_perfect_codes():
    # enough samples that the plug-in bias on the noise dims is negligible
    labels = _factor_grid(reps=1000)
    noise = np.random.default_rng(0).normal(size=(len(labels), 2))
    codes = np.column_stack([labels[:, 0] * 1.0, labels[:, 1] * 1.0, noise])
    rep = mig_from_codes(codes, labels, bins=20)
    assert rep.score >= 0.95
    assert all(f.gap >= 0.95 for f in rep.factors)


def test_mig_duplicated_dim_gives_zero_gap():
    labels = _factor_grid()
    codes = np.column_stack([labels[:, 0], labels[:, 0], labels[:, 1]]).astype(float)
    rep = mig_from_codes(codes, labels)
    assert rep.factors[0].gap == 0.0
    assert rep.factors[1].gap > 0.9


def test_mig_constant_codes_and_single_value_factor():
    labels = np.column_stack([_factor_grid()[:, 0], np.zeros(200, dtype=int)])
    rep = mig_from_codes(np.ones((200, 3)), labels)
    assert rep.score == 0.0
    assert rep.factors[1].entropy == 0.0


def test_mig_affine_invariance():
    labels = _factor_grid()
    codes = np.random.default_rng(1).normal(size=(len(labels), 3)) + labels[:, :1]
    a = mig_from_codes(codes, labels).score
    b = mig_from_codes(codes * np.array([2.0, 0.5, 7.0]) + 3.0, labels).score
    assert a == pytest.approx(b, abs=1e-12)


def test_discrete_mi_matches_formula():
    a = np.array([0, 0, 1, 1])
    assert discrete_mutual_info(a, a) == pytest.approx(math.log(2))
    assert discrete_mutual_info(a, np.array([0, 1, 0, 1])) == pytest.approx(0.0)


# -- alignment ---------------------------------------------------------------

def _grid_positions(n=10):
    xs = np.linspace(0, 30, n)
    return np.array([(x, y) for x in xs for y in xs])


def test_axis_alignment_perfect_rotated_codes():
    pos = _grid_positions()
    t = math.radians(30)
    u = pos[:, 0] * math.cos(t) + pos[:, 1] * math.sin(t)
    v = -pos[:, 0] * math.sin(t) + pos[:, 1] * math.cos(t)
    fit = axis_alignment(np.column_stack([v, u]), pos, t)
    assert fit.r2 == pytest.approx((1.0, 1.0)) and fit.assignment == (1, 0)
    deg, _ = best_fit_frame(np.column_stack([u, -v]), pos)
    assert frame_distance(deg, 30.0) <= 0.5


def test_axis_alignment_noise_and_constant():
    pos = _grid_positions(20)
    codes = np.random.default_rng(0).normal(size=(len(pos), 2))
    assert max(axis_alignment(codes, pos, 0.0).r2) < 0.05
    assert axis_alignment(np.zeros((len(pos), 2)), pos, 0.3).r2 == (0.0, 0.0)


def test_frame_distance_wraps():
    assert frame_distance(89.0, 1.0) == pytest.approx(2.0)
    assert frame_distance(45.0, 0.0) == 45.0


# -- visuals -----------------------------------------------------------------

def test_afterimage_cases():
    one = np.eye(3)[None]
    assert np.array_equal(afterimage(one), one[0])
    a, b = np.zeros((3, 3)), np.zeros((3, 3))
    a[0, 0] = b[2, 2] = 1
    a[1, 1] = b[1, 1] = 1
    img = afterimage(np.stack([a, b]))
    assert img[0, 0] == 0.5 and img[2, 2] == 1.0 and img[1, 1] == 1.0
    with pytest.raises(ValueError):
        afterimage(np.zeros((0, 2, 2)))


def test_tile_layout():
    imgs = np.ones((5, 2, 3))
    out = tile(imgs, cols=2, pad=1, fill=0.0)
    assert out.shape == (3 * 3 + 1, 2 * 4 + 1)
    assert out.sum() == 5 * 6
    assert tile(np.ones((2, 3, 2, 2)), pad=0).shape == (4, 6)


def test_pgm_roundtrip(tmp_path):
    img = np.linspace(0, 1, 12).reshape(3, 4)
    write_pgm(tmp_path / "a.pgm", img)
    raw = (tmp_path / "a.pgm").read_bytes()
    assert raw.startswith(b"P5\n4 3\n255\n")
    back = read_pgm(tmp_path / "a.pgm")
    assert back[0, 0] == 0 and back[-1, -1] == 255 and back.shape == (3, 4)


def test_png_writer(tmp_path):
    from PIL import Image

    write_png(tmp_path / "a.png", np.eye(4))
    with Image.open(tmp_path / "a.png") as im:
        assert im.size == (4, 4) and im.mode == "L"


# -- curves ------------------------------------------------------------------

def test_iterations_to_reach_and_reference():
    curve = [5.0, 4.0, 3.0, 3.5, 2.0]
    assert iterations_to_reach(curve, 3.0) == 2
    assert iterations_to_reach(curve, 1.0) is None
    assert reference_level(curve, 0.6) == 3.0
