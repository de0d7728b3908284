import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from tilda.augment import (
    NUM_VARIANTS,
    SHIFTS,
    VARIANT_NAMES,
    ProjectionExtractor,
    generate_variants,
    hflip,
    shift,
)
from tilda.errors import DataError

images = hnp.arrays(
    np.uint8,
    st.tuples(st.integers(2, 9), st.integers(2, 9), st.integers(1, 4)),
)


def brute_shift(img, dx, dy):
    h, w, c = img.shape
    out = np.zeros_like(img)
    for y in range(h):
        for x in range(w):
            sy, sx = y - dy, x - dx
            if 0 <= sy < h and 0 <= sx < w:
                out[y, x] = img[sy, sx]
    return out


def test_hflip_small():
    img = np.array([[[1], [2]]], dtype=np.uint8)
    assert hflip(img)[:, :, 0].tolist() == [[2, 1]]
    img = np.array([[1, 2, 3], [4, 5, 6]], dtype=np.uint8)
    assert hflip(img)[:, :, 0].tolist() == [[3, 2, 1], [6, 5, 4]]


def test_hflip_matches_index_arithmetic(rng):
    img = rng.integers(0, 256, size=(5, 7, 3), dtype=np.uint8)
    out = hflip(img)
    for j in range(7):
        assert np.array_equal(out[:, 7 - 1 - j], img[:, j])


@given(images)
def test_hflip_involution(img):
    assert np.array_equal(hflip(hflip(img)), img)


def test_shift_examples():
    row = np.array([[[10], [20], [30]]], dtype=np.uint8)
    assert shift(row, 1, 0)[:, :, 0].tolist() == [[0, 10, 20]]
    assert np.array_equal(shift(row, 0, 0), row)
    sq = np.array([[1, 2], [3, 4]], dtype=np.uint8)
    assert shift(sq, -1, -1)[:, :, 0].tolist() == [[4, 0], [0, 0]]


@given(images, st.sampled_from(SHIFTS + ((0, 0),)))
def test_shift_matches_brute_force(img, offset):
    dx, dy = offset
    assert np.array_equal(shift(img, dx, dy), brute_shift(img, dx, dy))


@given(images, st.sampled_from(SHIFTS))
def test_shift_back_restores_interior(img, offset):
    dx, dy = offset
    back = shift(shift(img, dx, dy), -dx, -dy)
    h, w = img.shape[:2]
    ys = slice(max(-dy, 0), h + min(-dy, 0))
    xs = slice(max(-dx, 0), w + min(-dx, 0))
    assert np.array_equal(back[ys, xs], img[ys, xs])


def test_shift_rejects_large_offsets():
    with pytest.raises(ValueError):
        shift(np.zeros((3, 3), dtype=np.uint8), 2, 0)


def test_generate_variants_order_and_count(rng):
    img = rng.integers(0, 256, size=(6, 5, 3), dtype=np.uint8)
    out = generate_variants(img)
    assert len(out) == NUM_VARIANTS == len(VARIANT_NAMES) == 10
    assert np.array_equal(out[0], img)
    assert np.array_equal(out[1], hflip(img))
    for v, (dx, dy) in zip(out[2:], SHIFTS):
        assert np.array_equal(v, shift(img, dx, dy))
    assert all(v.shape == img.shape for v in out)


def test_zero_image_variants_identical():
    out = generate_variants(np.zeros((4, 4, 1), dtype=np.uint8))
    assert all(not v.any() for v in out)


def test_ramp_variants_distinct():
    ramp = np.arange(16, dtype=np.uint8).reshape(4, 4)
    out = generate_variants(ramp)
    flat = {v.tobytes() for v in out}
    assert len(flat) == 10


@given(images)
def test_generate_variants_pure(img):
    copy = img.copy()
    a = generate_variants(img)
    b = generate_variants(img)
    assert np.array_equal(img, copy)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))


def test_generate_variants_requires_2x2():
    with pytest.raises(DataError):
        generate_variants(np.zeros((1, 5), dtype=np.uint8))


def test_rejects_non_8bit():
    with pytest.raises(DataError):
        hflip(np.full((2, 2), 300))
    with pytest.raises(DataError):
        hflip(np.zeros((2, 2, 5), dtype=np.uint8))


def test_projection_extractor(rng):
    img = rng.integers(0, 256, size=(4, 4, 3), dtype=np.uint8)
    flat = ProjectionExtractor()
    assert np.array_equal(flat(img), img.reshape(-1) / 255.0)
    proj = ProjectionExtractor(dim=8, seed=3)
    again = ProjectionExtractor(dim=8, seed=3)
    assert proj(img).shape == (8,)
    assert np.array_equal(proj(img), again(img))
    assert proj.variants(img).shape == (10, 8)
