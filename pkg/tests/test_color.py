import numpy as np
import pytest

from app.ingestion.color import ImageLAB, ImageRGB, lab_to_srgb, srgb_decode, srgb_encode, srgb_to_lab
from app.errors import ShapeError


def gray_ramp() -> ImageRGB:
    codes = np.arange(256, dtype=np.float64) / 255.0
    encoded = np.repeat(codes[None, :, None], 3, axis=2)
    return ImageRGB(pixels=srgb_decode(encoded))


def test_white_is_lab_100_0_0():
    lab = srgb_to_lab(ImageRGB(pixels=np.ones((1, 1, 3))))
    np.testing.assert_allclose(lab.pixels[0, 0], [100.0, 0.0, 0.0], atol=1e-3)


def test_black_is_lab_zero():
    lab = srgb_to_lab(ImageRGB(pixels=np.zeros((1, 1, 3))))
    np.testing.assert_allclose(lab.pixels[0, 0], [0.0, 0.0, 0.0], atol=1e-9)


def test_gray_ramp_round_trips_within_one_code():
    lab = srgb_to_lab(gray_ramp())
    back = lab_to_srgb(lab)
    codes = np.round(srgb_encode(back.pixels) * 255.0)
    expected = np.arange(256)[None, :, None]
    assert np.max(np.abs(codes - expected)) <= 1


def test_lightness_is_monotone_on_gray_ramp():
    lightness = srgb_to_lab(gray_ramp()).lightness[0]
    assert np.all(np.diff(lightness) > 0)
    np.testing.assert_allclose(srgb_to_lab(gray_ramp()).a, 0.0, atol=1e-6)


def test_transfer_functions_invert():
    encoded = np.linspace(0.0, 1.0, 101)
    np.testing.assert_allclose(srgb_encode(srgb_decode(encoded)), encoded, atol=1e-12)


def test_lab_lightness_is_clipped():
    lab = srgb_to_lab(ImageRGB(pixels=np.full((2, 2, 3), 1.2)))
    assert lab.lightness.max() <= 100.0


def test_rgb_image_needs_three_components():
    with pytest.raises(ShapeError):
        ImageRGB(pixels=np.zeros((2, 2)))


def test_lab_to_srgb_clamps_out_of_gamut():
    lab = ImageLAB(pixels=np.array([[[50.0, 120.0, -120.0]]]))
    rgb = lab_to_srgb(lab)
    assert rgb.pixels.min() >= 0.0 and rgb.pixels.max() <= 1.0


def test_random_colors_round_trip():
    pixels = np.random.default_rng(21).random((10, 100, 3))
    back = lab_to_srgb(srgb_to_lab(ImageRGB(pixels=pixels)))
    np.testing.assert_allclose(back.pixels, pixels, atol=1e-9)


def test_mid_gray_code_128():
    linear = srgb_decode(np.array([128 / 255.0]))
    np.testing.assert_allclose(linear, [0.2159], atol=1e-4)
    lab = srgb_to_lab(ImageRGB(pixels=np.full((1, 1, 3), linear[0])))
    np.testing.assert_allclose(lab.lightness[0, 0], 53.59, atol=0.01)
    np.testing.assert_allclose(lab.pixels[0, 0, 1:], 0.0, atol=1e-6)
