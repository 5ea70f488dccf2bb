import numpy as np
import pytest
from PIL import Image as PILImage

from recompose.imageio import (
    load_depth,
    load_image,
    save_depth_f32,
    save_depth_png16,
    save_image,
    save_mask,
)
from recompose.ingest import DepthMap, Image, IngestError


def test_image_png_roundtrip_is_exact_on_8bit(tmp_path):
    rng = np.random.default_rng(0)
    image = Image(rng.integers(0, 256, size=(20, 30, 3)).astype(np.float64) / 255.0)
    path = tmp_path / "img.png"
    save_image(image, path)
    loaded = load_image(path)
    np.testing.assert_array_equal(loaded.to_uint8(), image.to_uint8())


def test_depth_f32_roundtrip(tmp_path):
    rng = np.random.default_rng(1)
    depth = DepthMap(rng.uniform(0.5, 10.0, size=(12, 17)))
    path = tmp_path / "d.f32"
    save_depth_f32(depth, path)
    loaded = load_depth(path)
    np.testing.assert_allclose(loaded.data, depth.data, rtol=1e-6)


def test_depth_f32_scale_applied(tmp_path):
    depth = DepthMap(np.full((4, 4), 2.0))
    path = tmp_path / "d.f32"
    save_depth_f32(depth, path)
    assert load_depth(path, scale=0.5).data[0, 0] == pytest.approx(1.0)


def test_depth_f32_truncation_rejected(tmp_path):
    depth = DepthMap(np.full((4, 4), 2.0))
    path = tmp_path / "d.f32"
    save_depth_f32(depth, path)
    path.write_bytes(path.read_bytes()[:-4])
    with pytest.raises(IngestError, match="expected"):
        load_depth(path)
    (tmp_path / "tiny.f32").write_bytes(b"\x01\x02")
    with pytest.raises(IngestError, match="truncated"):
        load_depth(tmp_path / "tiny.f32")


def test_depth_png16_roundtrip_with_scale(tmp_path):
    depth = DepthMap(np.linspace(0.001, 1.5, 48).reshape(6, 8))
    path = tmp_path / "d.png"
    save_depth_png16(depth, path, scale=1e-3)
    loaded = load_depth(path, scale=1e-3)
    np.testing.assert_allclose(loaded.data, depth.data, atol=5e-4 + 1e-12)
    with PILImage.open(path) as img:
        assert img.mode in ("I", "I;16")


def test_depth_png16_range_check(tmp_path):
    with pytest.raises(IngestError, match="16-bit range"):
        save_depth_png16(DepthMap(np.full((2, 2), 70000.0)), tmp_path / "d.png", scale=1.0)


def test_rgb_png_rejected_as_depth(tmp_path):
    rng = np.random.default_rng(2)
    save_image(Image(rng.uniform(0, 1, size=(4, 4, 3))), tmp_path / "c.png")
    with pytest.raises(IngestError, match="single-channel"):
        load_depth(tmp_path / "c.png")


def test_mask_written_as_1bit_png(tmp_path):
    mask = np.zeros((16, 16), dtype=np.uint8)
    mask[4:12, 4:12] = 1
    path = tmp_path / "m.png"
    save_mask(mask, path)
    with PILImage.open(path) as img:
        assert img.mode == "1"
        loaded = np.asarray(img).astype(np.uint8)
    np.testing.assert_array_equal(loaded, mask)
