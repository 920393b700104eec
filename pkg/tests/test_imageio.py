import numpy as np
import pytest

from maskforge import imageio


class TestQuantization:
    def test_round_half_up(self):
        # 0.5/255 boundary rounds up: value 127.5/255 -> 128
        img = np.full((1, 1, 3), 127.5 / 255.0)
        assert np.all(imageio._to_uint8(img) == 128)

    def test_quantize_error_bound(self):
        rng = np.random.default_rng(0)
        img = rng.random((16, 16, 3))
        q = imageio.quantize(img)
        assert np.abs(q - img).max() <= 0.5 / 255.0 + 1e-12

    def test_clipping(self):
        img = np.array([[[-0.5, 0.5, 1.5]]])
        assert np.array_equal(imageio._to_uint8(img)[0, 0], [0, 128, 255])


class TestPngRoundTrip:
    def test_rgb(self, tmp_path):
        rng = np.random.default_rng(1)
        img = imageio.quantize(rng.random((20, 30, 3)))
        imageio.write_rgb(tmp_path / "a.png", img)
        assert np.array_equal(imageio.read_rgb(tmp_path / "a.png"), img)

    def test_rgba_straight_alpha_preserved(self, tmp_path):
        rng = np.random.default_rng(2)
        mask = imageio.quantize(rng.random((20, 30, 4)))
        mask[0, 0] = [0.8, 0.2, 0.4, 0.0]  # RGB must survive under zero alpha
        imageio.write_rgba(tmp_path / "m.png", mask)
        back = imageio.read_rgba(tmp_path / "m.png")
        assert np.array_equal(back, np.floor(mask * 255 + 0.5) / 255.0)
        assert np.allclose(back[0, 0, :3], np.array([204, 51, 102]) / 255.0)

    def test_labels(self, tmp_path):
        labels = np.arange(256, dtype=np.uint8).reshape(16, 16)
        imageio.write_labels(tmp_path / "l.png", labels)
        assert np.array_equal(imageio.read_labels(tmp_path / "l.png"), labels)

    def test_png_bytes_match_file(self, tmp_path):
        rng = np.random.default_rng(3)
        mask = rng.random((8, 8, 4))
        imageio.write_rgba(tmp_path / "m.png", mask)
        assert imageio.png_bytes_rgba(mask) == (tmp_path / "m.png").read_bytes()

    def test_decode_image_modes(self):
        rng = np.random.default_rng(4)
        rgb = rng.random((8, 8, 3))
        rgba = rng.random((8, 8, 4))
        assert imageio.decode_image(imageio.png_bytes_rgb(rgb)).shape == (8, 8, 3)
        assert imageio.decode_image(imageio.png_bytes_rgba(rgba)).shape == (8, 8, 4)

    def test_shape_validation(self, tmp_path):
        with pytest.raises(ValueError):
            imageio.write_rgb(tmp_path / "x.png", np.zeros((4, 4, 4)))
        with pytest.raises(ValueError):
            imageio.write_rgba(tmp_path / "x.png", np.zeros((4, 4, 3)))
