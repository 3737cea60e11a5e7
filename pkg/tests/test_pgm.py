import numpy as np
import pytest
from PIL import Image

from src.imaging.pgm import PgmError, read_image_pgm, read_mask_pgm, write_image_pgm, write_mask_pgm
from src.imaging.raster import BinaryMask, GrayImage


def test_image_round_trip(tmp_path, rng):
    image = GrayImage(rng.integers(0, 256, size=(7, 5), dtype=np.uint8))
    path = write_image_pgm(image, tmp_path / 'img.pgm')
    assert read_image_pgm(path) == image


def test_mask_written_as_0_and_255(tmp_path):
    mask = BinaryMask.from_array([[1, 0, 1], [0, 0, 1]])
    path = write_mask_pgm(mask, tmp_path / 'mask.pgm')
    data = path.read_bytes()
    assert data.startswith(b'P5')
    assert set(data[-6:]) <= {0, 255}
    assert read_mask_pgm(path) == mask


def test_binary_header_layout(tmp_path):
    path = write_image_pgm(GrayImage(np.full((2, 3), 9, dtype=np.uint8)), tmp_path / 'img.pgm')
    header, _, _ = path.read_bytes().partition(b'255\n')
    assert header.split() == [b'P5', b'3', b'2']


def test_mask_with_other_values_is_rejected(tmp_path):
    path = tmp_path / 'bad.pgm'
    Image.fromarray(np.array([[0, 128], [255, 0]], dtype=np.uint8)).save(path, format='PPM')
    with pytest.raises(PgmError, match='bad.pgm'):
        read_mask_pgm(path)


def test_missing_and_unreadable_files(tmp_path):
    with pytest.raises(FileNotFoundError):
        read_image_pgm(tmp_path / 'nope.pgm')
    junk = tmp_path / 'junk.pgm'
    junk.write_bytes(b'not a pgm')
    with pytest.raises(PgmError, match='junk.pgm'):
        read_image_pgm(junk)
