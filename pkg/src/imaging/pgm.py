"""
Binary PGM (P5) files for images and masks.

Layout written: b"P5\\n<width> <height>\\n255\\n" followed by height rows of width
raw bytes. Masks use only the values 0 and 255.

Pillow does the encoding/decoding; this module adds the domain checks
(maxval 255, mask values restricted to {0, 255}) and names the offending file
in every error.
"""

from pathlib import Path

import numpy as np
from PIL import Image

from src.imaging.raster import BinaryMask, GrayImage
from src.utils.io import ensure_dir


class PgmError(ValueError):
    """A PGM file is unreadable or carries values outside its contract."""


def write_image_pgm(image: GrayImage, file_path: Path) -> Path:
    file_path = Path(file_path)
    ensure_dir(file_path.parent)
    Image.fromarray(np.asarray(image.pixels, dtype=np.uint8)).save(file_path, format='PPM')
    return file_path


def write_mask_pgm(mask: BinaryMask, file_path: Path) -> Path:
    file_path = Path(file_path)
    ensure_dir(file_path.parent)
    values = np.where(mask.bits, 255, 0).astype(np.uint8)
    Image.fromarray(values).save(file_path, format='PPM')
    return file_path


def _read_gray_array(file_path: Path) -> np.ndarray:
    file_path = Path(file_path)
    if not file_path.exists():
        raise FileNotFoundError(f"PGM not found: {file_path}")
    try:
        with Image.open(file_path) as img:
            if img.format != 'PPM' or img.mode != 'L':
                raise PgmError(f"{file_path}: expected an 8-bit binary PGM, got {img.format}/{img.mode}")
            return np.array(img, dtype=np.uint8)
    except PgmError:
        raise
    except Exception as e:
        raise PgmError(f"{file_path}: unreadable PGM ({e})") from e


def read_image_pgm(file_path: Path) -> GrayImage:
    return GrayImage(_read_gray_array(file_path))


def read_mask_pgm(file_path: Path) -> BinaryMask:
    """
    Read a mask PGM.

    Raises:
        PgmError: If any pixel is neither 0 nor 255
    """
    values = _read_gray_array(file_path)
    bad = (values != 0) & (values != 255)
    if bad.any():
        row, col = np.argwhere(bad)[0]
        raise PgmError(
            f"{file_path}: mask value {int(values[row, col])} at (x={col}, y={row}) is not 0 or 255"
        )
    return BinaryMask(values == 255)
