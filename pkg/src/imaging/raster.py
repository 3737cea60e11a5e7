"""
Grayscale images and binary masks.

Both types wrap a read-only numpy array stored row-major as (height, width):
- GrayImage: uint8 intensities 0-255
- BinaryMask: bool foreground flags

Base metrics live here because everything else (rewards, metrics, the oracle)
is built on them:
- iou(a, b): |a ∩ b| / |a ∪ b|, defined as 1.0 when both masks are empty
- mae(pred, gt): mean |pred - gt| with pred in [0, 1]
- foreground_fraction(m): |m| / (width * height)

Counts are accumulated as integers and divided once in float64.
"""

from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

# A correctly empty prediction of an empty target scores as a perfect match.
EMPTY_IOU = 1.0


class DimensionMismatch(ValueError):
    """Two rasters that must share a shape do not."""

    def __init__(self, shape_a: Tuple[int, int], shape_b: Tuple[int, int], what: str = "rasters"):
        super().__init__(
            f"Dimension mismatch between {what}: "
            f"{shape_a[1]}x{shape_a[0]} vs {shape_b[1]}x{shape_b[0]} (width x height)"
        )
        self.shape_a = shape_a
        self.shape_b = shape_b


def _frozen(array: np.ndarray) -> np.ndarray:
    array = np.ascontiguousarray(array)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class GrayImage:
    """8-bit grayscale image, shape (height, width)."""

    pixels: np.ndarray

    def __post_init__(self):
        pixels = np.asarray(self.pixels)
        if pixels.ndim != 2 or pixels.shape[0] < 1 or pixels.shape[1] < 1:
            raise ValueError(f"GrayImage needs a non-empty 2-D array, got shape {pixels.shape}")
        if pixels.dtype != np.uint8:
            if pixels.size and (pixels.min() < 0 or pixels.max() > 255):
                raise ValueError("GrayImage intensities must lie in [0, 255]")
            if not np.all(np.equal(np.mod(pixels, 1), 0)):
                raise ValueError("GrayImage intensities must be integers")
            pixels = pixels.astype(np.uint8)
        object.__setattr__(self, 'pixels', _frozen(pixels))

    @classmethod
    def from_array(cls, array) -> "GrayImage":
        return cls(np.asarray(array))

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def shape(self) -> Tuple[int, int]:
        return self.pixels.shape

    def __eq__(self, other) -> bool:
        return isinstance(other, GrayImage) and np.array_equal(self.pixels, other.pixels)


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """Foreground mask, shape (height, width)."""

    bits: np.ndarray

    def __post_init__(self):
        bits = np.asarray(self.bits)
        if bits.ndim != 2 or bits.shape[0] < 1 or bits.shape[1] < 1:
            raise ValueError(f"BinaryMask needs a non-empty 2-D array, got shape {bits.shape}")
        if bits.dtype != np.bool_:
            if not np.all((bits == 0) | (bits == 1)):
                raise ValueError("BinaryMask values must be 0/1 or boolean")
            bits = bits.astype(bool)
        object.__setattr__(self, 'bits', _frozen(bits))

    @classmethod
    def from_array(cls, array) -> "BinaryMask":
        return cls(np.asarray(array))

    @classmethod
    def empty(cls, width: int, height: int) -> "BinaryMask":
        return cls(np.zeros((height, width), dtype=bool))

    @classmethod
    def full(cls, width: int, height: int) -> "BinaryMask":
        return cls(np.ones((height, width), dtype=bool))

    @property
    def width(self) -> int:
        return int(self.bits.shape[1])

    @property
    def height(self) -> int:
        return int(self.bits.shape[0])

    @property
    def shape(self) -> Tuple[int, int]:
        return self.bits.shape

    def count(self) -> int:
        return int(np.count_nonzero(self.bits))

    def __eq__(self, other) -> bool:
        return isinstance(other, BinaryMask) and np.array_equal(self.bits, other.bits)


MaskLike = Union[BinaryMask, np.ndarray]


def as_bool(mask: MaskLike) -> np.ndarray:
    """Boolean view of a BinaryMask or 0/1 array."""
    if isinstance(mask, BinaryMask):
        return mask.bits
    array = np.asarray(mask)
    if array.dtype == np.bool_:
        return array
    return BinaryMask(array).bits


def as_float_map(pred) -> np.ndarray:
    """
    Real-valued map in [0, 1]; a BinaryMask (or bool array) coerces to {0, 1}.
    """
    if isinstance(pred, BinaryMask):
        return pred.bits.astype(np.float64)
    array = np.asarray(pred, dtype=np.float64)
    if array.ndim != 2:
        raise ValueError(f"Prediction map must be 2-D, got shape {array.shape}")
    if not np.all((array >= 0.0) & (array <= 1.0)):
        raise ValueError("Prediction map values must lie in [0, 1]")
    return array


def check_same_shape(a: np.ndarray, b: np.ndarray, what: str = "prediction and ground truth") -> None:
    if a.shape != b.shape:
        raise DimensionMismatch(a.shape, b.shape, what)


def complement(mask: MaskLike) -> BinaryMask:
    return BinaryMask(~as_bool(mask))


def iou(a: MaskLike, b: MaskLike) -> float:
    """
    Intersection over union of two same-shape masks.

    Returns:
        |a ∩ b| / |a ∪ b|, or 1.0 when both masks are empty

    Raises:
        DimensionMismatch: If the shapes differ

    Example:
        >>> a = BinaryMask.from_array([[1, 1], [0, 0]])
        >>> b = BinaryMask.from_array([[0, 1], [0, 1]])
        >>> iou(a, b)
        0.3333333333333333
    """
    a_bits, b_bits = as_bool(a), as_bool(b)
    check_same_shape(a_bits, b_bits, "masks")
    union = int(np.count_nonzero(a_bits | b_bits))
    if union == 0:
        return EMPTY_IOU
    intersection = int(np.count_nonzero(a_bits & b_bits))
    return intersection / union


def mae(pred, gt: MaskLike) -> float:
    """
    Mean absolute error between a [0, 1] map (or mask) and a binary mask.

    Raises:
        DimensionMismatch: If the shapes differ
    """
    pred_map = as_float_map(pred)
    gt_bits = as_bool(gt)
    check_same_shape(pred_map, gt_bits)
    return float(np.abs(pred_map - gt_bits).mean())


def foreground_fraction(mask: MaskLike) -> float:
    """Share of pixels set in the mask."""
    bits = as_bool(mask)
    return int(np.count_nonzero(bits)) / bits.size
