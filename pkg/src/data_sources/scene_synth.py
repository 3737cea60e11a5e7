"""
Procedural scene generator.

A scene is a grayscale image plus its ground-truth mask, produced from
(seed, profile, width, height) alone. Three difficulty profiles:

    salient      1-2 convex blobs, intensity gap 70-110, noise sigma 4
    camouflaged  1 convex blob, intensity gap 10-13, shared noise sigma 10
    fine         1 convex blob with 3-6 thin random-walk protrusions,
                 gap 70-110, noise sigma 4

Draw order from the xoshiro256** stream (seeded with `seed`):

    1. geometry: blob vertex count, centre, radius, rotation, then per vertex
       angle jitter and radius jitter; salient then draws whether a second
       blob exists and its parameters; fine draws the protrusion count and
       each walk. Geometry is redrawn (continuing the stream) until the
       foreground fraction lies in [0.02, 0.6].
    2. intensities: background level, gap, polarity
    3. noise: one standard normal per pixel, row-major

Noise is re-centred to zero mean inside the foreground and inside the
background separately, so the emitted image shows the nominal gap up to
integer rounding.
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Tuple

import numpy as np
from PIL import Image, ImageDraw
from scipy import ndimage
from scipy.spatial import ConvexHull

from src.imaging.raster import BinaryMask, GrayImage
from src.utils.rng import MASK64, Xoshiro256StarStar

MIN_DIM = 16
MAX_DIM = 128
MIN_FG_FRACTION = 0.02
MAX_FG_FRACTION = 0.6
MAX_ATTEMPTS = 1000


class SceneGenerationError(RuntimeError):
    """Every placement attempt for a scene was rejected."""


class SceneProfile(Enum):
    SALIENT = 'salient'
    CAMOUFLAGED = 'camouflaged'
    FINE_STRUCTURE = 'fine'

    @classmethod
    def from_name(cls, name: str) -> "SceneProfile":
        for profile in cls:
            if profile.value == name or profile.name.lower() == name.lower():
                return profile
        available = ', '.join(p.value for p in cls)
        raise KeyError(f"Unknown scene profile '{name}'. Available profiles: {available}")


@dataclass(frozen=True)
class ProfileParams:
    noise_sigma: float
    gap_range: Tuple[int, int]
    low_level_range: Tuple[int, int]


PROFILE_PARAMS = {
    SceneProfile.SALIENT: ProfileParams(noise_sigma=4.0, gap_range=(70, 110), low_level_range=(30, 80)),
    SceneProfile.CAMOUFLAGED: ProfileParams(noise_sigma=10.0, gap_range=(10, 13), low_level_range=(80, 160)),
    SceneProfile.FINE_STRUCTURE: ProfileParams(noise_sigma=4.0, gap_range=(70, 110), low_level_range=(30, 80)),
}


@dataclass(frozen=True, eq=False)
class Scene:
    image: GrayImage
    gt: BinaryMask
    profile: SceneProfile
    seed: int

    def __post_init__(self):
        if self.image.shape != self.gt.shape:
            raise ValueError(f"Scene image {self.image.shape} and mask {self.gt.shape} differ in shape")

    @property
    def scene_id(self) -> str:
        return f"{self.profile.value}_{self.seed}"

    @property
    def width(self) -> int:
        return self.image.width

    @property
    def height(self) -> int:
        return self.image.height

    def __eq__(self, other) -> bool:
        return (isinstance(other, Scene) and self.profile is other.profile and self.seed == other.seed
                and self.image == other.image and self.gt == other.gt)


def _convex_blob(rng: Xoshiro256StarStar, width: int, height: int,
                 centre: Tuple[float, float], radius: float) -> np.ndarray:
    """Rasterised convex polygon of 5-9 near-regular vertices around centre."""
    n_vertices = rng.randint(5, 9)
    rotation = rng.uniform(0.0, 2.0 * math.pi)
    step = 2.0 * math.pi / n_vertices
    vertices = []
    for k in range(n_vertices):
        angle = rotation + k * step + rng.uniform(-0.25, 0.25) * step
        r = radius * rng.uniform(0.8, 1.2)
        vertices.append((centre[0] + r * math.cos(angle), centre[1] + r * math.sin(angle)))

    hull = ConvexHull(np.array(vertices))
    polygon = [vertices[i] for i in hull.vertices]

    canvas = Image.new('L', (width, height), 0)
    ImageDraw.Draw(canvas).polygon(polygon, fill=1)
    return np.array(canvas, dtype=bool)


def _protrusion(rng: Xoshiro256StarStar, blob: np.ndarray) -> np.ndarray:
    """1-px random walk leaving the blob from a boundary pixel."""
    height, width = blob.shape
    stroke = np.zeros_like(blob)
    boundary = blob & ~ndimage.binary_erosion(blob)
    coords = np.argwhere(boundary)
    if coords.size == 0:
        return stroke
    y, x = coords[rng.randint(0, len(coords) - 1)]
    cy, cx = np.argwhere(blob).mean(axis=0)

    dy, dx = y - cy, x - cx
    if abs(dx) >= abs(dy):
        main = (0, 1 if dx >= 0 else -1)
    else:
        main = (1 if dy >= 0 else -1, 0)
    sides = [(main[1], main[0]), (-main[1], -main[0])]

    length = rng.randint(6, 14)
    for _ in range(length):
        u = rng.random()
        move = main if u < 0.7 else (sides[0] if u < 0.85 else sides[1])
        ny, nx = y + move[0], x + move[1]
        if not (0 <= ny < height and 0 <= nx < width):
            break
        y, x = ny, nx
        stroke[y, x] = True
    return stroke


def _largest_component(mask: np.ndarray) -> np.ndarray:
    labels, count = ndimage.label(mask)
    if count <= 1:
        return mask
    sizes = np.bincount(labels.ravel())[1:]
    return labels == (int(np.argmax(sizes)) + 1)


def _draw_geometry(rng: Xoshiro256StarStar, profile: SceneProfile, width: int, height: int) -> np.ndarray:
    short = min(width, height)
    centre = (rng.uniform(0.3, 0.7) * width, rng.uniform(0.3, 0.7) * height)
    radius = rng.uniform(0.12, 0.3) * short
    mask = _convex_blob(rng, width, height, centre, radius)

    if profile is SceneProfile.SALIENT and rng.random() < 0.5:
        # second blob centred inside the first keeps the union connected
        inside = np.argwhere(mask)
        if len(inside):
            y, x = inside[rng.randint(0, len(inside) - 1)]
            mask |= _convex_blob(rng, width, height, (float(x), float(y)),
                                 rng.uniform(0.08, 0.2) * short)

    if profile is SceneProfile.FINE_STRUCTURE:
        body = mask.copy()
        strokes = np.zeros_like(mask)
        for _ in range(rng.randint(3, 6)):
            strokes |= _protrusion(rng, body)
        mask = body | ndimage.binary_dilation(strokes, structure=np.ones((2, 2), dtype=bool))

    return _largest_component(mask)


def _render(rng: Xoshiro256StarStar, profile: SceneProfile, gt: np.ndarray) -> np.ndarray:
    params = PROFILE_PARAMS[profile]
    low = rng.randint(*params.low_level_range)
    gap = rng.randint(*params.gap_range)
    fg_bright = rng.random() < 0.5
    fg_level, bg_level = (low + gap, low) if fg_bright else (low, low + gap)

    height, width = gt.shape
    noise = np.array(rng.gauss_list(width * height)).reshape(height, width) * params.noise_sigma
    noise[gt] -= noise[gt].mean()
    noise[~gt] -= noise[~gt].mean()

    base = np.where(gt, float(fg_level), float(bg_level))
    return np.clip(np.rint(base + noise), 0, 255).astype(np.uint8)


def generate_scene(seed: int, profile: SceneProfile, width: int, height: int) -> Scene:
    """
    Deterministic scene for (seed, profile, width, height).

    Args:
        seed: Unsigned 64-bit seed
        profile: SceneProfile
        width, height: Pixel dimensions in [16, 128]

    Returns:
        Scene with a single 4-connected foreground covering 2-60% of the frame

    Raises:
        ValueError: If the dimensions or seed are out of range
        SceneGenerationError: If no placement attempt gives a valid foreground
    """
    for name, dim in (('width', width), ('height', height)):
        if not MIN_DIM <= dim <= MAX_DIM:
            raise ValueError(f"Scene {name} must lie in [{MIN_DIM}, {MAX_DIM}], got {dim}")
    if not 0 <= seed <= MASK64:
        raise ValueError(f"Scene seed must be an unsigned 64-bit integer, got {seed}")

    rng = Xoshiro256StarStar(seed)
    for _ in range(MAX_ATTEMPTS):
        gt = _draw_geometry(rng, profile, width, height)
        fraction = np.count_nonzero(gt) / gt.size
        if MIN_FG_FRACTION <= fraction <= MAX_FG_FRACTION:
            break
    else:
        raise SceneGenerationError(f"No valid {profile.value} geometry for seed {seed} at {width}x{height}")

    pixels = _render(rng, profile, gt)
    return Scene(image=GrayImage(pixels), gt=BinaryMask(gt), profile=profile, seed=seed)


def make_split(profile: SceneProfile, count: int, dims: Tuple[int, int], base_seed: int) -> List[Scene]:
    """
    `count` scenes with consecutive seeds base_seed, base_seed + 1, ...

    Example:
        >>> scenes = make_split(SceneProfile.SALIENT, 4, (64, 64), base_seed=7)
        >>> [s.scene_id for s in scenes]
        ['salient_7', 'salient_8', 'salient_9', 'salient_10']
    """
    if count < 0:
        raise ValueError(f"Scene count must be non-negative, got {count}")
    width, height = dims
    return [generate_scene(base_seed + i, profile, width, height) for i in range(count)]


def parse_dims(text: str) -> Tuple[int, int]:
    """'64x48' -> (64, 48)."""
    try:
        width, height = (int(v) for v in text.lower().split('x'))
    except ValueError:
        raise ValueError(f"Dimensions must look like WIDTHxHEIGHT, got '{text}'")
    for dim in (width, height):
        if not MIN_DIM <= dim <= MAX_DIM:
            raise ValueError(f"Scene dimensions must lie in [{MIN_DIM}, {MAX_DIM}], got '{text}'")
    return width, height
