"""
Dataset persistence: scenes on disk as PGM pairs plus manifest.json.

Layout:
    <directory>/manifest.json
    <directory>/images/<scene_id>.pgm
    <directory>/masks/<scene_id>.pgm

manifest.json (UTF-8, keys in this order):
    {
      "dims": [width, height],
      "entries": [
        {"id": ..., "image_path": "images/...", "mask_path": "masks/...",
         "profile": "salient", "seed": 7},
        ...
      ]
    }

Paths in the manifest are relative to the dataset directory.
"""

import json
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Tuple

from src.data_sources.scene_synth import Scene, SceneProfile
from src.imaging.pgm import PgmError, read_image_pgm, read_mask_pgm, write_image_pgm, write_mask_pgm
from src.utils.io import ensure_dir, load_json, save_json

MANIFEST_NAME = 'manifest.json'
ENTRY_KEYS = ('id', 'image_path', 'mask_path', 'profile', 'seed')


class DatasetError(ValueError):
    """Malformed manifest, missing file or inconsistent raster on disk."""


@dataclass(frozen=True)
class ManifestEntry:
    id: str
    image_path: str
    mask_path: str
    profile: SceneProfile
    seed: int

    def to_dict(self) -> dict:
        return {
            'id': self.id,
            'image_path': self.image_path,
            'mask_path': self.mask_path,
            'profile': self.profile.value,
            'seed': self.seed,
        }


@dataclass(frozen=True)
class DatasetManifest:
    entries: Tuple[ManifestEntry, ...]
    dims: Tuple[int, int]

    def __post_init__(self):
        ids = [e.id for e in self.entries]
        duplicates = sorted({i for i in ids if ids.count(i) > 1})
        if duplicates:
            raise DatasetError(f"Duplicate scene ids in manifest: {', '.join(duplicates)}")

    def to_dict(self) -> dict:
        return {
            'dims': list(self.dims),
            'entries': [e.to_dict() for e in self.entries],
        }


def write_dataset(scenes: Sequence[Scene], directory: Path, quiet: bool = False) -> DatasetManifest:
    """
    Write scenes as PGM pairs and a manifest.

    Args:
        scenes: Scenes sharing one size
        directory: Target dataset directory (created if needed)
        quiet: Suppress progress output

    Returns:
        The manifest written to <directory>/manifest.json

    Raises:
        ValueError: If the scenes are empty or differ in size
        DatasetError: If scene ids collide
    """
    directory = Path(directory)
    if not scenes:
        raise ValueError("write_dataset needs at least one scene")
    dims = (scenes[0].width, scenes[0].height)
    for scene in scenes:
        if (scene.width, scene.height) != dims:
            raise ValueError(
                f"Scene {scene.scene_id} is {scene.width}x{scene.height}, dataset is {dims[0]}x{dims[1]}"
            )

    entries = tuple(
        ManifestEntry(
            id=scene.scene_id,
            image_path=f"images/{scene.scene_id}.pgm",
            mask_path=f"masks/{scene.scene_id}.pgm",
            profile=scene.profile,
            seed=scene.seed,
        )
        for scene in scenes
    )
    manifest = DatasetManifest(entries=entries, dims=dims)

    ensure_dir(directory / 'images')
    ensure_dir(directory / 'masks')
    for scene, entry in zip(scenes, entries):
        write_image_pgm(scene.image, directory / entry.image_path)
        write_mask_pgm(scene.gt, directory / entry.mask_path)
    save_json(manifest.to_dict(), directory / MANIFEST_NAME, quiet=True)

    if not quiet:
        print(f"   ✓ Wrote {len(scenes)} scenes to {directory}")
    return manifest


def _entry_from_dict(raw, index: int, manifest_path: Path) -> ManifestEntry:
    if not isinstance(raw, dict):
        raise DatasetError(f"{manifest_path}: entry {index} is not an object")
    missing = [k for k in ENTRY_KEYS if k not in raw]
    if missing:
        raise DatasetError(f"{manifest_path}: entry {index} missing keys {', '.join(missing)}")
    try:
        profile = SceneProfile.from_name(str(raw['profile']))
        seed = int(raw['seed'])
    except (KeyError, TypeError, ValueError) as e:
        raise DatasetError(f"{manifest_path}: entry {index} has a bad profile or seed ({e})") from e
    return ManifestEntry(
        id=str(raw['id']),
        image_path=str(raw['image_path']),
        mask_path=str(raw['mask_path']),
        profile=profile,
        seed=seed,
    )


def load_manifest(directory: Path) -> DatasetManifest:
    """
    Read and validate <directory>/manifest.json.

    Raises:
        FileNotFoundError: If the manifest does not exist
        DatasetError: If it is not valid JSON or violates the schema
    """
    manifest_path = Path(directory) / MANIFEST_NAME
    try:
        raw = load_json(manifest_path)
    except json.JSONDecodeError as e:
        raise DatasetError(f"{manifest_path}: invalid JSON ({e})") from e

    if not isinstance(raw, dict) or 'dims' not in raw or 'entries' not in raw:
        raise DatasetError(f"{manifest_path}: expected an object with 'dims' and 'entries'")
    dims = raw['dims']
    if (not isinstance(dims, list) or len(dims) != 2
            or not all(isinstance(v, int) and v > 0 for v in dims)):
        raise DatasetError(f"{manifest_path}: 'dims' must be [width, height], got {dims}")
    if not isinstance(raw['entries'], list):
        raise DatasetError(f"{manifest_path}: 'entries' must be a list")

    entries = tuple(_entry_from_dict(e, i, manifest_path) for i, e in enumerate(raw['entries']))
    return DatasetManifest(entries=entries, dims=(dims[0], dims[1]))


def read_dataset(directory: Path) -> List[Scene]:
    """
    Load every scene listed in a dataset manifest.

    Raises:
        FileNotFoundError: If the manifest does not exist
        DatasetError: Naming the file, for a missing or malformed PGM or a
            raster whose size differs from the manifest dims
    """
    directory = Path(directory)
    manifest = load_manifest(directory)
    width, height = manifest.dims

    scenes = []
    for entry in manifest.entries:
        image_path = directory / entry.image_path
        mask_path = directory / entry.mask_path
        for path in (image_path, mask_path):
            if not path.exists():
                raise DatasetError(f"Dataset file missing: {path} (scene {entry.id})")
        try:
            image = read_image_pgm(image_path)
            gt = read_mask_pgm(mask_path)
        except PgmError as e:
            raise DatasetError(str(e)) from e

        for path, shape in ((image_path, image.shape), (mask_path, gt.shape)):
            if shape != (height, width):
                raise DatasetError(
                    f"{path}: raster is {shape[1]}x{shape[0]}, manifest says {width}x{height}"
                )
        scenes.append(Scene(image=image, gt=gt, profile=entry.profile, seed=entry.seed))
    return scenes
