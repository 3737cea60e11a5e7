import json

import pytest

from src.data_sources.dataset_io import DatasetError, load_manifest, read_dataset, write_dataset
from src.data_sources.scene_synth import SceneProfile, make_split
from src.imaging.pgm import write_mask_pgm
from src.imaging.raster import BinaryMask


@pytest.fixture
def dataset_dir(tmp_path, salient_scenes):
    write_dataset(salient_scenes, tmp_path / 'salient', quiet=True)
    return tmp_path / 'salient'


def test_round_trip(dataset_dir, salient_scenes):
    assert read_dataset(dataset_dir) == salient_scenes


def test_manifest_layout(dataset_dir, salient_scenes):
    raw = json.loads((dataset_dir / 'manifest.json').read_text(encoding='utf-8'))
    assert list(raw) == ['dims', 'entries']
    assert raw['dims'] == [16, 16]
    first = raw['entries'][0]
    assert list(first) == ['id', 'image_path', 'mask_path', 'profile', 'seed']
    assert first['id'] == salient_scenes[0].scene_id
    assert first['image_path'] == f"images/{first['id']}.pgm"
    assert first['profile'] == 'salient'
    manifest = load_manifest(dataset_dir)
    assert len(manifest.entries) == len(salient_scenes)


def test_write_rejects_mixed_sizes(tmp_path):
    scenes = (make_split(SceneProfile.SALIENT, 1, (16, 16), 0)
              + make_split(SceneProfile.SALIENT, 1, (24, 16), 1))
    with pytest.raises(ValueError, match='24x16'):
        write_dataset(scenes, tmp_path / 'mixed', quiet=True)
    with pytest.raises(ValueError):
        write_dataset([], tmp_path / 'empty', quiet=True)


def test_duplicate_ids_rejected(tmp_path, salient_scenes):
    with pytest.raises(DatasetError, match='Duplicate'):
        write_dataset([salient_scenes[0], salient_scenes[0]], tmp_path / 'dup', quiet=True)


def test_missing_manifest(tmp_path):
    with pytest.raises(FileNotFoundError):
        read_dataset(tmp_path)


def test_malformed_manifest(dataset_dir):
    path = dataset_dir / 'manifest.json'
    path.write_text('{not json', encoding='utf-8')
    with pytest.raises(DatasetError, match='invalid JSON'):
        load_manifest(dataset_dir)
    path.write_text(json.dumps({'dims': [16], 'entries': []}), encoding='utf-8')
    with pytest.raises(DatasetError, match='dims'):
        load_manifest(dataset_dir)
    path.write_text(json.dumps({'dims': [16, 16], 'entries': [{'id': 'x'}]}), encoding='utf-8')
    with pytest.raises(DatasetError, match='missing keys'):
        load_manifest(dataset_dir)


def test_missing_file_is_named(dataset_dir, salient_scenes):
    victim = dataset_dir / 'masks' / f'{salient_scenes[1].scene_id}.pgm'
    victim.unlink()
    with pytest.raises(DatasetError, match=salient_scenes[1].scene_id):
        read_dataset(dataset_dir)


def test_raster_size_disagreeing_with_manifest(dataset_dir, salient_scenes):
    victim = dataset_dir / 'masks' / f'{salient_scenes[0].scene_id}.pgm'
    write_mask_pgm(BinaryMask.empty(8, 16), victim)
    with pytest.raises(DatasetError, match='manifest says 16x16'):
        read_dataset(dataset_dir)


def test_corrupt_pgm_becomes_dataset_error(dataset_dir, salient_scenes):
    victim = dataset_dir / 'images' / f'{salient_scenes[2].scene_id}.pgm'
    victim.write_bytes(b'garbage')
    with pytest.raises(DatasetError, match=salient_scenes[2].scene_id):
        read_dataset(dataset_dir)
