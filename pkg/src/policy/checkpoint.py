"""
Policy checkpoints.

Binary layout (little-endian):

    8 bytes   magic b"SEGPOLCK"
    uint32    format version (1)
    uint32    V, h, d
    float64   E, W_h, W_e, W_f, b, U   (row-major, in this order)

Round-trips are bit-exact.
"""

from pathlib import Path

import numpy as np

from src.policy.recurrent import PARAM_ORDER, PolicyParams
from src.utils.io import ensure_dir

MAGIC = b"SEGPOLCK"
VERSION = 1
_HEADER_WORDS = 4


class CheckpointError(ValueError):
    """A checkpoint file is truncated, has the wrong magic or the wrong size."""


def save_checkpoint(params: PolicyParams, file_path: Path, quiet: bool = True) -> Path:
    file_path = Path(file_path)
    ensure_dir(file_path.parent)
    V, h, d = params.dims
    header = np.array([VERSION, V, h, d], dtype='<u4').tobytes()
    body = b''.join(getattr(params, name).astype('<f8').tobytes() for name in PARAM_ORDER)
    with open(file_path, 'wb') as f:
        f.write(MAGIC + header + body)
    if not quiet:
        print(f"   ✓ Saved checkpoint to {file_path}")
    return file_path


def load_checkpoint(file_path: Path) -> PolicyParams:
    """
    Raises:
        FileNotFoundError: If the file does not exist
        CheckpointError: If the file is not a valid checkpoint
    """
    file_path = Path(file_path)
    if not file_path.exists():
        raise FileNotFoundError(f"Checkpoint not found: {file_path}")
    data = file_path.read_bytes()

    header_end = len(MAGIC) + 4 * _HEADER_WORDS
    if len(data) < header_end or data[:len(MAGIC)] != MAGIC:
        raise CheckpointError(f"{file_path}: not a policy checkpoint")
    version, V, h, d = (int(v) for v in np.frombuffer(data[len(MAGIC):header_end], dtype='<u4'))
    if version != VERSION:
        raise CheckpointError(f"{file_path}: unsupported checkpoint version {version}")

    shapes = PolicyParams.shapes(V, h, d)
    expected = header_end + 8 * sum(int(np.prod(shapes[n])) for n in PARAM_ORDER)
    if len(data) != expected:
        raise CheckpointError(f"{file_path}: expected {expected} bytes for V={V} h={h} d={d}, got {len(data)}")

    arrays, offset = {}, header_end
    for name in PARAM_ORDER:
        count = int(np.prod(shapes[name]))
        arrays[name] = np.frombuffer(data, dtype='<f8', count=count, offset=offset).reshape(shapes[name])
        offset += 8 * count
    return PolicyParams(**arrays)
