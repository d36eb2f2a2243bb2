import os
import sys

import numpy as np
import pytest

# Add project root to path to ensure imports work
PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if PROJECT_ROOT not in sys.path:
    sys.path.insert(0, PROJECT_ROOT)

from src.utils.seqdata import ManifestEntry, Sequence, SequenceFormat, save_sequence, write_manifest  # noqa: E402
from src.utils.synth import generate, suite_spec  # noqa: E402


def trapezoid_sequence(num_points: int = 6, num_frames: int = 60, t1: int = 15, t2: int = 40,
                       movers=(1, 2, 3), amplitude: float = 10.0, seed: int = 0,
                       sequence_id: str = 'trap', label=None) -> Sequence:
    """Noiseless sequence: point 0 is the nose at the origin, movers step outward between t1 and t2."""
    rng = np.random.default_rng(seed)
    base = rng.uniform(-50, 50, size=(2, num_points))
    base[:, 0] = 0.0
    points = np.repeat(base[:, :, None], num_frames, axis=2)
    t = np.arange(num_frames)
    profile = ((t > t1) & (t < t2)).astype(float)
    for i in movers:
        direction = base[:, i] / np.linalg.norm(base[:, i])
        points[:, i, :] += amplitude * direction[:, None] * profile[None, :]
    return Sequence(sequence_id, points, label=label, nose_index=0)


def write_synthetic_manifest(directory, suite: str = 'default', count: int = 3, seed: int = 0,
                             fmt: str = 'long', label=None):
    """Generate `count` suite sequences into `directory` and return (manifest path, truths)."""
    directory = str(directory)
    os.makedirs(directory, exist_ok=True)
    entries, truths = [], {}
    for i in range(count):
        sequence_id = f"{suite}_{i:03d}"
        seq, gt = generate(suite_spec(suite, seed + i), sequence_id, label=label or suite)
        path = os.path.join(directory, f"{sequence_id}.{'json' if fmt == 'json' else 'csv'}")
        save_sequence(seq, path, fmt)
        entries.append(ManifestEntry(sequence_id, path, SequenceFormat.parse(fmt), label or suite, None, 0))
        truths[sequence_id] = gt
    manifest = os.path.join(directory, 'manifest.csv')
    write_manifest(entries, manifest)
    return manifest, truths


@pytest.fixture
def trapezoid():
    return trapezoid_sequence()


@pytest.fixture
def default_synthetic():
    return generate(suite_spec('default', 3), 'default_003')


@pytest.fixture
def synthetic_manifest(tmp_path):
    return write_synthetic_manifest(tmp_path / 'data')
