"""Unit tests for sequence loading, saving, centering and manifests."""

import json
import os

import numpy as np
import pytest

from src.errors import BadIndex, MissingReference, NonFiniteCoordinate, ParseError, ShapeError
from src.utils.seqdata import (
    ManifestEntry,
    ScalarResponse,
    ResponseKind,
    Sequence,
    SequenceFormat,
    WeightVector,
    center_sequence,
    load_manifest,
    load_sequence,
    minmax_scale,
    save_sequence,
    write_manifest,
)
from tests.conftest import trapezoid_sequence


def _write(path, text):
    with open(path, 'w', encoding='utf-8') as f:
        f.write(text)
    return str(path)


def test_long_csv_any_row_order(tmp_path):
    path = _write(tmp_path / 's.csv',
                  "frame,point,x,y\n"
                  "1,1,7,8\n"
                  "0,0,1,2\n"
                  "1,0,5,6\n"
                  "0,1,3,4\n")
    seq = load_sequence(path, 'long')
    assert seq.id == 's'
    assert seq.points.shape == (2, 2, 2)
    np.testing.assert_array_equal(seq.points[:, 0, 0], [1, 2])
    np.testing.assert_array_equal(seq.points[:, 1, 0], [3, 4])
    np.testing.assert_array_equal(seq.points[:, 0, 1], [5, 6])
    np.testing.assert_array_equal(seq.points[:, 1, 1], [7, 8])


def test_long_csv_one_based_ids(tmp_path):
    path = _write(tmp_path / 's.csv',
                  "frame,point,x,y,z\n"
                  "1,1,0,0,0\n1,2,1,1,1\n"
                  "2,1,0,0,1\n2,2,1,1,2\n")
    seq = load_sequence(path)
    assert (seq.dim, seq.num_points, seq.num_frames) == (3, 2, 2)
    assert seq.points[2, 1, 1] == 2.0


@pytest.mark.parametrize('body,missing', [
    ("0,0,1,1\n0,1,2,2\n1,0,1,1\n1,1,2,2\n5,0,1,1\n5,1,2,2\n", 'frame 2'),
    ("0,0,1,1\n0,3,2,2\n1,0,1,1\n1,3,2,2\n", 'point 1'),
])
def test_long_csv_gaps_are_shape_errors(tmp_path, body, missing):
    path = _write(tmp_path / 's.csv', "frame,point,x,y\n" + body)
    with pytest.raises(ShapeError, match=missing):
        load_sequence(path)


@pytest.mark.parametrize('text,missing', [
    ("frame,p0_x,p0_y,p1_x,p1_y\n0,1,1,2,2\n1,1,1,2,2\n3,1,1,2,2\n", 'frame 2'),
    ("frame,p0_x,p0_y,p2_x,p2_y\n0,1,1,2,2\n1,1,1,2,2\n", 'point 1'),
])
def test_wide_csv_gaps_are_shape_errors(tmp_path, text, missing):
    path = _write(tmp_path / 'w.csv', text)
    with pytest.raises(ShapeError, match=missing):
        load_sequence(path, 'wide')


def test_wide_csv(tmp_path):
    path = _write(tmp_path / 'w.csv',
                  "frame,p0_x,p0_y,p1_x,p1_y\n"
                  "1,0,0,3,4\n"
                  "0,0,0,1,2\n")
    seq = load_sequence(path, SequenceFormat.WIDE)
    np.testing.assert_array_equal(seq.points[:, 1, 0], [1, 2])
    np.testing.assert_array_equal(seq.points[:, 1, 1], [3, 4])


def test_json_keeps_stored_metadata(tmp_path):
    document = {'id': 'j1', 'dim': 2, 'nose_index': 0, 'label': 'happy',
                'frames': [[[0, 0], [1, 1]], [[0, 0], [2, 2]]]}
    path = _write(tmp_path / 'j.json', json.dumps(document))
    seq = load_sequence(path, 'json')
    assert seq.id == 'j1'
    assert seq.label == 'happy'
    assert seq.nose_index == 0
    assert seq.points[0, 1, 1] == 2.0


def test_missing_cell_is_shape_error(tmp_path):
    path = _write(tmp_path / 's.csv', "frame,point,x,y\n0,0,1,2\n0,1,3,4\n1,0,5,6\n")
    with pytest.raises(ShapeError):
        load_sequence(path)


def test_non_numeric_coordinate_is_parse_error(tmp_path):
    path = _write(tmp_path / 's.csv', "frame,point,x,y\n0,0,a,2\n1,0,5,6\n")
    with pytest.raises(ParseError):
        load_sequence(path)


def test_nan_coordinate(tmp_path):
    path = _write(tmp_path / 's.csv', "frame,point,x,y\n0,0,nan,2\n1,0,5,6\n")
    with pytest.raises(NonFiniteCoordinate):
        load_sequence(path)


def test_bad_header(tmp_path):
    path = _write(tmp_path / 's.csv', "t,point,x,y\n0,0,1,2\n1,0,5,6\n")
    with pytest.raises(ParseError):
        load_sequence(path)


def test_missing_file():
    with pytest.raises(FileNotFoundError):
        load_sequence('/nonexistent/sequence.csv')


@pytest.mark.parametrize('seed', range(50))
@pytest.mark.parametrize('fmt', ['long', 'wide', 'json'])
def test_save_then_load_keeps_values(tmp_path, fmt, seed):
    rng = np.random.default_rng(seed)
    d, n, t = int(rng.choice([2, 3])), int(rng.integers(3, 12)), int(rng.integers(2, 30))
    seq = Sequence('rt', rng.normal(size=(d, n, t)) * 10.0 ** rng.integers(-3, 5), nose_index=2)
    path = str(tmp_path / f"rt.{'json' if fmt == 'json' else 'csv'}")
    save_sequence(seq, path, fmt)
    loaded = load_sequence(path, fmt, nose_index=2)
    np.testing.assert_array_equal(loaded.points, seq.points)


def test_sequence_validation():
    with pytest.raises(ShapeError):
        Sequence('bad', np.zeros((4, 2, 3)))
    with pytest.raises(ShapeError):
        Sequence('bad', np.zeros((2, 2, 1)))
    with pytest.raises(BadIndex):
        Sequence('bad', np.zeros((2, 2, 3)), nose_index=2)
    with pytest.raises(NonFiniteCoordinate):
        Sequence('bad', np.full((2, 2, 3), np.inf))


def test_points_are_read_only():
    seq = Sequence('ro', np.zeros((2, 2, 3)))
    with pytest.raises(ValueError):
        seq.points[0, 0, 0] = 1.0


def test_center_sequence_puts_reference_at_origin():
    rng = np.random.default_rng(0)
    seq = Sequence('c', rng.normal(size=(2, 5, 7)), nose_index=3)
    centered = center_sequence(seq)
    np.testing.assert_array_equal(centered.points[:, 3, :], 0.0)
    np.testing.assert_allclose(centered.points[:, 1, :], seq.points[:, 1, :] - seq.points[:, 3, :])
    # centering twice changes nothing
    np.testing.assert_array_equal(center_sequence(centered).points, centered.points)


def test_center_sequence_errors():
    seq = Sequence('c', np.ones((2, 3, 4)))
    with pytest.raises(MissingReference):
        center_sequence(seq)
    with pytest.raises(BadIndex):
        center_sequence(seq, 3)


def test_minmax_scale():
    np.testing.assert_array_equal(minmax_scale(np.array([2.0, 4.0, 3.0])), [0.0, 1.0, 0.5])
    np.testing.assert_array_equal(minmax_scale(np.full(4, 7.0)), np.zeros(4))


def test_response_and_weight_validation():
    assert ScalarResponse([1, 3], ResponseKind.FINAL).values.tolist() == [1.0, 3.0]
    with pytest.raises(ValueError):
        WeightVector(np.array([0.5, 1.5]))


class TestManifest:
    def test_round_trip_with_relative_paths(self, tmp_path):
        seq = trapezoid_sequence(sequence_id='a')
        save_sequence(seq, str(tmp_path / 'a.csv'))
        entries = [ManifestEntry('a', str(tmp_path / 'a.csv'), SequenceFormat.LONG, 'happy', 's1', 0)]
        write_manifest(entries, str(tmp_path / 'manifest.csv'))
        loaded = load_manifest(str(tmp_path / 'manifest.csv'))
        assert loaded == entries

    def test_duplicate_ids(self, tmp_path):
        path = _write(tmp_path / 'm.csv', "sequence_id,path,format\na,x.csv,long\na,y.csv,long\n")
        with pytest.raises(ParseError):
            load_manifest(path)

    def test_missing_columns(self, tmp_path):
        path = _write(tmp_path / 'm.csv', "sequence_id,path\na,x.csv\n")
        with pytest.raises(ParseError):
            load_manifest(path)

    def test_optional_columns_default_to_none(self, tmp_path):
        path = _write(tmp_path / 'm.csv', "sequence_id,path,format\na,x.csv,wide\n")
        entry = load_manifest(path)[0]
        assert entry.format is SequenceFormat.WIDE
        assert entry.label is None and entry.nose_index is None
        assert entry.path == os.path.join(str(tmp_path), 'x.csv')

    @pytest.mark.parametrize('text', [
        "sequence_id,path,format\na,x.csv,long\nb,y.csv,long,extra,fields\n",
        "",
    ])
    def test_malformed_file_is_parse_error(self, tmp_path, text):
        path = _write(tmp_path / 'm.csv', text)
        with pytest.raises(ParseError):
            load_manifest(path)
