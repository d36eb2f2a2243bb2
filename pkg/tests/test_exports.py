"""Unit tests for the CSV readers and writers."""

import json

import numpy as np
import pandas as pd
import pytest

from src.config import ResponseConfig
from src.errors import BadEvent, LengthMismatch, ParseError
from src.utils.align import dtw_align, make_template, select_transition
from src.utils.analysis import AUEvent, ward_cluster
from src.utils.exports import (
    ANNOTATION_COLUMNS,
    AU_SUMMARY_COLUMNS,
    DISTRIBUTION_COLUMNS,
    REPORT_COLUMNS,
    alignment_report_table,
    au_summary_table,
    distribution_table,
    read_annotations,
    read_table,
    read_truth,
    write_annotations,
    write_cluster,
    write_intensity,
    write_truth,
    write_warp_path,
)
from src.utils.response import estimate_intensity


def test_intensity_files(tmp_path, trapezoid):
    result = estimate_intensity(trapezoid, ResponseConfig(sigma=0.0))
    paths = write_intensity(result, str(tmp_path), 'trap')
    response = read_table(paths['response'], ['t', 'final', 'final_norm', 'approx'])
    weights = read_table(paths['weights'], ['point', 'weight', 'distance', 'flipped'])
    assert len(response) == trapezoid.num_frames
    np.testing.assert_allclose(response['final_norm'], result.final_norm.values, atol=1e-11)
    assert weights['point'].tolist() == list(range(trapezoid.num_points))


def test_rerun_writes_identical_bytes(tmp_path, trapezoid):
    result = estimate_intensity(trapezoid)
    first = write_intensity(result, str(tmp_path / 'a'), 'trap')
    second = write_intensity(result, str(tmp_path / 'b'), 'trap')
    for key in first:
        with open(first[key], 'rb') as a, open(second[key], 'rb') as b:
            assert a.read() == b.read()


def test_warp_path_file(tmp_path):
    res = dtw_align(np.array([0.0, 0.5, 1.0, 1.0]), np.array([0.0, 1.0, 1.0]))
    write_warp_path(res.path, str(tmp_path / 'path.csv'))
    table = read_table(str(tmp_path / 'path.csv'), ['src_frame', 'tpl_frame'])
    assert table[['src_frame', 'tpl_frame']].to_numpy().tolist() == res.path.pairs.tolist()


def test_alignment_report_rows_sorted():
    tpl = make_template(100, 30, 0)
    res = select_transition(dtw_align(tpl, tpl), tpl, 30)
    table = alignment_report_table({'b': res, 'a': res})
    assert list(table.columns) == REPORT_COLUMNS
    assert table['sequence_id'].tolist() == ['a', 'b']
    assert table['chosen_transition'].tolist() == ['First', 'First']


def test_identical_windows_have_no_spread():
    window = np.linspace(0, 1, 30)
    table = distribution_table([window, window, window])
    assert list(table.columns) == DISTRIBUTION_COLUMNS
    for column in DISTRIBUTION_COLUMNS[1:]:
        np.testing.assert_allclose(table[column], window)


class TestTruth:
    def test_per_frame_truth(self, tmp_path):
        write_truth({'b': np.array([0.0, 1.0, 0.5]), 'a': np.array([1.0, 2.0])}, str(tmp_path / 'truth.csv'))
        truth = read_truth(str(tmp_path / 'truth.csv'))
        assert sorted(truth) == ['a', 'b']
        assert truth['b'].response(3).values.tolist() == [0.0, 1.0, 0.5]
        with pytest.raises(LengthMismatch):
            truth['a'].response(3)

    def test_apex_truth(self, tmp_path):
        path = tmp_path / 'apex.csv'
        path.write_text("sequence_id,apex_frame,peak_value\ns1,5,2\ns2,3,\n")
        truth = read_truth(str(path))
        assert truth['s1'].response(11).values[5] == 2.0
        assert truth['s1'].response(11).values[3] == pytest.approx(1.2)
        assert truth['s2'].response(7, default_peak=4.0).values[3] == 4.0
        with pytest.raises(ParseError):
            truth['s2'].response(7)

    def test_gappy_frames_fail_only_their_sequence(self, tmp_path):
        path = tmp_path / 'truth.csv'
        path.write_text("sequence_id,t,intensity\na,0,0\na,1,1\nb,0,0\nb,1,1\nb,3,0\n")
        truth = read_truth(str(path))
        assert truth['a'].response(2).values.tolist() == [0.0, 1.0]
        with pytest.raises(ParseError, match='frame 2'):
            truth['b'].response(3)

    def test_numeric_ids_stay_strings(self, tmp_path):
        path = tmp_path / 'apex.csv'
        path.write_text("sequence_id,apex_frame\n001,5\n")
        assert list(read_truth(str(path))) == ['001']

    def test_unknown_layout(self, tmp_path):
        path = tmp_path / 'bad.csv'
        path.write_text("sequence_id,value\ns1,5\n")
        with pytest.raises(ParseError):
            read_truth(str(path))


class TestAnnotations:
    def test_round_trip_and_invalid_rows(self, tmp_path):
        path = str(tmp_path / 'annotations.csv')
        write_annotations({'s1': [AUEvent('AU1', 0, 2, 4, 6, 8)]}, path)
        with open(path, 'a', encoding='utf-8') as f:
            f.write("s1,AU2,0,5,5,6,8\ns2,AU4,0,x,4,6,8\n")
        events = read_annotations(path)
        assert events['s1'][0] == {'event': AUEvent('AU1', 0, 2, 4, 6, 8)}
        assert isinstance(events['s1'][1]['error'], BadEvent)
        assert events['s2'][0]['au_id'] == 'AU4'
        assert 'error' in events['s2'][0]

    def test_header_only(self, tmp_path):
        path = tmp_path / 'annotations.csv'
        path.write_text(','.join(ANNOTATION_COLUMNS) + '\n')
        assert read_annotations(str(path)) == {}

    def test_missing_columns(self, tmp_path):
        path = tmp_path / 'annotations.csv'
        path.write_text("sequence_id,au_id\ns1,AU1\n")
        with pytest.raises(ParseError):
            read_annotations(str(path))


def test_au_summary_means_per_au():
    details = pd.DataFrame({
        'sequence_id': ['a', 'b', 'a'],
        'au_id': ['AU2', 'AU2', 'AU1'],
        'mse_pca': [2.0, 4.0, 1.0],
        'mse_full': [1.0, 3.0, 0.5],
        'mse_thresholded': [0.5, 1.5, 0.25],
    })
    summary = au_summary_table(details)
    assert list(summary.columns) == AU_SUMMARY_COLUMNS
    assert summary['au_id'].tolist() == ['AU1', 'AU2']
    assert summary.loc[1, 'mse_pca'] == 3.0


def test_cluster_files(tmp_path):
    rows = np.vstack([np.zeros((2, 3)), np.ones((2, 3))])
    shapes = np.arange(4 * 2 * 3, dtype=float).reshape(4, 2, 3)
    write_cluster(ward_cluster(rows, 2, shapes), ['a', 'b', 'c', 'd'], str(tmp_path), 'happy')
    labels = read_table(str(tmp_path / 'happy_labels.csv'), ['sequence_id', 'cluster'])
    assert labels['cluster'].tolist() == [0, 0, 1, 1]
    tree = read_table(str(tmp_path / 'happy_merge_tree.csv'), ['step', 'node_a', 'node_b', 'height', 'size'])
    assert len(tree) == 3
    with open(tmp_path / 'happy_mean_shapes.json', encoding='utf-8') as f:
        document = json.load(f)
    assert len(document['frames']) == 2
    assert document['dim'] == 2


def test_read_table_missing_column(tmp_path):
    path = tmp_path / 'x.csv'
    path.write_text("a,b\n1,2\n")
    with pytest.raises(ParseError):
        read_table(str(path), ['a', 'c'])
