#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
CSV and JSON emission of pipeline results, and readers for the tabular inputs
(ground truth, AU annotations) and for the files written here.

Floats are written with 12 significant digits so reruns produce identical bytes.
"""

import json
import os
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence as Seq

import numpy as np
import pandas as pd

from src.errors import BadEvent, LengthMismatch, ParseError
from src.logger import logger
from src.utils.align import AlignmentResult, WarpPath
from src.utils.analysis import AUEvent, ClusterResult
from src.utils.metrics import EvalReport, pseudo_ground_truth_triangle
from src.utils.response import IntensityResult
from src.utils.seqdata import ResponseKind, ScalarResponse

FLOAT_FORMAT = '%.12g'

RESPONSE_COLUMNS = ['t', 'final', 'final_norm', 'approx']
WEIGHT_COLUMNS = ['point', 'weight', 'distance', 'flipped']
PATH_COLUMNS = ['src_frame', 'tpl_frame']
REPORT_COLUMNS = ['sequence_id', 'cost', 'chosen_transition', 'window_error_first', 'window_error_second']
DISTRIBUTION_COLUMNS = ['frame', 'q05', 'q25', 'median', 'q75', 'q95']
EVAL_COLUMNS = ['sequence_id', 'mae', 'pcc', 'icc']
AU_SUMMARY_COLUMNS = ['au_id', 'mse_pca', 'mse_full', 'mse_thresholded']
AU_DETAIL_COLUMNS = ['sequence_id', 'au_id', 'mse_pca', 'mse_full', 'mse_thresholded']
AU_RESPONSE_COLUMNS = ['t', 'approx', 'final_full', 'final_thresholded', 'global_pca']
ANNOTATION_COLUMNS = ['sequence_id', 'au_id', 'ne_start', 'onset', 'apex', 'offset', 'ne_end']
ERROR_COLUMNS = ['sequence_id', 'processor', 'error_type', 'error']
MERGE_COLUMNS = ['step', 'node_a', 'node_b', 'height', 'size']
TRUTH_COLUMNS = ['sequence_id', 't', 'intensity']
SUMMARY_ID = 'summary'


def write_table(table: pd.DataFrame, path: str) -> None:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    table.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator='\n')
    logger.debug(f"Wrote {len(table)} rows to {path}")


def read_table(path: str, required: Seq[str]) -> pd.DataFrame:
    try:
        table = pd.read_csv(path, float_precision='round_trip', keep_default_na=False, na_values=[''],
                            dtype={'sequence_id': str})
    except pd.errors.EmptyDataError:
        return pd.DataFrame(columns=list(required))
    except pd.errors.ParserError as e:
        raise ParseError(f"{path}: {e}") from e
    missing = [column for column in required if column not in table.columns]
    if missing:
        raise ParseError(f"{path}: missing columns {missing}")
    return table


# ---------------------------------------------------------------------------
# Responses and weights
# ---------------------------------------------------------------------------

def response_table(result: IntensityResult) -> pd.DataFrame:
    return pd.DataFrame({
        't': np.arange(len(result.final)),
        'final': result.final.values,
        'final_norm': result.final_norm.values,
        'approx': result.approx.values,
    }, columns=RESPONSE_COLUMNS)


def weights_table(result: IntensityResult) -> pd.DataFrame:
    distances = result.weights.distances
    if distances is None:
        distances = np.full(len(result.weights), np.nan)
    return pd.DataFrame({
        'point': np.arange(len(result.weights)),
        'weight': result.weights.weights,
        'distance': distances,
        'flipped': result.flipped.astype(int),
    }, columns=WEIGHT_COLUMNS)


def write_intensity(result: IntensityResult, out_dir: str, sequence_id: str) -> Dict[str, str]:
    paths = {
        'response': os.path.join(out_dir, f"{sequence_id}_response.csv"),
        'weights': os.path.join(out_dir, f"{sequence_id}_weights.csv"),
    }
    write_table(response_table(result), paths['response'])
    write_table(weights_table(result), paths['weights'])
    return paths


def write_series(values: Dict[str, np.ndarray], path: str) -> None:
    """Write named equal-length series with a leading frame index column `t`."""
    length = len(next(iter(values.values())))
    table = pd.DataFrame({'t': np.arange(length), **{k: np.asarray(v) for k, v in values.items()}})
    write_table(table, path)


# ---------------------------------------------------------------------------
# Alignment
# ---------------------------------------------------------------------------

def write_warp_path(path: WarpPath, target: str) -> None:
    write_table(pd.DataFrame(path.pairs, columns=PATH_COLUMNS), target)


def alignment_report_table(results: Dict[str, AlignmentResult]) -> pd.DataFrame:
    rows = []
    for sequence_id in sorted(results):
        res = results[sequence_id]
        first, second = res.window_errors if res.window_errors is not None else (np.nan, np.nan)
        rows.append({
            'sequence_id': sequence_id,
            'cost': res.cost,
            'chosen_transition': res.chosen_transition.value,
            'window_error_first': first,
            'window_error_second': second,
        })
    return pd.DataFrame(rows, columns=REPORT_COLUMNS)


def distribution_table(windows: Seq[np.ndarray]) -> pd.DataFrame:
    """Per-frame quantiles of equal-length aligned transition windows."""
    stacked = np.vstack(windows)
    quantiles = np.quantile(stacked, [0.05, 0.25, 0.5, 0.75, 0.95], axis=0)
    table = pd.DataFrame(quantiles.T, columns=DISTRIBUTION_COLUMNS[1:])
    table.insert(0, 'frame', np.arange(stacked.shape[1]))
    return table


def mse_summary_table(values: Dict[str, Optional[float]], count: Dict[str, int]) -> pd.DataFrame:
    rows = [{'feature': name, 'mse': values[name], 'sequences': count[name]} for name in values]
    return pd.DataFrame(rows, columns=['feature', 'mse', 'sequences'])


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------

def eval_report_table(report: EvalReport) -> pd.DataFrame:
    rows = [{'sequence_id': s.sequence_id, 'mae': s.mae, 'pcc': s.pcc, 'icc': s.icc}
            for s in report.per_sequence]
    rows.append({'sequence_id': SUMMARY_ID, 'mae': report.mae, 'pcc': report.pcc, 'icc': report.icc})
    return pd.DataFrame(rows, columns=EVAL_COLUMNS)


@dataclass(frozen=True, eq=False)
class TruthRow:
    """Ground truth of one sequence: full per-frame values, or an apex for the triangle."""
    values: Optional[np.ndarray] = None
    apex: Optional[int] = None
    peak_value: Optional[float] = None
    # set when the rows of this sequence are unusable; raised once the sequence is scored
    problem: Optional[str] = None

    def response(self, T: int, default_peak: Optional[float] = None) -> ScalarResponse:
        if self.problem is not None:
            raise ParseError(self.problem)
        if self.values is not None:
            if len(self.values) != T:
                raise LengthMismatch(f"truth has {len(self.values)} frames, sequence has {T}")
            return ScalarResponse(self.values, ResponseKind.APPROXIMATED)
        peak = self.peak_value if self.peak_value is not None else default_peak
        if peak is None:
            raise ParseError("apex truth without peak_value and no peak_value configured")
        return pseudo_ground_truth_triangle(self.apex, T, peak)


def read_truth(path: str) -> Dict[str, TruthRow]:
    """
    Ground truth per sequence id.

    Accepts either `sequence_id,t,intensity` (full per-frame truth) or
    `sequence_id,apex_frame[,peak_value]` (triangle truth built once the length is known).
    Per-frame truth must list t = 0..T-1 without gaps; a sequence that does not fails when scored.
    """
    table = read_table(path, ['sequence_id'])
    table['sequence_id'] = table['sequence_id'].astype(str)
    truth: Dict[str, TruthRow] = {}
    if set(TRUTH_COLUMNS) <= set(table.columns):
        for sequence_id, group in table.groupby('sequence_id', sort=True):
            ordered = group.sort_values('t')
            frames = pd.to_numeric(ordered['t'], errors='coerce').to_numpy()
            expected = np.arange(len(frames))
            if not np.array_equal(frames, expected):
                gap = int(np.flatnonzero(frames != expected)[0])
                truth[sequence_id] = TruthRow(problem=f"{path}: truth for {sequence_id} must list t = 0..T-1 "
                                                      f"without gaps; frame {gap} is missing or repeated")
                continue
            truth[sequence_id] = TruthRow(values=ordered['intensity'].to_numpy(dtype=np.float64))
        return truth
    if 'apex_frame' not in table.columns:
        raise ParseError(f"{path}: expected columns {TRUTH_COLUMNS} or sequence_id,apex_frame[,peak_value]")
    for row in table.to_dict('records'):
        peak = row.get('peak_value')
        if peak is not None and np.isnan(float(peak)):
            peak = None
        truth[row['sequence_id']] = TruthRow(apex=int(row['apex_frame']),
                                             peak_value=None if peak is None else float(peak))
    return truth


def write_truth(truth: Dict[str, np.ndarray], path: str) -> None:
    frames = []
    for sequence_id in sorted(truth):
        values = np.asarray(truth[sequence_id])
        frames.append(pd.DataFrame({'sequence_id': sequence_id, 't': np.arange(len(values)), 'intensity': values}))
    table = pd.concat(frames, ignore_index=True) if frames else pd.DataFrame(columns=TRUTH_COLUMNS)
    write_table(table, path)


# ---------------------------------------------------------------------------
# Action units
# ---------------------------------------------------------------------------

def read_annotations(path: str) -> Dict[str, List[Dict]]:
    """
    Read `sequence_id,au_id,ne_start,onset,apex,offset,ne_end`.

    Returns:
        sequence id -> list of {'event': AUEvent} or {'au_id', 'error'} for invalid rows
    """
    table = read_table(path, ANNOTATION_COLUMNS)
    grouped: Dict[str, List[Dict]] = {}
    for row in table.to_dict('records'):
        sequence_id = str(row['sequence_id'])
        try:
            frames = [int(row[c]) for c in ANNOTATION_COLUMNS[2:]]
            item = {'event': AUEvent(str(row['au_id']), *frames)}
        except (BadEvent, ValueError, TypeError) as e:
            item = {'au_id': str(row['au_id']), 'error': e}
        grouped.setdefault(sequence_id, []).append(item)
    return grouped


def write_annotations(events: Dict[str, List[AUEvent]], path: str) -> None:
    rows = [{'sequence_id': sequence_id, 'au_id': ev.au_id, 'ne_start': ev.ne_start, 'onset': ev.onset,
             'apex': ev.apex, 'offset': ev.offset, 'ne_end': ev.ne_end}
            for sequence_id in sorted(events) for ev in events[sequence_id]]
    write_table(pd.DataFrame(rows, columns=ANNOTATION_COLUMNS), path)


def au_summary_table(details: pd.DataFrame) -> pd.DataFrame:
    if details.empty:
        return pd.DataFrame(columns=AU_SUMMARY_COLUMNS)
    summary = details.groupby('au_id', sort=True)[AU_SUMMARY_COLUMNS[1:]].mean().reset_index()
    return summary[AU_SUMMARY_COLUMNS]


# ---------------------------------------------------------------------------
# Clustering
# ---------------------------------------------------------------------------

def write_cluster(result: ClusterResult, sequence_ids: Seq[str], out_dir: str, prefix: str) -> None:
    write_table(pd.DataFrame({'sequence_id': list(sequence_ids), 'cluster': result.labels}),
                os.path.join(out_dir, f"{prefix}_labels.csv"))
    write_table(pd.DataFrame([vars(m) for m in result.merge_tree], columns=MERGE_COLUMNS),
                os.path.join(out_dir, f"{prefix}_merge_tree.csv"))
    means = pd.DataFrame(result.mean_weights, columns=[f"w{i}" for i in range(result.mean_weights.shape[1])])
    means.insert(0, 'cluster', np.arange(result.k))
    write_table(means, os.path.join(out_dir, f"{prefix}_mean_weights.csv"))
    if result.mean_shapes is not None:
        document = {
            'id': f"{prefix}_mean_shapes",
            'dim': int(result.mean_shapes.shape[1]),
            'nose_index': None,
            # one frame per cluster
            'frames': result.mean_shapes.transpose(0, 2, 1).tolist(),
        }
        with open(os.path.join(out_dir, f"{prefix}_mean_shapes.json"), 'w', encoding='utf-8') as f:
            json.dump(document, f)


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------

def write_errors(errors: Iterable[Dict], path: str) -> int:
    rows = sorted(errors, key=lambda e: (e['sequence_id'], e['processor'], e['error']))
    write_table(pd.DataFrame(rows, columns=ERROR_COLUMNS), path)
    return len(rows)
