"""
Batch commands behind the CLI. Each returns the process exit code: 0 iff errors.csv is empty.
"""

import os
from contextlib import contextmanager
from typing import Any, Dict, Iterator, List, Optional, Sequence

import numpy as np
import pandas as pd

from .batch_runner import BatchResult, BatchRunner
from .config import RunConfig, dump_config
from .errors import FaceRespError, OneSided, create_error_info
from .logger import logger
from .processor import (
    alignment_processor,
    au_processor,
    baseline_processor,
    center_processor,
    evaluation_processor,
    intensity_processor,
    load_processor,
)
from .processor_chain import ProcessorChain
from .utils.align import alignment_mse, make_template, template_from_responses, transition_values
from .utils.analysis import ward_cluster
from .utils.exports import (
    AU_DETAIL_COLUMNS,
    alignment_report_table,
    au_summary_table,
    distribution_table,
    eval_report_table,
    mse_summary_table,
    read_annotations,
    read_truth,
    weights_table,
    write_annotations,
    write_cluster,
    write_errors,
    write_intensity,
    write_series,
    write_table,
    write_truth,
    write_warp_path,
)
from .utils.metrics import apex_frame, evaluate
from .utils.seqdata import ManifestEntry, SequenceFormat, load_manifest, save_sequence, write_manifest
from .utils.synth import generate, load_synth_spec, save_synth_spec, suite_events, suite_spec, with_seed

SEQUENCE_EXTENSIONS = {SequenceFormat.LONG: 'csv', SequenceFormat.WIDE: 'csv', SequenceFormat.JSON: 'json'}


@contextmanager
def run_log(out_dir: str) -> Iterator[None]:
    """Create the output directory and mirror log records to <out>/run.log for the command's duration."""
    os.makedirs(out_dir, exist_ok=True)
    handler = logger.add_file_handler(os.path.join(out_dir, 'run.log'))
    try:
        yield
    finally:
        logger.remove_handler(handler)


def _finish(out_dir: str, errors: List[Dict[str, Any]]) -> int:
    count = write_errors(errors, os.path.join(out_dir, 'errors.csv'))
    if count:
        logger.warning(f"{count} error(s) written to {os.path.join(out_dir, 'errors.csv')}")
    return 0 if count == 0 else 1


def _chain(name: str, *steps) -> ProcessorChain:
    chain = ProcessorChain(name)
    for step, step_name in steps:
        chain.add_processor(step, step_name)
    return chain


def _run(chain: ProcessorChain, entries: Sequence[ManifestEntry], config: RunConfig,
         context: Optional[Dict[str, Any]] = None) -> BatchResult:
    return BatchRunner(chain, config.jobs).run(entries, config, context)


# ---------------------------------------------------------------------------
# respond
# ---------------------------------------------------------------------------

def respond(manifest: str, config: RunConfig, out_dir: str) -> int:
    """Final response and weights CSVs for every sequence of the manifest."""
    with run_log(out_dir):
        dump_config(config, os.path.join(out_dir, 'config.txt'))
        entries = load_manifest(manifest)
        chain = _chain('respond', (load_processor, 'load'), (intensity_processor, 'intensity'))
        batch = _run(chain, entries, config)
        response_dir = os.path.join(out_dir, 'responses')
        for sequence_id, data in batch.outputs.items():
            write_intensity(data['intensity'], response_dir, sequence_id)
        return _finish(out_dir, batch.errors)


# ---------------------------------------------------------------------------
# align
# ---------------------------------------------------------------------------

def _template(config: RunConfig, outputs: Dict[str, Dict[str, Any]]):
    params = config.template
    if params.mode == 'data' and outputs:
        responses = [outputs[sid]['intensity'].final_norm for sid in sorted(outputs)]
        return template_from_responses(responses, params.total_len, params.smoothing)
    return make_template(params.total_len, params.transition_len, params.smoothing)


def align(manifest: str, config: RunConfig, out_dir: str) -> int:
    """
    Warp every final response (and its global-PCA counterpart) onto the template, pick the
    transition window, export aligned transitions, the per-frame distribution and the
    alignment errors of both features.
    """
    with run_log(out_dir):
        dump_config(config, os.path.join(out_dir, 'config.txt'))
        entries = load_manifest(manifest)
        responses = _run(_chain('align_responses', (load_processor, 'load'), (center_processor, 'center'),
                                (intensity_processor, 'intensity'), (baseline_processor, 'baseline')),
                         entries, config)
        template = _template(config, responses.outputs)
        # the template may depend on every response, so warping is a second batch over stage-one outputs
        messages = [{**responses.outputs[sid], 'template': template} for sid in sorted(responses.outputs)]
        aligned = BatchRunner(_chain('align', (alignment_processor, 'alignment')), config.jobs).run_messages(messages)
        errors = sorted(responses.errors + aligned.errors, key=lambda row: row['sequence_id'])
        outputs = aligned.outputs

        aligned_dir = os.path.join(out_dir, 'aligned')
        window = config.window
        window_template = template.values[:window]
        proposed, baseline = [], []
        for sequence_id in sorted(outputs):
            data = outputs[sequence_id]
            res = data['alignment']
            write_series({'aligned': res.warped.values, 'template': template.values},
                         os.path.join(aligned_dir, f"{sequence_id}_aligned.csv"))
            write_warp_path(res.path, os.path.join(aligned_dir, f"{sequence_id}_path.csv"))
            save_sequence(data['transition'], os.path.join(aligned_dir, f"{sequence_id}_transition.csv"))
            proposed.append(transition_values(res))
            if data.get('alignment_pca') is not None:
                baseline.append(transition_values(data['alignment_pca']))

        write_series({'template': template.values}, os.path.join(out_dir, 'template.csv'))
        write_table(alignment_report_table({sid: outputs[sid]['alignment'] for sid in outputs}),
                    os.path.join(out_dir, 'alignment_report.csv'))
        if proposed:
            write_table(distribution_table(proposed), os.path.join(out_dir, 'distribution.csv'))
            mse = {'proposed': alignment_mse(proposed, window_template, window),
                   'global_pca': alignment_mse(baseline, window_template, window) if baseline else None}
            write_table(mse_summary_table(mse, {'proposed': len(proposed), 'global_pca': len(baseline)}),
                        os.path.join(out_dir, 'alignment_mse.csv'))
            logger.info(f"Alignment MSE proposed={mse['proposed']:.4g} global_pca={mse['global_pca']}")
        return _finish(out_dir, errors)


# ---------------------------------------------------------------------------
# eval
# ---------------------------------------------------------------------------

def evaluate_command(manifest: str, truth_path: str, config: RunConfig, out_dir: str) -> int:
    """Per-sequence and summary MAE/PCC/ICC of the normalized final responses."""
    with run_log(out_dir):
        dump_config(config, os.path.join(out_dir, 'config.txt'))
        entries = load_manifest(manifest)
        truth = read_truth(truth_path)
        chain = _chain('eval', (load_processor, 'load'), (intensity_processor, 'intensity'),
                       (evaluation_processor, 'evaluation'))
        batch = _run(chain, entries, config, {'truth': truth})
        if batch.outputs:
            pairs = [(sid, data['intensity'].final_norm, data['truth_response'])
                     for sid, data in batch.outputs.items()]
            report = evaluate(pairs, config.metrics)
            write_table(eval_report_table(report), os.path.join(out_dir, 'eval_report.csv'))
            logger.info(f"MAE={report.mae:.4f} PCC={report.pcc:.4f} ICC={report.icc:.4f} "
                        f"over {len(report.per_sequence)} sequences")
        return _finish(out_dir, batch.errors)


# ---------------------------------------------------------------------------
# cluster
# ---------------------------------------------------------------------------

def _apex_shape(data: Dict[str, Any]) -> np.ndarray:
    result = data['intensity']
    try:
        frame = apex_frame(result.transitions) if result.transitions is not None else None
    except OneSided:
        frame = None
    if frame is None:
        frame = int(np.argmax(result.final_norm.values))
    return data['centered'].points[:, :, frame]


def cluster(manifest: str, config: RunConfig, out_dir: str, k: Optional[int] = None) -> int:
    """Ward subclusters of the weight vectors within each label group."""
    k = k if k is not None else config.cluster_k
    with run_log(out_dir):
        dump_config(config, os.path.join(out_dir, 'config.txt'))
        entries = load_manifest(manifest)
        chain = _chain('cluster', (load_processor, 'load'), (center_processor, 'center'),
                       (intensity_processor, 'intensity'))
        batch = _run(chain, entries, config)
        errors = list(batch.errors)

        groups: Dict[str, List[str]] = {}
        for sequence_id, data in batch.outputs.items():
            groups.setdefault(data['sequence'].label or 'unlabeled', []).append(sequence_id)
        cluster_dir = os.path.join(out_dir, 'clusters')
        for label in sorted(groups):
            ids = sorted(groups[label])
            weights = [batch.outputs[sid]['intensity'].weights.weights for sid in ids]
            shapes = [_apex_shape(batch.outputs[sid]) for sid in ids]
            try:
                if len({len(w) for w in weights}) != 1 or len({s.shape for s in shapes}) != 1:
                    raise FaceRespError(f"label {label}: sequences differ in landmark count or dimension")
                result = ward_cluster(np.vstack(weights), k, np.stack(shapes))
            except (FaceRespError, ValueError) as e:
                logger.error(f"Clustering label {label} failed: {e}")
                errors.append(create_error_info(e, 'ward_cluster', f"label:{label}"))
                continue
            write_cluster(result, ids, cluster_dir, label)
            logger.info(f"Label {label}: {len(ids)} sequences in {k} clusters")
        return _finish(out_dir, errors)


# ---------------------------------------------------------------------------
# au
# ---------------------------------------------------------------------------

def au(manifest: str, annotations: str, config: RunConfig, out_dir: str) -> int:
    """Per-AU responses (full, thresholded, global PCA), their errors and the per-AU summary."""
    with run_log(out_dir):
        dump_config(config, os.path.join(out_dir, 'config.txt'))
        events = read_annotations(annotations)
        if not events:
            logger.info(f"No AU annotations in {annotations}; nothing to do")
            return _finish(out_dir, [])
        entries = [entry for entry in load_manifest(manifest) if entry.sequence_id in events]
        unknown = sorted(set(events) - {entry.sequence_id for entry in entries})
        if unknown:
            logger.warning(f"Annotations for sequences missing from the manifest: {unknown}")
        batch = _run(_chain('au', (load_processor, 'load'), (au_processor, 'au')),
                     entries, config, {'events': events})
        errors = list(batch.errors)

        au_dir = os.path.join(out_dir, 'au')
        rows = []
        for sequence_id in sorted(batch.outputs):
            data = batch.outputs[sequence_id]
            for au_id, error in data['au_errors']:
                info = create_error_info(error, 'au_processor', sequence_id)
                info['error'] = f"{au_id}: {info['error']}"
                errors.append(info)
            for result in data['au_results']:
                au_id = result.event.au_id
                prefix = os.path.join(au_dir, f"{sequence_id}_{au_id}")
                pca = result.global_pca.values if result.global_pca is not None else np.full(len(result.full.final), np.nan)
                write_series({
                    'approx': result.full.approx.values,
                    'final_full': result.full.final_norm.values,
                    'final_thresholded': result.thresholded.final_norm.values,
                    'global_pca': pca,
                }, f"{prefix}_response.csv")
                write_table(weights_table(result.full), f"{prefix}_weights_full.csv")
                write_table(weights_table(result.thresholded), f"{prefix}_weights_thresholded.csv")
                rows.append({'sequence_id': sequence_id, 'au_id': au_id, 'mse_pca': result.mse_pca,
                             'mse_full': result.mse_full, 'mse_thresholded': result.mse_thresholded})
        details = pd.DataFrame(rows, columns=AU_DETAIL_COLUMNS)
        write_table(details, os.path.join(out_dir, 'au_details.csv'))
        write_table(au_summary_table(details), os.path.join(out_dir, 'au_summary.csv'))
        return _finish(out_dir, errors)


# ---------------------------------------------------------------------------
# synth
# ---------------------------------------------------------------------------

def synth(out_dir: str, suite: str = 'default', count: int = 10, seed: int = 0,
          format: str = 'long', spec_path: Optional[str] = None) -> int:
    """
    Generate `count` sequences with seeds seed, seed+1, ... plus manifest.csv, truth.csv,
    transitions.csv, the generating synth_spec.json and, for AU suites, annotations.csv.
    """
    fmt = SequenceFormat.parse(format)
    with run_log(out_dir):
        base = load_synth_spec(spec_path) if spec_path else suite_spec(suite, seed)
        name = os.path.splitext(os.path.basename(spec_path))[0] if spec_path else suite
        sequence_dir = os.path.join(out_dir, 'sequences')
        os.makedirs(sequence_dir, exist_ok=True)

        entries, truth, transitions, annotations = [], {}, [], {}
        for i in range(count):
            sequence_id = f"{name}_{i:03d}"
            seq, gt = generate(with_seed(base, base.seed + i), sequence_id, label=name)
            path = os.path.join(sequence_dir, f"{sequence_id}.{SEQUENCE_EXTENSIONS[fmt]}")
            save_sequence(seq, path, fmt)
            entries.append(ManifestEntry(sequence_id, path, fmt, name, None, seq.nose_index))
            truth[sequence_id] = gt.intensity.values
            transitions.append({'sequence_id': sequence_id,
                                't1': '' if gt.t1 is None else gt.t1, 't2': '' if gt.t2 is None else gt.t2,
                                'moving': ' '.join(map(str, sorted(gt.moving_set))),
                                'outliers': ' '.join(map(str, sorted(gt.outlier_set)))})
            events = list(gt.events) or (suite_events(suite) if not spec_path else [])
            if events:
                annotations[sequence_id] = events

        save_synth_spec(base, os.path.join(out_dir, 'synth_spec.json'))
        write_manifest(entries, os.path.join(out_dir, 'manifest.csv'))
        write_truth(truth, os.path.join(out_dir, 'truth.csv'))
        write_table(pd.DataFrame(transitions, columns=['sequence_id', 't1', 't2', 'moving', 'outliers']),
                    os.path.join(out_dir, 'transitions.csv'))
        if annotations:
            write_annotations(annotations, os.path.join(out_dir, 'annotations.csv'))
        logger.info(f"Generated {count} '{name}' sequences in {sequence_dir}")
        return _finish(out_dir, [])


# ---------------------------------------------------------------------------
# plot
# ---------------------------------------------------------------------------

def plot(csv_paths: Sequence[str], out_dir: str) -> int:
    """One SVG per CSV; unknown schemas become errors.csv rows."""
    from .utils.plotting import plot_csv

    with run_log(out_dir):
        errors = []
        for csv_path in csv_paths:
            stem = os.path.splitext(os.path.basename(csv_path))[0]
            try:
                plot_csv(csv_path, os.path.join(out_dir, f"{stem}.svg"))
            except (FaceRespError, OSError) as e:
                logger.error(f"Cannot plot {csv_path}: {e}")
                errors.append(create_error_info(e, 'plot', stem))
        return _finish(out_dir, errors)
