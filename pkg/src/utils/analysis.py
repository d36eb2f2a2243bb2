#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Action-unit responses with weight thresholding, and Ward subclustering of weight vectors.
"""

from dataclasses import dataclass, replace
from typing import List, Optional, Tuple

import numpy as np
from scipy.cluster.hierarchy import cut_tree, linkage

from src.config import RunConfig
from src.errors import BadEvent, BadK, FaceRespError, ZeroVariance
from src.logger import logger
from src.utils.baseline import global_pca_response
from src.utils.response import IntensityResult, estimate_intensity, final_response, normalized_final
from src.utils.seqdata import ResponseKind, ScalarResponse, Sequence, WeightVector, center_sequence


@dataclass(frozen=True)
class AUEvent:
    """Temporal labels of one action unit: neutral start, onset, apex, offset, neutral end."""
    au_id: str
    ne_start: int
    onset: int
    apex: int
    offset: int
    ne_end: int

    def __post_init__(self):
        if not 0 <= self.ne_start <= self.onset < self.apex <= self.offset <= self.ne_end:
            raise BadEvent(f"{self.au_id}: need 0 <= ne_start <= onset < apex <= offset <= ne_end, got "
                           f"({self.ne_start}, {self.onset}, {self.apex}, {self.offset}, {self.ne_end})")


@dataclass(frozen=True)
class MergeStep:
    step: int
    node_a: int
    node_b: int
    height: float
    size: int


@dataclass(frozen=True, eq=False)
class ClusterResult:
    labels: np.ndarray
    merge_tree: Tuple[MergeStep, ...]
    mean_weights: np.ndarray
    mean_shapes: Optional[np.ndarray] = None

    @property
    def k(self) -> int:
        return self.mean_weights.shape[0]


@dataclass(frozen=True, eq=False)
class AUResult:
    event: AUEvent
    full: IntensityResult
    thresholded: IntensityResult
    mse_full: float
    mse_thresholded: float
    global_pca: Optional[ScalarResponse] = None
    mse_pca: Optional[float] = None


def au_approx_response(ev: AUEvent, T: int) -> ScalarResponse:
    """0 up to onset, linear to 1 at apex, 1 until offset, linear to 0 at ne_end, 0 after."""
    if T < ev.ne_end + 1:
        raise BadEvent(f"{ev.au_id}: ne_end {ev.ne_end} outside a sequence of {T} frames")
    t = np.arange(T, dtype=np.float64)
    values = np.zeros(T)
    rise = (t > ev.onset) & (t < ev.apex)
    values[rise] = (t[rise] - ev.onset) / (ev.apex - ev.onset)
    values[(t >= ev.apex) & (t <= ev.offset)] = 1.0
    fall = (t > ev.offset) & (t < ev.ne_end)
    values[fall] = (ev.ne_end - t[fall]) / (ev.ne_end - ev.offset)
    return ScalarResponse(values, ResponseKind.APPROXIMATED)


def threshold_weights(w: WeightVector, keep_fraction: float) -> WeightVector:
    """
    Zero the floor((1 - keep_fraction) * N) smallest weights.

    Equal weights are zeroed in order of increasing point index.
    """
    if not 0 < keep_fraction <= 1:
        raise ValueError(f"keep_fraction must lie in (0, 1], got {keep_fraction}")
    n = len(w)
    dropped = int(np.floor((1.0 - keep_fraction) * n + 1e-9))
    weights = np.array(w.weights, copy=True)
    weights[np.argsort(weights, kind='stable')[:dropped]] = 0.0
    return WeightVector(weights, w.distances)


def squared_error(response: np.ndarray, approx: np.ndarray) -> float:
    return float(np.sum((np.asarray(response) - np.asarray(approx)) ** 2))


def au_intensity(seq: Sequence, ev: AUEvent, config: RunConfig = RunConfig(),
                 with_baseline: bool = True) -> AUResult:
    """
    Intensity response of one action unit from its labelled course.

    Runs the pipeline with the AU approximated response, keeps the top keep_fraction
    weights and recomputes the final response. Errors are squared L2 distances between
    normalized responses and the approximated response.
    """
    approx = au_approx_response(ev, seq.num_frames)
    full = estimate_intensity(seq, config.response, approx=approx)
    kept = threshold_weights(full.weights, config.keep_fraction)
    final = final_response(full.oriented, kept)
    thresholded = replace(full, final=final, final_norm=normalized_final(final), weights=kept)

    global_pca = None
    mse_pca = None
    if with_baseline:
        try:
            centered = center_sequence(seq, config.response.reference_index)
            global_pca = global_pca_response(centered, approx)
            mse_pca = squared_error(global_pca.values, approx.values)
        except ZeroVariance as e:
            logger.warning(f"Sequence {seq.id} {ev.au_id}: {e}")

    result = AUResult(
        event=ev,
        full=full,
        thresholded=thresholded,
        mse_full=squared_error(full.final_norm.values, approx.values),
        mse_thresholded=squared_error(thresholded.final_norm.values, approx.values),
        global_pca=global_pca,
        mse_pca=mse_pca,
    )
    logger.debug(f"Sequence {seq.id} {ev.au_id}: mse_full={result.mse_full:.4g} "
                 f"mse_thresholded={result.mse_thresholded:.4g} mse_pca={mse_pca}")
    return result


def canonical_labels(labels: np.ndarray) -> np.ndarray:
    """Rename cluster ids in order of first appearance."""
    mapping = {}
    for label in labels:
        mapping.setdefault(int(label), len(mapping))
    return np.array([mapping[int(label)] for label in labels], dtype=np.int64)


def ward_cluster(weight_rows: np.ndarray, k: int = 3,
                 apex_shapes: Optional[np.ndarray] = None) -> ClusterResult:
    """
    Ward agglomerative clustering of weight vectors cut at k clusters.

    Args:
        weight_rows: S x N matrix, one weight vector per sequence
        k: Number of clusters, 1 <= k <= S
        apex_shapes: Optional S x d x N apex landmark sets for per-cluster mean shapes

    Returns:
        ClusterResult with labels numbered by first appearance

    Raises:
        BadK: k outside [1, S]
    """
    rows = np.atleast_2d(np.asarray(weight_rows, dtype=np.float64))
    s = rows.shape[0]
    if not 1 <= k <= s:
        raise BadK(f"k={k} needs 1 <= k <= {s}")
    if not np.all(np.isfinite(rows)):
        raise ValueError("weight rows must be finite")
    if apex_shapes is not None and len(apex_shapes) != s:
        raise ValueError("one apex shape per weight row is required")

    merges: List[MergeStep] = []
    if s == 1:
        labels = np.zeros(1, dtype=np.int64)
    else:
        tree = linkage(rows, method='ward', metric='euclidean')
        heights = tree[:, 2]
        if np.any(np.diff(heights) < -1e-12 * max(1.0, heights.max())):
            raise FaceRespError("Ward merge heights decreased")
        merges = [MergeStep(step, int(a), int(b), float(h), int(size))
                  for step, (a, b, h, size) in enumerate(tree)]
        labels = canonical_labels(cut_tree(tree, n_clusters=k).ravel())

    mean_weights = np.vstack([rows[labels == c].mean(axis=0) for c in range(k)])
    mean_shapes = None
    if apex_shapes is not None:
        shapes = np.asarray(apex_shapes, dtype=np.float64)
        mean_shapes = np.stack([shapes[labels == c].mean(axis=0) for c in range(k)])
    logger.debug(f"Ward clustering of {s} rows into {k}: sizes {np.bincount(labels, minlength=k).tolist()}")
    return ClusterResult(labels, tuple(merges), mean_weights, mean_shapes)
