#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Unsupervised intensity response of a landmark sequence.

Pipeline per sequence:
    center -> per-point PCA responses -> median of absolute derivatives
    -> transition detection -> box response -> orientation and scaling
    -> distance ranking and weights -> weighted sum (final response)
"""

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy.ndimage import correlate1d, gaussian_filter1d
from scipy.signal import find_peaks
from scipy.stats import median_abs_deviation

from src.config import ResponseConfig
from src.errors import BadBounds, BadIndex, LengthMismatch, NoTransition, ShapeError
from src.logger import logger
from src.utils.seqdata import (
    ResponseKind,
    ResponseMatrix,
    ScalarResponse,
    Sequence,
    WeightVector,
    center_sequence,
    minmax_scale,
)

KERNEL_WEIGHTS = {
    'central': np.array([-0.5, 0.0, 0.5]),
    # x(t+1) - x(t), written with a zero tap so the kernel stays centered
    'forward': np.array([0.0, -1.0, 1.0]),
    'five_point': np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0,
}


class TransitionMode(str, Enum):
    TWO_SIDED = 'TwoSided'
    RISE_ONLY = 'RiseOnly'
    FALL_ONLY = 'FallOnly'


@dataclass(frozen=True)
class DerivativeKernel:
    """Derivative filter applied along time, after optional Gaussian smoothing."""
    name: str = 'central'
    sigma: float = 1.0

    def __post_init__(self):
        if self.name not in KERNEL_WEIGHTS:
            raise ValueError(f"unknown derivative kernel: {self.name}")
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")

    @property
    def weights(self) -> np.ndarray:
        return KERNEL_WEIGHTS[self.name]

    @classmethod
    def from_config(cls, config: ResponseConfig) -> 'DerivativeKernel':
        return cls(config.kernel, config.sigma)


@dataclass(frozen=True)
class TransitionEstimate:
    t1: Optional[int]
    t2: Optional[int]
    mode: TransitionMode

    def __post_init__(self):
        if self.mode is TransitionMode.TWO_SIDED:
            if self.t1 is None or self.t2 is None or not 0 <= self.t1 < self.t2:
                raise BadBounds(f"two-sided transitions need 0 <= t1 < t2, got ({self.t1}, {self.t2})")
        elif self.mode is TransitionMode.RISE_ONLY:
            if self.t1 is None or self.t2 is not None:
                raise BadBounds("rise-only transitions carry t1 only")
        elif self.t2 is None or self.t1 is not None:
            raise BadBounds("fall-only transitions carry t2 only")


@dataclass(frozen=True, eq=False)
class IntensityResult:
    """Everything estimate_intensity computed for one sequence."""
    final: ScalarResponse
    final_norm: ScalarResponse
    weights: WeightVector
    oriented: ResponseMatrix
    approx: ScalarResponse
    transitions: Optional[TransitionEstimate]
    local: ResponseMatrix
    flipped: np.ndarray
    r_delta: Optional[ScalarResponse] = None
    low_confidence: bool = False
    metadata: Dict[str, Any] = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Local responses
# ---------------------------------------------------------------------------

def _principal_axis(trajectory: np.ndarray) -> np.ndarray:
    """Dominant eigenvector of the d x d trajectory covariance, signed outward."""
    _, vectors = np.linalg.eigh(np.cov(trajectory))
    axis = vectors[:, -1]
    outward = float(axis @ trajectory.mean(axis=1))
    if abs(outward) > 1e-12 * (1.0 + np.abs(trajectory).max()):
        return axis if outward > 0 else -axis
    # trajectory centred on the reference point: fall back to a positive leading component
    return axis if axis[np.argmax(np.abs(axis))] > 0 else -axis


def local_pca_response(seq: Sequence, i: int) -> ScalarResponse:
    """
    Signed displacement of point i along its first principal axis, relative to frame 0.

    A point that never moves gives the all-zero response.
    """
    if not 0 <= i < seq.num_points:
        raise BadIndex(f"point {i} outside [0, {seq.num_points})")
    trajectory = seq.points[:, i, :]
    if np.all(trajectory == trajectory[:, :1]):
        return ScalarResponse(np.zeros(seq.num_frames), ResponseKind.LOCAL)
    projection = _principal_axis(trajectory) @ trajectory
    return ScalarResponse(projection - projection[0], ResponseKind.LOCAL)


def response_matrix(seq: Sequence) -> ResponseMatrix:
    rows = np.empty((seq.num_points, seq.num_frames))
    degenerate = np.zeros(seq.num_points, dtype=bool)
    for i in range(seq.num_points):
        trajectory = seq.points[:, i, :]
        degenerate[i] = bool(np.all(trajectory == trajectory[:, :1]))
        rows[i] = local_pca_response(seq, i).values
    logger.debug(f"Response matrix for {seq.id}: {seq.num_points} rows, {int(degenerate.sum())} degenerate")
    return ResponseMatrix(rows, degenerate)


def smooth_rows(rows: np.ndarray, sigma: float) -> np.ndarray:
    if sigma <= 0:
        return np.array(rows, dtype=np.float64, copy=True)
    return gaussian_filter1d(rows, sigma, axis=-1, mode='nearest')


def row_noise(R: ResponseMatrix) -> np.ndarray:
    """Frame-to-frame noise per row: normal-scaled MAD of first differences over sqrt(2)."""
    return median_abs_deviation(np.diff(R.rows, axis=1), axis=1, scale='normal') / np.sqrt(2.0)


def erratic_rows(R: ResponseMatrix, max_jitter: Optional[float]) -> np.ndarray:
    """
    Rows whose frame-to-frame noise exceeds max_jitter times the median noise of the
    non-degenerate rows; a tracker that loses a landmark every frame looks like this.

    None disables the check. When the median noise is zero (noiseless input) no row is erratic.
    """
    erratic = np.zeros(R.rows.shape[0], dtype=bool)
    usable = ~R.degenerate
    if max_jitter is None or R.rows.shape[1] < 2 or not usable.any():
        return erratic
    noise = row_noise(R)
    typical = float(np.median(noise[usable]))
    if not typical > 1e-12 * max(1.0, float(np.abs(R.rows).max())):
        return erratic
    erratic[usable] = noise[usable] > max_jitter * typical
    return erratic


def activity_mask(R: ResponseMatrix, min_activity: float, sigma: float = 1.0) -> np.ndarray:
    """
    Rows whose smoothed range, in units of the row's own frame-to-frame noise,
    reaches min_activity times the largest such ratio.

    The noise level is the normal-scaled MAD of first differences over sqrt(2), so a
    point that jumps every frame scores low however large its range. Degenerate rows
    are never active; an all-static matrix has no active rows.
    """
    ranges = np.ptp(smooth_rows(R.rows, sigma), axis=1)
    noise = row_noise(R)
    floor = 1e-12 * max(1.0, float(ranges.max()))
    ratios = ranges / (noise + floor)
    ratios[R.degenerate] = 0.0
    top = ratios.max()
    if top <= 0:
        return np.zeros(len(ratios), dtype=bool)
    return ratios >= min_activity * top


# ---------------------------------------------------------------------------
# Approximated response
# ---------------------------------------------------------------------------

def row_derivatives(R: ResponseMatrix, kernel: DerivativeKernel = DerivativeKernel()) -> np.ndarray:
    """Per-row time derivatives with replicate padding at both ends."""
    smoothed = smooth_rows(R.rows, kernel.sigma)
    return correlate1d(smoothed, kernel.weights, axis=1, mode='nearest')


def derivative_response(R: ResponseMatrix, kernel: DerivativeKernel = DerivativeKernel(),
                        row_mask: Optional[np.ndarray] = None) -> ScalarResponse:
    """
    Column-wise median of absolute row derivatives.

    Args:
        R: Response matrix with at least two columns
        kernel: Derivative kernel and pre-smoothing
        row_mask: Rows entering the median; defaults to the non-degenerate rows.
            An empty selection falls back to all rows.
    """
    if R.rows.shape[1] < 2:
        raise ShapeError("derivative response needs at least two frames")
    mask = ~R.degenerate if row_mask is None else np.asarray(row_mask, dtype=bool)
    if not mask.any():
        mask = np.ones(R.rows.shape[0], dtype=bool)
    magnitudes = np.abs(row_derivatives(R, kernel)[mask])
    return ScalarResponse(np.median(magnitudes, axis=0), ResponseKind.DERIVATIVE)


def level_proxy(R: ResponseMatrix, row_mask: Optional[np.ndarray] = None) -> np.ndarray:
    """Median of the min-max scaled rows; the rough course of the expression."""
    mask = ~R.degenerate if row_mask is None else np.asarray(row_mask, dtype=bool)
    if not mask.any():
        return np.zeros(R.rows.shape[1])
    scaled = np.vstack([minmax_scale(row) for row in R.rows[mask]])
    return np.median(scaled, axis=0)


def starts_low(proxy: np.ndarray, start_fraction: float = 0.1) -> bool:
    """True when the mean of the opening frames sits below the proxy's mid level."""
    proxy = np.asarray(proxy, dtype=np.float64)
    count = max(1, int(math.ceil(start_fraction * len(proxy))))
    midpoint = 0.5 * (proxy.min() + proxy.max())
    return bool(proxy[:count].mean() < midpoint)


def detect_transitions(r_delta: ScalarResponse, min_separation: int, min_prominence: float,
                       proxy: Optional[np.ndarray] = None,
                       start_fraction: float = 0.1) -> TransitionEstimate:
    """
    Locate the neutral->expression and expression->neutral edges.

    Two or more qualifying maxima: the two most prominent, ordered in time.
    One maximum: RiseOnly when the level proxy starts low, else FallOnly.
    Without a proxy a single maximum is taken as a rise.

    Raises:
        NoTransition: Flat derivative or no qualifying maximum
    """
    values = r_delta.values
    if len(values) < 3:
        raise ShapeError("transition detection needs at least three frames")
    top = values.max()
    if not top > 0:
        raise NoTransition("derivative response is flat")

    peaks, properties = find_peaks(values, prominence=min_prominence * top,
                                   distance=max(1, int(min_separation)))
    logger.debug(f"Derivative maxima at {peaks.tolist()} (prominence >= {min_prominence * top:.4g})")
    if len(peaks) == 0:
        raise NoTransition("no derivative maximum reaches the prominence threshold")

    if len(peaks) >= 2:
        order = np.argsort(-properties['prominences'], kind='stable')[:2]
        t1, t2 = sorted(int(p) for p in peaks[order])
        return TransitionEstimate(t1, t2, TransitionMode.TWO_SIDED)

    peak = int(peaks[0])
    if proxy is None or starts_low(proxy, start_fraction):
        return TransitionEstimate(peak, None, TransitionMode.RISE_ONLY)
    return TransitionEstimate(None, peak, TransitionMode.FALL_ONLY)


def box_response(t1: int, t2: int, T: int) -> ScalarResponse:
    """0 for t <= t1, 1 for t1 < t < t2, 0 for t >= t2."""
    if not 0 <= t1 < t2 <= T - 1:
        raise BadBounds(f"box needs 0 <= t1 < t2 <= T-1, got t1={t1} t2={t2} T={T}")
    t = np.arange(T)
    return ScalarResponse(((t > t1) & (t < t2)).astype(np.float64), ResponseKind.APPROXIMATED)


def rise_response(t1: int, T: int) -> ScalarResponse:
    if not 0 <= t1 <= T - 1:
        raise BadBounds(f"rise needs 0 <= t1 <= T-1, got t1={t1} T={T}")
    return ScalarResponse((np.arange(T) > t1).astype(np.float64), ResponseKind.APPROXIMATED)


def fall_response(t2: int, T: int) -> ScalarResponse:
    if not 0 <= t2 <= T - 1:
        raise BadBounds(f"fall needs 0 <= t2 <= T-1, got t2={t2} T={T}")
    return ScalarResponse((np.arange(T) < t2).astype(np.float64), ResponseKind.APPROXIMATED)


def approx_from_transitions(tr: TransitionEstimate, T: int) -> ScalarResponse:
    if tr.mode is TransitionMode.TWO_SIDED:
        return box_response(tr.t1, tr.t2, T)
    if tr.mode is TransitionMode.RISE_ONLY:
        return rise_response(tr.t1, T)
    return fall_response(tr.t2, T)


# ---------------------------------------------------------------------------
# Orientation, ranking, weighting
# ---------------------------------------------------------------------------

def choose_orientation(values: np.ndarray, reference: np.ndarray) -> Tuple[np.ndarray, bool]:
    """
    Min-max scale values and their negation; keep the one closer to reference.

    Returns:
        (scaled values, flipped); equal distances keep the un-negated version
    """
    values = np.asarray(values, dtype=np.float64)
    reference = np.asarray(reference, dtype=np.float64)
    if values.shape != reference.shape:
        raise LengthMismatch(f"lengths differ: {values.shape} vs {reference.shape}")
    straight = minmax_scale(values)
    negated = minmax_scale(-values)
    if np.linalg.norm(negated - reference) < np.linalg.norm(straight - reference):
        return negated, True
    return straight, False


def orient_and_scale(row: ScalarResponse, approx: ScalarResponse) -> ScalarResponse:
    oriented, _ = choose_orientation(row.values, approx.values)
    return ScalarResponse(oriented, ResponseKind.LOCAL)


def orient_rows(R: ResponseMatrix, approx: ScalarResponse) -> Tuple[ResponseMatrix, np.ndarray]:
    rows = np.empty_like(R.rows)
    flipped = np.zeros(R.rows.shape[0], dtype=bool)
    for i, row in enumerate(R.rows):
        rows[i], flipped[i] = choose_orientation(row, approx.values)
    return ResponseMatrix(rows, R.degenerate), flipped


def rank_weights(oriented: ResponseMatrix, approx: ScalarResponse) -> WeightVector:
    """W_i = 1 - D_i / max D with D_i the L2 distance of row i to approx."""
    if oriented.rows.shape[1] != len(approx):
        raise LengthMismatch("oriented rows and approximated response differ in length")
    distances = np.linalg.norm(oriented.rows - approx.values[None, :], axis=1)
    worst = distances.max()
    if worst == 0:
        return WeightVector(np.ones(len(distances)), distances)
    weights = np.clip(1.0 - distances / worst, 0.0, 1.0)
    return WeightVector(weights, distances)


def final_response(oriented: ResponseMatrix, weights: WeightVector) -> ScalarResponse:
    if oriented.rows.shape[0] != len(weights):
        raise LengthMismatch("one weight per oriented row is required")
    return ScalarResponse(weights.weights @ oriented.rows, ResponseKind.FINAL)


def normalized_final(final: ScalarResponse) -> ScalarResponse:
    return ScalarResponse(minmax_scale(final.values), ResponseKind.FINAL)


# ---------------------------------------------------------------------------
# Whole pipeline
# ---------------------------------------------------------------------------

@logger.measure_performance("estimate_intensity")
def estimate_intensity(seq: Sequence, config: ResponseConfig = ResponseConfig(),
                       approx: Optional[ScalarResponse] = None) -> IntensityResult:
    """
    Compute the final intensity response of one sequence.

    Args:
        seq: Input sequence; centered on config.reference_index or its nose_index
        config: Pipeline settings
        approx: Externally given approximated response (e.g. from AU labels);
            skips derivative and transition detection

    Returns:
        IntensityResult

    Raises:
        MissingReference: No reference landmark
        NoTransition: No transition found and the fallback is disabled
    """
    centered = center_sequence(seq, config.reference_index)
    T = centered.num_frames
    R = response_matrix(centered)
    kernel = DerivativeKernel.from_config(config)
    metadata: Dict[str, Any] = {'kernel': kernel.name, 'sigma': kernel.sigma, 'fallback': False}

    transitions = None
    r_delta = None
    low_confidence = False
    if approx is None:
        if config.median_excludes_degenerate:
            mask = activity_mask(R, config.min_activity, kernel.sigma)
        else:
            mask = np.ones(R.rows.shape[0], dtype=bool)
        metadata['active_rows'] = int(mask.sum())
        r_delta = derivative_response(R, kernel, mask)
        proxy = level_proxy(R, mask if mask.any() else None)
        try:
            transitions = detect_transitions(r_delta, config.separation_for(T), config.min_prominence,
                                             proxy=proxy, start_fraction=config.start_fraction)
        except NoTransition as e:
            if not config.fallback_enabled:
                raise
            logger.warning(f"Sequence {seq.id}: {e}; using uniform weights and a full-length rise")
            transitions = TransitionEstimate(0, None, TransitionMode.RISE_ONLY)
            low_confidence = True
            metadata['fallback'] = True
        if transitions.mode is not TransitionMode.TWO_SIDED:
            metadata['one_sided_rule'] = f"mean of first {config.start_fraction:g} of level proxy vs mid level"
            metadata['starts_low'] = transitions.mode is TransitionMode.RISE_ONLY
        approx = approx_from_transitions(transitions, T)
    elif len(approx) != T:
        raise LengthMismatch(f"approximated response has {len(approx)} frames, sequence has {T}")
    else:
        approx = ScalarResponse(approx.values, ResponseKind.APPROXIMATED)

    oriented, flipped = orient_rows(R, approx)
    weights = rank_weights(oriented, approx)
    erratic = erratic_rows(R, config.max_jitter)
    metadata['erratic_rows'] = int(erratic.sum())
    if erratic.any():
        logger.debug(f"Sequence {seq.id}: zero weight for erratic points {np.flatnonzero(erratic).tolist()}")
        weights = WeightVector(np.where(erratic, 0.0, weights.weights), weights.distances)
    if low_confidence:
        weights = WeightVector(np.ones(R.rows.shape[0]), weights.distances)
    final = final_response(oriented, weights)

    if transitions is not None:
        logger.debug(f"Sequence {seq.id}: {transitions.mode.value} t1={transitions.t1} t2={transitions.t2}")
    return IntensityResult(
        final=final,
        final_norm=normalized_final(final),
        weights=weights,
        oriented=oriented,
        approx=approx,
        transitions=transitions,
        local=R,
        flipped=flipped,
        r_delta=r_delta,
        low_confidence=low_confidence,
        metadata=metadata,
    )
