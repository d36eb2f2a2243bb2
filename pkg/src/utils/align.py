#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Template responses, pairwise time warping onto the template, transition selection
and warping of full landmark sequences.
"""

from dataclasses import dataclass, replace
from enum import Enum
from typing import List, Optional, Sequence as Seq, Tuple, Union

import numpy as np
from scipy.interpolate import interp1d

from src.errors import BadBounds, BadPath, BadShapeParams, EmptySet, LengthMismatch
from src.logger import logger
from src.utils.seqdata import ResponseKind, ScalarResponse, Sequence, minmax_scale

ArrayLike = Union[ScalarResponse, np.ndarray, List[float]]


class TransitionChoice(str, Enum):
    FIRST = 'First'
    SECOND_FLIPPED = 'SecondFlipped'


@dataclass(frozen=True, eq=False)
class WarpPath:
    """Ordered (source_frame, template_frame) pairs of a monotone unit-step path."""
    pairs: np.ndarray

    def __post_init__(self):
        pairs = np.asarray(self.pairs, dtype=np.int64)
        if pairs.ndim != 2 or pairs.shape[1] != 2 or len(pairs) == 0:
            raise BadPath("warp path must be a non-empty list of (source, template) pairs")
        if tuple(pairs[0]) != (0, 0):
            raise BadPath(f"warp path must start at (0, 0), starts at {tuple(pairs[0])}")
        steps = np.diff(pairs, axis=0)
        if np.any(steps < 0) or np.any(steps > 1) or np.any(steps.sum(axis=1) == 0):
            raise BadPath("warp path steps must advance source, template or both by exactly one")
        pairs.setflags(write=False)
        object.__setattr__(self, 'pairs', pairs)

    @property
    def source_len(self) -> int:
        return int(self.pairs[-1, 0]) + 1

    @property
    def template_len(self) -> int:
        return int(self.pairs[-1, 1]) + 1

    def __len__(self) -> int:
        return len(self.pairs)


@dataclass(frozen=True, eq=False)
class AlignmentResult:
    warped: ScalarResponse
    path: WarpPath
    cost: float
    chosen_transition: TransitionChoice = TransitionChoice.FIRST
    # [start, stop) of the selected window in template time
    transition_frames: Tuple[int, int] = (0, 0)
    window_errors: Optional[Tuple[float, float]] = None


def _values(response: ArrayLike) -> np.ndarray:
    if isinstance(response, ScalarResponse):
        return response.values
    return np.asarray(response, dtype=np.float64)


def moving_average(values: np.ndarray, width: int) -> np.ndarray:
    """Centred moving average with edge padding; width 0 or 1 returns a copy."""
    if width <= 1:
        return np.array(values, dtype=np.float64, copy=True)
    half = width // 2
    padded = np.pad(values, half, mode='edge')
    return np.convolve(padded, np.ones(width), mode='valid') / width


def _check_smoothing(smoothing: int) -> None:
    if smoothing < 0 or (smoothing > 1 and smoothing % 2 == 0):
        raise BadShapeParams(f"smoothing width must be 0, 1 or odd, got {smoothing}")


def make_template(total_len: int = 100, transition_len: int = 30, smoothing: int = 5,
                  plateau_level: float = 1.0) -> ScalarResponse:
    """
    Smoothed symmetric trapezoid: linear rise over transition_len frames (frame f has
    value f/(transition_len-1)), plateau, mirrored fall.

    Raises:
        BadShapeParams: total_len <= 2*transition_len, transition_len < 2, bad smoothing width
    """
    if transition_len < 2 or total_len <= 2 * transition_len:
        raise BadShapeParams(f"need transition_len >= 2 and total_len > 2*transition_len, "
                             f"got total={total_len} transition={transition_len}")
    if plateau_level <= 0:
        raise BadShapeParams("plateau_level must be positive")
    _check_smoothing(smoothing)
    ramp = np.arange(transition_len) / (transition_len - 1)
    values = np.concatenate([ramp, np.ones(total_len - 2 * transition_len), ramp[::-1]])
    values = np.clip(moving_average(values, smoothing), 0.0, 1.0) * plateau_level
    return ScalarResponse(values, ResponseKind.TEMPLATE)


def resample(values: np.ndarray, length: int) -> np.ndarray:
    """Linear resampling of a series onto `length` evenly spaced samples."""
    values = np.asarray(values, dtype=np.float64)
    if len(values) == length:
        return values.copy()
    positions = np.linspace(0, len(values) - 1, length)
    return np.interp(positions, np.arange(len(values)), values)


def template_from_responses(responses: Seq[ArrayLike], total_len: int = 100,
                            smoothing: int = 5) -> ScalarResponse:
    """
    Data-driven template: median of resampled normalized responses, symmetrized,
    smoothed and rescaled to [0, 1].
    """
    if not responses:
        raise EmptySet("data-driven template needs at least one response")
    if total_len < 3:
        raise BadShapeParams("template needs at least three frames")
    _check_smoothing(smoothing)
    stacked = np.vstack([resample(minmax_scale(_values(r)), total_len) for r in responses])
    median = np.median(stacked, axis=0)
    symmetric = 0.5 * (median + median[::-1])
    smoothed = moving_average(symmetric, smoothing)
    return ScalarResponse(minmax_scale(0.5 * (smoothed + smoothed[::-1])), ResponseKind.TEMPLATE)


def accumulated_cost(src: np.ndarray, tpl: np.ndarray) -> np.ndarray:
    """Dynamic-programming table D[i, j] of the cheapest path ending at (i, j)."""
    local = (src[:, None] - tpl[None, :]) ** 2
    n, m = local.shape
    table = np.full((n + 1, m + 1), np.inf)
    table[0, 0] = 0.0
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            table[i, j] = local[i - 1, j - 1] + min(table[i - 1, j - 1], table[i - 1, j], table[i, j - 1])
    return table[1:, 1:]


def _backtrack(table: np.ndarray) -> np.ndarray:
    i, j = table.shape[0] - 1, table.shape[1] - 1
    pairs = [(i, j)]
    while (i, j) != (0, 0):
        candidates = []
        # order is the tie preference: diagonal, then source step, then template step
        if i > 0 and j > 0:
            candidates.append((table[i - 1, j - 1], i - 1, j - 1))
        if i > 0:
            candidates.append((table[i - 1, j], i - 1, j))
        if j > 0:
            candidates.append((table[i, j - 1], i, j - 1))
        best = min(c[0] for c in candidates)
        _, i, j = next(c for c in candidates if c[0] == best)
        pairs.append((i, j))
    return np.array(pairs[::-1], dtype=np.int64)


def warp_values(values: np.ndarray, path: WarpPath) -> np.ndarray:
    """Template frame u gets the mean of all source values matched to u."""
    totals = np.zeros(path.template_len)
    counts = np.zeros(path.template_len)
    np.add.at(totals, path.pairs[:, 1], values[path.pairs[:, 0]])
    np.add.at(counts, path.pairs[:, 1], 1.0)
    return totals / counts


def dtw_align(src: ArrayLike, tpl: ArrayLike) -> AlignmentResult:
    """
    Minimal squared-difference time warping of src onto tpl with steps (1,0), (0,1), (1,1).

    Returns:
        AlignmentResult with the warped source in template time, the path and its cost
    """
    source = _values(src)
    template = _values(tpl)
    if len(source) < 2 or len(template) < 2:
        raise LengthMismatch("time warping needs at least two frames on both sides")
    table = accumulated_cost(source, template)
    path = WarpPath(_backtrack(table))
    warped = ScalarResponse(warp_values(source, path), ResponseKind.ALIGNED)
    cost = float(table[-1, -1])
    logger.debug(f"Warped {len(source)} frames onto {len(template)} (cost {cost:.6g}, path {len(path)})")
    return AlignmentResult(warped, path, cost, TransitionChoice.FIRST, (0, len(template)))


def select_transition(res: AlignmentResult, tpl: ArrayLike, window: int = 30) -> AlignmentResult:
    """
    Compare the first and last `window` template frames with the warped response;
    the last window wins only with a strictly smaller error and is then marked flipped.
    """
    template = _values(tpl)
    warped = res.warped.values
    if len(warped) != len(template):
        raise LengthMismatch(f"warped response has {len(warped)} frames, template {len(template)}")
    T = len(template)
    if not 1 <= window <= T:
        raise BadBounds(f"window must lie in [1, {T}], got {window}")
    first = float(np.linalg.norm(warped[:window] - template[:window]))
    second = float(np.linalg.norm(warped[T - window:] - template[T - window:]))
    if second < first:
        return replace(res, chosen_transition=TransitionChoice.SECOND_FLIPPED,
                       transition_frames=(T - window, T), window_errors=(first, second))
    return replace(res, chosen_transition=TransitionChoice.FIRST,
                   transition_frames=(0, window), window_errors=(first, second))


def transition_values(res: AlignmentResult) -> np.ndarray:
    """Warped values of the selected window, reversed when the second transition was chosen."""
    start, stop = res.transition_frames
    values = res.warped.values[start:stop]
    if res.chosen_transition is TransitionChoice.SECOND_FLIPPED:
        return values[::-1].copy()
    return values.copy()


def warp_sequence(seq: Sequence, path: WarpPath, target_len: Optional[int] = None) -> Sequence:
    """
    Move a landmark sequence into template time along a warp path.

    Raises:
        BadPath: The path does not cover exactly the sequence's frames
    """
    if path.source_len != seq.num_frames:
        raise BadPath(f"path covers {path.source_len} source frames, sequence {seq.id} has {seq.num_frames}")
    d, n, _ = seq.points.shape
    length = path.template_len
    totals = np.zeros((d, n, length))
    counts = np.zeros(length)
    for src_frame, tpl_frame in path.pairs:
        totals[:, :, tpl_frame] += seq.points[:, :, src_frame]
        counts[tpl_frame] += 1.0
    warped = totals / counts
    if target_len is not None and target_len != length:
        warped = resample_frames(warped, target_len)
    return seq.with_points(warped)


def resample_frames(points: np.ndarray, target_len: int) -> np.ndarray:
    if target_len < 2:
        raise BadShapeParams("target_len must be at least 2")
    length = points.shape[-1]
    positions = np.linspace(0, length - 1, target_len)
    return interp1d(np.arange(length), points, axis=-1)(positions)


def transition_sequence(seq: Sequence, res: AlignmentResult, target_len: Optional[int] = None) -> Sequence:
    """Landmarks of the selected transition in template time, neutral first, resampled to target_len."""
    warped = warp_sequence(seq, res.path)
    start, stop = res.transition_frames
    points = warped.points[:, :, start:stop]
    if res.chosen_transition is TransitionChoice.SECOND_FLIPPED:
        points = points[:, :, ::-1]
    if target_len is not None and target_len != points.shape[-1]:
        points = resample_frames(points, target_len)
    return seq.with_points(points)


def alignment_mse(aligned_set: Seq[ArrayLike], tpl: ArrayLike, window: Optional[int] = None) -> float:
    """
    Mean over sequences of the squared L2 distance to the template window.

    Raises:
        EmptySet: No aligned responses
        LengthMismatch: A response differs in length from the template (or window)
    """
    if len(aligned_set) == 0:
        raise EmptySet("alignment error over an empty set")
    template = _values(tpl)
    if window is not None and len(template) != window:
        raise LengthMismatch(f"template has {len(template)} frames, window is {window}")
    errors = []
    for response in aligned_set:
        values = _values(response)
        if len(values) != len(template):
            raise LengthMismatch(f"aligned response has {len(values)} frames, template {len(template)}")
        errors.append(float(np.sum((values - template) ** 2)))
    return float(np.mean(np.sort(errors)))
