#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Intensity evaluation against ground truth: MAE, Pearson correlation and ICC(3,1).
"""

from dataclasses import dataclass
from typing import Iterable, List, Optional, Tuple, Union

import numpy as np
from scipy.stats import pearsonr

from src.config import MetricConfig
from src.errors import BadApex, DegenerateAnova, EmptySet, LengthMismatch, OneSided
from src.logger import logger
from src.utils.response import TransitionEstimate, TransitionMode
from src.utils.seqdata import ResponseKind, ScalarResponse, minmax_scale

ArrayLike = Union[ScalarResponse, np.ndarray, List[float]]


@dataclass(frozen=True)
class SequenceScore:
    sequence_id: str
    mae: float
    pcc: float
    icc: float
    pcc_zero_variance: bool = False


@dataclass(frozen=True)
class EvalReport:
    mae: float
    pcc: float
    icc: float
    per_sequence: Tuple[SequenceScore, ...]
    aggregation: str = 'per_sequence'


def _values(response: ArrayLike) -> np.ndarray:
    if isinstance(response, ScalarResponse):
        return response.values
    return np.asarray(response, dtype=np.float64)


def _pair(pred: ArrayLike, truth: ArrayLike) -> Tuple[np.ndarray, np.ndarray]:
    p, t = _values(pred), _values(truth)
    if p.shape != t.shape:
        raise LengthMismatch(f"prediction has {len(p)} frames, truth has {len(t)}")
    return p, t


def pseudo_ground_truth_triangle(apex: int, T: int, peak_value: float = 1.0) -> ScalarResponse:
    """Linear rise to peak_value at the apex frame, linear fall to 0 at the last frame."""
    if T < 2 or not 0 <= apex <= T - 1:
        raise BadApex(f"apex {apex} outside [0, {T - 1}]")
    if not peak_value > 0:
        raise BadApex(f"peak_value must be positive, got {peak_value}")
    t = np.arange(T, dtype=np.float64)
    values = np.empty(T)
    rising = t <= apex
    values[rising] = peak_value * (t[rising] / apex if apex > 0 else 1.0)
    falling = ~rising
    values[falling] = peak_value * (T - 1 - t[falling]) / (T - 1 - apex)
    return ScalarResponse(values, ResponseKind.APPROXIMATED)


def apex_frame(tr: TransitionEstimate) -> int:
    """Halfway frame between t1 and t2, rounding halves up."""
    if tr.mode is not TransitionMode.TWO_SIDED:
        raise OneSided(f"no apex for a {tr.mode.value} transition; supply a manual apex")
    return (tr.t1 + tr.t2 + 1) // 2


def mae(pred: ArrayLike, truth: ArrayLike) -> float:
    p, t = _pair(pred, truth)
    return float(np.mean(np.abs(p - t)))


def pcc_flagged(pred: ArrayLike, truth: ArrayLike) -> Tuple[float, bool]:
    """Pearson correlation and a flag telling whether a constant input forced the value 0."""
    p, t = _pair(pred, truth)
    if np.ptp(p) == 0 or np.ptp(t) == 0:
        return 0.0, True
    r, _ = pearsonr(p, t)
    return float(r), False


def pcc(pred: ArrayLike, truth: ArrayLike) -> float:
    value, zero_variance = pcc_flagged(pred, truth)
    if zero_variance:
        logger.debug("PCC of a constant series defined as 0")
    return value


def icc(pred: ArrayLike, truth: ArrayLike) -> float:
    """
    ICC(3,1): two-way mixed, single measure, consistency; pred and truth are the two raters.

    Raises:
        DegenerateAnova: Fewer than two targets or zero between-target and residual variance
    """
    p, t = _pair(pred, truth)
    n, k = len(p), 2
    if n < 2:
        raise DegenerateAnova("ICC needs at least two targets")
    ratings = np.column_stack([p, t])
    grand = ratings.mean()
    target_means = ratings.mean(axis=1)
    rater_means = ratings.mean(axis=0)
    ss_targets = k * np.sum((target_means - grand) ** 2)
    residual = ratings - target_means[:, None] - rater_means[None, :] + grand
    ss_error = np.sum(residual ** 2)
    bms = ss_targets / (n - 1)
    ems = ss_error / ((n - 1) * (k - 1))
    if bms + (k - 1) * ems == 0:
        raise DegenerateAnova("between-target and residual mean squares are both zero")
    return float((bms - ems) / (bms + (k - 1) * ems))


def scale_prediction(pred: ArrayLike, truth: ArrayLike, rescale: Optional[float] = None) -> np.ndarray:
    """Min-max normalize a prediction and stretch it to the truth peak (or a fixed scale)."""
    p, t = _pair(pred, truth)
    factor = rescale if rescale is not None else float(t.max())
    return minmax_scale(p) * factor


def score_sequence(sequence_id: str, pred: ArrayLike, truth: ArrayLike,
                   config: MetricConfig = MetricConfig()) -> SequenceScore:
    scaled = scale_prediction(pred, truth, config.rescale)
    truth_values = _values(truth)
    correlation, zero_variance = pcc_flagged(scaled, truth_values)
    if zero_variance:
        logger.warning(f"Sequence {sequence_id}: constant series, PCC set to 0")
    return SequenceScore(sequence_id, mae(scaled, truth_values), correlation,
                         icc(scaled, truth_values), zero_variance)


def evaluate(pairs: Iterable[Tuple[str, ArrayLike, ArrayLike]],
             config: MetricConfig = MetricConfig()) -> EvalReport:
    """
    Score (sequence_id, prediction, truth) triples.

    Per-sequence aggregation averages the per-sequence metrics; global aggregation
    concatenates the scaled predictions and truths before computing each metric.
    """
    triples = sorted(pairs, key=lambda item: item[0])
    if not triples:
        raise EmptySet("nothing to evaluate")
    scores = tuple(score_sequence(sid, pred, truth, config) for sid, pred, truth in triples)
    if config.aggregation == 'global':
        preds = np.concatenate([scale_prediction(pred, truth, config.rescale) for _, pred, truth in triples])
        truths = np.concatenate([_values(truth) for _, _, truth in triples])
        return EvalReport(mae(preds, truths), pcc(preds, truths), icc(preds, truths), scores, 'global')
    return EvalReport(
        mae=float(np.mean([s.mae for s in scores])),
        pcc=float(np.mean([s.pcc for s in scores])),
        icc=float(np.mean([s.icc for s in scores])),
        per_sequence=scores,
    )
