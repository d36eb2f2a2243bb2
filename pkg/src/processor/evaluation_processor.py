#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Evaluation step: score the final response against the sequence's ground truth.
"""

from typing import Any, Dict

from ..errors import MissingTruth
from ..utils.metrics import score_sequence


def evaluation_processor(data: Dict[str, Any]) -> Dict[str, Any]:
    """
    Args:
        data: Message with 'sequence', 'intensity', 'config' and 'truth'
            (sequence id -> TruthRow)

    Returns:
        Message with 'truth_response' and 'score' (SequenceScore)

    Raises:
        MissingTruth: No truth row for this sequence
    """
    sequence = data['sequence']
    row = data['truth'].get(sequence.id)
    if row is None:
        raise MissingTruth(f"no ground truth for sequence {sequence.id}")
    metrics = data['config'].metrics
    truth = row.response(sequence.num_frames, metrics.peak_value)
    data['truth_response'] = truth
    data['score'] = score_sequence(sequence.id, data['intensity'].final_norm, truth, metrics)
    return data
