#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Intensity step: final response, weights and transitions of one sequence.

Usage:
    from src.processor import intensity_processor

    data = intensity_processor({"sequence": seq, "config": run_config})
    data["intensity"].final_norm

Output:
    dict: message with 'intensity' (IntensityResult)
"""

from typing import Any, Dict

from ..logger import logger
from ..utils.response import estimate_intensity


def intensity_processor(data: Dict[str, Any]) -> Dict[str, Any]:
    """
    Run the unsupervised intensity pipeline on data['sequence'].

    Args:
        data: Message with 'sequence' and 'config'

    Returns:
        Message with 'intensity'
    """
    sequence = data['sequence']
    result = estimate_intensity(sequence, data['config'].response)
    tr = result.transitions
    if result.low_confidence:
        logger.warning(f"Sequence {sequence.id}: low-confidence response (no transition found)")
    else:
        logger.info(f"Sequence {sequence.id}: {tr.mode.value} transitions t1={tr.t1} t2={tr.t2}")
    data['intensity'] = result
    return data
