#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Alignment step: warp responses onto the shared template and pick the transition window.

Usage:
    from src.processor import alignment_processor

    data["template"] = make_template(100, 30, 5)
    data = alignment_processor(data)

Input:
    data (dict): 'intensity', 'centered', 'config', 'template' and optionally 'global_pca'

Output:
    dict: message with 'alignment', 'transition' (landmarks of the chosen window,
    neutral first, `target_len` frames) and, when a global-PCA response is present,
    'alignment_pca'
"""

from typing import Any, Dict

from ..logger import logger
from ..utils.align import dtw_align, select_transition, transition_sequence


def alignment_processor(data: Dict[str, Any]) -> Dict[str, Any]:
    config = data['config']
    template = data['template']
    sequence_id = data['centered'].id

    alignment = select_transition(dtw_align(data['intensity'].final_norm, template), template, config.window)
    data['alignment'] = alignment
    data['transition'] = transition_sequence(data['centered'], alignment, config.target_len)
    logger.info(f"Sequence {sequence_id}: cost={alignment.cost:.4g} transition={alignment.chosen_transition.value}")

    if data.get('global_pca') is not None:
        data['alignment_pca'] = select_transition(dtw_align(data['global_pca'], template), template, config.window)
    return data
