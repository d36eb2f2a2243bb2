#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Loading and centering steps of the per-sequence chains.

Usage:
    from src.processor import load_processor, center_processor

    data = {"sequence_id": "s01", "entry": manifest_entry, "config": run_config}
    data = center_processor(load_processor(data))

Input:
    data (dict): 'entry' (ManifestEntry) and 'config' (RunConfig)

Output:
    dict: the same message with 'sequence' (as loaded) and 'centered' added
"""

from typing import Any, Dict

from ..logger import logger
from ..utils.seqdata import center_sequence, load_entry


def load_processor(data: Dict[str, Any]) -> Dict[str, Any]:
    """
    Read the sequence file named by the manifest entry.

    Args:
        data: Message with an 'entry' key

    Returns:
        Message with 'sequence'
    """
    entry = data['entry']
    sequence = load_entry(entry)
    logger.info(f"Loaded {entry.sequence_id}: d={sequence.dim} N={sequence.num_points} T={sequence.num_frames}")
    data['sequence'] = sequence
    return data


def center_processor(data: Dict[str, Any]) -> Dict[str, Any]:
    """Translate the sequence so the reference landmark is at the origin in every frame."""
    reference = data['config'].response.reference_index
    data['centered'] = center_sequence(data['sequence'], reference)
    return data
