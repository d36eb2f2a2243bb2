#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Action-unit step: one response per labelled AU of the sequence.

Input:
    data (dict): 'sequence', 'config' and 'events' (sequence id -> annotation items,
    each {'event': AUEvent} or {'au_id', 'error'} for rows that failed validation)

Output:
    dict: message with 'au_results' (list of AUResult) and 'au_errors'
    (list of (au_id, exception)); invalid events do not stop the other AUs
"""

from typing import Any, Dict, List, Tuple

from ..errors import FaceRespError
from ..logger import logger
from ..utils.analysis import AUResult, au_intensity


def au_processor(data: Dict[str, Any]) -> Dict[str, Any]:
    sequence = data['sequence']
    results: List[AUResult] = []
    errors: List[Tuple[str, Exception]] = []
    for item in data['events'].get(sequence.id, []):
        if 'error' in item:
            logger.warning(f"Sequence {sequence.id} {item['au_id']}: invalid event: {item['error']}")
            errors.append((item['au_id'], item['error']))
            continue
        event = item['event']
        try:
            results.append(au_intensity(sequence, event, data['config']))
        except FaceRespError as e:
            logger.warning(f"Sequence {sequence.id} {event.au_id}: {e}")
            errors.append((event.au_id, e))
    logger.info(f"Sequence {sequence.id}: {len(results)} AU responses, {len(errors)} invalid events")
    data['au_results'] = results
    data['au_errors'] = errors
    return data
