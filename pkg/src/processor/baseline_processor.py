#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Global-PCA comparison step, oriented against the sequence's normalized final response.
"""

from typing import Any, Dict

from ..logger import logger
from ..utils.baseline import global_pca_response


def baseline_processor(data: Dict[str, Any]) -> Dict[str, Any]:
    """
    Args:
        data: Message with 'centered' and 'intensity'

    Returns:
        Message with 'global_pca' (ScalarResponse)
    """
    data['global_pca'] = global_pca_response(data['centered'], data['intensity'].final_norm)
    logger.debug(f"Sequence {data['centered'].id}: global PCA response ready")
    return data
