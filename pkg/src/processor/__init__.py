#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Per-sequence chain steps. Each takes the message dict and returns it enriched.
"""

from .sequence_processor import load_processor, center_processor
from .intensity_processor import intensity_processor
from .baseline_processor import baseline_processor
from .alignment_processor import alignment_processor
from .evaluation_processor import evaluation_processor
from .au_processor import au_processor

__all__ = [
    'load_processor',
    'center_processor',
    'intensity_processor',
    'baseline_processor',
    'alignment_processor',
    'evaluation_processor',
    'au_processor',
]
