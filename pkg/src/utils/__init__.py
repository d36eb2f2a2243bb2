#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Core library: sequence data, intensity responses, global-PCA baseline, alignment,
metrics, AU and cluster analysis, synthetic data and CSV exports.

Plotting lives in src.utils.plotting and is imported on demand.
"""

from .seqdata import Sequence, ScalarResponse, ResponseMatrix, WeightVector, load_sequence, save_sequence, center_sequence
from .response import estimate_intensity, IntensityResult, TransitionEstimate
from .baseline import global_pca_response
from .align import make_template, dtw_align, select_transition, warp_sequence, alignment_mse
from .metrics import mae, pcc, icc, apex_frame, pseudo_ground_truth_triangle
from .analysis import AUEvent, au_approx_response, au_intensity, threshold_weights, ward_cluster
from .synth import SynthSpec, generate, corrupt, suite_spec

__all__ = [
    "Sequence",
    "ScalarResponse",
    "ResponseMatrix",
    "WeightVector",
    "load_sequence",
    "save_sequence",
    "center_sequence",
    "estimate_intensity",
    "IntensityResult",
    "TransitionEstimate",
    "global_pca_response",
    "make_template",
    "dtw_align",
    "select_transition",
    "warp_sequence",
    "alignment_mse",
    "mae",
    "pcc",
    "icc",
    "apex_frame",
    "pseudo_ground_truth_triangle",
    "AUEvent",
    "au_approx_response",
    "au_intensity",
    "threshold_weights",
    "ward_cluster",
    "SynthSpec",
    "generate",
    "corrupt",
    "suite_spec",
]
