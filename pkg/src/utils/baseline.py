#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Global-PCA comparison response: first principal component of whole-frame landmark vectors.
"""

from typing import Union

import numpy as np

from src.errors import LengthMismatch, ZeroVariance
from src.logger import logger
from src.utils.response import choose_orientation
from src.utils.seqdata import ResponseKind, ScalarResponse, Sequence

POWER_TOLERANCE = 1e-10
POWER_MAX_ITERATIONS = 10_000


def frame_matrix(seq: Sequence) -> np.ndarray:
    """T x (d*N) matrix, one flattened frame per row, mean-centred over frames."""
    d, n, t = seq.points.shape
    frames = seq.points.reshape(d * n, t).T
    return frames - frames.mean(axis=0)


def power_iteration(cov: np.ndarray, tol: float = POWER_TOLERANCE,
                    max_iter: int = POWER_MAX_ITERATIONS) -> np.ndarray:
    """
    Dominant eigenvector of a symmetric positive semi-definite matrix.

    Starts from the normalized all-ones vector. If that start is orthogonal to the
    column space, restarts from the basis vector with the largest diagonal entry.
    """
    size = cov.shape[0]
    vector = np.ones(size) / np.sqrt(size)
    scale = np.abs(cov).max()
    for iteration in range(max_iter):
        product = cov @ vector
        norm = np.linalg.norm(product)
        if norm <= 1e-14 * scale:
            if iteration > 0:
                break
            vector = np.zeros(size)
            vector[int(np.argmax(np.diag(cov)))] = 1.0
            continue
        updated = product / norm
        if np.linalg.norm(updated - vector) < tol:
            return updated
        vector = updated
    else:
        logger.warning(f"Power iteration stopped after {max_iter} iterations without reaching tol={tol:g}")
    return vector


def first_principal_direction(seq: Sequence) -> np.ndarray:
    frames = frame_matrix(seq)
    if not np.any(frames):
        raise ZeroVariance(f"sequence {seq.id}: all frames are identical")
    cov = frames.T @ frames / (frames.shape[0] - 1)
    return power_iteration(cov)


def global_pca_response(seq: Sequence, reference: Union[ScalarResponse, np.ndarray]) -> ScalarResponse:
    """
    Project frames on the first principal direction, min-max scale, orient against reference.

    Args:
        seq: Centered sequence
        reference: Response of the same length used to resolve the sign

    Raises:
        ZeroVariance: All frames identical
        LengthMismatch: Reference length differs from the frame count
    """
    values = reference.values if isinstance(reference, ScalarResponse) else np.asarray(reference, dtype=np.float64)
    if len(values) != seq.num_frames:
        raise LengthMismatch(f"reference has {len(values)} frames, sequence {seq.id} has {seq.num_frames}")
    direction = first_principal_direction(seq)
    projection = frame_matrix(seq) @ direction
    oriented, flipped = choose_orientation(projection, values)
    logger.debug(f"Global PCA response for {seq.id} (flipped={flipped})")
    return ScalarResponse(oriented, ResponseKind.GLOBAL_PCA)
