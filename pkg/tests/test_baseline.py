"""Unit tests for the global-PCA comparison response."""

import numpy as np
import pytest

from src.errors import LengthMismatch, ZeroVariance
from src.utils.baseline import first_principal_direction, frame_matrix, global_pca_response, power_iteration
from src.utils.response import choose_orientation
from src.utils.seqdata import Sequence, center_sequence
from src.utils.synth import generate, suite_spec
from tests.conftest import trapezoid_sequence


def test_power_iteration_matches_eigh():
    rng = np.random.default_rng(4)
    for _ in range(50):
        a = rng.normal(size=(6, 6))
        cov = a @ a.T
        vector = power_iteration(cov)
        _, vectors = np.linalg.eigh(cov)
        expected = vectors[:, -1]
        assert min(np.abs(vector - expected).max(), np.abs(vector + expected).max()) < 1e-6


def test_power_iteration_restarts_when_start_is_orthogonal():
    # the all-ones start lies in the null space
    cov = np.array([[1.0, -1.0], [-1.0, 1.0]])
    vector = power_iteration(cov)
    np.testing.assert_allclose(np.abs(vector), [np.sqrt(0.5), np.sqrt(0.5)], atol=1e-9)


def test_frame_matrix_is_centred():
    rng = np.random.default_rng(0)
    seq = Sequence('f', rng.normal(size=(2, 3, 8)))
    frames = frame_matrix(seq)
    assert frames.shape == (8, 6)
    np.testing.assert_allclose(frames.mean(axis=0), 0.0, atol=1e-12)


def test_response_follows_the_trapezoid():
    seq = center_sequence(trapezoid_sequence())
    reference = np.zeros(seq.num_frames)
    reference[16:40] = 1.0
    response = global_pca_response(seq, reference)
    np.testing.assert_allclose(response.values, reference, atol=1e-9)


def test_orientation_follows_reference():
    seq = center_sequence(trapezoid_sequence())
    reference = np.ones(seq.num_frames)
    reference[16:40] = 0.0
    response = global_pca_response(seq, reference)
    np.testing.assert_allclose(response.values, reference, atol=1e-9)


def test_zero_variance():
    seq = Sequence('still', np.ones((2, 3, 5)))
    with pytest.raises(ZeroVariance):
        first_principal_direction(seq)


def test_reference_length():
    with pytest.raises(LengthMismatch):
        global_pca_response(center_sequence(trapezoid_sequence()), np.zeros(3))


@pytest.mark.parametrize('seed', range(20))
def test_response_matches_dense_eigendecomposition(seed):
    seq, truth = generate(suite_spec('default', seed))
    centered = center_sequence(seq)
    frames = frame_matrix(centered)
    _, vectors = np.linalg.eigh(frames.T @ frames / (frames.shape[0] - 1))
    expected, _ = choose_orientation(frames @ vectors[:, -1], truth.intensity.values)
    response = global_pca_response(centered, truth.intensity)
    np.testing.assert_allclose(response.values, expected, rtol=0, atol=1e-8)
